//! The book: one experiment's complete dataset as a single JSON document.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use vqh_core::sonify::{ControlStreams, SonifyError};
use vqh_core::{ExperimentResult, Observable, SampleDistribution, VqeConfig};

/// Serialized experiment, as stored by the API and posted by sessions.
///
/// `raw`, `marginals`, `values` and `states` hold one entry per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Book {
    #[serde(default)]
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub config: VqeConfig,
    pub qubo_csv: String,
    /// One line per Hamiltonian of the sequence, terms joined by ` + `.
    pub operators: Vec<String>,
    pub raw: Vec<SampleDistribution>,
    pub marginals: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub states: Vec<String>,
    #[serde(default)]
    pub segment_boundaries: Vec<usize>,
    #[serde(default)]
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BookError {
    #[error("{field} has {got} entries but raw has {expected}")]
    Length {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("book has no records")]
    Empty,
    #[error(transparent)]
    Streams(#[from] SonifyError),
}

/// `c * LABEL + c * LABEL ...`
pub fn operator_line(obs: &Observable) -> String {
    obs.terms()
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(" + ")
}

impl Book {
    pub fn from_experiment(res: &ExperimentResult, qubo_csv: &str, created_at: DateTime<Utc>) -> Self {
        Self {
            id: res.id.clone(),
            created_at,
            config: res.config.clone(),
            qubo_csv: qubo_csv.to_string(),
            operators: res.operators.iter().map(operator_line).collect(),
            raw: res.records.iter().map(|r| r.distribution.clone()).collect(),
            marginals: res.records.iter().map(|r| r.marginals.clone()).collect(),
            values: res.records.iter().map(|r| r.energy).collect(),
            states: res.records.iter().map(|r| r.argmax.clone()).collect(),
            segment_boundaries: res.segment_boundaries.clone(),
            aborted: res.aborted,
        }
    }

    pub fn validate(&self) -> Result<(), BookError> {
        let expected = self.raw.len();
        for (field, got) in [
            ("marginals", self.marginals.len()),
            ("values", self.values.len()),
            ("states", self.states.len()),
        ] {
            if got != expected {
                return Err(BookError::Length {
                    field,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    /// Control streams of the basis protocol.
    pub fn streams(&self) -> Result<ControlStreams, BookError> {
        self.validate()?;
        if self.raw.is_empty() {
            return Err(BookError::Empty);
        }
        Ok(ControlStreams::new(
            self.marginals.clone(),
            self.values.clone(),
            self.states.clone(),
        )?)
    }
}
