//! From experiment records to sound.
//!
//! [`basis_protocol`] decodes an experiment into [`ControlStreams`]: one
//! marginal coefficient per qubit and iteration, the energy trace and the
//! most likely basis state. The renderers in this module turn those streams
//! into [`AudioBuffer`]s. All of them are pure functions of the streams and
//! the [`MappingConfig`]; the only randomness (the subtractive noise source)
//! comes from the config seed.
//!
//! Iteration `i` sits at time `i / iteration_rate`; controls are linearly
//! interpolated between iterations and held over the last one.

mod buffer;
mod config;
mod dsp;
mod render;

pub use buffer::{decode_wav, encode_wav, AudioBuffer, WAV_HEADER_LEN};
pub use config::{Mapping, MappingConfig, DEFAULT_BASE_PITCH};
pub use dsp::{ring_gains, Biquad};
pub use render::{
    arpeggio_onsets, azimuth, inharmonic_frequency, map_additive, map_arpeggio, map_fm,
    map_fm_inharmonic, map_pan, map_subtractive, render, FreqScale, Onset, PanSource,
    ARPEGGIO_DECAY,
};

use alloc::string::String;
use alloc::vec::Vec;

use crate::vqe::ExperimentResult;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SonifyError {
    #[error("no iterations to sonify")]
    Empty,
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("{c} coefficient rows but {e} energies and {s} states")]
    StreamLengths { c: usize, e: usize, s: usize },
    #[error("coefficient {value} at row {row} is outside [0, 1]")]
    Coefficient { row: usize, value: f64 },
    #[error("non-finite energy at row {0}")]
    Energy(usize),
    #[error("note table has {got} frequencies for {expected} streams")]
    NoteCount { expected: usize, got: usize },
    #[error("invalid mapping config: {0}")]
    Config(&'static str),
    #[error("unknown mapping `{0}`")]
    UnknownMapping(String),
    #[error("malformed WAV data: {0}")]
    Wav(&'static str),
}

/// Per-iteration control data of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlStreams {
    n: usize,
    c: Vec<Vec<f64>>,
    e: Vec<f64>,
    states: Vec<String>,
    pub c_min: f64,
    pub c_max: f64,
    pub e_min: f64,
    pub e_max: f64,
}

impl ControlStreams {
    /// Validates the rows and computes the dataset extremes.
    pub fn new(c: Vec<Vec<f64>>, e: Vec<f64>, states: Vec<String>) -> Result<Self, SonifyError> {
        if c.len() != e.len() || c.len() != states.len() {
            return Err(SonifyError::StreamLengths {
                c: c.len(),
                e: e.len(),
                s: states.len(),
            });
        }
        let n = c.first().ok_or(SonifyError::Empty)?.len();
        let mut c_min = f64::INFINITY;
        let mut c_max = f64::NEG_INFINITY;
        for (row, values) in c.iter().enumerate() {
            if values.len() != n {
                return Err(SonifyError::RowLength {
                    row,
                    expected: n,
                    got: values.len(),
                });
            }
            for &value in values {
                if !(0.0..=1.0).contains(&value) {
                    return Err(SonifyError::Coefficient { row, value });
                }
                c_min = c_min.min(value);
                c_max = c_max.max(value);
            }
        }
        if n == 0 {
            c_min = 0.0;
            c_max = 0.0;
        }
        let mut e_min = f64::INFINITY;
        let mut e_max = f64::NEG_INFINITY;
        for (row, &energy) in e.iter().enumerate() {
            if !energy.is_finite() {
                return Err(SonifyError::Energy(row));
            }
            e_min = e_min.min(energy);
            e_max = e_max.max(energy);
        }
        Ok(Self {
            n,
            c,
            e,
            states,
            c_min,
            c_max,
            e_min,
            e_max,
        })
    }

    /// Replaces the extremes, e.g. to render an excerpt on the scale of the
    /// whole dataset.
    pub fn with_extremes(mut self, c: (f64, f64), e: (f64, f64)) -> Self {
        (self.c_min, self.c_max) = c;
        (self.e_min, self.e_max) = e;
        self
    }

    /// Number of streams (qubits).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of iterations.
    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn energies(&self) -> &[f64] {
        &self.e
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// `c` scaled to `[0, 1]` by the dataset range.
    pub fn norm_c(&self, c: f64) -> f64 {
        normalize(c, self.c_min, self.c_max)
    }

    /// Energy scaled to `[0, 1]`; `0` is the lowest energy seen.
    pub fn norm_e(&self, e: f64) -> f64 {
        normalize(e, self.e_min, self.e_max)
    }
}

/// `(x - lo) / (hi - lo)`, or `0.5` when the range is empty.
pub fn normalize(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Stacks marginals, energies and argmax states of every record.
pub fn basis_protocol(result: &ExperimentResult) -> Result<ControlStreams, SonifyError> {
    let records = &result.records;
    ControlStreams::new(
        records.iter().map(|r| r.marginals.clone()).collect(),
        records.iter().map(|r| r.energy).collect(),
        records.iter().map(|r| r.argmax.clone()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn extremes_cover_all_rows() {
        let s = ControlStreams::new(
            vec![vec![0.2, 0.5], vec![0.9, 0.1]],
            vec![-1.0, 3.0],
            vec!["01".to_string(), "10".to_string()],
        )
        .unwrap();
        assert_eq!((s.c_min, s.c_max, s.e_min, s.e_max), (0.1, 0.9, -1.0, 3.0));
        assert_eq!(s.norm_e(-1.0), 0.0);
        assert_eq!(s.norm_c(0.9), 1.0);
    }

    #[test]
    fn constant_streams_normalize_to_half() {
        let s = ControlStreams::new(vec![vec![0.3; 3]; 4], vec![2.0; 4], vec!["000".into(); 4])
            .unwrap();
        assert_eq!(s.c_min, s.c_max);
        assert_eq!(s.norm_c(0.3), 0.5);
        assert_eq!(s.norm_e(2.0), 0.5);
    }

    #[test]
    fn rejects_inconsistent_rows() {
        assert_eq!(
            ControlStreams::new(vec![], vec![], vec![]),
            Err(SonifyError::Empty)
        );
        assert!(matches!(
            ControlStreams::new(vec![vec![0.1], vec![0.1, 0.2]], vec![0.0; 2], vec!["".into(); 2]),
            Err(SonifyError::RowLength { row: 1, .. })
        ));
        assert!(matches!(
            ControlStreams::new(vec![vec![1.5]], vec![0.0], vec!["1".into()]),
            Err(SonifyError::Coefficient { .. })
        ));
        assert!(matches!(
            ControlStreams::new(vec![vec![0.5]], vec![f64::NAN], vec!["1".into()]),
            Err(SonifyError::Energy(0))
        ));
        assert!(matches!(
            ControlStreams::new(vec![vec![0.5]], vec![0.0, 1.0], vec!["1".into()]),
            Err(SonifyError::StreamLengths { .. })
        ));
    }
}
