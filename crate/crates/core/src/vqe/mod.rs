//! The hybrid variational loop.
//!
//! A classical optimizer proposes ansatz parameters, the simulator returns
//! the energy, and every cost evaluation is captured as an
//! [`IterationRecord`]. Sequences of Hamiltonians are chained by starting
//! each one from the parameters the previous one ended on.

mod config;
pub mod optim;
mod runner;

pub use config::{InitialPoint, OptimizerKind, VqeConfig};
pub use runner::{run_sequence, run_vqe, segment_observable};

use alloc::string::String;
use alloc::vec::Vec;

use crate::quantum::{Observable, QuantumError, SampleDistribution};
use crate::qubo::{HamiltonianSequence, QuboError};

/// Snapshot of one cost-function evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    /// Position in the whole experiment, counting from zero.
    pub index: usize,
    /// Which Hamiltonian of the sequence produced this record.
    pub segment: usize,
    pub params: Vec<f64>,
    /// Exact expectation value of the segment's observable.
    pub energy: f64,
    pub distribution: SampleDistribution,
    pub marginals: Vec<f64>,
    pub argmax: String,
}

/// Records and end point of a single [`run_vqe`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<IterationRecord>,
    pub final_params: Vec<f64>,
    /// The record callback asked to stop before the optimizer finished.
    pub cancelled: bool,
}

/// A complete (or aborted) experiment over a Hamiltonian sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: String,
    pub config: VqeConfig,
    pub sequence: HamiltonianSequence,
    /// Observable actually minimized for each entry of the sequence.
    pub operators: Vec<Observable>,
    pub records: Vec<IterationRecord>,
    pub final_params: Vec<f64>,
    /// Parameters each segment that ran ended on; the next segment starts
    /// from them.
    pub segment_final_params: Vec<Vec<f64>>,
    /// Index of the first record of each segment that ran.
    pub segment_boundaries: Vec<usize>,
    pub aborted: bool,
}

impl ExperimentResult {
    /// Records belonging to segment `k`.
    pub fn segment(&self, k: usize) -> &[IterationRecord] {
        let start = self.segment_boundaries[k];
        let end = self
            .segment_boundaries
            .get(k + 1)
            .copied()
            .unwrap_or(self.records.len());
        &self.records[start..end]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VqeError {
    #[error("segment {segment} has an evaluation budget below 1")]
    Budget { segment: usize },
    #[error("sequence_length is {expected} but {got} entries were given")]
    SequenceLength { expected: usize, got: usize },
    #[error("observable acts on {observable} qubits but the ansatz on {ansatz}")]
    SizeMismatch { ansatz: usize, observable: usize },
    #[error("expected {expected} initial parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("cost evaluation {index} returned a non-finite energy at {params:?}")]
    NonFinite { index: usize, params: Vec<f64> },
    #[error("transverse field must be finite")]
    TransverseField,
    #[error("non-diagonal observables can only be run with shots = 0")]
    SampledTransverseField,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}
