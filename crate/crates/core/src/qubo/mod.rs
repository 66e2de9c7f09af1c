//! QUBO problems, their Ising images and the chord-oriented builders.

mod builders;
mod ground;
mod ising;
mod problem;

pub use builders::{
    adiabatic_sequence, chord_indices, chord_qubo, chromatic_labels, ChordMode, CHROMATIC,
};
pub use ground::{brute_force_ground, DiagonalEnergy, GroundStates, MAX_ENUMERATION_QUBITS};
pub use ising::{ising_to_observable, qubo_to_ising, IsingModel, ISING_SCALE};
pub use problem::{HamiltonianSequence, QuboProblem, DEFAULT_BUDGET};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuboError {
    #[error("problem has no variables")]
    Empty,
    #[error("expected {expected} entries for {what}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("coupling matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("coupling matrix has nonzero diagonal at {0}")]
    Diagonal(usize),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("index {index} out of range for {n} variables")]
    Index { index: usize, n: usize },
    #[error("assignment {0:?} is not a bitstring of the problem size")]
    Assignment(String),
    #[error("{0} variables is too many to enumerate (max {MAX_ENUMERATION_QUBITS})")]
    TooLarge(usize),
    #[error("problems differ in size ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("adiabatic sequences need at least 2 steps, got {0}")]
    Steps(usize),
    #[error("sequence entries do not share labels")]
    LabelMismatch,
    #[error("sequence is empty")]
    EmptySequence,
}
