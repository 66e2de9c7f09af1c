//! Core engine of the Variational Quantum Harmonizer.
//!
//! Everything in this crate is pure computation over owned values and
//! builds without `std`: a small statevector simulator, QUBO/Ising
//! encoding with chord builders, the variational loop with its
//! derivative-free optimizers, and the mappings that turn marginal
//! distributions into audio buffers.
//!
//! IO, file formats, network transports and the interactive session live in
//! the companion `vqh` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub(crate) mod math;

pub mod control;
pub mod quantum;
pub mod qubo;
pub mod sonify;
pub mod vqe;

pub use quantum::{
    argmax_state, evaluate_ansatz, expectation, marginals, sample, AnsatzSpec, Entanglement,
    Observable, Pauli, PauliTerm, QuantumError, SampleDistribution, StateVector,
};
pub use qubo::{
    adiabatic_sequence, brute_force_ground, chord_qubo, ising_to_observable, qubo_to_ising,
    ChordMode, GroundStates, HamiltonianSequence, IsingModel, QuboError, QuboProblem,
};
pub use vqe::{
    run_sequence, run_vqe, ExperimentResult, InitialPoint, IterationRecord, OptimizerKind,
    RunOutcome, VqeConfig, VqeError,
};
