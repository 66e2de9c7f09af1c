//! Minimal statevector simulator.
//!
//! Bit ordering is big-endian throughout: qubit 0 is the leftmost character
//! of every bitstring and the most significant bit of a basis index.

mod ansatz;
mod pauli;
mod sampling;
mod state;

pub use ansatz::{evaluate_ansatz, AnsatzSpec, Entanglement};
pub use pauli::{expectation, Observable, Pauli, PauliTerm};
pub use sampling::{argmax_state, marginals, sample, SampleDistribution};
pub use state::StateVector;

use alloc::string::String;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("dimension mismatch: state has {state} qubits, operand has {other}")]
    DimensionMismatch { state: usize, other: usize },
    #[error("register of {0} qubits is outside 1..={MAX_QUBITS}")]
    RegisterSize(usize),
    #[error("amplitude vector of length {got} does not match 2^{n_qubits}")]
    AmplitudeCount { n_qubits: usize, got: usize },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("invalid Pauli character {0:?}")]
    InvalidPauli(char),
    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),
    #[error("probabilities sum to {0}, expected 1")]
    DistributionSum(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("distribution is empty")]
    EmptyDistribution,
}

/// Mask selecting `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub(crate) fn qubit_mask(n: usize, qubit: usize) -> usize {
    1 << (n - 1 - qubit)
}

/// Renders a basis index as a big-endian bitstring.
pub fn index_to_bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if index & qubit_mask(n, q) != 0 { '1' } else { '0' })
        .collect()
}

/// Parses a big-endian bitstring of exactly `n` characters.
pub fn bitstring_to_index(bits: &str, n: usize) -> Result<usize, QuantumError> {
    if bits.len() != n || n > MAX_QUBITS {
        return Err(QuantumError::InvalidBitstring(bits.into()));
    }
    let mut index = 0usize;
    for c in bits.chars() {
        index <<= 1;
        match c {
            '0' => {}
            '1' => index |= 1,
            _ => return Err(QuantumError::InvalidBitstring(bits.into())),
        }
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstrings_are_big_endian() {
        assert_eq!(index_to_bitstring(0b100, 3), "100");
        assert_eq!(index_to_bitstring(1, 4), "0001");
        assert_eq!(bitstring_to_index("100", 3).unwrap(), 4);
        assert!(bitstring_to_index("10", 3).is_err());
        assert!(bitstring_to_index("1a0", 3).is_err());
    }
}
