use alloc::string::String;
use alloc::vec::Vec;

use super::{IsingModel, QuboError, QuboProblem};
use crate::quantum::index_to_bitstring;

/// Largest problem [`brute_force_ground`] will enumerate.
pub const MAX_ENUMERATION_QUBITS: usize = 20;

/// Anything with a classical energy on binary assignments.
pub trait DiagonalEnergy {
    fn n(&self) -> usize;
    fn energy_bits(&self, bits: &[bool]) -> f64;
}

impl DiagonalEnergy for QuboProblem {
    fn n(&self) -> usize {
        QuboProblem::n(self)
    }

    fn energy_bits(&self, bits: &[bool]) -> f64 {
        self.value_bits(bits)
    }
}

/// Enumerates the diagonal part only; a transverse field is ignored.
impl DiagonalEnergy for IsingModel {
    fn n(&self) -> usize {
        IsingModel::n(self)
    }

    fn energy_bits(&self, bits: &[bool]) -> f64 {
        IsingModel::energy_bits(self, bits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStates {
    pub energy: f64,
    /// Every minimizing bitstring, in lexicographic order.
    pub states: Vec<String>,
}

impl GroundStates {
    pub fn is_degenerate(&self) -> bool {
        self.states.len() > 1
    }
}

/// Exhaustive search over all `2^n` assignments, reporting every minimizer.
/// Energies within `1e-9` (relative to the magnitude) of the minimum tie.
pub fn brute_force_ground<P: DiagonalEnergy + ?Sized>(p: &P) -> Result<GroundStates, QuboError> {
    let n = p.n();
    if n > MAX_ENUMERATION_QUBITS {
        return Err(QuboError::TooLarge(n));
    }
    let mut bits = alloc::vec![false; n];
    let mut energies = Vec::with_capacity(1 << n);
    for index in 0..1usize << n {
        for (q, b) in bits.iter_mut().enumerate() {
            *b = index & (1 << (n - 1 - q)) != 0;
        }
        energies.push(p.energy_bits(&bits));
    }
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min.abs().max(1.0);
    let states = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - min <= tol)
        .map(|(i, _)| index_to_bitstring(i, n))
        .collect();
    Ok(GroundStates {
        energy: min,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::qubo_to_ising;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn linear_toy_problem_has_single_ground_state() {
        let labels = (0..3).map(|i| i.to_string()).collect();
        let q = QuboProblem::diagonal(labels, vec![-1.0, -1.0, 1.0]).unwrap();
        let g = brute_force_ground(&q).unwrap();
        assert_eq!(g.states, ["110"]);
        assert_eq!(g.energy, -2.0);
        let gi = brute_force_ground(&qubo_to_ising(&q)).unwrap();
        assert_eq!(gi.states, ["110"]);
        assert_eq!(gi.energy, -8.0);
    }

    #[test]
    fn reports_all_minimizers() {
        let labels = (0..2).map(|i| i.to_string()).collect();
        let q = QuboProblem::diagonal(labels, vec![0.0, 0.0]).unwrap();
        assert_eq!(brute_force_ground(&q).unwrap().states.len(), 4);
    }

    #[test]
    fn refuses_oversized_problems() {
        let labels: Vec<String> = (0..21).map(|i| i.to_string()).collect();
        let q = QuboProblem::diagonal(labels, vec![0.0; 21]).unwrap();
        assert_eq!(brute_force_ground(&q), Err(QuboError::TooLarge(21)));
    }
}
