use alloc::vec::Vec;

use super::{QuantumError, StateVector};

/// Which controlled-NOT pairs make up the entangling block between
/// rotation layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Entanglement {
    /// `(0,1), (1,2), ..., (n-2,n-1)`.
    #[default]
    Linear,
    /// Linear followed by `(n-1, 0)`.
    Circular,
    /// Every ordered pair `i < j`, lexicographic.
    Full,
}

impl Entanglement {
    pub fn name(self) -> &'static str {
        match self {
            Entanglement::Linear => "linear",
            Entanglement::Circular => "circular",
            Entanglement::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Entanglement::Linear),
            "circular" => Some(Entanglement::Circular),
            "full" => Some(Entanglement::Full),
            _ => None,
        }
    }

    /// `(control, target)` pairs in application order.
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        match self {
            Entanglement::Linear => {}
            Entanglement::Circular => {
                if n >= 2 {
                    pairs.push((n - 1, 0));
                }
            }
            Entanglement::Full => {
                pairs.clear();
                for i in 0..n {
                    for j in i + 1..n {
                        pairs.push((i, j));
                    }
                }
            }
        }
        pairs
    }
}

/// Hardware-efficient ansatz: `reps + 1` rotation layers (an `RY` then an
/// `RZ` on every qubit), separated by `reps` entangling blocks.
///
/// Parameters are laid out layer-major. Layer `l` owns the slice
/// `[2nl, 2n(l+1))`: first the `n` `RY` angles in qubit order, then the `n`
/// `RZ` angles in qubit order. Chained runs rely on this layout staying
/// fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub reps: usize,
    pub entanglement: Entanglement,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, reps: usize, entanglement: Entanglement) -> Self {
        Self {
            n_qubits,
            reps,
            entanglement,
        }
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.n_qubits * (self.reps + 1)
    }

    /// Index of the `RY` angle on `qubit` in `layer`.
    pub fn ry_index(&self, layer: usize, qubit: usize) -> usize {
        2 * self.n_qubits * layer + qubit
    }

    /// Index of the `RZ` angle on `qubit` in `layer`.
    pub fn rz_index(&self, layer: usize, qubit: usize) -> usize {
        2 * self.n_qubits * layer + self.n_qubits + qubit
    }
}

/// Prepares the ansatz state from `|0...0>`.
pub fn evaluate_ansatz(spec: &AnsatzSpec, params: &[f64]) -> Result<StateVector, QuantumError> {
    if params.len() != spec.parameter_count() {
        return Err(QuantumError::ParameterCount {
            expected: spec.parameter_count(),
            got: params.len(),
        });
    }
    let n = spec.n_qubits;
    let mut state = StateVector::zero(n)?;
    let pairs = spec.entanglement.pairs(n);
    for layer in 0..=spec.reps {
        for q in 0..n {
            state.apply_ry(q, params[spec.ry_index(layer, q)]);
        }
        for q in 0..n {
            state.apply_rz(q, params[spec.rz_index(layer, q)]);
        }
        if layer < spec.reps {
            for &(c, t) in &pairs {
                state.apply_cx(c, t);
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn parameter_count_formula() {
        let spec = AnsatzSpec::new(12, 3, Entanglement::Linear);
        assert_eq!(spec.parameter_count(), 2 * 12 * 4);
        assert_eq!(AnsatzSpec::new(1, 0, Entanglement::Full).parameter_count(), 2);
    }

    #[test]
    fn identity_rotations_leave_zero_state() {
        let spec = AnsatzSpec::new(1, 0, Entanglement::Linear);
        let s = evaluate_ansatz(&spec, &[0.0, 0.0]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
        assert!(s.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn ry_pi_flips_to_one() {
        let spec = AnsatzSpec::new(1, 0, Entanglement::Linear);
        let s = evaluate_ansatz(&spec, &[PI, 0.0]).unwrap();
        assert!((s.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_parameter_count_is_rejected() {
        let spec = AnsatzSpec::new(2, 1, Entanglement::Linear);
        assert_eq!(
            evaluate_ansatz(&spec, &[0.0; 3]),
            Err(QuantumError::ParameterCount {
                expected: 8,
                got: 3
            })
        );
    }

    #[test]
    fn entanglement_pairs() {
        assert_eq!(Entanglement::Linear.pairs(3), [(0, 1), (1, 2)]);
        assert_eq!(Entanglement::Circular.pairs(3), [(0, 1), (1, 2), (2, 0)]);
        assert_eq!(Entanglement::Full.pairs(3), [(0, 1), (0, 2), (1, 2)]);
        assert!(Entanglement::Linear.pairs(1).is_empty());
    }
}
