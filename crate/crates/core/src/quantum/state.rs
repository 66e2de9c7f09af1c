use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{qubit_mask, QuantumError, MAX_QUBITS};
use crate::math;

/// Pure state of an `n`-qubit register, `2^n` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self, QuantumError> {
        check_size(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, QuantumError> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amplitudes.len() {
            return Err(QuantumError::AmplitudeCount {
                n_qubits,
                got: index,
            });
        }
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps explicit amplitudes; they must already be unit-norm (1e-10).
    pub fn from_amplitudes(
        n_qubits: usize,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, QuantumError> {
        check_size(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(QuantumError::AmplitudeCount {
                n_qubits,
                got: amplitudes.len(),
            });
        }
        let s = Self {
            n_qubits,
            amplitudes,
        };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born-rule probabilities `|a_i|^2` in index order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `RY(theta) = exp(-i theta Y / 2)`.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (math::sin(theta / 2.0), math::cos(theta / 2.0));
        let mask = qubit_mask(self.n_qubits, qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[i | mask] = a0 * s + a1 * c;
            }
        }
    }

    /// `RZ(theta) = exp(-i theta Z / 2)`.
    pub fn apply_rz(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (math::sin(theta / 2.0), math::cos(theta / 2.0));
        let phase0 = Complex64::new(c, -s);
        let phase1 = Complex64::new(c, s);
        let mask = qubit_mask(self.n_qubits, qubit);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & mask == 0 { phase0 } else { phase1 };
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let cm = qubit_mask(self.n_qubits, control);
        let tm = qubit_mask(self.n_qubits, target);
        for i in 0..self.amplitudes.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amplitudes.swap(i, i | tm);
            }
        }
    }

    /// Applies `X` on every qubit in `x_mask` and `Z` on every qubit in
    /// `z_mask` (masks are basis-index masks; the two must be disjoint).
    pub(crate) fn apply_pauli_masks(&mut self, x_mask: usize, z_mask: usize) {
        if z_mask != 0 {
            for (i, a) in self.amplitudes.iter_mut().enumerate() {
                if (i & z_mask).count_ones() % 2 == 1 {
                    *a = -*a;
                }
            }
        }
        if x_mask != 0 {
            for i in 0..self.amplitudes.len() {
                let j = i ^ x_mask;
                if i < j {
                    self.amplitudes.swap(i, j);
                }
            }
        }
    }
}

fn check_size(n: usize) -> Result<(), QuantumError> {
    if n == 0 || n > MAX_QUBITS {
        Err(QuantumError::RegisterSize(n))
    } else {
        Ok(())
    }
}
