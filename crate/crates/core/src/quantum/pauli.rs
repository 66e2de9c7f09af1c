use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{qubit_mask, QuantumError, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    Z,
    X,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self, QuantumError> {
        match c {
            'I' => Ok(Pauli::I),
            'Z' => Ok(Pauli::Z),
            'X' => Ok(Pauli::X),
            other => Err(QuantumError::InvalidPauli(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::Z => 'Z',
            Pauli::X => 'X',
        }
    }
}

/// `coefficient * P_0 (x) P_1 (x) ... (x) P_{n-1}`; `axes[0]` acts on qubit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub axes: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, axes: Vec<Pauli>) -> Self {
        Self { coefficient, axes }
    }

    /// Parses a label such as `"ZIZ"`.
    pub fn parse(coefficient: f64, label: &str) -> Result<Self, QuantumError> {
        let axes = label
            .chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { coefficient, axes })
    }

    /// `coefficient * I...I`.
    pub fn identity(n: usize, coefficient: f64) -> Self {
        Self {
            coefficient,
            axes: alloc::vec![Pauli::I; n],
        }
    }

    /// Single-axis operator `pauli` on each listed qubit, identity elsewhere.
    pub fn on(n: usize, coefficient: f64, pauli: Pauli, qubits: &[usize]) -> Self {
        let mut term = Self::identity(n, coefficient);
        for &q in qubits {
            term.axes[q] = pauli;
        }
        term
    }

    pub fn label(&self) -> String {
        self.axes.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        !self.axes.contains(&Pauli::X)
    }

    /// Basis-index masks of the qubits carrying `X` and `Z`.
    pub(crate) fn masks(&self) -> (usize, usize) {
        let n = self.axes.len();
        let (mut x, mut z) = (0, 0);
        for (q, p) in self.axes.iter().enumerate() {
            match p {
                Pauli::X => x |= qubit_mask(n, q),
                Pauli::Z => z |= qubit_mask(n, q),
                Pauli::I => {}
            }
        }
        (x, z)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {}", self.coefficient, self.label())
    }
}

/// Weighted sum of Pauli strings over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Observable {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self, QuantumError> {
        if let Some(t) = terms.iter().find(|t| t.axes.len() != n_qubits) {
            return Err(QuantumError::DimensionMismatch {
                state: n_qubits,
                other: t.axes.len(),
            });
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// True when every term is built from `I` and `Z` only.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliTerm::is_diagonal)
    }

    /// Eigenvalue of the diagonal part on basis state `index`.
    pub fn diagonal_value(&self, index: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.is_diagonal())
            .map(|t| {
                let (_, z) = t.masks();
                if (index & z).count_ones() % 2 == 1 {
                    -t.coefficient
                } else {
                    t.coefficient
                }
            })
            .sum()
    }

    /// Eigenvalues of the diagonal part for every basis index.
    pub fn diagonal_values(&self) -> Vec<f64> {
        let dim = 1usize << self.n_qubits;
        let mut out = alloc::vec![0.0; dim];
        for t in self.terms.iter().filter(|t| t.is_diagonal()) {
            let (_, z) = t.masks();
            for (i, v) in out.iter_mut().enumerate() {
                if (i & z).count_ones() % 2 == 1 {
                    *v -= t.coefficient;
                } else {
                    *v += t.coefficient;
                }
            }
        }
        out
    }

    /// Scales every coefficient.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.coefficient * factor, t.axes.clone()))
                .collect(),
        }
    }

    /// Concatenates the terms of two observables on the same register.
    pub fn sum(&self, other: &Observable) -> Result<Self, QuantumError> {
        if self.n_qubits != other.n_qubits {
            return Err(QuantumError::DimensionMismatch {
                state: self.n_qubits,
                other: other.n_qubits,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            n_qubits: self.n_qubits,
            terms,
        })
    }
}

/// `<psi|H|psi>`.
///
/// Diagonal terms are summed against the Born probabilities. Terms that
/// contain `X` are applied to a copy of the state and closed with an inner
/// product; the imaginary residue is discarded.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64, QuantumError> {
    if state.n_qubits() != obs.n_qubits() {
        return Err(QuantumError::DimensionMismatch {
            state: state.n_qubits(),
            other: obs.n_qubits(),
        });
    }
    let mut total = 0.0;
    for term in obs.terms() {
        let (x, z) = term.masks();
        if x == 0 {
            let v: f64 = state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    if (i & z).count_ones() % 2 == 1 {
                        -a.norm_sqr()
                    } else {
                        a.norm_sqr()
                    }
                })
                .sum();
            total += term.coefficient * v;
        } else {
            let mut image = state.clone();
            image.apply_pauli_masks(x, z);
            total += term.coefficient * state.inner(&image).re;
        }
    }
    Ok(total)
}
