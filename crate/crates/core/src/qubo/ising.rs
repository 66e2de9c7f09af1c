use alloc::vec;
use alloc::vec::Vec;

use super::QuboProblem;
use crate::quantum::{Observable, Pauli, PauliTerm};

/// Fixed ratio between Ising energy and QUBO value:
/// `energy(spin(n)) = ISING_SCALE * Q(n)` for every assignment `n`.
pub const ISING_SCALE: f64 = 4.0;

/// `H = sum_i alpha_i Z_i + sum_{i<j} beta_ij Z_i Z_j - h_x sum_i X_i + offset`.
///
/// The spin of a binary variable is the `Z` eigenvalue `z = 1 - 2n`, so a
/// set variable (`n = 1`) is `z = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub alpha: Vec<f64>,
    /// Row-major `n x n`; only entries with `i < j` are read.
    pub beta: Vec<f64>,
    pub h_x: f64,
    pub offset: f64,
}

impl IsingModel {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.beta[i * self.n() + j]
    }

    /// Diagonal energy of a binary assignment (transverse term excluded).
    pub fn energy_bits(&self, bits: &[bool]) -> f64 {
        let n = self.n();
        let z: Vec<f64> = bits.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect();
        let mut e = self.offset;
        for i in 0..n {
            e += self.alpha[i] * z[i];
            for j in i + 1..n {
                e += self.beta[i * n + j] * z[i] * z[j];
            }
        }
        e
    }

    pub fn with_transverse_field(mut self, h_x: f64) -> Self {
        self.h_x = h_x;
        self
    }
}

/// Substitutes `n_i = (1 - z_i) / 2` and scales by [`ISING_SCALE`]:
/// `alpha_i = -2 a_i - sum_{j != i} b_ij`, `beta_ij = b_ij`, and
/// `offset = 2 sum_i a_i + sum_{i<j} b_ij`, which makes the Ising energy
/// exactly `4 Q` on every assignment.
pub fn qubo_to_ising(q: &QuboProblem) -> IsingModel {
    let n = q.n();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n * n];
    let mut offset = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| q.coupling(i, j)).sum();
        alpha[i] = -2.0 * q.linear()[i] - row;
        offset += 2.0 * q.linear()[i];
        for j in i + 1..n {
            beta[i * n + j] = q.coupling(i, j);
            offset += q.coupling(i, j);
        }
    }
    IsingModel {
        alpha,
        beta,
        h_x: 0.0,
        offset,
    }
}

/// One `Z` term per nonzero `alpha_i`, one `ZZ` term per nonzero
/// `beta_ij` (`i < j`), one `X` term of weight `-h_x` per qubit when the
/// field is on, and an identity term for a nonzero offset.
pub fn ising_to_observable(m: &IsingModel) -> Observable {
    let n = m.n();
    let mut terms = Vec::new();
    for (i, &a) in m.alpha.iter().enumerate() {
        if a != 0.0 {
            terms.push(PauliTerm::on(n, a, Pauli::Z, &[i]));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let b = m.beta[i * n + j];
            if b != 0.0 {
                terms.push(PauliTerm::on(n, b, Pauli::Z, &[i, j]));
            }
        }
    }
    if m.h_x != 0.0 {
        for i in 0..n {
            terms.push(PauliTerm::on(n, -m.h_x, Pauli::X, &[i]));
        }
    }
    if m.offset != 0.0 {
        terms.push(PauliTerm::identity(n, m.offset));
    }
    Observable::new(n, terms).expect("terms are built on the model's register")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn linear_problem_maps_to_doubled_negated_fields() {
        let q = QuboProblem::diagonal(labels(3), vec![-1.0, -1.0, 1.0]).unwrap();
        let m = qubo_to_ising(&q);
        assert_eq!(m.alpha, [2.0, 2.0, -2.0]);
        assert!(m.beta.iter().all(|&b| b == 0.0));
        assert_eq!(m.offset, -2.0);
    }

    #[test]
    fn observable_shapes() {
        let q = QuboProblem::diagonal(labels(3), vec![-1.0, -1.0, 1.0]).unwrap();
        let obs = ising_to_observable(&qubo_to_ising(&q));
        let singles: Vec<_> = obs
            .terms()
            .iter()
            .filter(|t| t.axes.iter().filter(|p| **p == Pauli::Z).count() == 1)
            .collect();
        assert_eq!(singles.len(), 3);
        // playing notes and the silent note carry opposite signs
        assert!(singles[0].coefficient > 0.0 && singles[1].coefficient > 0.0);
        assert!(singles[2].coefficient < 0.0);
        assert!(obs.terms().iter().all(|t| !t.axes.contains(&Pauli::X)));

        let q2 = QuboProblem::new(labels(2), vec![0.0; 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let mut m2 = qubo_to_ising(&q2);
        m2.alpha = vec![0.0; 2];
        m2.offset = 0.0;
        let obs2 = ising_to_observable(&m2);
        assert_eq!(obs2.terms().len(), 1);
        assert_eq!(obs2.terms()[0].label(), "ZZ");
    }

    #[test]
    fn transverse_field_adds_x_terms() {
        let q = QuboProblem::diagonal(labels(2), vec![1.0, 1.0]).unwrap();
        let obs = ising_to_observable(&qubo_to_ising(&q).with_transverse_field(0.5));
        let xs: Vec<_> = obs.terms().iter().filter(|t| !t.is_diagonal()).collect();
        assert_eq!(xs.len(), 2);
        assert!(xs.iter().all(|t| t.coefficient == -0.5));
    }
}
