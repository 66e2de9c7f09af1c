use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::QuboError;

/// Evaluation budget assigned to sequence entries until a config overrides it.
pub const DEFAULT_BUDGET: usize = 100;

/// `Q(n) = sum_i a_i n_i + sum_{i<j} b_ij n_i n_j` over binary `n`.
///
/// The quadratic sum runs over unordered pairs, each counted once, so the
/// symmetric matrix entry `b[i][j] = b[j][i]` is the full coefficient of
/// `n_i n_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    labels: Vec<String>,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
}

impl QuboProblem {
    /// `quadratic` is row-major `n x n`, symmetric with a zero diagonal.
    pub fn new(
        labels: Vec<String>,
        linear: Vec<f64>,
        quadratic: Vec<f64>,
    ) -> Result<Self, QuboError> {
        let n = labels.len();
        if n == 0 {
            return Err(QuboError::Empty);
        }
        if linear.len() != n {
            return Err(QuboError::Shape {
                what: "linear coefficients",
                expected: n,
                got: linear.len(),
            });
        }
        if quadratic.len() != n * n {
            return Err(QuboError::Shape {
                what: "quadratic coefficients",
                expected: n * n,
                got: quadratic.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QuboError::DuplicateLabel(l.clone()));
            }
        }
        if let Some(&v) = linear.iter().chain(&quadratic).find(|v| !v.is_finite()) {
            return Err(QuboError::NonFinite(v));
        }
        for i in 0..n {
            if quadratic[i * n + i] != 0.0 {
                return Err(QuboError::Diagonal(i));
            }
            for j in i + 1..n {
                if quadratic[i * n + j] != quadratic[j * n + i] {
                    return Err(QuboError::Asymmetric(i, j));
                }
            }
        }
        Ok(Self {
            labels,
            linear,
            quadratic,
        })
    }

    /// Linear-only problem.
    pub fn diagonal(labels: Vec<String>, linear: Vec<f64>) -> Result<Self, QuboError> {
        let n = labels.len();
        Self::new(labels, linear, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// `b_ij`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.quadratic[i * self.n() + j]
    }

    /// Row-major `n x n` coupling matrix.
    pub fn quadratic(&self) -> &[f64] {
        &self.quadratic
    }

    pub fn set_linear(&mut self, i: usize, value: f64) -> Result<(), QuboError> {
        self.check_index(i)?;
        if !value.is_finite() {
            return Err(QuboError::NonFinite(value));
        }
        self.linear[i] = value;
        Ok(())
    }

    /// Sets `b_ij` and `b_ji` together. `i == j` addresses the linear term,
    /// matching the matrix layout of the setup file.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<(), QuboError> {
        self.check_index(i)?;
        self.check_index(j)?;
        if !value.is_finite() {
            return Err(QuboError::NonFinite(value));
        }
        if i == j {
            self.linear[i] = value;
        } else {
            let n = self.n();
            self.quadratic[i * n + j] = value;
            self.quadratic[j * n + i] = value;
        }
        Ok(())
    }

    /// Matrix view used by the setup file: linear terms on the diagonal.
    pub fn matrix_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.linear[i]
        } else {
            self.coupling(i, j)
        }
    }

    /// `Q(assignment)` for a big-endian bitstring (`'1'` = variable set).
    pub fn value(&self, assignment: &str) -> Result<f64, QuboError> {
        let n = self.n();
        if assignment.len() != n || !assignment.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(QuboError::Assignment(assignment.into()));
        }
        let bits: Vec<bool> = assignment.bytes().map(|b| b == b'1').collect();
        Ok(self.value_bits(&bits))
    }

    pub fn value_bits(&self, bits: &[bool]) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            if !bits[i] {
                continue;
            }
            total += self.linear[i];
            for j in i + 1..n {
                if bits[j] {
                    total += self.quadratic[i * n + j];
                }
            }
        }
        total
    }

    fn check_index(&self, i: usize) -> Result<(), QuboError> {
        if i < self.n() {
            Ok(())
        } else {
            Err(QuboError::Index { index: i, n: self.n() })
        }
    }
}

/// Problems solved back to back, each warm-started from the previous one.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSequence {
    entries: Vec<QuboProblem>,
    budgets: Vec<usize>,
}

impl HamiltonianSequence {
    /// Every entry gets [`DEFAULT_BUDGET`] evaluations.
    pub fn new(entries: Vec<QuboProblem>) -> Result<Self, QuboError> {
        let budgets = vec![DEFAULT_BUDGET; entries.len()];
        Self::with_budgets(entries, budgets)
    }

    pub fn with_budgets(entries: Vec<QuboProblem>, budgets: Vec<usize>) -> Result<Self, QuboError> {
        let first = entries.first().ok_or(QuboError::EmptySequence)?;
        for e in &entries[1..] {
            if e.n() != first.n() {
                return Err(QuboError::SizeMismatch(first.n(), e.n()));
            }
            if e.labels() != first.labels() {
                return Err(QuboError::LabelMismatch);
            }
        }
        if budgets.len() != entries.len() {
            return Err(QuboError::Shape {
                what: "iteration budgets",
                expected: entries.len(),
                got: budgets.len(),
            });
        }
        Ok(Self { entries, budgets })
    }

    /// Replaces the per-entry budgets.
    pub fn set_budgets(&mut self, budgets: Vec<usize>) -> Result<(), QuboError> {
        if budgets.len() != self.entries.len() {
            return Err(QuboError::Shape {
                what: "iteration budgets",
                expected: self.entries.len(),
                got: budgets.len(),
            });
        }
        self.budgets = budgets;
        Ok(())
    }

    pub fn entries(&self) -> &[QuboProblem] {
        &self.entries
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n(&self) -> usize {
        self.entries[0].n()
    }

    pub fn labels(&self) -> &[String] {
        self.entries[0].labels()
    }
}
