use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{HamiltonianSequence, QuboError, QuboProblem};

/// Chromatic scale starting on C, one qubit per pitch class.
pub const CHROMATIC: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

pub fn chromatic_labels() -> Vec<String> {
    CHROMATIC.iter().map(|s| s.to_string()).collect()
}

/// Indices of `names` within `labels`; `None` if any name is missing.
pub fn chord_indices(labels: &[String], names: &[&str]) -> Option<Vec<usize>> {
    names
        .iter()
        .map(|n| labels.iter().position(|l| l == n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChordMode {
    /// Reward chord notes (`a = -1`), penalize the rest (`a = +1`).
    Linear,
    /// Nearest-neighbour ring couplings, `+1` across a chord boundary and
    /// `-1` otherwise, with `a_k = -1/2 sum_l b_kl + bias`. At zero bias the
    /// chord and its complement are degenerate; positive bias favours the
    /// chord.
    Coupled { bias: f64 },
}

/// Builds a problem whose ground state plays `chord` (indices into `labels`).
pub fn chord_qubo(labels: Vec<String>, chord: &[usize], mode: ChordMode) -> Result<QuboProblem, QuboError> {
    let n = labels.len();
    if n == 0 {
        return Err(QuboError::Empty);
    }
    if let Some(&index) = chord.iter().find(|&&k| k >= n) {
        return Err(QuboError::Index { index, n });
    }
    let in_chord: Vec<bool> = (0..n).map(|k| chord.contains(&k)).collect();
    match mode {
        ChordMode::Linear => {
            let linear = in_chord.iter().map(|&c| if c { -1.0 } else { 1.0 }).collect();
            QuboProblem::diagonal(labels, linear)
        }
        ChordMode::Coupled { bias } => {
            let mut quadratic = vec![0.0; n * n];
            for k in 0..n {
                let l = (k + 1) % n;
                if l == k {
                    continue;
                }
                let b = if in_chord[k] != in_chord[l] { 1.0 } else { -1.0 };
                quadratic[k * n + l] = b;
                quadratic[l * n + k] = b;
            }
            let linear = (0..n)
                .map(|k| {
                    let row: f64 = (0..n).map(|l| quadratic[k * n + l]).sum();
                    -0.5 * row + bias
                })
                .collect();
            QuboProblem::new(labels, linear, quadratic)
        }
    }
}

/// `H(t) = (1 - t) H_init + t H_final` sampled at `t = k / (steps - 1)`.
pub fn adiabatic_sequence(
    init: &QuboProblem,
    fin: &QuboProblem,
    steps: usize,
) -> Result<HamiltonianSequence, QuboError> {
    if init.n() != fin.n() {
        return Err(QuboError::SizeMismatch(init.n(), fin.n()));
    }
    if steps < 2 {
        return Err(QuboError::Steps(steps));
    }
    let mut entries = Vec::with_capacity(steps);
    for k in 0..steps {
        if k == 0 {
            entries.push(init.clone());
            continue;
        }
        if k == steps - 1 {
            let mut last = fin.clone();
            if last.labels() != init.labels() {
                last = QuboProblem::new(
                    init.labels().to_vec(),
                    fin.linear().to_vec(),
                    fin.quadratic().to_vec(),
                )?;
            }
            entries.push(last);
            continue;
        }
        let t = k as f64 / (steps - 1) as f64;
        let lerp = |a: f64, b: f64| (1.0 - t) * a + t * b;
        let linear = init.linear().iter().zip(fin.linear()).map(|(&a, &b)| lerp(a, b)).collect();
        let quadratic = init
            .quadratic()
            .iter()
            .zip(fin.quadratic())
            .map(|(&a, &b)| lerp(a, b))
            .collect();
        entries.push(QuboProblem::new(init.labels().to_vec(), linear, quadratic)?);
    }
    HamiltonianSequence::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::brute_force_ground;

    fn cmaj() -> Vec<usize> {
        chord_indices(&chromatic_labels(), &["C", "E", "G"]).unwrap()
    }

    #[test]
    fn linear_cmaj_coefficients() {
        let q = chord_qubo(chromatic_labels(), &cmaj(), ChordMode::Linear).unwrap();
        let want = [-1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(q.linear(), want);
        assert!(q.quadratic().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn empty_chord_is_silence() {
        let labels = chromatic_labels()[..4].to_vec();
        let q = chord_qubo(labels, &[], ChordMode::Linear).unwrap();
        assert!(q.linear().iter().all(|&a| a == 1.0));
        assert_eq!(brute_force_ground(&q).unwrap().states, ["0000"]);
    }

    #[test]
    fn coupled_mode_ring_couplings() {
        let q = chord_qubo(chromatic_labels(), &cmaj(), ChordMode::Coupled { bias: 0.0 }).unwrap();
        // C-C# crosses the chord boundary, C#-D does not, B-C wraps around
        assert_eq!(q.coupling(0, 1), 1.0);
        assert_eq!(q.coupling(1, 2), -1.0);
        assert_eq!(q.coupling(11, 0), 1.0);
        assert_eq!(q.coupling(0, 2), 0.0);
        // a_C = -(1 + 1)/2, a_D = -(-1 - 1)/2
        assert_eq!(q.linear()[0], -1.0);
        assert_eq!(q.linear()[2], 1.0);
        assert_eq!(q.linear()[1], 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(chord_qubo(vec![], &[], ChordMode::Linear), Err(QuboError::Empty));
        assert!(matches!(
            chord_qubo(chromatic_labels(), &[12], ChordMode::Linear),
            Err(QuboError::Index { index: 12, n: 12 })
        ));
        let a = chord_qubo(chromatic_labels(), &[0], ChordMode::Linear).unwrap();
        assert_eq!(adiabatic_sequence(&a, &a, 1), Err(QuboError::Steps(1)));
        let b = chord_qubo(chromatic_labels()[..3].to_vec(), &[0], ChordMode::Linear).unwrap();
        assert_eq!(adiabatic_sequence(&a, &b, 4), Err(QuboError::SizeMismatch(12, 3)));
    }

    #[test]
    fn two_step_sequence_is_the_endpoints() {
        let a = chord_qubo(chromatic_labels(), &cmaj(), ChordMode::Linear).unwrap();
        let b = chord_qubo(chromatic_labels(), &[1, 3, 6, 11], ChordMode::Linear).unwrap();
        let s = adiabatic_sequence(&a, &b, 2).unwrap();
        assert_eq!(s.entries(), [a, b]);
    }

    #[test]
    fn midpoint_is_the_average() {
        let a = chord_qubo(chromatic_labels(), &cmaj(), ChordMode::Linear).unwrap();
        let b = chord_qubo(chromatic_labels(), &[0, 1], ChordMode::Linear).unwrap();
        let s = adiabatic_sequence(&a, &b, 3).unwrap();
        let mid = &s.entries()[1];
        assert_eq!(mid.linear()[0], -1.0);
        assert_eq!(mid.linear()[1], 0.0);
        assert_eq!(mid.linear()[4], 0.0);
    }
}
