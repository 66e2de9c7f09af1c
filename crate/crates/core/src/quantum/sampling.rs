use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bitstring_to_index, index_to_bitstring, qubit_mask, QuantumError, StateVector};

/// Exact-mode probabilities at or below this are treated as round-off.
const EXACT_CUTOFF: f64 = 1e-20;

/// Sampled (or exact) distribution over basis bitstrings.
///
/// Entries are kept sorted by basis index, which for fixed-width big-endian
/// bitstrings is the same as lexicographic bitstring order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDistribution {
    n_qubits: usize,
    shots: usize,
    entries: Vec<(usize, f64)>,
}

impl SampleDistribution {
    /// Builds a distribution from `(bitstring, probability)` pairs. Repeated
    /// keys are summed.
    pub fn from_pairs<I, S>(n_qubits: usize, shots: usize, pairs: I) -> Result<Self, QuantumError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut entries = Vec::new();
        for (bits, p) in pairs {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(QuantumError::InvalidProbability(p));
            }
            entries.push((bitstring_to_index(bits.as_ref(), n_qubits)?, p));
        }
        Self::from_indexed(n_qubits, shots, entries)
    }

    pub(crate) fn from_indexed(
        n_qubits: usize,
        shots: usize,
        mut entries: Vec<(usize, f64)>,
    ) -> Result<Self, QuantumError> {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if !entries.is_empty() && (total - 1.0).abs() > 1e-9 {
            return Err(QuantumError::DistributionSum(total));
        }
        Ok(Self {
            n_qubits,
            shots,
            entries,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Shot count; `0` marks an exact distribution.
    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(basis index, probability)` in ascending index order.
    pub fn indexed(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// `(bitstring, probability)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        self.entries
            .iter()
            .map(|&(i, p)| (index_to_bitstring(i, self.n_qubits), p))
    }

    pub fn get(&self, bits: &str) -> f64 {
        bitstring_to_index(bits, self.n_qubits)
            .ok()
            .and_then(|i| {
                self.entries
                    .binary_search_by_key(&i, |e| e.0)
                    .ok()
                    .map(|k| self.entries[k].1)
            })
            .unwrap_or(0.0)
    }
}

/// Draws `shots` measurements in the computational basis, seeded. With
/// `shots == 0` the exact Born distribution is returned instead.
pub fn sample(state: &StateVector, shots: usize, seed: u64) -> SampleDistribution {
    let n = state.n_qubits();
    let probs = state.probabilities();
    if shots == 0 {
        let total: f64 = probs.iter().filter(|p| **p > EXACT_CUTOFF).sum();
        let entries = probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > EXACT_CUTOFF)
            .map(|(i, p)| (i, p / total))
            .collect();
        return SampleDistribution {
            n_qubits: n,
            shots,
            entries,
        };
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[k] += 1;
    }
    let entries = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(i, &c)| (i, c as f64 / shots as f64))
        .collect();
    SampleDistribution {
        n_qubits: n,
        shots,
        entries,
    }
}

/// Probability that each qubit reads `1`, qubit 0 first.
pub fn marginals(dist: &SampleDistribution) -> Vec<f64> {
    let n = dist.n_qubits;
    let mut out = vec![0.0; n];
    for &(i, p) in &dist.entries {
        for (q, m) in out.iter_mut().enumerate() {
            if i & qubit_mask(n, q) != 0 {
                *m += p;
            }
        }
    }
    out
}

/// Most probable bitstring; ties go to the lexicographically smallest.
pub fn argmax_state(dist: &SampleDistribution) -> Result<String, QuantumError> {
    let mut best: Option<(usize, f64)> = None;
    for &(i, p) in &dist.entries {
        if best.map_or(true, |(_, bp)| p > bp) {
            best = Some((i, p));
        }
    }
    best.map(|(i, _)| index_to_bitstring(i, dist.n_qubits))
        .ok_or(QuantumError::EmptyDistribution)
}

#[cfg(feature = "serde")]
mod serde_impl {
    use super::*;
    use alloc::collections::BTreeMap;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        n_qubits: usize,
        shots: usize,
        probabilities: BTreeMap<String, f64>,
    }

    impl Serialize for SampleDistribution {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            Repr {
                n_qubits: self.n_qubits,
                shots: self.shots,
                probabilities: self.iter().collect(),
            }
            .serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for SampleDistribution {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let r = Repr::deserialize(d)?;
            SampleDistribution::from_pairs(r.n_qubits, r.shots, r.probabilities)
                .map_err(serde::de::Error::custom)
        }
    }
}
