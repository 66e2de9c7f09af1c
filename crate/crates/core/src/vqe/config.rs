use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::optim::{CobylaSettings, NftSettings, SpsaSettings};
use super::VqeError;
use crate::quantum::{AnsatzSpec, Entanglement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OptimizerKind {
    #[default]
    #[cfg_attr(feature = "serde", serde(alias = "COBYLA"))]
    Cobyla,
    #[cfg_attr(feature = "serde", serde(alias = "SPSA"))]
    Spsa,
    #[cfg_attr(feature = "serde", serde(alias = "NFT"))]
    Nft,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cobyla => "cobyla",
            Self::Spsa => "spsa",
            Self::Nft => "nft",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cobyla" => Some(Self::Cobyla),
            "spsa" => Some(Self::Spsa),
            "nft" => Some(Self::Nft),
            _ => None,
        }
    }
}

/// Starting parameters of the first Hamiltonian in a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InitialPoint {
    /// All angles zero: every qubit starts in `|0>`, i.e. silence.
    #[default]
    Zero,
    /// Uniform in `[-pi, pi)`, drawn from the config seed.
    Random,
}

/// Experiment configuration, stored as the session's JSON config file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VqeConfig {
    pub reps: usize,
    pub entanglement: Entanglement,
    pub optimizer_name: OptimizerKind,
    pub sequence_length: usize,
    pub size: usize,
    pub description: String,
    pub iterations: Vec<usize>,
    #[cfg_attr(feature = "serde", serde(with = "id_repr"))]
    pub nextpathid: String,
    /// Measurement shots per record; `0` keeps the exact distribution.
    #[cfg_attr(feature = "serde", serde(default))]
    pub shots: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub initial_point: InitialPoint,
    /// Uniform transverse field `h_x`; non-zero values need `shots == 0`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub transverse_field: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub cobyla: CobylaSettings,
    #[cfg_attr(feature = "serde", serde(default))]
    pub spsa: SpsaSettings,
    #[cfg_attr(feature = "serde", serde(default))]
    pub nft: NftSettings,
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            reps: 1,
            entanglement: Entanglement::Linear,
            optimizer_name: OptimizerKind::Cobyla,
            sequence_length: 1,
            size: 12,
            description: String::new(),
            iterations: vec![crate::qubo::DEFAULT_BUDGET],
            nextpathid: String::from("0"),
            shots: 0,
            seed: 0,
            initial_point: InitialPoint::Zero,
            transverse_field: 0.0,
            cobyla: CobylaSettings::default(),
            spsa: SpsaSettings::default(),
            nft: NftSettings::default(),
        }
    }
}

impl VqeConfig {
    pub fn ansatz(&self) -> AnsatzSpec {
        AnsatzSpec::new(self.size, self.reps, self.entanglement)
    }

    /// Checks the invariants that do not depend on the QUBO.
    pub fn validate(&self) -> Result<(), VqeError> {
        if self.iterations.len() != self.sequence_length {
            return Err(VqeError::SequenceLength {
                expected: self.sequence_length,
                got: self.iterations.len(),
            });
        }
        if let Some(k) = self.iterations.iter().position(|&b| b == 0) {
            return Err(VqeError::Budget { segment: k });
        }
        if !self.transverse_field.is_finite() {
            return Err(VqeError::TransverseField);
        }
        if self.transverse_field != 0.0 && self.shots != 0 {
            return Err(VqeError::SampledTransverseField);
        }
        Ok(())
    }
}

/// `nextpathid` is written as a string but older files carry a bare number.
#[cfg(feature = "serde")]
mod id_repr {
    use alloc::string::{String, ToString};
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Unsigned(u64),
        Signed(i64),
    }

    pub fn serialize<S: Serializer>(id: &str, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(id)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Text(s) => s,
            Repr::Unsigned(n) => n.to_string(),
            Repr::Signed(n) => n.to_string(),
        })
    }
}
