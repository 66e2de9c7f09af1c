use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::SonifyError;
use crate::math::powf;

/// C4 in Hz, the first note of the default chromatic table.
pub const DEFAULT_BASE_PITCH: f64 = 261.63;

/// Mapping catalog. Names match the `map` command flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mapping {
    #[default]
    Additive,
    #[cfg_attr(feature = "serde", serde(rename = "fmlin"))]
    FmLinear,
    #[cfg_attr(feature = "serde", serde(rename = "fmlog"))]
    FmLog,
    #[cfg_attr(feature = "serde", serde(rename = "inharm"))]
    FmInharmonic,
    #[cfg_attr(feature = "serde", serde(rename = "sub"))]
    Subtractive,
    Rotary,
    #[cfg_attr(feature = "serde", serde(rename = "arp"))]
    Arpeggio,
    Pan,
}

impl Mapping {
    pub const ALL: [Mapping; 8] = [
        Self::Additive,
        Self::FmLinear,
        Self::FmLog,
        Self::FmInharmonic,
        Self::Subtractive,
        Self::Rotary,
        Self::Arpeggio,
        Self::Pan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Additive => "additive",
            Self::FmLinear => "fmlin",
            Self::FmLog => "fmlog",
            Self::FmInharmonic => "inharm",
            Self::Subtractive => "sub",
            Self::Rotary => "rotary",
            Self::Arpeggio => "arp",
            Self::Pan => "pan",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, SonifyError> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SonifyError::UnknownMapping(s.to_string()))
    }
}

/// Synthesis parameters shared by every mapping.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MappingConfig {
    pub mapping: Mapping,
    /// Note table in Hz, one entry per stream. Empty means chromatic from
    /// `base_pitch`.
    pub freqs: Vec<f64>,
    pub base_pitch: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Fundamental of the inharmonic series.
    pub f0: f64,
    /// Iterations per second of output.
    pub iteration_rate: f64,
    pub sample_rate: u32,
    pub channels: u16,
    /// Resonator Q at the highest energy.
    pub q_min: f64,
    /// Resonator Q at the lowest energy.
    pub q_max: f64,
    /// Seed of the subtractive noise source.
    pub seed: u64,
    /// Arpeggio inter-onset gap in seconds at the highest energy.
    pub base_gap: f64,
    /// Band-pass Q of the spectral diffusion bands.
    pub diffusion_q: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            mapping: Mapping::Additive,
            freqs: Vec::new(),
            base_pitch: DEFAULT_BASE_PITCH,
            f_min: 110.0,
            f_max: 1760.0,
            f0: 110.0,
            iteration_rate: 10.0,
            sample_rate: 44_100,
            channels: 2,
            q_min: 1.0,
            q_max: 200.0,
            seed: 0,
            base_gap: 0.008,
            // about one semitone wide
            diffusion_q: 17.3,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<(), SonifyError> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !(finite_pos(self.f_min) && self.f_max.is_finite() && self.f_min < self.f_max) {
            return Err(SonifyError::Config("need 0 < f_min < f_max"));
        }
        if !finite_pos(self.iteration_rate) {
            return Err(SonifyError::Config("iteration_rate must be positive"));
        }
        if self.sample_rate == 0 {
            return Err(SonifyError::Config("sample_rate must be positive"));
        }
        if self.channels == 0 {
            return Err(SonifyError::Config("channels must be at least 1"));
        }
        if !finite_pos(self.f0) || !finite_pos(self.base_pitch) {
            return Err(SonifyError::Config("f0 and base_pitch must be positive"));
        }
        if !(finite_pos(self.q_min) && self.q_max.is_finite() && self.q_min <= self.q_max) {
            return Err(SonifyError::Config("need 0 < q_min <= q_max"));
        }
        if !finite_pos(self.diffusion_q) {
            return Err(SonifyError::Config("diffusion_q must be positive"));
        }
        if !(self.base_gap.is_finite() && self.base_gap >= 0.0) {
            return Err(SonifyError::Config("base_gap must be non-negative"));
        }
        if self.freqs.iter().any(|&f| !finite_pos(f)) {
            return Err(SonifyError::Config("note frequencies must be positive"));
        }
        Ok(())
    }

    /// The note table for `n` streams.
    pub fn note_table(&self, n: usize) -> Result<Vec<f64>, SonifyError> {
        if self.freqs.is_empty() {
            return Ok((0..n)
                .map(|k| self.base_pitch * powf(2.0, k as f64 / 12.0))
                .collect());
        }
        if self.freqs.len() != n {
            return Err(SonifyError::NoteCount {
                expected: n,
                got: self.freqs.len(),
            });
        }
        Ok(self.freqs.clone())
    }

    pub fn mapping_name(&self) -> String {
        self.mapping.name().to_string()
    }
}
