//! MIDI-side control codecs: the three-message clock encoding and the
//! Control Change to coefficient mapping used by knob grids.

use crate::qubo::{QuboError, QuboProblem};

/// Steps representable by three 7-bit fields.
pub const CLOCK_RANGE: u32 = 1 << 21;

/// Default controller numbers carrying the high, middle and low fields.
pub const CLOCK_CONTROLLERS: [u8; 3] = [20, 21, 22];

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("clock step {0} outside [0, 2^21)")]
    StepRange(u32),
    #[error("MIDI data byte {0} exceeds 127")]
    DataByte(u8),
    #[error("expected controller {expected}, got {got}")]
    ControllerOrder { expected: u8, got: u8 },
    #[error("empty coefficient range [{lo}, {hi}]")]
    Range { lo: f64, hi: f64 },
}

/// Clock step split into three consecutive Control Change messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockCode {
    step: u32,
}

impl ClockCode {
    pub fn new(step: u32) -> Result<Self, ControlError> {
        if step >= CLOCK_RANGE {
            return Err(ControlError::StepRange(step));
        }
        Ok(Self { step })
    }

    pub fn step(self) -> u32 {
        self.step
    }

    /// `(controller, value)` pairs, most significant field first.
    pub fn encode(self, controllers: [u8; 3]) -> [(u8, u8); 3] {
        let s = self.step;
        [
            (controllers[0], ((s >> 14) & 0x7f) as u8),
            (controllers[1], ((s >> 7) & 0x7f) as u8),
            (controllers[2], (s & 0x7f) as u8),
        ]
    }

    pub fn decode(pairs: [(u8, u8); 3], controllers: [u8; 3]) -> Result<Self, ControlError> {
        let mut step = 0u32;
        for ((cc, value), expected) in pairs.into_iter().zip(controllers) {
            if cc != expected {
                return Err(ControlError::ControllerOrder { expected, got: cc });
            }
            if value > 127 {
                return Err(ControlError::DataByte(value));
            }
            step = (step << 7) | u32::from(value);
        }
        Ok(Self { step })
    }
}

/// Encodes on the default controllers 20, 21 and 22.
pub fn midi_clock_encode(step: u32) -> Result<[(u8, u8); 3], ControlError> {
    Ok(ClockCode::new(step)?.encode(CLOCK_CONTROLLERS))
}

pub fn midi_clock_decode(pairs: [(u8, u8); 3]) -> Result<u32, ControlError> {
    ClockCode::decode(pairs, CLOCK_CONTROLLERS).map(ClockCode::step)
}

/// Affine map of a CC value `0..=127` onto `[lo, hi]`.
pub fn cc_to_coefficient(value: u8, lo: f64, hi: f64) -> Result<f64, ControlError> {
    if value > 127 {
        return Err(ControlError::DataByte(value));
    }
    if !(lo < hi) {
        return Err(ControlError::Range { lo, hi });
    }
    Ok(lo + f64::from(value) / 127.0 * (hi - lo))
}

/// Routes a CC value into matrix cell `(i, j)` of a problem, keeping the
/// coupling matrix symmetric. The diagonal addresses linear terms.
pub fn apply_cc(
    problem: &mut QuboProblem,
    i: usize,
    j: usize,
    value: u8,
    lo: f64,
    hi: f64,
) -> Result<f64, CcError> {
    let v = cc_to_coefficient(value, lo, hi)?;
    problem.set_coupling(i, j, v)?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CcError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}
