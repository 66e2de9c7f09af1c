//! Nakanishi-Fujii-Todo sequential minimal optimization.
//!
//! Along any single rotation angle the energy of an RY/RZ ansatz is exactly
//! `A cos(theta + phi) + C`. Three values fix the sinusoid; one is carried
//! over from the previous update, so each parameter costs two evaluations.

use alloc::vec::Vec;

use super::Minimum;
use crate::math::{atan2, sqrt, wrap_angle};
use core::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NftSettings {
    /// Re-evaluate the current point every this many parameter updates
    /// instead of trusting the fitted minimum. `0` never re-evaluates.
    pub reset_interval: usize,
}

/// Resumable NFT state: one call to [`NftState::step`] updates one
/// parameter.
#[derive(Debug, Clone)]
pub struct NftState {
    x: Vec<f64>,
    fx: f64,
    next: usize,
    updates: usize,
    settings: NftSettings,
}

impl NftState {
    /// Starts from `x0`, whose cost `f0` is already known.
    pub fn new(x0: Vec<f64>, f0: f64, settings: NftSettings) -> Self {
        Self {
            x: x0,
            fx: f0,
            next: 0,
            updates: 0,
            settings,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Cost at [`Self::x`], either measured or predicted by the last fit.
    pub fn fx(&self) -> f64 {
        self.fx
    }

    /// Index of the parameter the next step will update.
    pub fn next_parameter(&self) -> usize {
        self.next
    }

    /// Evaluations the next call to [`Self::step`] will make.
    pub fn next_cost(&self) -> usize {
        if self.needs_reset() {
            3
        } else {
            2
        }
    }

    fn needs_reset(&self) -> bool {
        let r = self.settings.reset_interval;
        r > 0 && self.updates > 0 && self.updates % r == 0
    }

    /// Probes the next parameter at `+-pi/2` and jumps to the fitted minimum.
    pub fn step<E>(
        &mut self,
        cost: &mut impl FnMut(&[f64]) -> Result<f64, E>,
    ) -> Result<(), E> {
        if self.x.is_empty() {
            return Ok(());
        }
        if self.needs_reset() {
            self.fx = cost(&self.x)?;
        }
        let k = self.next;
        let theta = self.x[k];
        let z0 = self.fx;
        self.x[k] = theta + FRAC_PI_2;
        let zp = cost(&self.x)?;
        self.x[k] = theta - FRAC_PI_2;
        let zm = cost(&self.x)?;

        let c = 0.5 * (zp + zm);
        let a = z0 - c;
        let b = 0.5 * (zp - zm);
        let delta = atan2(b, a) + PI;
        self.x[k] = wrap_angle(theta + delta);
        self.fx = c - sqrt(a * a + b * b);

        self.updates += 1;
        self.next = (k + 1) % self.x.len();
        Ok(())
    }
}

/// Runs NFT sweeps until fewer evaluations remain than a step needs.
pub fn nft_minimize<E>(
    mut cost: impl FnMut(&[f64]) -> Result<f64, E>,
    x0: &[f64],
    settings: &NftSettings,
    max_evals: usize,
) -> Result<Minimum, E> {
    if max_evals == 0 {
        return Ok(Minimum {
            x: x0.to_vec(),
            fx: f64::NAN,
            evaluations: 0,
        });
    }
    let f0 = cost(x0)?;
    let mut used = 1;
    let mut state = NftState::new(x0.to_vec(), f0, *settings);
    while !x0.is_empty() && used + state.next_cost() <= max_evals {
        used += state.next_cost();
        state.step(&mut cost)?;
    }
    Ok(Minimum {
        x: state.x,
        fx: state.fx,
        evaluations: used,
    })
}
