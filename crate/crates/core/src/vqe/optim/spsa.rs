//! Simultaneous perturbation stochastic approximation.
//!
//! Each step probes `x + c_k d` and `x - c_k d` along a random Rademacher
//! direction `d` and moves against the resulting gradient estimate.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Minimum;
use crate::math::powf;

/// Gain schedule `a_k = a / (k + 1 + A)^alpha`, `c_k = c / (k + 1)^gamma`.
///
/// `stability` is `A`; when `None` it is 10% of the number of steps the
/// budget allows.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SpsaSettings {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub stability: Option<f64>,
}

impl Default for SpsaSettings {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            stability: None,
        }
    }
}

/// Resumable SPSA state.
#[derive(Debug, Clone)]
pub struct SpsaState {
    x: Vec<f64>,
    k: usize,
    stability: f64,
    settings: SpsaSettings,
    rng: ChaCha8Rng,
    delta: Vec<f64>,
}

impl SpsaState {
    /// `steps` is the planned number of steps, used for the default `A`.
    pub fn new(x0: Vec<f64>, settings: SpsaSettings, steps: usize, seed: u64) -> Self {
        let n = x0.len();
        Self {
            x: x0,
            k: 0,
            stability: settings.stability.unwrap_or(0.1 * steps as f64),
            settings,
            rng: ChaCha8Rng::seed_from_u64(seed),
            delta: vec![0.0; n],
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Steps taken so far.
    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn gains(&self) -> (f64, f64) {
        let k = self.k as f64;
        let s = &self.settings;
        (
            s.a / powf(k + 1.0 + self.stability, s.alpha),
            s.c / powf(k + 1.0, s.gamma),
        )
    }

    /// One two-sided step.
    pub fn step<E>(
        &mut self,
        cost: &mut impl FnMut(&[f64]) -> Result<f64, E>,
    ) -> Result<(), E> {
        let (ak, ck) = self.gains();
        for d in self.delta.iter_mut() {
            *d = if self.rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        let probe: Vec<f64> = self
            .x
            .iter()
            .zip(&self.delta)
            .map(|(x, d)| x + ck * d)
            .collect();
        let fp = cost(&probe)?;
        let probe: Vec<f64> = self
            .x
            .iter()
            .zip(&self.delta)
            .map(|(x, d)| x - ck * d)
            .collect();
        let fm = cost(&probe)?;
        let g = (fp - fm) / (2.0 * ck);
        for (x, d) in self.x.iter_mut().zip(&self.delta) {
            // 1/d == d for Rademacher directions.
            *x -= ak * g * d;
        }
        self.k += 1;
        Ok(())
    }
}

/// Evaluates `x0` once, then takes as many steps as the budget allows.
///
/// The final iterate is returned without a further evaluation, so `fx` is
/// the cost at `x0` only when no step was taken; otherwise it is the lower
/// of the last two probes.
pub fn spsa_minimize<E>(
    mut cost: impl FnMut(&[f64]) -> Result<f64, E>,
    x0: &[f64],
    settings: &SpsaSettings,
    seed: u64,
    max_evals: usize,
) -> Result<Minimum, E> {
    if max_evals == 0 {
        return Ok(Minimum {
            x: x0.to_vec(),
            fx: f64::NAN,
            evaluations: 0,
        });
    }
    let mut fx = cost(x0)?;
    let steps = (max_evals - 1) / 2;
    let mut state = SpsaState::new(x0.to_vec(), *settings, steps, seed);
    let last = core::cell::Cell::new(f64::INFINITY);
    let mut wrapped = |x: &[f64]| {
        let v = cost(x)?;
        last.set(last.get().min(v));
        Ok(v)
    };
    for _ in 0..steps {
        last.set(f64::INFINITY);
        state.step(&mut wrapped)?;
    }
    if steps > 0 {
        fx = last.get();
    }
    Ok(Minimum {
        x: state.x,
        fx,
        evaluations: 1 + 2 * steps,
    })
}
