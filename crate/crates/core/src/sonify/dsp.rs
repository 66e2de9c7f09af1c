use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use crate::math::{cos, floor, sin};

/// Two-pole resonator in direct form I.
///
/// Coefficients follow the audio-EQ cookbook band-pass with 0 dB peak gain,
/// so the `-3 dB` bandwidth is `f0 / q` and the response at `f0` is unity.
/// They can be retuned every sample without clearing the history.
#[derive(Debug, Clone, Default)]
pub struct Biquad {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    pub fn bandpass(f0: f64, q: f64, sample_rate: f64) -> Self {
        let mut bq = Self::default();
        bq.tune(f0, q, sample_rate);
        bq
    }

    pub fn tune(&mut self, f0: f64, q: f64, sample_rate: f64) {
        let w0 = TAU * f0 / sample_rate;
        let alpha = sin(w0) / (2.0 * q);
        let a0 = 1.0 + alpha;
        self.b0 = alpha / a0;
        self.b2 = -alpha / a0;
        self.a1 = -2.0 * cos(w0) / a0;
        self.a2 = (1.0 - alpha) / a0;
    }

    pub fn process(&mut self, x: f64) -> f64 {
        // b1 is zero for this band-pass
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Constant-power gains for a source at azimuth `phi` on a ring of
/// `channels` equally spaced speakers, speaker 0 at azimuth 0.
///
/// Only the two speakers adjacent to `phi` are active; their squared
/// gains sum to one.
pub fn ring_gains(phi: f64, channels: usize) -> Vec<f64> {
    let mut g = vec![0.0; channels];
    let (lo, hi, g_lo, g_hi) = ring_pair(phi, channels);
    g[lo] += g_lo;
    g[hi] += g_hi;
    g
}

/// The two active speakers and their gains.
#[inline]
pub(crate) fn ring_pair(phi: f64, channels: usize) -> (usize, usize, f64, f64) {
    if channels == 1 {
        return (0, 0, 1.0, 0.0);
    }
    let turns = phi / TAU;
    let pos = (turns - floor(turns)) * channels as f64;
    let mut lo = floor(pos) as usize;
    let mut frac = pos - lo as f64;
    if lo >= channels {
        // rounding put phi a hair below a full turn
        lo = 0;
        frac = 0.0;
    }
    let hi = (lo + 1) % channels;
    (lo, hi, cos(frac * FRAC_PI_2), sin(frac * FRAC_PI_2))
}

/// Control value of row-major `rows` at fractional iteration `u`.
#[inline]
pub(crate) fn lerp_rows(rows: &[Vec<f64>], k: usize, u: f64) -> f64 {
    let i = floor(u) as usize;
    if i + 1 >= rows.len() {
        return rows[rows.len() - 1][k];
    }
    let frac = u - i as f64;
    let a = rows[i][k];
    a + (rows[i + 1][k] - a) * frac
}

#[inline]
pub(crate) fn lerp(values: &[f64], u: f64) -> f64 {
    let i = floor(u) as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let frac = u - i as f64;
    values[i] + (values[i + 1] - values[i]) * frac
}

/// Advances a phase accumulator kept in `[0, 2pi)`.
#[inline]
pub(crate) fn advance(phase: &mut f64, freq: f64, sample_rate: f64) {
    *phase += TAU * freq / sample_rate;
    if *phase >= TAU {
        *phase -= TAU * floor(*phase / TAU);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn unity_gain_at_centre() {
        let sr = 48_000.0;
        let f0 = 1_000.0;
        let mut bq = Biquad::bandpass(f0, 5.0, sr);
        let mut peak = 0.0f64;
        for i in 0..48_000 {
            let y = bq.process(sin(TAU * f0 * i as f64 / sr));
            if i > 24_000 {
                peak = peak.max(y.abs());
            }
        }
        assert!((peak - 1.0).abs() < 1e-3, "{peak}");
    }

    #[test]
    fn ring_speakers() {
        let g = ring_gains(0.0, 4);
        assert_eq!(g, vec![1.0, 0.0, 0.0, 0.0]);
        let g = ring_gains(PI, 4);
        assert!((g[2] - 1.0).abs() < 1e-12);
        let g = ring_gains(PI / 4.0, 4);
        assert!((g[0] - g[1]).abs() < 1e-12 && g[2] == 0.0 && g[3] == 0.0);
        // wraps between the last speaker and the first
        let g = ring_gains(TAU * 7.0 / 8.0, 4);
        assert!((g[3] - g[0]).abs() < 1e-12 && g[3] > 0.0);
        assert_eq!(ring_gains(TAU, 3)[0], 1.0);
        assert_eq!(ring_gains(-TAU / 3.0, 3)[2], 1.0);
    }

    #[test]
    fn stereo_ring() {
        let g = ring_gains(PI / 2.0, 2);
        assert!((g[0] - g[1]).abs() < 1e-12);
        assert!((ring_gains(PI, 2)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_holds_the_last_row() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert_eq!(lerp_rows(&rows, 0, 0.25), 0.25);
        assert_eq!(lerp_rows(&rows, 0, 1.5), 1.0);
        assert_eq!(lerp(&[2.0], 0.7), 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn constant_power(phi in -20.0f64..20.0, channels in 2usize..17) {
            let g = ring_gains(phi, channels);
            let power: f64 = g.iter().map(|x| x * x).sum();
            prop_assert!((power - 1.0).abs() < 1e-6);
            prop_assert!(g.iter().all(|&x| x >= 0.0));
            prop_assert!(g.iter().filter(|&&x| x > 0.0).count() <= 2);
        }
    }
}
