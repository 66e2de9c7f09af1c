use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dsp::{advance, lerp, lerp_rows, ring_pair, Biquad};
use super::{AudioBuffer, ControlStreams, Mapping, MappingConfig, SonifyError};
use crate::math::{cos, exp, ln, powf, round, sin, sqrt};

/// Seconds for an arpeggio note to decay by 60 dB.
pub const ARPEGGIO_DECAY: f64 = 0.15;

/// Notes are cut after twice the 60 dB decay time (-120 dB).
const NOTE_SPAN: f64 = 2.0 * ARPEGGIO_DECAY;

/// Rendered buffers below this peak are left unscaled.
const SILENCE: f64 = 1e-9;

/// Lowest frequency any oscillator is allowed to run at.
const MIN_FREQ: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqScale {
    Linear,
    Log,
}

impl FreqScale {
    /// Maps a coefficient onto `[f_min, f_max]`.
    pub fn map(self, c: f64, s: &ControlStreams, cfg: &MappingConfig) -> f64 {
        let x = s.norm_c(c);
        match self {
            Self::Linear => (cfg.f_max - cfg.f_min) * x + cfg.f_min,
            Self::Log => cfg.f_min * powf(cfg.f_max / cfg.f_min, x),
        }
    }
}

/// Partial `k` (counting from 1) of the inharmonic series, pushed below
/// `k * f0` by the normalized coefficient.
pub fn inharmonic_frequency(k: usize, c: f64, s: &ControlStreams, cfg: &MappingConfig) -> f64 {
    ((k as f64 - s.norm_c(c)) * cfg.f0).max(MIN_FREQ)
}

/// Azimuth of a stream on the speaker ring.
pub fn azimuth(c: f64, s: &ControlStreams) -> f64 {
    TAU * s.norm_c(c)
}

/// Renders `s` with the mapping selected in `cfg`.
pub fn render(s: &ControlStreams, cfg: &MappingConfig) -> Result<AudioBuffer, SonifyError> {
    match cfg.mapping {
        Mapping::Additive => map_additive(s, cfg),
        Mapping::FmLinear => map_fm(s, cfg, FreqScale::Linear),
        Mapping::FmLog => map_fm(s, cfg, FreqScale::Log),
        Mapping::FmInharmonic => map_fm_inharmonic(s, cfg),
        Mapping::Subtractive => map_subtractive(s, cfg, false),
        Mapping::Rotary => map_subtractive(s, cfg, true),
        Mapping::Arpeggio => map_arpeggio(s, cfg),
        Mapping::Pan => map_pan(s, cfg, PanSource::Notes),
    }
}

struct Clock {
    sample_rate: f64,
    rate: f64,
    frames: usize,
}

impl Clock {
    fn new(s: &ControlStreams, cfg: &MappingConfig) -> Result<Self, SonifyError> {
        cfg.validate()?;
        if s.is_empty() {
            return Err(SonifyError::Empty);
        }
        let sample_rate = cfg.sample_rate as f64;
        let frames = round(s.len() as f64 * sample_rate / cfg.iteration_rate).max(1.0) as usize;
        Ok(Self {
            sample_rate,
            rate: cfg.iteration_rate,
            frames,
        })
    }

    /// Fractional iteration at `frame`.
    #[inline]
    fn at(&self, frame: usize) -> f64 {
        frame as f64 / self.sample_rate * self.rate
    }
}

/// Scales to -1 dBFS unless silent, converts, and copies a mono signal to
/// every channel.
fn finish(signal: Vec<f64>, channels: u16, sample_rate: u32, mono: bool) -> AudioBuffer {
    let peak = signal.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gain = if peak < SILENCE {
        1.0
    } else {
        powf(10.0, -1.0 / 20.0) / peak
    };
    let samples = if mono {
        signal
            .iter()
            .flat_map(|&x| core::iter::repeat((x * gain) as f32).take(channels as usize))
            .collect()
    } else {
        signal.iter().map(|&x| (x * gain) as f32).collect()
    };
    AudioBuffer {
        sample_rate,
        channels,
        samples,
    }
}

/// Sum of fixed-pitch sines with amplitudes `c_k(t)`.
pub fn map_additive(s: &ControlStreams, cfg: &MappingConfig) -> Result<AudioBuffer, SonifyError> {
    let clock = Clock::new(s, cfg)?;
    let freqs = cfg.note_table(s.n())?;
    let c = s.coefficients();
    let mut out = vec![0.0; clock.frames];
    for (frame, y) in out.iter_mut().enumerate() {
        let t = frame as f64 / clock.sample_rate;
        let u = clock.at(frame);
        *y = freqs
            .iter()
            .enumerate()
            .map(|(k, f)| lerp_rows(c, k, u) * sin(TAU * f * t))
            .sum();
    }
    Ok(finish(out, cfg.channels, cfg.sample_rate, true))
}

/// One unit-amplitude oscillator per stream whose pitch follows `c_k(t)`.
pub fn map_fm(
    s: &ControlStreams,
    cfg: &MappingConfig,
    scale: FreqScale,
) -> Result<AudioBuffer, SonifyError> {
    let clock = Clock::new(s, cfg)?;
    let c = s.coefficients();
    let mut phases = vec![0.0; s.n()];
    let mut out = vec![0.0; clock.frames];
    for (frame, y) in out.iter_mut().enumerate() {
        let u = clock.at(frame);
        for (k, phase) in phases.iter_mut().enumerate() {
            *y += sin(*phase);
            let f = scale.map(lerp_rows(c, k, u), s, cfg);
            advance(phase, f, clock.sample_rate);
        }
    }
    Ok(finish(out, cfg.channels, cfg.sample_rate, true))
}

/// Harmonic series on `f0` with partial `k` detuned by `c_k(t)` and
/// weighted `1/k`.
pub fn map_fm_inharmonic(
    s: &ControlStreams,
    cfg: &MappingConfig,
) -> Result<AudioBuffer, SonifyError> {
    let clock = Clock::new(s, cfg)?;
    let c = s.coefficients();
    let mut phases = vec![0.0; s.n()];
    let mut out = vec![0.0; clock.frames];
    for (frame, y) in out.iter_mut().enumerate() {
        let u = clock.at(frame);
        for (i, phase) in phases.iter_mut().enumerate() {
            let k = i + 1;
            *y += sin(*phase) / k as f64;
            let f = inharmonic_frequency(k, lerp_rows(c, i, u), s, cfg);
            advance(phase, f, clock.sample_rate);
        }
    }
    Ok(finish(out, cfg.channels, cfg.sample_rate, true))
}

/// Seeded white noise through one resonator per note with gain `c_k(t)`.
///
/// The energy sets the resonance, from `q_max` at the lowest energy to
/// `q_min` at the highest. With `rotary` it instead shifts every centre
/// frequency by `2^(2x - 1)` (an octave either way) at the geometric mean Q.
pub fn map_subtractive(
    s: &ControlStreams,
    cfg: &MappingConfig,
    rotary: bool,
) -> Result<AudioBuffer, SonifyError> {
    let clock = Clock::new(s, cfg)?;
    let freqs = cfg.note_table(s.n())?;
    let c = s.coefficients();
    let e = s.energies();
    let nyquist_guard = 0.45 * clock.sample_rate;
    let rotary_q = sqrt(cfg.q_min * cfg.q_max);
    let mut filters = vec![Biquad::default(); s.n()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = vec![0.0; clock.frames];
    for (frame, y) in out.iter_mut().enumerate() {
        let u = clock.at(frame);
        let x = s.norm_e(lerp(e, u));
        let (q, shift) = if rotary {
            (rotary_q, powf(2.0, 2.0 * x - 1.0))
        } else {
            (cfg.q_max + (cfg.q_min - cfg.q_max) * x, 1.0)
        };
        let noise: f64 = rng.gen_range(-1.0..1.0);
        for (k, bq) in filters.iter_mut().enumerate() {
            bq.tune((freqs[k] * shift).min(nyquist_guard), q, clock.sample_rate);
            *y += lerp_rows(c, k, u) * bq.process(noise);
        }
    }
    Ok(finish(out, cfg.channels, cfg.sample_rate, true))
}

/// A scheduled arpeggio note.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    pub iteration: usize,
    pub note: usize,
    pub frame: usize,
    pub amplitude: f64,
}

/// Note schedule of the arpeggio mapping.
///
/// Each iteration plays its notes from quietest to loudest (ties keep note
/// order), `base_gap * x` seconds apart where `x` is the normalized energy,
/// so the ground state collapses the arpeggio into a chord.
pub fn arpeggio_onsets(
    s: &ControlStreams,
    cfg: &MappingConfig,
) -> Result<Vec<Onset>, SonifyError> {
    cfg.validate()?;
    let sr = cfg.sample_rate as f64;
    let mut onsets = Vec::with_capacity(s.len() * s.n());
    for (i, (row, &e)) in s.coefficients().iter().zip(s.energies()).enumerate() {
        let start = i as f64 / cfg.iteration_rate;
        let gap = cfg.base_gap * s.norm_e(e);
        let mut order: Vec<usize> = (0..s.n()).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        for (j, note) in order.into_iter().enumerate() {
            onsets.push(Onset {
                iteration: i,
                note,
                frame: round((start + j as f64 * gap) * sr) as usize,
                amplitude: row[note],
            });
        }
    }
    Ok(onsets)
}

/// Percussive notes (sine with exponential decay) per [`arpeggio_onsets`].
pub fn map_arpeggio(s: &ControlStreams, cfg: &MappingConfig) -> Result<AudioBuffer, SonifyError> {
    let clock = Clock::new(s, cfg)?;
    let freqs = cfg.note_table(s.n())?;
    let onsets = arpeggio_onsets(s, cfg)?;
    let span = round(NOTE_SPAN * clock.sample_rate) as usize;
    let last = onsets.iter().map(|o| o.frame + span).max().unwrap_or(0);
    let mut out = vec![0.0; clock.frames.max(last)];
    // per-sample decay reaching 1e-3 after ARPEGGIO_DECAY seconds
    let decay = exp(-ln(1e3) / (ARPEGGIO_DECAY * clock.sample_rate));
    for o in onsets.iter().filter(|o| o.amplitude > 0.0) {
        let w = TAU * freqs[o.note] / clock.sample_rate;
        let (rot_re, rot_im) = (cos(w) * decay, sin(w) * decay);
        let (mut re, mut im) = (o.amplitude, 0.0);
        for y in &mut out[o.frame..o.frame + span] {
            *y += im;
            (re, im) = (re * rot_re - im * rot_im, re * rot_im + im * rot_re);
        }
    }
    Ok(finish(out, cfg.channels, cfg.sample_rate, true))
}

/// What [`map_pan`] places on the ring.
#[derive(Debug, Clone, Copy)]
pub enum PanSource<'a> {
    /// One sine per note at amplitude `c_k(t)`.
    Notes,
    /// Spectral diffusion: the (downmixed) buffer split into one band per
    /// note, centred on the note table with `diffusion_q`.
    Diffuse(&'a AudioBuffer),
}

/// Places stream `k` at azimuth `2pi x_k(t)` on a ring of `cfg.channels`
/// speakers with pairwise constant-power panning.
pub fn map_pan(
    s: &ControlStreams,
    cfg: &MappingConfig,
    source: PanSource<'_>,
) -> Result<AudioBuffer, SonifyError> {
    let clock = Clock::new(s, cfg)?;
    if cfg.channels < 2 {
        return Err(SonifyError::Config("panning needs at least 2 channels"));
    }
    let freqs = cfg.note_table(s.n())?;
    let c = s.coefficients();
    let ch = cfg.channels as usize;
    match source {
        PanSource::Notes => {
            let mut out = vec![0.0; clock.frames * ch];
            for frame in 0..clock.frames {
                let t = frame as f64 / clock.sample_rate;
                let u = clock.at(frame);
                let slot = &mut out[frame * ch..(frame + 1) * ch];
                for (k, f) in freqs.iter().enumerate() {
                    let a = lerp_rows(c, k, u);
                    let voice = a * sin(TAU * f * t);
                    let (lo, hi, g_lo, g_hi) = ring_pair(azimuth(a, s), ch);
                    slot[lo] += g_lo * voice;
                    slot[hi] += g_hi * voice;
                }
            }
            Ok(finish(out, cfg.channels, cfg.sample_rate, false))
        }
        PanSource::Diffuse(src) => {
            if src.channels == 0 || src.sample_rate == 0 {
                return Err(SonifyError::Config("empty diffusion source"));
            }
            let sr = src.sample_rate as f64;
            let nyquist_guard = 0.45 * sr;
            let mut bands: Vec<Biquad> = freqs
                .iter()
                .map(|&f| Biquad::bandpass(f.min(nyquist_guard), cfg.diffusion_q, sr))
                .collect();
            let frames = src.frames();
            let mut out = vec![0.0; frames * ch];
            for frame in 0..frames {
                let x = src.frame(frame).iter().map(|&v| v as f64).sum::<f64>()
                    / src.channels as f64;
                let u = frame as f64 / sr * cfg.iteration_rate;
                let slot = &mut out[frame * ch..(frame + 1) * ch];
                for (k, bq) in bands.iter_mut().enumerate() {
                    let band = bq.process(x);
                    let (lo, hi, g_lo, g_hi) = ring_pair(azimuth(lerp_rows(c, k, u), s), ch);
                    slot[lo] += g_lo * band;
                    slot[hi] += g_hi * band;
                }
            }
            Ok(finish(out, cfg.channels, src.sample_rate, false))
        }
    }
}
