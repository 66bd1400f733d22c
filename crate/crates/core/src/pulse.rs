//! Synthetic arterial distension-displacement waveform and test clips.
//!
//! One cardiac period is a systolic Gaussian, a smaller dicrotic Gaussian
//! and an exponentially decaying baseline (the systolic Gaussian convolved
//! with a one-sided exponential). The sum is periodized and normalized so
//! one period spans `[0, 1]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::frame::{ClipError, Frame, VideoClip};
use crate::magnifier::Mode;
use crate::temporal::{
    convolve_time, gaussian_derivative_kernel, gaussian_sigma, ideal_bandpass_time, BandSpec, DerivativeOrder,
    FilterError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseError {
    #[error("period must be positive and finite")]
    BadPeriod,
    #[error("frame rate must be positive and finite")]
    BadFrameRate,
    #[error("dicrotic amplitude must be below the systolic amplitude")]
    DicroticTooLarge,
    #[error("widths and decay must be positive")]
    BadShape,
    #[error("derivative order must be 1, 2 or 3, got {0}")]
    BadOrder(usize),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Pulse model parameters; times are in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseWave {
    pub period: f64,
    pub samples_per_period: usize,
    pub systolic_amp: f64,
    pub systolic_center: f64,
    pub systolic_width: f64,
    pub dicrotic_amp: f64,
    pub dicrotic_center: f64,
    pub dicrotic_width: f64,
    pub baseline_amp: f64,
    pub baseline_decay: f64,
}

impl Default for PulseWave {
    fn default() -> Self {
        Self::with_period(1.0)
    }
}

const DENSE_SAMPLES: usize = 4096;
const PAST_PERIODS: i32 = 13;
const FUTURE_PERIODS: i32 = 2;

fn gaussian(u: f64, c: f64, w: f64) -> f64 {
    let z = (u - c) / w;
    (-0.5 * z * z).exp()
}

/// Derivatives 0..=3 of `gaussian` in `u`.
fn gaussian_derivatives(u: f64, c: f64, w: f64) -> [f64; 4] {
    let g = gaussian(u, c, w);
    let d = u - c;
    let w2 = w * w;
    [g, -d / w2 * g, (d * d / (w2 * w2) - 1.0 / w2) * g, (3.0 * d / (w2 * w2) - d * d * d / (w2 * w2 * w2)) * g]
}

/// `lambda * (gaussian * exp(-lambda t) H(t))(u)` in closed form.
fn decaying_baseline(u: f64, c: f64, w: f64, lambda: f64) -> f64 {
    let exponent = lambda * (c - u) + 0.5 * lambda * lambda * w * w;
    let arg = (c + lambda * w * w - u) / (core::f64::consts::SQRT_2 * w);
    lambda * w * (PI / 2.0).sqrt() * exponent.exp() * libm::erfc(arg)
}

impl PulseWave {
    /// Default shape scaled to `period`: systolic peak at 0.15 T (width
    /// 0.05 T), dicrotic rebound 0.35x at 0.45 T (width 0.04 T), baseline
    /// 0.6x decaying with time constant 0.3 T, 30 samples per period.
    pub fn with_period(period: f64) -> Self {
        Self {
            period,
            samples_per_period: 30,
            systolic_amp: 1.0,
            systolic_center: 0.15 * period,
            systolic_width: 0.05 * period,
            dicrotic_amp: 0.35,
            dicrotic_center: 0.45 * period,
            dicrotic_width: 0.04 * period,
            baseline_amp: 0.6,
            baseline_decay: 0.3 * period,
        }
    }

    /// All amplitudes zero.
    pub fn flat(period: f64) -> Self {
        Self { systolic_amp: 0.0, dicrotic_amp: 0.0, baseline_amp: 0.0, ..Self::with_period(period) }
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(PulseError::BadPeriod);
        }
        if self.dicrotic_amp >= self.systolic_amp && self.systolic_amp > 0.0 {
            return Err(PulseError::DicroticTooLarge);
        }
        if !(self.systolic_width > 0.0 && self.dicrotic_width > 0.0 && self.baseline_decay > 0.0) {
            return Err(PulseError::BadShape);
        }
        Ok(())
    }

    /// Periodized, unnormalized derivatives 0..=3 at phase `u` in `[0, period)`.
    fn raw(&self, u0: f64) -> [f64; 4] {
        let lambda = 1.0 / self.baseline_decay;
        let mut out = [0.0; 4];
        for m in -FUTURE_PERIODS..=PAST_PERIODS {
            let u = u0 + m as f64 * self.period;
            let s = gaussian_derivatives(u, self.systolic_center, self.systolic_width);
            let d = gaussian_derivatives(u, self.dicrotic_center, self.dicrotic_width);
            // E' = lambda (g - E) with g the unit systolic Gaussian.
            let mut e = [0.0; 4];
            e[0] = decaying_baseline(u, self.systolic_center, self.systolic_width, lambda);
            for k in 1..4 {
                e[k] = lambda * (s[k - 1] - e[k - 1]);
            }
            for k in 0..4 {
                out[k] += self.systolic_amp * s[k] + self.dicrotic_amp * d[k] + self.baseline_amp * e[k];
            }
        }
        out
    }

    /// Minimum and range of the unnormalized waveform over one period.
    fn extent(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..DENSE_SAMPLES {
            let v = self.raw(self.period * i as f64 / DENSE_SAMPLES as f64)[0];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi - lo)
    }

    fn phase(&self, t: f64) -> f64 {
        t.rem_euclid(self.period)
    }

    /// Normalized displacement at time `t`; one period spans `[0, 1]` up to
    /// the resolution of a dense normalization grid.
    pub fn displacement(&self, t: f64) -> f64 {
        self.sampler().displacement(t)
    }

    /// Analytic `order`-th time derivative (0..=3) of [`Self::displacement`].
    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        self.sampler().derivative(t, order)
    }

    /// Evaluator with the normalization computed once.
    pub fn sampler(&self) -> PulseSampler<'_> {
        let (offset, range) = self.extent();
        PulseSampler { model: self, offset, scale: if range > 0.0 { 1.0 / range } else { 0.0 } }
    }

    /// `count` samples starting at `t = 0` with spacing `1 / fps`.
    pub fn sample(&self, fps: f64, count: usize) -> Vec<f64> {
        let sampler = self.sampler();
        (0..count).map(|i| sampler.displacement(i as f64 / fps)).collect()
    }

    /// One period at `samples_per_period` samples.
    pub fn sample_period(&self) -> Vec<f64> {
        let n = self.samples_per_period.max(1);
        self.sample(n as f64 / self.period, n)
    }

    /// Samples in one period at `fps`, rounded to the nearest integer.
    pub fn samples_in_period(&self, fps: f64) -> usize {
        (self.period * fps).round().max(1.0) as usize
    }
}

pub struct PulseSampler<'a> {
    model: &'a PulseWave,
    offset: f64,
    scale: f64,
}

impl PulseSampler<'_> {
    pub fn displacement(&self, t: f64) -> f64 {
        (self.model.raw(self.model.phase(t))[0] - self.offset) * self.scale
    }

    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        match order {
            0 => self.displacement(t),
            1..=3 => self.model.raw(self.model.phase(t))[order] * self.scale,
            _ => panic!("derivative order above 3"),
        }
    }
}

/// Central finite difference of `order` over one period sampled at `fps`,
/// wrapping periodically; units are per second^order.
pub fn derivative_series(model: &PulseWave, order: usize, fps: f64) -> Result<Vec<f64>, PulseError> {
    model.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PulseError::BadFrameRate);
    }
    if !(1..=3).contains(&order) {
        return Err(PulseError::BadOrder(order));
    }
    let n = model.samples_in_period(fps);
    let s = model.sample(fps, n);
    let at = |i: isize| s[i.rem_euclid(n as isize) as usize];
    let h = 1.0 / fps;
    let series = (0..n as isize)
        .map(|i| match order {
            1 => (at(i + 1) - at(i - 1)) / (2.0 * h),
            2 => (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h),
            3 => (at(i + 2) - 2.0 * at(i + 1) + 2.0 * at(i - 1) - at(i - 2)) / (2.0 * h * h * h),
            _ => unreachable!(),
        })
        .collect();
    Ok(series)
}

/// Half-width of the linear-mode band used by [`magnify_1d`], in Hz.
pub const PULSE_BAND_HALF_WIDTH: f64 = 0.1;

/// Sampled waveform plus its magnified counterpart over one interior period.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnified1d {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

/// `s + alpha * filter(s)` on a multi-period sampling of the waveform.
///
/// Enough periods are generated that the returned interior period lies at
/// least one kernel radius from either end.
pub fn magnify_1d(model: &PulseWave, mode: Mode, alpha: f64, fps: f64) -> Result<Magnified1d, PulseError> {
    model.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PulseError::BadFrameRate);
    }
    let frequency = 1.0 / model.period;
    let n = model.samples_in_period(fps);
    let sigma = gaussian_sigma(fps, frequency)?;
    let radius = (4.0 * sigma).ceil() as usize;
    let margin = radius.div_ceil(n).max(1);
    let periods = 2 * margin + 1;
    let s = model.sample(fps, periods * n);
    let filtered = match mode {
        Mode::Linear => {
            let band = BandSpec::new(frequency, PULSE_BAND_HALF_WIDTH, fps)?;
            ideal_bandpass_time(&s, &band)?
        }
        Mode::Accel => convolve_time(&s, &gaussian_derivative_kernel(sigma, DerivativeOrder::Second)?)?,
        Mode::Jerk => convolve_time(&s, &gaussian_derivative_kernel(sigma, DerivativeOrder::Third)?)?,
    };
    let range = margin * n..(margin + 1) * n;
    let input = s[range.clone()].to_vec();
    let output = s[range.clone()].iter().zip(&filtered[range]).map(|(s, d)| s + alpha * d).collect();
    Ok(Magnified1d { input, output })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motif {
    /// Gaussian blob at the frame centre.
    Bump,
    /// Vertical smooth step edge through the frame centre.
    Edge,
    /// Full-height vertical ridge with a Gaussian cross-section, like a vessel crossing the view.
    Vessel,
}

impl Motif {
    pub fn name(self) -> &'static str {
        match self {
            Motif::Bump => "bump",
            Motif::Edge => "edge",
            Motif::Vessel => "vessel",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Motif::Bump, Motif::Edge, Motif::Vessel].into_iter().find(|m| m.name() == name)
    }
}

/// Whole-field sinusoidal translation along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    /// Peak displacement in pixels.
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    /// Seconds.
    pub duration: f64,
    pub motif: Motif,
    /// Peak-to-peak motif displacement along x in pixels.
    pub motion_amp: f64,
    /// Gaussian width of the motif profile in pixels.
    pub motif_scale: f64,
    pub noise_sd: f64,
    pub seed: u64,
    pub drift: Option<Drift>,
    /// Adds a fixed multi-orientation sinusoidal texture to the background.
    pub texture: bool,
}

impl SynthParams {
    pub const MAX_MOTION: f64 = 2.0;
    pub const MIN_SIZE: usize = 16;

    pub fn new(width: usize, height: usize, fps: f64, duration: f64) -> Self {
        Self {
            width,
            height,
            fps,
            duration,
            motif: Motif::Bump,
            motion_amp: 0.5,
            motif_scale: 3.0,
            noise_sd: 0.0,
            seed: 0,
            drift: None,
            texture: false,
        }
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }

    /// Pixel distance from the motif centre line beyond which the motif is treated as absent.
    pub fn support_radius(&self) -> f64 {
        3.0 * self.motif_scale
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Clip(#[from] ClipError),
    #[error("frame must be at least {min}x{min}, got {width}x{height}")]
    BadGeometry { width: usize, height: usize, min: usize },
    #[error("motion amplitude must lie in [0, {max}] px, got {value}")]
    BadMotion { value: f64, max: f64 },
    #[error("duration {duration} s is shorter than three periods of {period} s")]
    TooShort { duration: f64, period: f64 },
    #[error("noise standard deviation must be finite and non-negative")]
    BadNoise,
    #[error("motif scale must be positive")]
    BadMotifScale,
}

/// Rendered clip with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClip {
    pub clip: VideoClip,
    /// Motif displacement along x per frame, in pixels.
    pub displacement: Vec<f64>,
    /// Row-major mask of pixels the motif can reach.
    pub mask: Vec<bool>,
    pub params: SynthParams,
}

impl SyntheticClip {
    /// Per-pixel ground-truth x displacement of frame `t` (zero outside the mask).
    pub fn displacement_map(&self, t: usize) -> Frame {
        let d = self.displacement[t];
        let data = self.mask.iter().map(|&m| if m { d } else { 0.0 }).collect();
        Frame::new(self.params.width, self.params.height, data).expect("mask matches frame size")
    }
}

const BACKGROUND: f64 = 0.3;
const MOTIF_CONTRAST: f64 = 0.4;

fn texture(x: f64, y: f64) -> f64 {
    0.06 * (2.0 * PI * (x / 17.0 + y / 29.0)).sin()
        + 0.05 * (2.0 * PI * (x / 11.0 - y / 23.0)).cos()
        + 0.04 * (2.0 * PI * y / 7.0).sin()
        + 0.03 * (2.0 * PI * x / 9.0).cos()
}

fn motif_value(motif: Motif, dx: f64, dy: f64, scale: f64) -> f64 {
    match motif {
        Motif::Bump => MOTIF_CONTRAST * (-(dx * dx + dy * dy) / (2.0 * scale * scale)).exp(),
        Motif::Edge => MOTIF_CONTRAST * 0.5 * (1.0 + libm::tanh(dx / scale)),
        Motif::Vessel => MOTIF_CONTRAST * (-(dx * dx) / (2.0 * scale * scale)).exp(),
    }
}

pub fn synth_clip(model: &PulseWave, params: &SynthParams) -> Result<SyntheticClip, SynthError> {
    model.validate()?;
    if !(params.fps.is_finite() && params.fps > 0.0) {
        return Err(PulseError::BadFrameRate.into());
    }
    if params.width < SynthParams::MIN_SIZE || params.height < SynthParams::MIN_SIZE {
        return Err(SynthError::BadGeometry {
            width: params.width,
            height: params.height,
            min: SynthParams::MIN_SIZE,
        });
    }
    if !(params.motion_amp >= 0.0 && params.motion_amp <= SynthParams::MAX_MOTION) {
        return Err(SynthError::BadMotion { value: params.motion_amp, max: SynthParams::MAX_MOTION });
    }
    if !(params.duration.is_finite() && params.duration >= 3.0 * model.period - 1e-9) {
        return Err(SynthError::TooShort { duration: params.duration, period: model.period });
    }
    if !(params.noise_sd.is_finite() && params.noise_sd >= 0.0) {
        return Err(SynthError::BadNoise);
    }
    if !(params.motif_scale.is_finite() && params.motif_scale > 0.0) {
        return Err(SynthError::BadMotifScale);
    }

    let (w, h) = (params.width, params.height);
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let sampler = model.sampler();
    let count = params.frame_count();
    let displacement: Vec<f64> =
        (0..count).map(|i| params.motion_amp * sampler.displacement(i as f64 / params.fps)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = Normal::new(0.0, params.noise_sd).map_err(|_| SynthError::BadNoise)?;
    let frames = displacement
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let t = i as f64 / params.fps;
            let shift = params.drift.map_or(0.0, |drift| drift.amplitude * (2.0 * PI * drift.frequency * t).sin());
            let mut frame = Frame::from_fn(w, h, |x, y| {
                let xs = x as f64 - shift;
                let y = y as f64;
                let mut v = BACKGROUND + motif_value(params.motif, xs - cx - d, y - cy, params.motif_scale);
                if params.texture {
                    v += texture(xs, y);
                }
                v
            });
            if params.noise_sd > 0.0 {
                for v in frame.data_mut() {
                    *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
            frame
        })
        .collect();

    // Motif support swept over the displacement range.
    let (lo, hi) = displacement.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let radius = params.support_radius();
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - cx;
            let gap_x = if dx < lo { lo - dx } else if dx > hi { dx - hi } else { 0.0 };
            let dy = match params.motif {
                Motif::Bump => y as f64 - cy,
                Motif::Edge | Motif::Vessel => 0.0,
            };
            mask[y * w + x] = (gap_x * gap_x + dy * dy).sqrt() <= radius;
        }
    }

    Ok(SyntheticClip { clip: VideoClip::new(frames, params.fps)?, displacement, mask, params: params.clone() })
}
