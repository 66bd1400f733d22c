//! Phase-based magnification of per-band local phase.
//!
//! Each oriented band's phase is unwrapped along time, filtered by the
//! mode's temporal filter to obtain `D`, and replaced by `phase + alpha * D`
//! while amplitudes and residuals stay untouched. [`magnify`] streams one
//! band at a time over cached frame spectra, so only a single band stack is
//! ever held in memory alongside the clip.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::frame::{ClipError, Frame, VideoClip};
use crate::pyramid::{build_filter_bank, wrap_angle, FilterBank, OctaveStep, PyramidError};
use crate::temporal::{
    convolve_time_into, gaussian_derivative_kernel, gaussian_sigma, BandSpec, DerivativeOrder, FilterError,
    IdealBandpass, TemporalKernel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MagnifyError {
    #[error(transparent)]
    Pyramid(#[from] PyramidError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Clip(#[from] ClipError),
    #[error("alpha must be finite and non-negative, got {0}")]
    BadAlpha(f64),
    #[error("band is specified at {band} fps but the clip runs at {clip} fps")]
    FrameRateMismatch { band: f64, clip: f64 },
    #[error("clip has {frames} frames, the temporal filter needs at least {required}")]
    ClipTooShort { frames: usize, required: usize },
    #[error("phase smoothing radius must be positive, got {0}")]
    BadSmoothingRadius(f64),
}

/// Temporal order of the magnified motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Velocity: ideal bandpass of phase.
    Linear,
    /// Acceleration: second Gaussian derivative of phase.
    Accel,
    /// Jerk: third Gaussian derivative of phase.
    Jerk,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Linear, Mode::Accel, Mode::Jerk];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::Accel => "accel",
            Mode::Jerk => "jerk",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Mode::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Optional amplitude-weighted Gaussian smoothing of the filtered phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PhaseSmoothing {
    #[default]
    Off,
    AmplitudeWeighted { radius: f64 },
}

impl PhaseSmoothing {
    pub const DEFAULT_RADIUS: f64 = 2.0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnificationConfig {
    pub mode: Mode,
    /// Gain applied to the filtered phase for every mode.
    pub alpha: f64,
    pub band: BandSpec,
    pub levels: usize,
    pub orientations: usize,
    pub octave_step: OctaveStep,
    pub phase_smoothing: PhaseSmoothing,
}

impl MagnificationConfig {
    pub const DEFAULT_LEVELS: usize = 4;
    pub const DEFAULT_ORIENTATIONS: usize = 4;
    pub const DEFAULT_FREQUENCY: f64 = 1.0;
    pub const DEFAULT_HALF_WIDTH: f64 = 0.1;
    pub const ALPHA_PRESETS: [f64; 3] = [2.0, 5.0, 10.0];

    /// Four-level half-octave pyramid, four orientations, 1 Hz +- 0.1 band.
    pub fn new(mode: Mode, alpha: f64, fps: f64) -> Self {
        Self {
            mode,
            alpha,
            band: BandSpec { center: Self::DEFAULT_FREQUENCY, half_width: Self::DEFAULT_HALF_WIDTH, fps },
            levels: Self::DEFAULT_LEVELS,
            orientations: Self::DEFAULT_ORIENTATIONS,
            octave_step: OctaveStep::Half,
            phase_smoothing: PhaseSmoothing::Off,
        }
    }

    pub fn validate(&self) -> Result<(), MagnifyError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(MagnifyError::BadAlpha(self.alpha));
        }
        self.band.validate()?;
        if let PhaseSmoothing::AmplitudeWeighted { radius } = self.phase_smoothing {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(MagnifyError::BadSmoothingRadius(radius));
            }
        }
        Ok(())
    }

    pub fn filter_bank(&self, width: usize, height: usize) -> Result<FilterBank, MagnifyError> {
        Ok(build_filter_bank(width, height, self.levels, self.orientations, self.octave_step)?)
    }
}

/// The per-mode temporal filter, ready to run on series of one length.
#[derive(Debug, Clone)]
pub enum TemporalFilter {
    Derivative(TemporalKernel),
    Bandpass(IdealBandpass),
}

impl TemporalFilter {
    pub fn for_config(config: &MagnificationConfig, frames: usize) -> Result<Self, MagnifyError> {
        config.validate()?;
        let filter = match config.mode {
            Mode::Linear => TemporalFilter::Bandpass(IdealBandpass::new(frames, &config.band)?),
            Mode::Accel | Mode::Jerk => {
                let order = if config.mode == Mode::Jerk { DerivativeOrder::Third } else { DerivativeOrder::Second };
                let sigma = gaussian_sigma(config.band.fps, config.band.center)?;
                TemporalFilter::Derivative(gaussian_derivative_kernel(sigma, order)?)
            }
        };
        let required = filter.support();
        if frames < required {
            return Err(MagnifyError::ClipTooShort { frames, required });
        }
        Ok(filter)
    }

    /// Minimum series length the filter accepts.
    pub fn support(&self) -> usize {
        match self {
            TemporalFilter::Derivative(kernel) => kernel.len(),
            TemporalFilter::Bandpass(_) => 1,
        }
    }

    /// Frames at each end whose output depends on edge replication.
    pub fn boundary_frames(&self) -> usize {
        match self {
            TemporalFilter::Derivative(kernel) => kernel.radius(),
            TemporalFilter::Bandpass(_) => 0,
        }
    }

    fn apply(&self, series: &[f64], out: &mut [f64], work: &mut FilterWork) {
        match self {
            TemporalFilter::Derivative(kernel) => {
                convolve_time_into(series, kernel, out).expect("series length checked at construction")
            }
            TemporalFilter::Bandpass(bandpass) => bandpass.apply(series, out, &mut work.buf, &mut work.scratch),
        }
    }
}

#[derive(Default)]
struct FilterWork {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Number of edge frames contaminated by boundary handling for `config`.
pub fn boundary_frames(config: &MagnificationConfig, frames: usize) -> Result<usize, MagnifyError> {
    Ok(TemporalFilter::for_config(config, frames)?.boundary_frames())
}

/// Phase and amplitude of one oriented band over time, stored time-major
/// (`frames` consecutive maps of `width * height` samples).
#[derive(Debug, Clone, PartialEq)]
pub struct BandPhase {
    pub level: usize,
    pub orientation: usize,
    pub phase: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl BandPhase {
    /// Phase map of frame `t`.
    pub fn phase_at(&self, t: usize, pixels: usize) -> &[f64] {
        &self.phase[t * pixels..(t + 1) * pixels]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub fps: f64,
    pub bands: Vec<BandPhase>,
}

impl PhaseSeries {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Time series of one pixel in one band.
    pub fn pixel_series(&self, band: usize, pixel: usize) -> Vec<f64> {
        let n = self.pixels();
        (0..self.frames).map(|t| self.bands[band].phase[t * n + pixel]).collect()
    }
}

fn check_clip(clip: &VideoClip, bank: &FilterBank) -> Result<(), MagnifyError> {
    if clip.width() != bank.width() || clip.height() != bank.height() {
        return Err(PyramidError::DimensionMismatch {
            width: bank.width(),
            height: bank.height(),
            actual_width: clip.width(),
            actual_height: clip.height(),
        }
        .into());
    }
    Ok(())
}

fn band_stack(spectra: &[Vec<Complex64>], bank: &FilterBank, band: usize) -> Vec<Vec<Complex64>> {
    spectra.iter().map(|s| bank.band_from_spectrum(s, band)).collect()
}

/// Decomposes every frame and returns temporally unwrapped phase plus amplitude per band.
pub fn extract_phase_series(clip: &VideoClip, bank: &FilterBank) -> Result<PhaseSeries, MagnifyError> {
    check_clip(clip, bank)?;
    let spectra = clip.frames().iter().map(|f| bank.spectrum(f)).collect::<Result<Vec<_>, _>>()?;
    let geometry = bank.geometry();
    let bands = (0..bank.band_count())
        .map(|b| {
            let (level, orientation) = geometry.band_position(b);
            let stack = band_stack(&spectra, bank, b);
            let phase = stack.iter().flat_map(|m| m.iter().map(|c| c.arg())).collect();
            let amplitude = stack.iter().flat_map(|m| m.iter().map(|c| c.norm())).collect();
            BandPhase { level, orientation, phase, amplitude }
        })
        .collect();
    let raw = PhaseSeries { width: bank.width(), height: bank.height(), frames: clip.len(), fps: clip.fps(), bands };
    Ok(unwrap_phase_temporal(raw))
}

/// Unwraps a time-major phase stack in place so consecutive deltas lie in `(-pi, pi]`.
fn unwrap_stack(phase: &mut [f64], pixels: usize) {
    let frames = phase.len() / pixels;
    for t in 1..frames {
        let (done, rest) = phase.split_at_mut(t * pixels);
        let previous = &done[(t - 1) * pixels..];
        for (current, &prev) in rest[..pixels].iter_mut().zip(previous) {
            *current = prev + wrap_angle(*current - prev);
        }
    }
}

/// Makes each pixel's phase continuous along time; frame 0 is left as is.
pub fn unwrap_phase_temporal(mut raw: PhaseSeries) -> PhaseSeries {
    let pixels = raw.pixels();
    for band in &mut raw.bands {
        unwrap_stack(&mut band.phase, pixels);
    }
    raw
}

/// Applies `filter` along time for every pixel of a time-major stack.
fn filter_stack(stack: &[f64], pixels: usize, filter: &TemporalFilter) -> Vec<f64> {
    let frames = stack.len() / pixels;
    let mut out = vec![0.0; stack.len()];
    let mut series = vec![0.0; frames];
    let mut filtered = vec![0.0; frames];
    let mut work = FilterWork::default();
    for p in 0..pixels {
        for (t, s) in series.iter_mut().enumerate() {
            *s = stack[t * pixels + p];
        }
        filter.apply(&series, &mut filtered, &mut work);
        for (t, &v) in filtered.iter().enumerate() {
            out[t * pixels + p] = v;
        }
    }
    out
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable periodic Gaussian blur of a row-major map.
fn blur_periodic(map: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let mut rows = vec![0.0; map.len()];
    for y in 0..height {
        for x in 0..width {
            rows[y * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * map[y * width + (x as isize + k as isize - half).rem_euclid(width as isize) as usize])
                .sum();
        }
    }
    let mut out = vec![0.0; map.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * rows[(y as isize + k as isize - half).rem_euclid(height as isize) as usize * width + x])
                .sum();
        }
    }
    out
}

/// Replaces `filtered` by `blur(A * D) / blur(A)` frame by frame.
fn smooth_stack(filtered: &mut [f64], amplitude: &[f64], width: usize, height: usize, radius: f64) {
    let pixels = width * height;
    let taps = gaussian_taps(radius);
    for (d, a) in filtered.chunks_exact_mut(pixels).zip(amplitude.chunks_exact(pixels)) {
        let weighted: Vec<f64> = d.iter().zip(a).map(|(d, a)| d * a).collect();
        let numerator = blur_periodic(&weighted, width, height, &taps);
        let denominator = blur_periodic(a, width, height, &taps);
        for ((out, n), den) in d.iter_mut().zip(numerator).zip(denominator) {
            *out = if den > f64::EPSILON { n / den } else { 0.0 };
        }
    }
}

/// Filtered phase deviations `D` for every band (amplitudes are carried along).
///
/// Expects an unwrapped series such as the one returned by
/// [`extract_phase_series`].
pub fn filter_phase(series: &PhaseSeries, config: &MagnificationConfig) -> Result<PhaseSeries, MagnifyError> {
    check_fps(config, series.fps)?;
    let filter = TemporalFilter::for_config(config, series.frames)?;
    let pixels = series.pixels();
    let bands = series
        .bands
        .iter()
        .map(|band| {
            let mut phase = filter_stack(&band.phase, pixels, &filter);
            if let PhaseSmoothing::AmplitudeWeighted { radius } = config.phase_smoothing {
                smooth_stack(&mut phase, &band.amplitude, series.width, series.height, radius);
            }
            BandPhase { level: band.level, orientation: band.orientation, phase, amplitude: band.amplitude.clone() }
        })
        .collect();
    Ok(PhaseSeries { bands, ..*series })
}

fn check_fps(config: &MagnificationConfig, fps: f64) -> Result<(), MagnifyError> {
    if (config.band.fps - fps).abs() > 1e-9 * fps {
        return Err(MagnifyError::FrameRateMismatch { band: config.band.fps, clip: fps });
    }
    Ok(())
}

/// Magnified clip with the same size and length as `clip`.
///
/// Output intensities are clamped to `[0, 1]` after reconstruction.
pub fn magnify(clip: &VideoClip, config: &MagnificationConfig) -> Result<VideoClip, MagnifyError> {
    check_fps(config, clip.fps())?;
    let filter = TemporalFilter::for_config(config, clip.len())?;
    let bank = config.filter_bank(clip.width(), clip.height())?;
    magnify_with(clip, config, &bank, &filter)
}

/// [`magnify`] with a caller-supplied filter bank and temporal filter.
pub fn magnify_with(
    clip: &VideoClip,
    config: &MagnificationConfig,
    bank: &FilterBank,
    filter: &TemporalFilter,
) -> Result<VideoClip, MagnifyError> {
    check_clip(clip, bank)?;
    check_fps(config, clip.fps())?;
    let (width, height) = (clip.width(), clip.height());
    let pixels = width * height;
    let spectra = clip.frames().iter().map(|f| bank.spectrum(f)).collect::<Result<Vec<_>, _>>()?;
    let mut synthesis: Vec<Vec<Complex64>> = spectra.iter().map(|s| bank.residual_spectrum(s)).collect();

    for b in 0..bank.band_count() {
        let mut stack = band_stack(&spectra, bank, b);
        if config.alpha != 0.0 {
            let mut phase: Vec<f64> = stack.iter().flat_map(|m| m.iter().map(|c| c.arg())).collect();
            unwrap_stack(&mut phase, pixels);
            let mut deviation = filter_stack(&phase, pixels, filter);
            if let PhaseSmoothing::AmplitudeWeighted { radius } = config.phase_smoothing {
                let amplitude: Vec<f64> = stack.iter().flat_map(|m| m.iter().map(|c| c.norm())).collect();
                smooth_stack(&mut deviation, &amplitude, width, height, radius);
            }
            for (coefficients, d) in stack.iter_mut().zip(deviation.chunks_exact(pixels)) {
                for (c, &d) in coefficients.iter_mut().zip(d) {
                    *c *= Complex64::from_polar(1.0, config.alpha * d);
                }
            }
        }
        for (acc, coefficients) in synthesis.iter_mut().zip(&stack) {
            bank.accumulate_band(acc, coefficients, b);
        }
    }

    let frames = synthesis
        .into_iter()
        .map(|spectrum| {
            let mut frame = bank.frame_from_spectrum(spectrum);
            for v in frame.data_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            frame
        })
        .collect::<Vec<Frame>>();
    Ok(VideoClip::new(frames, clip.fps())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn series_of(values: &[f64]) -> PhaseSeries {
        PhaseSeries {
            width: 1,
            height: 1,
            frames: values.len(),
            fps: 30.0,
            bands: vec![BandPhase { level: 0, orientation: 0, phase: values.to_vec(), amplitude: vec![1.0; values.len()] }],
        }
    }

    #[test]
    fn unwrap_crosses_the_branch_cut_forward() {
        let out = unwrap_phase_temporal(series_of(&[3.1, -3.1]));
        assert_eq!(out.bands[0].phase[0], 3.1);
        assert!((out.bands[0].phase[1] - 3.183185307179586).abs() < 1e-12);
    }

    #[test]
    fn unwrap_leaves_smooth_and_constant_sequences() {
        let smooth = [0.1, 0.4, 0.2, -0.5, -1.0];
        let out = unwrap_phase_temporal(series_of(&smooth));
        assert!(out.bands[0].phase.iter().zip(&smooth).all(|(a, b)| (a - b).abs() < 1e-15));
        let constant = [2.0; 6];
        assert_eq!(unwrap_phase_temporal(series_of(&constant)).bands[0].phase, constant.to_vec());
    }

    #[test]
    fn unwrapped_deltas_stay_in_range() {
        let wrapped: Vec<f64> = (0..50).map(|t| wrap_angle(0.9 * t as f64)).collect();
        let out = unwrap_phase_temporal(series_of(&wrapped));
        for pair in out.bands[0].phase.windows(2) {
            let d = pair[1] - pair[0];
            assert!(d > -PI && d <= PI);
            assert!((d - 0.9).abs() < 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let mut config = MagnificationConfig::new(Mode::Jerk, -1.0, 30.0);
        assert!(matches!(config.validate(), Err(MagnifyError::BadAlpha(_))));
        config.alpha = 2.0;
        config.phase_smoothing = PhaseSmoothing::AmplitudeWeighted { radius: 0.0 };
        assert!(matches!(config.validate(), Err(MagnifyError::BadSmoothingRadius(_))));
        config.phase_smoothing = PhaseSmoothing::Off;
        config.band.center = 20.0;
        assert!(matches!(config.validate(), Err(MagnifyError::Filter(_))));
    }

    #[test]
    fn short_clip_is_rejected_for_derivative_modes() {
        let config = MagnificationConfig::new(Mode::Jerk, 2.0, 30.0);
        assert!(matches!(TemporalFilter::for_config(&config, 20), Err(MagnifyError::ClipTooShort { required: 45, .. })));
        let linear = MagnificationConfig::new(Mode::Linear, 2.0, 30.0);
        assert_eq!(TemporalFilter::for_config(&linear, 20).unwrap().boundary_frames(), 0);
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in Mode::ALL {
            assert_eq!(Mode::from_name(mode.name()), Some(mode));
        }
        assert_eq!(Mode::from_name("velocity"), None);
    }

    #[test]
    fn smoothing_preserves_constant_deviation() {
        let (w, h) = (8, 6);
        let mut d = vec![0.25; w * h * 2];
        let amplitude: Vec<f64> = (0..w * h * 2).map(|i| 0.1 + (i % 7) as f64).collect();
        smooth_stack(&mut d, &amplitude, w, h, 2.0);
        assert!(d.iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    fn texture(x: f64, y: f64) -> f64 {
        0.5 + 0.2 * (2.0 * PI * x / 8.0).sin() + 0.1 * (2.0 * PI * (x + 2.0 * y) / 11.0).cos()
    }

    fn shifted_clip(frames: usize, shift: impl Fn(usize) -> f64) -> VideoClip {
        let frames = (0..frames)
            .map(|t| {
                let s = shift(t);
                Frame::from_fn(32, 32, |x, y| texture(x as f64 - s, y as f64))
            })
            .collect();
        VideoClip::new(frames, 30.0).unwrap()
    }

    #[test]
    fn static_clip_is_unchanged() {
        let clip = shifted_clip(60, |_| 0.0);
        for mode in Mode::ALL {
            let out = magnify(&clip, &MagnificationConfig::new(mode, 10.0, 30.0)).unwrap();
            assert!(out.max_abs_diff(&clip) < 1e-6, "{mode:?}");
        }
    }

    #[test]
    fn zero_gain_reconstructs_input() {
        let clip = shifted_clip(60, |t| 0.3 * (2.0 * PI * t as f64 / 30.0).sin());
        let out = magnify(&clip, &MagnificationConfig::new(Mode::Jerk, 0.0, 30.0)).unwrap();
        assert!(out.max_abs_diff(&clip) < 1e-6);
    }

    #[test]
    fn linear_mode_amplifies_in_band_motion() {
        let amp = 0.1;
        let clip = shifted_clip(90, |t| amp * (2.0 * PI * t as f64 / 30.0).sin());
        let out = magnify(&clip, &MagnificationConfig::new(Mode::Linear, 4.0, 30.0)).unwrap();
        let input_change = clip.frame(37).max_abs_diff(clip.frame(52));
        let output_change = out.frame(37).max_abs_diff(out.frame(52));
        assert!(output_change > 3.0 * input_change, "{output_change} vs {input_change}");
    }

    #[test]
    fn mismatched_frame_rate_is_rejected() {
        let clip = shifted_clip(60, |_| 0.0);
        let config = MagnificationConfig::new(Mode::Jerk, 1.0, 25.0);
        assert!(matches!(magnify(&clip, &config), Err(MagnifyError::FrameRateMismatch { .. })));
    }

    #[test]
    fn streamed_path_matches_phase_series_path() {
        let clip = shifted_clip(50, |t| 0.2 * (2.0 * PI * t as f64 / 30.0).sin());
        let config = MagnificationConfig::new(Mode::Accel, 3.0, 30.0);
        let bank = config.filter_bank(32, 32).unwrap();
        let phases = extract_phase_series(&clip, &bank).unwrap();
        let filtered = filter_phase(&phases, &config).unwrap();
        let streamed = magnify(&clip, &config).unwrap();
        let pixels = 32 * 32;
        for t in [0usize, 25, 49] {
            let spectrum = bank.spectrum(clip.frame(t)).unwrap();
            let mut acc = bank.residual_spectrum(&spectrum);
            for (b, band) in filtered.bands.iter().enumerate() {
                let mut coeffs = bank.band_from_spectrum(&spectrum, b);
                for (c, d) in coeffs.iter_mut().zip(&band.phase[t * pixels..(t + 1) * pixels]) {
                    *c *= Complex64::from_polar(1.0, config.alpha * d);
                }
                bank.accumulate_band(&mut acc, &coeffs, b);
            }
            let mut frame = bank.frame_from_spectrum(acc);
            frame.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            assert!(frame.max_abs_diff(streamed.frame(t)) < 1e-9);
        }
    }
}
