//! Complex steerable pyramid built in the frequency domain.
//!
//! Every band is kept at full resolution. Radial windows are raised cosines
//! in log-frequency whose transition width equals the octave step, which
//! makes consecutive windows nest and the squared-mask sum telescope to one.
//! Angular windows are `cos^(K-1)` lobes restricted to a half-plane, so each
//! oriented band is an analytic (complex) signal whose local phase encodes
//! sub-pixel position.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::fft::{signed_bin, Fft2};
use crate::frame::Frame;

/// Smallest accepted frame side.
pub const MIN_DIMENSION: usize = 16;

/// Highest radial boundary; everything above belongs to the high-pass residual.
const TOP_BOUNDARY: f64 = FRAC_PI_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PyramidError {
    #[error("frame dimension {width}x{height} is below the minimum of {MIN_DIMENSION}")]
    DimensionTooSmall { width: usize, height: usize },
    #[error(
        "{levels} levels reach {lowest_edge:.4} rad/px, below the frequency spacing {spacing:.4} of a {width}x{height} frame"
    )]
    TooManyLevels { levels: usize, width: usize, height: usize, lowest_edge: f64, spacing: f64 },
    #[error("invalid pyramid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("frame is {actual_width}x{actual_height} but the filter bank expects {width}x{height}")]
    DimensionMismatch { width: usize, height: usize, actual_width: usize, actual_height: usize },
}

/// Radial spacing between consecutive pyramid levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OctaveStep {
    #[default]
    Half,
    Full,
}

impl OctaveStep {
    pub fn octaves(self) -> f64 {
        match self {
            OctaveStep::Half => 0.5,
            OctaveStep::Full => 1.0,
        }
    }

    pub fn from_octaves(octaves: f64) -> Option<Self> {
        if octaves == 0.5 {
            Some(OctaveStep::Half)
        } else if octaves == 1.0 {
            Some(OctaveStep::Full)
        } else {
            None
        }
    }
}

/// Shape parameters shared by a filter bank and the pyramids it produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub orientations: usize,
    pub octave_step: OctaveStep,
}

impl Geometry {
    pub fn band_count(&self) -> usize {
        self.levels * self.orientations
    }

    /// Flat band index, level-major.
    pub fn band_index(&self, level: usize, orientation: usize) -> usize {
        assert!(level < self.levels && orientation < self.orientations);
        level * self.orientations + orientation
    }

    /// Inverse of [`Geometry::band_index`].
    pub fn band_position(&self, band: usize) -> (usize, usize) {
        (band / self.orientations, band % self.orientations)
    }

    /// Outer radial boundary of level `k`, in radians per pixel.
    fn boundary(&self, k: usize) -> f64 {
        TOP_BOUNDARY * libm::exp2(-(k as f64) * self.octave_step.octaves())
    }

    /// Peak radial frequency of `level`, in radians per pixel.
    pub fn level_frequency(&self, level: usize) -> f64 {
        self.boundary(level + 1)
    }

    /// Preferred direction of `orientation`, in radians from the +x axis.
    pub fn orientation_angle(&self, orientation: usize) -> f64 {
        PI * orientation as f64 / self.orientations as f64
    }
}

/// Precomputed frequency-domain masks for one frame geometry.
///
/// Immutable after construction; share freely between threads.
#[derive(Debug, Clone)]
pub struct FilterBank {
    geometry: Geometry,
    masks: Vec<Vec<f64>>,
    hi_mask: Vec<f64>,
    lo_mask: Vec<f64>,
    /// Index of the negated frequency for every sample.
    mirror: Vec<usize>,
    fft: Fft2,
}

/// Raised-cosine low/high pair across `[boundary * 2^-width, boundary]`.
fn radial_pair(radius: f64, boundary: f64, width: f64) -> (f64, f64) {
    if radius <= 0.0 {
        return (1.0, 0.0);
    }
    let u = (radius / boundary).log2() / width + 1.0;
    if u <= 0.0 {
        (1.0, 0.0)
    } else if u >= 1.0 {
        (0.0, 1.0)
    } else {
        let angle = FRAC_PI_2 * u;
        (angle.cos(), angle.sin())
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normalisation making `sum_j alpha^2 cos^(2(K-1))(theta - theta_j) == 1`.
fn angular_gain(orientations: usize) -> f64 {
    let k = orientations as u64;
    let squared = libm::pow(4.0, (k - 1) as f64) / (k as f64 * binomial(2 * k - 2, k - 1));
    squared.sqrt()
}

/// Wraps an angle into `(-pi, pi]`.
pub(crate) fn wrap_angle(angle: f64) -> f64 {
    let mut a = libm::fmod(angle + PI, 2.0 * PI);
    if a <= 0.0 {
        a += 2.0 * PI;
    }
    a - PI
}

/// Builds the tight-frame filter bank for a `width x height` frame.
pub fn build_filter_bank(
    width: usize,
    height: usize,
    levels: usize,
    orientations: usize,
    octave_step: OctaveStep,
) -> Result<FilterBank, PyramidError> {
    if levels == 0 {
        return Err(PyramidError::InvalidGeometry("levels must be at least 1"));
    }
    if orientations < 2 {
        return Err(PyramidError::InvalidGeometry("orientations must be at least 2"));
    }
    if width == 0 || height == 0 {
        return Err(PyramidError::DimensionTooSmall { width, height });
    }
    let geometry = Geometry { width, height, levels, orientations, octave_step };
    let spacing = 2.0 * PI / width.min(height) as f64;
    let lowest_edge = geometry.boundary(levels + 1);
    if lowest_edge < spacing {
        return Err(PyramidError::TooManyLevels { levels, width, height, lowest_edge, spacing });
    }
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(PyramidError::DimensionTooSmall { width, height });
    }

    let step = octave_step.octaves();
    let gain = angular_gain(orientations);
    let n = width * height;
    let mut masks = vec![vec![0.0; n]; geometry.band_count()];
    let mut hi_mask = vec![0.0; n];
    let mut lo_mask = vec![0.0; n];
    let mut mirror = vec![0; n];

    for ky in 0..height {
        let wy = 2.0 * PI * signed_bin(ky, height) as f64 / height as f64;
        for kx in 0..width {
            let wx = 2.0 * PI * signed_bin(kx, width) as f64 / width as f64;
            let idx = ky * width + kx;
            mirror[idx] = ((height - ky) % height) * width + (width - kx) % width;

            let radius = wx.hypot(wy);
            let theta = wy.atan2(wx);
            hi_mask[idx] = radial_pair(radius, geometry.boundary(0), step).1;
            lo_mask[idx] = radial_pair(radius, geometry.boundary(levels), step).0;
            for level in 0..levels {
                let outer = radial_pair(radius, geometry.boundary(level), step).0;
                let inner = radial_pair(radius, geometry.boundary(level + 1), step).1;
                let radial = outer * inner;
                if radial == 0.0 {
                    continue;
                }
                for orientation in 0..orientations {
                    let delta = wrap_angle(theta - geometry.orientation_angle(orientation));
                    // Samples on the dividing line belong to neither half-plane.
                    if delta.abs() < FRAC_PI_2 - 1e-12 {
                        let angular = gain * delta.cos().powi(orientations as i32 - 1);
                        masks[geometry.band_index(level, orientation)][idx] = radial * angular;
                    }
                }
            }
        }
    }

    Ok(FilterBank { geometry, masks, hi_mask, lo_mask, mirror, fft: Fft2::new(width, height) })
}

impl FilterBank {
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn band_count(&self) -> usize {
        self.geometry.band_count()
    }

    /// Transfer function of oriented band `band` (level-major index).
    pub fn mask(&self, band: usize) -> &[f64] {
        &self.masks[band]
    }

    pub fn hi_mask(&self) -> &[f64] {
        &self.hi_mask
    }

    pub fn lo_mask(&self) -> &[f64] {
        &self.lo_mask
    }

    /// Index of the frequency sample `-w` for the sample at `index`.
    pub fn mirror_index(&self, index: usize) -> usize {
        self.mirror[index]
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    fn check_frame(&self, frame: &Frame) -> Result<(), PyramidError> {
        if frame.width() != self.width() || frame.height() != self.height() {
            return Err(PyramidError::DimensionMismatch {
                width: self.width(),
                height: self.height(),
                actual_width: frame.width(),
                actual_height: frame.height(),
            });
        }
        Ok(())
    }

    /// Forward 2-D transform of a frame matching this bank.
    pub fn spectrum(&self, frame: &Frame) -> Result<Vec<Complex64>, PyramidError> {
        self.check_frame(frame)?;
        Ok(self.fft.forward_real(frame.data()))
    }

    /// Complex coefficients of one oriented band from a frame spectrum.
    pub fn band_from_spectrum(&self, spectrum: &[Complex64], band: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spectrum.iter().zip(&self.masks[band]).map(|(s, m)| s * m).collect();
        self.fft.inverse(&mut out);
        out
    }

    fn real_from_spectrum(&self, spectrum: &[Complex64], mask: &[f64]) -> Vec<f64> {
        let mut out: Vec<Complex64> = spectrum.iter().zip(mask).map(|(s, m)| s * m).collect();
        self.fft.inverse(&mut out);
        out.into_iter().map(|c| c.re).collect()
    }

    /// Adds the synthesis contribution of oriented `band` to a frame spectrum.
    ///
    /// The band is filtered by its mask again and the conjugate half-plane is
    /// restored, i.e. the spectrum of `2 Re(ifft(fft(band) * mask))` is added.
    pub fn accumulate_band(&self, accumulator: &mut [Complex64], coefficients: &[Complex64], band: usize) {
        let mask = &self.masks[band];
        let mut filtered = coefficients.to_vec();
        self.fft.forward(&mut filtered);
        for (value, m) in filtered.iter_mut().zip(mask) {
            *value *= m;
        }
        for (idx, acc) in accumulator.iter_mut().enumerate() {
            *acc += filtered[idx] + filtered[self.mirror[idx]].conj();
        }
    }

    fn accumulate_real(&self, accumulator: &mut [Complex64], map: &[f64], mask: &[f64]) {
        let spectrum = self.fft.forward_real(map);
        for ((acc, s), m) in accumulator.iter_mut().zip(spectrum).zip(mask) {
            *acc += s * m;
        }
    }

    /// Synthesis contribution of both residuals, computed straight from a frame spectrum.
    pub fn residual_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        spectrum
            .iter()
            .zip(self.hi_mask.iter().zip(&self.lo_mask))
            .map(|(s, (h, l))| s * (h * h + l * l))
            .collect()
    }

    /// Real frame from an accumulated synthesis spectrum.
    pub fn frame_from_spectrum(&self, mut spectrum: Vec<Complex64>) -> Frame {
        self.fft.inverse(&mut spectrum);
        let data = spectrum.into_iter().map(|c| c.re).collect();
        Frame::new(self.width(), self.height(), data).expect("spectrum size matches bank")
    }
}

/// Multi-scale, multi-orientation decomposition of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SteerablePyramid {
    geometry: Geometry,
    bands: Vec<Vec<Complex64>>,
    hi_residual: Vec<f64>,
    lo_residual: Vec<f64>,
}

impl SteerablePyramid {
    /// A pyramid with every coefficient zero.
    pub fn zeros(geometry: Geometry) -> Self {
        let n = geometry.width * geometry.height;
        Self {
            geometry,
            bands: vec![vec![Complex64::new(0.0, 0.0); n]; geometry.band_count()],
            hi_residual: vec![0.0; n],
            lo_residual: vec![0.0; n],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn band(&self, level: usize, orientation: usize) -> &[Complex64] {
        &self.bands[self.geometry.band_index(level, orientation)]
    }

    pub fn band_mut(&mut self, level: usize, orientation: usize) -> &mut [Complex64] {
        let idx = self.geometry.band_index(level, orientation);
        &mut self.bands[idx]
    }

    /// All oriented bands, level-major.
    pub fn bands(&self) -> &[Vec<Complex64>] {
        &self.bands
    }

    pub fn bands_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.bands
    }

    pub fn hi_residual(&self) -> &[f64] {
        &self.hi_residual
    }

    pub fn lo_residual(&self) -> &[f64] {
        &self.lo_residual
    }

    /// Local amplitude `|c|` of a band.
    pub fn amplitude(&self, level: usize, orientation: usize) -> Vec<f64> {
        self.band(level, orientation).iter().map(|c| c.norm()).collect()
    }

    /// Local phase `arg(c)` of a band, in `(-pi, pi]`.
    pub fn phase(&self, level: usize, orientation: usize) -> Vec<f64> {
        self.band(level, orientation).iter().map(|c| c.arg()).collect()
    }
}

/// Splits `frame` into oriented complex bands and real residuals.
pub fn decompose(frame: &Frame, bank: &FilterBank) -> Result<SteerablePyramid, PyramidError> {
    let spectrum = bank.spectrum(frame)?;
    let bands = (0..bank.band_count()).map(|b| bank.band_from_spectrum(&spectrum, b)).collect();
    Ok(SteerablePyramid {
        geometry: bank.geometry,
        bands,
        hi_residual: bank.real_from_spectrum(&spectrum, &bank.hi_mask),
        lo_residual: bank.real_from_spectrum(&spectrum, &bank.lo_mask),
    })
}

/// Inverse of [`decompose`]; exact up to rounding because the bank is a tight frame.
pub fn reconstruct(pyramid: &SteerablePyramid, bank: &FilterBank) -> Result<Frame, PyramidError> {
    if pyramid.geometry != bank.geometry {
        return Err(PyramidError::DimensionMismatch {
            width: bank.width(),
            height: bank.height(),
            actual_width: pyramid.geometry.width,
            actual_height: pyramid.geometry.height,
        });
    }
    let mut accumulator = vec![Complex64::new(0.0, 0.0); bank.width() * bank.height()];
    bank.accumulate_real(&mut accumulator, &pyramid.hi_residual, &bank.hi_mask);
    bank.accumulate_real(&mut accumulator, &pyramid.lo_residual, &bank.lo_mask);
    for (b, coefficients) in pyramid.bands.iter().enumerate() {
        bank.accumulate_band(&mut accumulator, coefficients, b);
    }
    Ok(bank.frame_from_spectrum(accumulator))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: the squared-mask sum with conjugate doubling, sample by sample.
    fn frame_sum_max_deviation(bank: &FilterBank) -> f64 {
        let (w, h) = (bank.width(), bank.height());
        let mut worst: f64 = 0.0;
        for ky in 0..h {
            for kx in 0..w {
                let idx = ky * w + kx;
                let neg = ((h - ky) % h) * w + (w - kx) % w;
                let mut sum = bank.hi_mask()[idx].powi(2) + bank.lo_mask()[idx].powi(2);
                for b in 0..bank.band_count() {
                    sum += bank.mask(b)[idx].powi(2) + bank.mask(b)[neg].powi(2);
                }
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }

    fn lcg_frame(width: usize, height: usize, seed: u64) -> Frame {
        let mut state = seed;
        Frame::from_fn(width, height, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
    }

    #[test]
    fn tight_frame_half_octave() {
        let bank = build_filter_bank(64, 64, 4, 4, OctaveStep::Half).unwrap();
        assert_eq!(bank.band_count(), 16);
        assert!(frame_sum_max_deviation(&bank) < 1e-6);
    }

    #[test]
    fn tight_frame_single_level_two_orientations() {
        let bank = build_filter_bank(64, 64, 1, 2, OctaveStep::Full).unwrap();
        assert_eq!(bank.band_count(), 2);
        assert!(frame_sum_max_deviation(&bank) < 1e-6);
    }

    #[test]
    fn tight_frame_odd_and_rectangular() {
        for (w, h, o) in [(33, 47, 3), (48, 20, 6), (17, 64, 5)] {
            let bank = build_filter_bank(w, h, 2, o, OctaveStep::Half).unwrap();
            assert!(frame_sum_max_deviation(&bank) < 1e-6, "{w}x{h} o={o}");
        }
    }

    #[test]
    fn oriented_masks_live_on_a_half_plane() {
        let bank = build_filter_bank(32, 32, 2, 4, OctaveStep::Half).unwrap();
        for b in 0..bank.band_count() {
            let mask = bank.mask(b);
            for idx in 0..mask.len() {
                let neg = bank.mirror_index(idx);
                assert!(mask[idx] == 0.0 || mask[neg] == 0.0, "band {b} sample {idx}");
            }
        }
    }

    #[test]
    fn too_many_levels_is_rejected() {
        assert!(matches!(
            build_filter_bank(8, 8, 6, 4, OctaveStep::Half),
            Err(PyramidError::TooManyLevels { .. })
        ));
        assert!(matches!(
            build_filter_bank(16, 16, 4, 4, OctaveStep::Full),
            Err(PyramidError::TooManyLevels { .. })
        ));
    }

    #[test]
    fn small_dimensions_and_bad_geometry() {
        assert!(matches!(
            build_filter_bank(12, 64, 1, 4, OctaveStep::Half),
            Err(PyramidError::DimensionTooSmall { .. })
        ));
        assert!(matches!(build_filter_bank(64, 64, 0, 4, OctaveStep::Half), Err(PyramidError::InvalidGeometry(_))));
        assert!(matches!(build_filter_bank(64, 64, 2, 1, OctaveStep::Half), Err(PyramidError::InvalidGeometry(_))));
    }

    #[test]
    fn constant_frame_only_has_lowpass_energy() {
        let bank = build_filter_bank(32, 32, 4, 4, OctaveStep::Half).unwrap();
        let pyr = decompose(&Frame::filled(32, 32, 0.5), &bank).unwrap();
        for band in pyr.bands() {
            assert!(band.iter().all(|c| c.norm() < 1e-12));
        }
        assert!(pyr.hi_residual().iter().all(|v| v.abs() < 1e-12));
        assert!(pyr.lo_residual().iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn sinusoid_lands_in_matching_band() {
        let (w, h) = (128, 128);
        let bank = build_filter_bank(w, h, 4, 4, OctaveStep::Half).unwrap();
        let geometry = *bank.geometry();
        for (level, orientation) in [(1usize, 0usize), (2, 2), (0, 1), (3, 3)] {
            // Pick the integer frequency vector closest to the band centre.
            let radius = geometry.level_frequency(level);
            let angle = geometry.orientation_angle(orientation);
            let cx = (radius * angle.cos() * w as f64 / (2.0 * PI)).round();
            let cy = (radius * angle.sin() * h as f64 / (2.0 * PI)).round();
            let frame = Frame::from_fn(w, h, |x, y| {
                0.5 + 0.25 * (2.0 * PI * (cx * x as f64 / w as f64 + cy * y as f64 / h as f64)).cos()
            });
            let pyr = decompose(&frame, &bank).unwrap();
            let energies: Vec<f64> =
                pyr.bands().iter().map(|band| band.iter().map(|c| c.norm_sqr()).sum::<f64>()).collect();
            let best = (0..energies.len()).max_by(|&a, &b| energies[a].total_cmp(&energies[b])).unwrap();
            assert_eq!(geometry.band_position(best), (level, orientation));
        }
    }

    #[test]
    fn random_round_trip() {
        let bank = build_filter_bank(40, 36, 3, 4, OctaveStep::Half).unwrap();
        for seed in 0..3 {
            let frame = lcg_frame(40, 36, seed);
            let back = reconstruct(&decompose(&frame, &bank).unwrap(), &bank).unwrap();
            assert!(back.max_abs_diff(&frame) < 1e-4);
        }
    }

    #[test]
    fn identity_phase_shift_round_trip() {
        let bank = build_filter_bank(32, 32, 2, 4, OctaveStep::Full).unwrap();
        let frame = lcg_frame(32, 32, 7);
        let pyr = decompose(&frame, &bank).unwrap();
        let mut shifted = pyr.clone();
        let unit = Complex64::from_polar(1.0, 0.0);
        for band in shifted.bands_mut() {
            for c in band.iter_mut() {
                *c *= unit;
            }
        }
        let a = reconstruct(&pyr, &bank).unwrap();
        let b = reconstruct(&shifted, &bank).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_pyramid_gives_zero_frame() {
        let bank = build_filter_bank(16, 16, 1, 2, OctaveStep::Full).unwrap();
        let out = reconstruct(&SteerablePyramid::zeros(*bank.geometry()), &bank).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_bookkeeping() {
        let bank = build_filter_bank(32, 32, 3, 4, OctaveStep::Half).unwrap();
        let frame = lcg_frame(32, 32, 11);
        let pyr = decompose(&frame, &bank).unwrap();
        let frame_energy: f64 = frame.data().iter().map(|v| v * v).sum();
        let band_energy: f64 = pyr.bands().iter().flatten().map(|c| 2.0 * c.norm_sqr()).sum();
        let residual: f64 =
            pyr.hi_residual().iter().chain(pyr.lo_residual()).map(|v| v * v).sum();
        assert!(((band_energy + residual) - frame_energy).abs() < 1e-6 * frame_energy);
    }

    #[test]
    fn mismatched_frame_is_rejected() {
        let bank = build_filter_bank(16, 16, 1, 2, OctaveStep::Full).unwrap();
        assert!(matches!(
            decompose(&Frame::filled(16, 17, 0.0), &bank),
            Err(PyramidError::DimensionMismatch { .. })
        ));
        let other = build_filter_bank(32, 32, 1, 2, OctaveStep::Full).unwrap();
        let pyr = decompose(&Frame::filled(32, 32, 0.0), &other).unwrap();
        assert!(reconstruct(&pyr, &bank).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
        assert!((wrap_angle(-6.2) - (-6.2 + 2.0 * PI)).abs() < 1e-12);
    }
}
