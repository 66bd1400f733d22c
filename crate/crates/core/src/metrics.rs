//! PSNR, SSIM and spatio-temporal slices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::frame::{Frame, VideoClip};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("frames are {a_width}x{a_height} and {b_width}x{b_height}")]
    DimensionMismatch { a_width: usize, a_height: usize, b_width: usize, b_height: usize },
    #[error("frame {width}x{height} is smaller than the {window}x{window} SSIM window")]
    FrameTooSmall { width: usize, height: usize, window: usize },
    #[error("clips have {source_len} and {magnified_len} frames")]
    LengthMismatch { source_len: usize, magnified_len: usize },
    #[error("clips differ in frame rate ({source_fps} vs {magnified_fps})")]
    FrameRateMismatch { source_fps: f64, magnified_fps: f64 },
    #[error("sample length {sample_len} must be in 1..={frames}")]
    BadSampleLength { sample_len: usize, frames: usize },
    #[error("no frames remain after excluding {boundary} boundary frames at each end of {frames}")]
    NoInteriorFrames { boundary: usize, frames: usize },
    #[error("slice line leaves the {width}x{height} frame")]
    LineOutOfBounds { width: usize, height: usize },
    #[error("slice polyline needs at least two points")]
    DegenerateLine,
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const DEFAULT_SAMPLE_LEN: usize = 100;

fn check_same_size(a: &Frame, b: &Frame) -> Result<(), MetricsError> {
    if !a.same_size(b) {
        return Err(MetricsError::DimensionMismatch {
            a_width: a.width(),
            a_height: a.height(),
            b_width: b.width(),
            b_height: b.height(),
        });
    }
    Ok(())
}

pub fn mse(reference: &Frame, test: &Frame) -> Result<f64, MetricsError> {
    check_same_size(reference, test)?;
    let sum: f64 = reference.data().iter().zip(test.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / reference.len() as f64)
}

/// `10 log10(1 / MSE)` for unit peak intensity; `+inf` for identical frames.
pub fn psnr(reference: &Frame, test: &Frame) -> Result<f64, MetricsError> {
    let mse = mse(reference, test)?;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

fn ssim_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let x = i as f64 - half;
        *t = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.map(|t| t / sum)
}

/// Separable 'valid' filtering of a row-major map.
fn filter_valid(map: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (width + 1 - n, height + 1 - n);
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        let src = &map[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(k, t)| t * rows[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over every fully contained 11x11 Gaussian window (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1).
pub fn ssim(reference: &Frame, test: &Frame) -> Result<f64, MetricsError> {
    check_same_size(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::FrameTooSmall { width: w, height: h, window: SSIM_WINDOW });
    }
    let taps = ssim_window();
    let (x, y) = (reference.data(), test.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(x, w, h, &taps);
    let mu_y = filter_valid(y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (var_x + var_y + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub frames: Vec<FrameMetrics>,
    /// Arithmetic mean; `+inf` when any sampled frame is identical to its source.
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub requested_len: usize,
    /// Frames skipped at each end of the clip.
    pub boundary_frames: usize,
    pub boundary_excluded: bool,
}

impl MetricsReport {
    pub fn sampled(&self) -> Range<usize> {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => a.frame..b.frame + 1,
            _ => 0..0,
        }
    }
}

/// Per-frame PSNR/SSIM of `magnified` against `source` over the first
/// `sample_len` frames that lie at least `boundary` frames from either end.
///
/// Fewer frames are measured when the interior is shorter than `sample_len`.
pub fn evaluate_clip(
    source: &VideoClip,
    magnified: &VideoClip,
    sample_len: usize,
    boundary: usize,
) -> Result<MetricsReport, MetricsError> {
    if source.len() != magnified.len() {
        return Err(MetricsError::LengthMismatch { source_len: source.len(), magnified_len: magnified.len() });
    }
    check_same_size(source.frame(0), magnified.frame(0))?;
    if source.fps() != magnified.fps() {
        return Err(MetricsError::FrameRateMismatch { source_fps: source.fps(), magnified_fps: magnified.fps() });
    }
    let n = source.len();
    if sample_len == 0 || sample_len > n {
        return Err(MetricsError::BadSampleLength { sample_len, frames: n });
    }
    let end = n.saturating_sub(boundary).min(boundary + sample_len);
    if boundary >= end {
        return Err(MetricsError::NoInteriorFrames { boundary, frames: n });
    }
    let frames = (boundary..end)
        .map(|i| {
            let (a, b) = (source.frame(i), magnified.frame(i));
            Ok(FrameMetrics { frame: i, psnr: psnr(a, b)?, ssim: ssim(a, b)? })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    let count = frames.len() as f64;
    Ok(MetricsReport {
        mean_psnr: frames.iter().map(|f| f.psnr).sum::<f64>() / count,
        mean_ssim: frames.iter().map(|f| f.ssim).sum::<f64>() / count,
        frames,
        requested_len: sample_len,
        boundary_frames: boundary,
        boundary_excluded: boundary > 0,
    })
}

/// Scan line for a spatio-temporal slice, in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceLine {
    Row(usize),
    Column(usize),
    /// Sampled at unit arc-length steps, always including every vertex.
    Polyline(Vec<(f64, f64)>),
}

impl SliceLine {
    /// Sample positions along the line.
    pub fn points(&self, width: usize, height: usize) -> Result<Vec<(f64, f64)>, MetricsError> {
        let out_of_bounds = MetricsError::LineOutOfBounds { width, height };
        match self {
            SliceLine::Row(y) if *y < height => Ok((0..width).map(|x| (x as f64, *y as f64)).collect()),
            SliceLine::Column(x) if *x < width => Ok((0..height).map(|y| (*x as f64, y as f64)).collect()),
            SliceLine::Row(_) | SliceLine::Column(_) => Err(out_of_bounds),
            SliceLine::Polyline(vertices) => {
                if vertices.len() < 2 {
                    return Err(MetricsError::DegenerateLine);
                }
                let inside = |&(x, y): &(f64, f64)| {
                    x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64
                };
                if !vertices.iter().all(inside) {
                    return Err(out_of_bounds);
                }
                let mut points = vec![vertices[0]];
                for pair in vertices.windows(2) {
                    let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
                    let length = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
                    let steps = (length.ceil() as usize).max(1);
                    for k in 1..=steps {
                        let f = k as f64 / steps as f64;
                        points.push((x0 + f * (x1 - x0), y0 + f * (y1 - y0)));
                    }
                }
                Ok(points)
            }
        }
    }
}

/// Intensity along a line stacked over time: row `t` is frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatioTemporalSlice {
    pub line: SliceLine,
    pub image: Frame,
}

pub fn extract_sts(clip: &VideoClip, line: SliceLine) -> Result<SpatioTemporalSlice, MetricsError> {
    let points = line.points(clip.width(), clip.height())?;
    let mut data = Vec::with_capacity(points.len() * clip.len());
    for frame in clip.frames() {
        data.extend(points.iter().map(|&(x, y)| frame.sample_bilinear(x, y)));
    }
    let image = Frame::new(points.len(), clip.len(), data).expect("one row per frame");
    Ok(SpatioTemporalSlice { line, image })
}
