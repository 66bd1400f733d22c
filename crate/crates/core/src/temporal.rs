//! Temporal filters applied along the time axis of per-pixel series.
//!
//! Acceleration and jerk use sampled Gaussian derivatives of order two and
//! three whose discrete moments are corrected so they differentiate
//! polynomials exactly. Velocity (linear) magnification uses an ideal
//! rectangular bandpass in the temporal frequency domain.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use thiserror::Error;

use crate::fft::{signed_bin, FftPlan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("frame rate must be positive, got {0}")]
    BadFrameRate(f64),
    #[error("frequency {frequency} Hz must lie in (0, {nyquist}) Hz")]
    SuperNyquist { frequency: f64, nyquist: f64 },
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("kernel radius {radius} is below the minimum {minimum} for sigma {sigma}")]
    RadiusTooSmall { radius: usize, minimum: usize, sigma: f64 },
    #[error("series of {series} samples is shorter than the {kernel}-tap kernel")]
    SeriesTooShort { series: usize, kernel: usize },
    #[error("invalid band {low}..{high} Hz at {fps} fps")]
    InvalidBand { low: f64, high: f64, fps: f64 },
}

/// Standard deviation in frames of the Gaussian tuned to `frequency` Hz: `r / (4 w sqrt 2)`.
pub fn gaussian_sigma(fps: f64, frequency: f64) -> Result<f64, FilterError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(FilterError::BadFrameRate(fps));
    }
    let nyquist = fps / 2.0;
    if !(frequency > 0.0 && frequency < nyquist) {
        return Err(FilterError::SuperNyquist { frequency, nyquist });
    }
    Ok(fps / (4.0 * frequency * SQRT_2))
}

/// Temporal derivative order of a Gaussian derivative kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    /// Acceleration.
    Second,
    /// Jerk.
    Third,
}

impl DerivativeOrder {
    pub fn as_usize(self) -> usize {
        match self {
            DerivativeOrder::Second => 2,
            DerivativeOrder::Third => 3,
        }
    }
}

/// Odd-length tap array for `t = -radius..=radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalKernel {
    taps: Vec<f64>,
    sigma: f64,
    order: DerivativeOrder,
    radius: usize,
}

impl TemporalKernel {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn order(&self) -> DerivativeOrder {
        self.order
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Tap at signed offset `t`.
    pub fn tap(&self, t: isize) -> f64 {
        self.taps[(t + self.radius as isize) as usize]
    }

    /// Complex frequency response at `frequency` Hz for a clip at `fps`.
    pub fn response(&self, frequency: f64, fps: f64) -> Complex64 {
        let omega = 2.0 * PI * frequency / fps;
        (-(self.radius as isize)..=self.radius as isize)
            .map(|t| Complex64::from_polar(self.tap(t), -omega * t as f64))
            .sum()
    }
}

/// Smallest radius accepted for `sigma`: `ceil(4 sigma)`.
pub fn minimum_radius(sigma: f64) -> usize {
    (4.0 * sigma).ceil() as usize
}

/// Samples the `order`-th derivative of a unit-area Gaussian and corrects
/// its moments so that `sum taps[t] t^k == 0` for `k < order` and the
/// kernel maps `t^order` to the constant `order!` under convolution.
pub fn make_gaussian_derivative_kernel(
    sigma: f64,
    order: DerivativeOrder,
    radius: usize,
) -> Result<TemporalKernel, FilterError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(FilterError::BadSigma(sigma));
    }
    let minimum = minimum_radius(sigma);
    if radius < minimum {
        return Err(FilterError::RadiusTooSmall { radius, minimum, sigma });
    }
    let s2 = sigma * sigma;
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
    let gaussian = |t: f64| norm * (-t * t / (2.0 * s2)).exp();
    let sample = |t: f64| match order {
        DerivativeOrder::Second => (t * t - s2) / (s2 * s2) * gaussian(t),
        DerivativeOrder::Third => (3.0 * t * s2 - t * t * t) / (s2 * s2 * s2) * gaussian(t),
    };
    let offsets: Vec<f64> = (-(radius as isize)..=radius as isize).map(|t| t as f64).collect();
    let mut taps: Vec<f64> = offsets.iter().map(|&t| sample(t)).collect();

    // Gaussian-weighted minimum-norm correction in the scaled variable t/sigma.
    let n = order.as_usize();
    let weights: Vec<f64> = offsets.iter().map(|&t| gaussian(t)).collect();
    let scaled: Vec<f64> = offsets.iter().map(|&t| t / sigma).collect();
    let factorial = (1..=n).product::<usize>() as f64;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut residual = [0.0; 4];
    let mut system = [[0.0; 4]; 4];
    for k in 0..=n {
        let target = if k == n { sign * factorial / sigma.powi(n as i32) } else { 0.0 };
        let current: f64 = taps.iter().zip(&scaled).map(|(w, u)| w * u.powi(k as i32)).sum();
        residual[k] = target - current;
        for j in 0..=n {
            system[k][j] = weights.iter().zip(&scaled).map(|(w, u)| w * u.powi((k + j) as i32)).sum();
        }
    }
    let lambda = solve_small(&mut system, &mut residual, n + 1);
    for ((tap, w), u) in taps.iter_mut().zip(&weights).zip(&scaled) {
        *tap += w * (0..=n).map(|k| lambda[k] * u.powi(k as i32)).sum::<f64>();
    }

    // Restore exact parity around the centre.
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    for t in 1..=radius {
        let (lo, hi) = (radius - t, radius + t);
        let value = 0.5 * (taps[hi] + parity * taps[lo]);
        taps[hi] = value;
        taps[lo] = parity * value;
    }
    if n % 2 == 1 {
        taps[radius] = 0.0;
    }

    Ok(TemporalKernel { taps, sigma, order, radius })
}

/// Kernel with the default `ceil(4 sigma)` radius.
pub fn gaussian_derivative_kernel(sigma: f64, order: DerivativeOrder) -> Result<TemporalKernel, FilterError> {
    make_gaussian_derivative_kernel(sigma, order, minimum_radius(sigma))
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve_small(a: &mut [[f64; 4]; 4], b: &mut [f64; 4], n: usize) -> [f64; 4] {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Same-length convolution with edge replication at both ends.
pub fn convolve_time(series: &[f64], kernel: &TemporalKernel) -> Result<Vec<f64>, FilterError> {
    let mut out = vec![0.0; series.len()];
    convolve_time_into(series, kernel, &mut out)?;
    Ok(out)
}

/// [`convolve_time`] writing into a caller-provided buffer of the same length.
pub fn convolve_time_into(series: &[f64], kernel: &TemporalKernel, out: &mut [f64]) -> Result<(), FilterError> {
    let len = series.len();
    if len < kernel.len() {
        return Err(FilterError::SeriesTooShort { series: len, kernel: kernel.len() });
    }
    assert_eq!(out.len(), len);
    let radius = kernel.radius as isize;
    let last = len as isize - 1;
    for (i, slot) in out.iter_mut().enumerate() {
        let i = i as isize;
        let interior = i >= radius && i + radius <= last;
        let mut acc = 0.0;
        if interior {
            // y[i] = sum_t taps[t] s[i - t]
            for (k, &tap) in kernel.taps.iter().enumerate() {
                acc += tap * series[(i + radius - k as isize) as usize];
            }
        } else {
            for (k, &tap) in kernel.taps.iter().enumerate() {
                let j = (i + radius - k as isize).clamp(0, last);
                acc += tap * series[j as usize];
            }
        }
        *slot = acc;
    }
    Ok(())
}

/// Temporal passband `[center - half_width, center + half_width]` Hz at `fps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub center: f64,
    pub half_width: f64,
    pub fps: f64,
}

impl BandSpec {
    pub fn new(center: f64, half_width: f64, fps: f64) -> Result<Self, FilterError> {
        let band = Self { center, half_width, fps };
        band.validate()?;
        Ok(band)
    }

    pub fn low(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let ok = self.fps.is_finite()
            && self.fps > 0.0
            && self.half_width >= 0.0
            && self.low() > 0.0
            && self.high() < self.fps / 2.0;
        if ok {
            Ok(())
        } else {
            Err(FilterError::InvalidBand { low: self.low(), high: self.high(), fps: self.fps })
        }
    }
}

/// Passed bins beyond which a full transform beats direct projection.
const MAX_PROJECTED_BINS: usize = 8;

/// Reusable ideal bandpass for series of one fixed length.
///
/// Narrow bands are applied by projecting onto the few passed DFT bins
/// directly; wider ones go through a full transform.
#[derive(Debug, Clone)]
pub struct IdealBandpass {
    len: usize,
    method: BandpassMethod,
}

#[derive(Debug, Clone)]
enum BandpassMethod {
    /// `exp(-2 pi i k n / N)` for each passed bin `k`.
    Projection(Vec<Vec<Complex64>>),
    Transform { plan: FftPlan, keep: Vec<bool> },
}

impl IdealBandpass {
    pub fn new(len: usize, band: &BandSpec) -> Result<Self, FilterError> {
        band.validate()?;
        if len == 0 {
            return Err(FilterError::SeriesTooShort { series: 0, kernel: 1 });
        }
        let slack = 1e-9 * band.fps;
        let keep: Vec<bool> = (0..len)
            .map(|k| {
                let f = signed_bin(k, len).unsigned_abs() as f64 * band.fps / len as f64;
                f >= band.low() - slack && f <= band.high() + slack
            })
            .collect();
        let passed = keep.iter().filter(|&&k| k).count();
        let method = if passed <= MAX_PROJECTED_BINS {
            let basis = (0..len)
                .filter(|&k| keep[k])
                .map(|k| {
                    (0..len)
                        .map(|n| {
                            let angle = -2.0 * PI * ((k * n) % len) as f64 / len as f64;
                            Complex64::new(angle.cos(), angle.sin())
                        })
                        .collect()
                })
                .collect();
            BandpassMethod::Projection(basis)
        } else {
            BandpassMethod::Transform { plan: FftPlan::new(len), keep }
        };
        Ok(Self { len, method })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Filters `series` into `out`; `buf` and `scratch` are reused work space.
    pub fn apply(&self, series: &[f64], out: &mut [f64], buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        assert_eq!(series.len(), self.len);
        match &self.method {
            BandpassMethod::Projection(basis) => {
                out.fill(0.0);
                let scale = 1.0 / self.len as f64;
                for row in basis {
                    let coefficient: Complex64 = row.iter().zip(series).map(|(b, &s)| b * s).sum::<Complex64>() * scale;
                    for (o, b) in out.iter_mut().zip(row) {
                        // Re(X conj(b)) for the inverse transform.
                        *o += coefficient.re * b.re + coefficient.im * b.im;
                    }
                }
            }
            BandpassMethod::Transform { plan, keep } => {
                buf.clear();
                buf.extend(series.iter().map(|&v| Complex64::new(v, 0.0)));
                plan.forward_with_scratch(buf, scratch);
                for (v, &keep) in buf.iter_mut().zip(keep) {
                    if !keep {
                        *v = Complex64::new(0.0, 0.0);
                    }
                }
                plan.inverse_with_scratch(buf, scratch);
                for (o, v) in out.iter_mut().zip(buf.iter()) {
                    *o = v.re;
                }
            }
        }
    }
}

/// Zeroes every temporal frequency outside the band (mirrored for negative bins).
pub fn ideal_bandpass_time(series: &[f64], band: &BandSpec) -> Result<Vec<f64>, FilterError> {
    let filter = IdealBandpass::new(series.len(), band)?;
    let mut out = vec![0.0; series.len()];
    filter.apply(series, &mut out, &mut Vec::new(), &mut Vec::new());
    Ok(out)
}
