//! Fourier transforms for 1-D series and row-major 2-D maps.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z reduction onto a power-of-two
//! plan. Transforms are unnormalized in the forward direction and scaled
//! by `1/n` in the inverse direction, so `inverse(forward(x)) == x`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug)]
struct Radix2 {
    len: usize,
    bit_reverse: Vec<usize>,
    /// `exp(-2 pi i k / len)` for `k < len / 2`.
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let bits = len.trailing_zeros();
        let bit_reverse = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Self { len, bit_reverse, twiddles }
    }

    fn process(&self, buf: &mut [Complex64], direction: Direction) {
        let n = self.len;
        for i in 0..n {
            let j = self.bit_reverse[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = match direction {
                        Direction::Forward => w,
                        Direction::Inverse => w.conj(),
                    };
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Clone, Debug)]
struct Bluestein {
    len: usize,
    inner: Radix2,
    /// `exp(-i pi k^2 / len)` for `k < len`.
    chirp: Vec<Complex64>,
    /// Forward transform of the zero-padded conjugate chirp.
    filter_spectrum: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let inner_len = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(inner_len);
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                // k^2 mod 2n keeps the angle small for long series.
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                let angle = -PI * k2 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let mut filter = vec![Complex64::new(0.0, 0.0); inner_len];
        filter[0] = chirp[0].conj();
        for k in 1..len {
            filter[k] = chirp[k].conj();
            filter[inner_len - k] = chirp[k].conj();
        }
        inner.process(&mut filter, Direction::Forward);
        Self { len, inner, chirp, filter_spectrum: filter }
    }

    fn process(&self, buf: &mut [Complex64], direction: Direction, scratch: &mut Vec<Complex64>) {
        let m = self.inner.len;
        scratch.clear();
        scratch.resize(m, Complex64::new(0.0, 0.0));
        // The inverse transform is the forward transform with conjugated chirps.
        let chirp = |k: usize| match direction {
            Direction::Forward => self.chirp[k],
            Direction::Inverse => self.chirp[k].conj(),
        };
        let filter = |k: usize| match direction {
            Direction::Forward => self.filter_spectrum[k],
            // Spectrum of the conjugated (even) chirp filter.
            Direction::Inverse => self.filter_spectrum[(m - k) % m].conj(),
        };
        for k in 0..self.len {
            scratch[k] = buf[k] * chirp(k);
        }
        self.inner.process(scratch, Direction::Forward);
        for (k, v) in scratch.iter_mut().enumerate() {
            *v *= filter(k);
        }
        self.inner.process(scratch, Direction::Inverse);
        let scale = 1.0 / m as f64;
        for k in 0..self.len {
            buf[k] = scratch[k] * scale * chirp(k);
        }
    }
}

#[derive(Clone, Debug)]
enum Algorithm {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// A precomputed transform plan for one series length.
#[derive(Clone, Debug)]
pub struct FftPlan {
    len: usize,
    algorithm: Algorithm,
}

impl FftPlan {
    /// Plans a transform of length `len` (`len >= 1`).
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let algorithm = if len.is_power_of_two() {
            Algorithm::Radix2(Radix2::new(len))
        } else {
            Algorithm::Bluestein(Bluestein::new(len))
        };
        Self { len, algorithm }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        let mut scratch = Vec::new();
        self.forward_with_scratch(buf, &mut scratch);
    }

    /// In-place inverse transform including the `1/N` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        let mut scratch = Vec::new();
        self.inverse_with_scratch(buf, &mut scratch);
    }

    pub fn forward_with_scratch(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(buf, Direction::Forward, scratch);
    }

    pub fn inverse_with_scratch(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(buf, Direction::Inverse, scratch);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, buf: &mut [Complex64], direction: Direction, scratch: &mut Vec<Complex64>) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.algorithm {
            Algorithm::Radix2(plan) => plan.process(buf, direction),
            Algorithm::Bluestein(plan) => plan.process(buf, direction, scratch),
        }
    }
}

/// 2-D transform over a row-major `width x height` buffer.
#[derive(Clone, Debug)]
pub struct Fft2 {
    width: usize,
    height: usize,
    rows: FftPlan,
    cols: FftPlan,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, rows: FftPlan::new(width), cols: FftPlan::new(height) }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, Direction::Forward);
    }

    /// Inverse transform, normalized by `1/(width*height)`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, Direction::Inverse);
    }

    /// Forward transform of a real map.
    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn run(&self, buf: &mut [Complex64], direction: Direction) {
        assert_eq!(buf.len(), self.width * self.height, "buffer size does not match plan");
        let mut scratch = Vec::new();
        for row in buf.chunks_exact_mut(self.width) {
            match direction {
                Direction::Forward => self.rows.forward_with_scratch(row, &mut scratch),
                Direction::Inverse => self.rows.inverse_with_scratch(row, &mut scratch),
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for x in 0..self.width {
            for (y, c) in column.iter_mut().enumerate() {
                *c = buf[y * self.width + x];
            }
            match direction {
                Direction::Forward => self.cols.forward_with_scratch(&mut column, &mut scratch),
                Direction::Inverse => self.cols.inverse_with_scratch(&mut column, &mut scratch),
            }
            for (y, c) in column.iter().enumerate() {
                buf[y * self.width + x] = *c;
            }
        }
    }
}

/// Signed frequency index of DFT bin `k` for a length-`n` transform.
///
/// Bins above `n/2` map to negative frequencies; for even `n` the Nyquist
/// bin `n/2` is reported as `-n/2`.
pub fn signed_bin(k: usize, n: usize) -> isize {
    if 2 * k >= n {
        k as isize - n as isize
    } else {
        k as isize
    }
}
