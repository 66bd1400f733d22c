//! Phase-based Eulerian video motion magnification at velocity,
//! acceleration and jerk order.
//!
//! The crate is `no_std` (it needs `alloc`). It contains the full numeric
//! pipeline: a frequency-domain complex steerable pyramid, Gaussian
//! derivative and ideal bandpass temporal filters, the phase magnifier,
//! a synthetic arterial pulse model and SSIM/PSNR evaluation. File formats
//! and the command-line front end live in the `jerkmag` crate.

#![no_std]

extern crate alloc;

pub mod fft;
pub mod frame;
pub mod magnifier;
pub mod metrics;
pub mod peaks;
pub mod pulse;
pub mod pyramid;
pub mod temporal;

pub use frame::{ClipError, Frame, VideoClip};
pub use magnifier::{
    extract_phase_series, filter_phase, magnify, unwrap_phase_temporal, MagnificationConfig, MagnifyError, Mode,
    PhaseSeries, PhaseSmoothing,
};
pub use metrics::{evaluate_clip, extract_sts, psnr, ssim, MetricsError, MetricsReport, SliceLine, SpatioTemporalSlice};
pub use pulse::{derivative_series, magnify_1d, synth_clip, Motif, PulseWave, SynthParams, SyntheticClip};
pub use pyramid::{build_filter_bank, decompose, reconstruct, FilterBank, Geometry, OctaveStep, PyramidError, SteerablePyramid};
pub use temporal::{
    convolve_time, gaussian_derivative_kernel, gaussian_sigma, ideal_bandpass_time, make_gaussian_derivative_kernel,
    BandSpec, DerivativeOrder, FilterError, TemporalKernel,
};
