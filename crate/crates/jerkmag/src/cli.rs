//! Subcommand definitions and drivers.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use jerkmag_core::magnifier::{boundary_frames, MagnifyError};
use jerkmag_core::metrics::MetricsError;
use jerkmag_core::pulse::{Drift, SynthError};
use jerkmag_core::{
    evaluate_clip, extract_sts, magnify, synth_clip, BandSpec, Frame, MagnificationConfig, Mode, Motif, OctaveStep,
    PhaseSmoothing, PulseWave, SliceLine, SynthParams,
};

use crate::io::{self, BitDepth, Container, IoError, RawSample};
use crate::manifest::{self, BoundaryFrames, MagnifySettings, RunManifest, SynthSettings};
use crate::report::{self, ReportHeader};

/// Process exit statuses; each failure class has its own code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Internal,
    /// Reported by argument parsing (clap's own code).
    Usage,
    InputNotFound,
    InvalidInput,
    InvalidConfig,
    Mismatch,
    OutputError,
}

impl Status {
    pub const ALL: [Status; 7] = [
        Status::Internal,
        Status::Usage,
        Status::InputNotFound,
        Status::InvalidInput,
        Status::InvalidConfig,
        Status::Mismatch,
        Status::OutputError,
    ];

    pub fn code(self) -> i32 {
        match self {
            Status::Internal => 1,
            Status::Usage => 2,
            Status::InputNotFound => 3,
            Status::InvalidInput => 4,
            Status::InvalidConfig => 5,
            Status::Mismatch => 6,
            Status::OutputError => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Internal => "internal-error",
            Status::Usage => "usage",
            Status::InputNotFound => "input-not-found",
            Status::InvalidInput => "invalid-input",
            Status::InvalidConfig => "invalid-config",
            Status::Mismatch => "mismatch",
            Status::OutputError => "output-error",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    fn new(status: Status, message: impl fmt::Display) -> Self {
        Self { status, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.status.name(), self.message)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let status = match &e {
            IoError::NotFound(_) => Status::InputNotFound,
            IoError::OutputExists(_) => Status::OutputError,
            IoError::Io { .. } => Status::OutputError,
            _ => Status::InvalidInput,
        };
        CliError::new(status, e)
    }
}

impl From<MagnifyError> for CliError {
    fn from(e: MagnifyError) -> Self {
        CliError::new(Status::InvalidConfig, e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        let status = match e {
            MetricsError::DimensionMismatch { .. }
            | MetricsError::LengthMismatch { .. }
            | MetricsError::FrameRateMismatch { .. } => Status::Mismatch,
            _ => Status::InvalidConfig,
        };
        CliError::new(status, e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::new(Status::InvalidConfig, e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "jerkmag", version, about = "Phase-based video motion magnification at velocity, acceleration or jerk order")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Magnify motion in a frame sequence and write it with a run manifest.
    Magnify(MagnifyArgs),
    /// Compare magnified sequences against their source (PSNR, SSIM).
    Metrics(MetricsArgs),
    /// Extract a spatio-temporal slice image along a line.
    Slice(SliceArgs),
    /// Render a synthetic pulsating clip with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Linear,
    Accel,
    Jerk,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => Mode::Linear,
            ModeArg::Accel => Mode::Accel,
            ModeArg::Jerk => Mode::Jerk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OctaveArg {
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MotifArg {
    Bump,
    Edge,
    Vessel,
}

#[derive(Debug, Args)]
pub struct MagnifyArgs {
    /// PNG frame directory or .jmv raw file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output PNG directory or .jmv file; must not exist.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Jerk)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    /// Centre of the temporal band in Hz.
    #[arg(long, default_value_t = 1.0)]
    pub freq: f64,
    #[arg(long, default_value_t = 0.1)]
    pub band_halfwidth: f64,
    /// Frame rate of PNG input (raw files carry their own unless this is given).
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long, default_value_t = 4)]
    pub orientations: usize,
    #[arg(long, value_enum, default_value_t = OctaveArg::Half)]
    pub octave: OctaveArg,
    /// Amplitude-weighted smoothing of the filtered phase; optional radius in pixels.
    #[arg(long, num_args = 0..=1, default_missing_value = "2")]
    pub phase_smooth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// One or more magnified sequences of the same source.
    #[arg(long, required = true)]
    pub magnified: Vec<PathBuf>,
    /// Report file for one magnified input; a new directory for several.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub sample_frames: usize,
    /// Frames to skip at each end; defaults to the count in the magnified run's manifest.
    #[arg(long)]
    pub boundary: Option<usize>,
    #[arg(long)]
    pub fps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `row:Y`, `col:X` or `poly:X,Y;X,Y[;...]` in pixels.
    #[arg(long, value_parser = parse_line)]
    pub line: SliceLine,
    /// 16-bit grayscale PNG; rows are frames.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub fps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output PNG directory (16-bit) or .jmv file (f32).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    /// Seconds.
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
    /// Cardiac period in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub period: f64,
    #[arg(long, value_enum, default_value_t = MotifArg::Bump)]
    pub motif: MotifArg,
    /// Peak-to-peak motif displacement in pixels.
    #[arg(long, default_value_t = 0.5)]
    pub motion_amp: f64,
    /// Motif profile width in pixels.
    #[arg(long, default_value_t = 3.0)]
    pub motif_scale: f64,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Whole-field sinusoidal drift amplitude in pixels.
    #[arg(long)]
    pub drift_amp: Option<f64>,
    #[arg(long, default_value_t = 0.2, requires = "drift_amp")]
    pub drift_freq: f64,
    /// Add a fixed sinusoidal background texture.
    #[arg(long)]
    pub texture: bool,
}

/// Parses `row:Y`, `col:X` or `poly:X,Y;X,Y;...`.
pub fn parse_line(spec: &str) -> Result<SliceLine, String> {
    let (kind, rest) = spec.split_once(':').ok_or("expected row:Y, col:X or poly:X,Y;X,Y")?;
    let index = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad pixel index {s:?}"));
    match kind {
        "row" => Ok(SliceLine::Row(index(rest)?)),
        "col" | "column" => Ok(SliceLine::Column(index(rest)?)),
        "poly" => {
            let points = rest
                .split(';')
                .map(|p| {
                    let (x, y) = p.split_once(',').ok_or_else(|| format!("bad point {p:?}"))?;
                    let coord = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad coordinate {s:?}"));
                    Ok((coord(x)?, coord(y)?))
                })
                .collect::<Result<Vec<_>, String>>()?;
            if points.len() < 2 {
                return Err("a polyline needs at least two points".to_string());
            }
            Ok(SliceLine::Polyline(points))
        }
        _ => Err(format!("unknown line kind {kind:?}")),
    }
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Magnify(args) => cmd_magnify(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Slice(args) => cmd_slice(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

const DEFAULT_FPS: f64 = 30.0;

fn read_input(path: &Path, fps: Option<f64>) -> Result<io::Sequence, CliError> {
    if let Some(fps) = fps {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(CliError::new(Status::InvalidConfig, "--fps must be positive"));
        }
    }
    let mut sequence = io::read_sequence(path, fps.unwrap_or(DEFAULT_FPS))?;
    if let (Some(fps), Container::Raw(_)) = (fps, sequence.container) {
        sequence.clip = jerkmag_core::VideoClip::new(sequence.clip.into_frames(), fps)
            .map_err(|e| CliError::new(Status::InvalidConfig, e))?;
    }
    Ok(sequence)
}

fn container_name(container: Container) -> &'static str {
    match container {
        Container::Png(BitDepth::Eight) => "png8",
        Container::Png(BitDepth::Sixteen) => "png16",
        Container::Raw(RawSample::U8) => "raw-u8",
        Container::Raw(RawSample::U16) => "raw-u16",
        Container::Raw(RawSample::F32) => "raw-f32",
    }
}

fn ensure_absent(paths: &[&Path]) -> Result<(), CliError> {
    for path in paths {
        if path.exists() {
            return Err(IoError::OutputExists(path.to_path_buf()).into());
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(io::write_file_atomic(path, text.as_bytes())?)
}

pub fn magnify_config(args: &MagnifyArgs, fps: f64) -> MagnificationConfig {
    MagnificationConfig {
        mode: args.mode.into(),
        alpha: args.alpha,
        band: BandSpec { center: args.freq, half_width: args.band_halfwidth, fps },
        levels: args.levels,
        orientations: args.orientations,
        octave_step: match args.octave {
            OctaveArg::Half => OctaveStep::Half,
            OctaveArg::Full => OctaveStep::Full,
        },
        phase_smoothing: args.phase_smooth.map_or(PhaseSmoothing::Off, |radius| PhaseSmoothing::AmplitudeWeighted { radius }),
    }
}

fn cmd_magnify(args: &MagnifyArgs) -> Result<String, CliError> {
    let manifest_path = manifest::manifest_path(&args.output);
    ensure_absent(&[&args.output, &manifest_path])?;
    let sequence = read_input(&args.input, args.fps)?;
    let clip = &sequence.clip;
    let config = magnify_config(args, clip.fps());
    config.validate()?;
    config.filter_bank(clip.width(), clip.height())?;
    let boundary = boundary_frames(&config, clip.len())?;

    let output = magnify(clip, &config)?;
    let container = io::container_for(&args.output, sequence.container);
    let chroma = match container {
        Container::Png(_) => sequence.chroma.as_ref(),
        Container::Raw(_) => None,
    };
    io::write_sequence(&args.output, &output, chroma, container)?;

    let mut manifest = RunManifest::new("magnify", Some(&args.input), &args.output, &output, container_name(container));
    manifest.magnification = Some(MagnifySettings::from_config(&config));
    manifest.boundary = Some(BoundaryFrames::new(boundary, output.len()));
    write_text(&manifest_path, &manifest.to_json())?;
    Ok(format!(
        "magnified {} frames ({}x{}, {} mode, alpha {}) -> {}",
        output.len(),
        output.width(),
        output.height(),
        config.mode.name(),
        config.alpha,
        args.output.display()
    ))
}

fn cmd_metrics(args: &MetricsArgs) -> Result<String, CliError> {
    ensure_absent(&[&args.output])?;
    let source = read_input(&args.source, args.fps)?;
    let mut entries = Vec::with_capacity(args.magnified.len());
    for path in &args.magnified {
        let magnified = read_input(path, args.fps)?;
        let run = manifest::read_manifest(path);
        let settings = run.as_ref().and_then(|m| m.magnification.as_ref());
        let boundary = args.boundary.or_else(|| run.as_ref().and_then(|m| m.boundary.as_ref()).map(|b| b.per_end));
        let report = evaluate_clip(&source.clip, &magnified.clip, args.sample_frames, boundary.unwrap_or(0))?;
        let header = ReportHeader {
            source: args.source.display().to_string(),
            magnified: path.display().to_string(),
            mode: settings.and_then(|s| Mode::from_name(&s.mode)),
            alpha: settings.map(|s| s.alpha),
        };
        entries.push((header, report));
    }

    if let [(header, report)] = &entries[..] {
        write_text(&args.output, &report::format_report(header, report))?;
        return Ok(format!(
            "mean PSNR {} dB, mean SSIM {} over {} frames -> {}",
            report::format_value(report.mean_psnr, 2),
            report::format_value(report.mean_ssim, 4),
            report.frames.len(),
            args.output.display()
        ));
    }

    // Several inputs: a directory of reports plus the comparison table, staged then renamed.
    let name = args.output.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let staging = args.output.with_file_name(format!(".{name}.partial"));
    let result = (|| -> Result<(), CliError> {
        if staging.exists() {
            std::fs::remove_dir_all(&staging).map_err(|e| CliError::new(Status::OutputError, e))?;
        }
        std::fs::create_dir_all(&staging).map_err(|e| CliError::new(Status::OutputError, e))?;
        let mut used = std::collections::BTreeSet::new();
        for (header, report) in &entries {
            let base = Path::new(&header.magnified).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let mut file = format!("{base}.metrics.txt");
            let mut k = 1;
            while !used.insert(file.clone()) {
                k += 1;
                file = format!("{base}-{k}.metrics.txt");
            }
            write_text(&staging.join(file), &report::format_report(header, report))?;
        }
        let table = report::format_comparison(&args.source.display().to_string(), &entries);
        write_text(&staging.join("comparison.txt"), &table)?;
        std::fs::rename(&staging, &args.output).map_err(|e| CliError::new(Status::OutputError, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_dir_all(&staging);
    }
    result?;
    Ok(format!("{} reports and comparison table -> {}", entries.len(), args.output.display()))
}

fn cmd_slice(args: &SliceArgs) -> Result<String, CliError> {
    ensure_absent(&[&args.output])?;
    let sequence = read_input(&args.input, args.fps)?;
    let slice = extract_sts(&sequence.clip, args.line.clone())?;
    io::write_gray_png(&args.output, &slice.image, BitDepth::Sixteen)?;
    Ok(format!(
        "slice {}x{} (samples x frames) -> {}",
        slice.image.width(),
        slice.image.height(),
        args.output.display()
    ))
}

pub fn synth_params(args: &SynthArgs) -> (PulseWave, SynthParams) {
    let model = PulseWave::with_period(args.period);
    let params = SynthParams {
        width: args.width,
        height: args.height,
        fps: args.fps,
        duration: args.duration,
        motif: match args.motif {
            MotifArg::Bump => Motif::Bump,
            MotifArg::Edge => Motif::Edge,
            MotifArg::Vessel => Motif::Vessel,
        },
        motion_amp: args.motion_amp,
        motif_scale: args.motif_scale,
        noise_sd: args.noise,
        seed: args.seed,
        drift: args.drift_amp.map(|amplitude| Drift { amplitude, frequency: args.drift_freq }),
        texture: args.texture,
    };
    (model, params)
}

fn cmd_synth(args: &SynthArgs) -> Result<String, CliError> {
    let truth_path = manifest::sidecar(&args.output, "truth.tsv");
    let mask_path = manifest::sidecar(&args.output, "mask.png");
    let waveform_path = manifest::sidecar(&args.output, "waveform.tsv");
    let manifest_path = manifest::manifest_path(&args.output);
    ensure_absent(&[&args.output, &truth_path, &mask_path, &waveform_path, &manifest_path])?;

    let (model, params) = synth_params(args);
    let synth = synth_clip(&model, &params)?;
    let container = if io::is_raw_path(&args.output) {
        Container::Raw(RawSample::F32)
    } else {
        Container::Png(BitDepth::Sixteen)
    };
    io::write_sequence(&args.output, &synth.clip, None, container)?;

    let mut truth = String::from("frame\ttime_s\tdisplacement_px\n");
    for (i, d) in synth.displacement.iter().enumerate() {
        truth.push_str(&format!("{i}\t{:.6}\t{d:.9}\n", i as f64 / params.fps));
    }
    write_text(&truth_path, &truth)?;

    let mask = Frame::new(params.width, params.height, synth.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())
        .expect("mask matches frame size");
    io::write_gray_png(&mask_path, &mask, BitDepth::Eight)?;

    let sampler = model.sampler();
    let n = model.samples_in_period(params.fps);
    let mut waveform = String::from("time_s\tdisplacement\tvelocity\tacceleration\tjerk\n");
    for i in 0..n {
        let t = i as f64 / params.fps;
        waveform.push_str(&format!("{t:.6}"));
        for order in 0..=3 {
            waveform.push_str(&format!("\t{:.9e}", sampler.derivative(t, order)));
        }
        waveform.push('\n');
    }
    write_text(&waveform_path, &waveform)?;

    let mut manifest = RunManifest::new("synth", None, &args.output, &synth.clip, container_name(container));
    manifest.synth = Some(SynthSettings::new(&model, &params));
    write_text(&manifest_path, &manifest.to_json())?;
    Ok(format!("{} frames ({}x{}) -> {}", synth.clip.len(), params.width, params.height, args.output.display()))
}
