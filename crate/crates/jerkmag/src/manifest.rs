//! Versioned JSON run manifests written next to every output.
//!
//! A manifest records everything needed to rerun the command that produced
//! an artifact: the tool version, the subcommand, the paths as given, every
//! pipeline parameter, and the frames affected by temporal boundary
//! handling. It carries no timestamps or host details, so reruns produce
//! byte-identical manifests.

use std::path::{Path, PathBuf};

use jerkmag_core::pulse::{Drift, Motif, SynthParams};
use jerkmag_core::{BandSpec, MagnificationConfig, Mode, OctaveStep, PhaseSmoothing, PulseWave, VideoClip};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FORMAT: &str = "jerkmag-run-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub output: String,
    pub clip: ClipInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnification: Option<MagnifySettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryFrames>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipInfo {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub fps: f64,
    pub container: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnifySettings {
    pub mode: String,
    pub alpha: f64,
    pub freq: f64,
    pub band_halfwidth: f64,
    pub levels: usize,
    pub orientations: usize,
    pub octave: String,
    /// Smoothing radius in pixels; absent when smoothing is off.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_smooth: Option<f64>,
}

impl MagnifySettings {
    pub fn from_config(config: &MagnificationConfig) -> Self {
        Self {
            mode: config.mode.name().to_string(),
            alpha: config.alpha,
            freq: config.band.center,
            band_halfwidth: config.band.half_width,
            levels: config.levels,
            orientations: config.orientations,
            octave: octave_name(config.octave_step).to_string(),
            phase_smooth: match config.phase_smoothing {
                PhaseSmoothing::Off => None,
                PhaseSmoothing::AmplitudeWeighted { radius } => Some(radius),
            },
        }
    }

    /// Rebuilds the configuration for a clip at `fps`.
    pub fn to_config(&self, fps: f64) -> Option<MagnificationConfig> {
        Some(MagnificationConfig {
            mode: Mode::from_name(&self.mode)?,
            alpha: self.alpha,
            band: BandSpec { center: self.freq, half_width: self.band_halfwidth, fps },
            levels: self.levels,
            orientations: self.orientations,
            octave_step: octave_from_name(&self.octave)?,
            phase_smoothing: self
                .phase_smooth
                .map_or(PhaseSmoothing::Off, |radius| PhaseSmoothing::AmplitudeWeighted { radius }),
        })
    }
}

pub fn octave_name(step: OctaveStep) -> &'static str {
    match step {
        OctaveStep::Half => "half",
        OctaveStep::Full => "full",
    }
}

pub fn octave_from_name(name: &str) -> Option<OctaveStep> {
    match name {
        "half" => Some(OctaveStep::Half),
        "full" => Some(OctaveStep::Full),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSettings {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub duration: f64,
    pub period: f64,
    pub motif: String,
    pub motion_amp: f64,
    pub motif_scale: f64,
    pub noise_sd: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_amp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_freq: Option<f64>,
    pub texture: bool,
}

impl SynthSettings {
    pub fn new(model: &PulseWave, params: &SynthParams) -> Self {
        Self {
            width: params.width,
            height: params.height,
            fps: params.fps,
            duration: params.duration,
            period: model.period,
            motif: params.motif.name().to_string(),
            motion_amp: params.motion_amp,
            motif_scale: params.motif_scale,
            noise_sd: params.noise_sd,
            seed: params.seed,
            drift_amp: params.drift.map(|d| d.amplitude),
            drift_freq: params.drift.map(|d| d.frequency),
            texture: params.texture,
        }
    }

    pub fn to_params(&self) -> Option<(PulseWave, SynthParams)> {
        let drift = match (self.drift_amp, self.drift_freq) {
            (Some(amplitude), Some(frequency)) => Some(Drift { amplitude, frequency }),
            _ => None,
        };
        let params = SynthParams {
            width: self.width,
            height: self.height,
            fps: self.fps,
            duration: self.duration,
            motif: Motif::from_name(&self.motif)?,
            motion_amp: self.motion_amp,
            motif_scale: self.motif_scale,
            noise_sd: self.noise_sd,
            seed: self.seed,
            drift,
            texture: self.texture,
        };
        Some((PulseWave::with_period(self.period), params))
    }
}

/// Frames whose temporal filtering relied on edge replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFrames {
    pub per_end: usize,
    pub indices: Vec<usize>,
}

impl BoundaryFrames {
    pub fn new(per_end: usize, frames: usize) -> Self {
        let per_end = per_end.min(frames);
        let mut indices: Vec<usize> = (0..per_end).collect();
        indices.extend((frames.saturating_sub(per_end)..frames).filter(|&i| i >= per_end));
        Self { per_end, indices }
    }
}

impl RunManifest {
    pub fn new(command: &str, input: Option<&Path>, output: &Path, clip: &VideoClip, container: &str) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            input: input.map(|p| p.display().to_string()),
            output: output.display().to_string(),
            clip: ClipInfo {
                width: clip.width(),
                height: clip.height(),
                frames: clip.len(),
                fps: clip.fps(),
                container: container.to_string(),
            },
            magnification: None,
            synth: None,
            boundary: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let manifest: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(format!("not a run manifest (format {:?})", manifest.format));
        }
        if manifest.version > MANIFEST_VERSION {
            return Err(format!("manifest version {} is newer than supported {}", manifest.version, MANIFEST_VERSION));
        }
        Ok(manifest)
    }
}

/// Sidecar manifest path: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    sidecar(output, "manifest.json")
}

/// `<path>.<suffix>` next to `path`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

/// Reads the manifest next to `output`, if present and valid.
pub fn read_manifest(output: &Path) -> Option<RunManifest> {
    let text = std::fs::read_to_string(manifest_path(output)).ok()?;
    RunManifest::from_json(&text).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_indices_cover_both_ends() {
        assert_eq!(BoundaryFrames::new(2, 7).indices, vec![0, 1, 5, 6]);
        assert_eq!(BoundaryFrames::new(0, 7).indices, Vec::<usize>::new());
        assert_eq!(BoundaryFrames::new(4, 6).indices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn magnify_settings_round_trip() {
        let mut config = MagnificationConfig::new(Mode::Accel, 5.0, 24.0);
        config.phase_smoothing = PhaseSmoothing::AmplitudeWeighted { radius: 2.0 };
        config.octave_step = OctaveStep::Full;
        let settings = MagnifySettings::from_config(&config);
        assert_eq!(settings.to_config(24.0), Some(config));
    }

    #[test]
    fn json_round_trip_and_format_check() {
        let clip = VideoClip::new(vec![jerkmag_core::Frame::filled(4, 4, 0.0)], 30.0).unwrap();
        let mut manifest = RunManifest::new("magnify", Some(Path::new("in")), Path::new("out"), &clip, "png16");
        manifest.magnification = Some(MagnifySettings::from_config(&MagnificationConfig::new(Mode::Jerk, 10.0, 30.0)));
        let text = manifest.to_json();
        assert_eq!(RunManifest::from_json(&text).unwrap(), manifest);
        assert!(RunManifest::from_json(&text.replace(MANIFEST_FORMAT, "other")).is_err());
        assert_eq!(manifest_path(Path::new("dir/out")), PathBuf::from("dir/out.manifest.json"));
    }
}
