//! Text formats for metric reports and cross-mode comparison tables.
//!
//! A metrics report (version 1) is a tab-separated table followed by a
//! summary block; `#` lines are comments. Identical frames have PSNR `inf`.
//!
//! ```text
//! # jerkmag metrics report
//! # version: 1
//! # source: clip
//! # magnified: clip-jerk
//! # mode: jerk
//! # alpha: 10
//! frame  psnr_db  ssim
//! 22  85.8912  0.999998
//! ...
//! [summary]
//! frames_sampled  100
//! requested_frames  100
//! boundary_frames  22
//! mean_psnr_db  85.8912
//! mean_ssim  0.999998
//! ```
//!
//! A comparison table (version 1) has one PSNR row and one SSIM row per
//! gain, and one column per mode; missing cells are `-`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use jerkmag_core::metrics::FrameMetrics;
use jerkmag_core::{MetricsReport, Mode};

pub const REPORT_VERSION: u32 = 1;
pub const TABLE_VERSION: u32 = 1;

/// Labels attached to a report for display and comparison.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportHeader {
    pub source: String,
    pub magnified: String,
    pub mode: Option<Mode>,
    pub alpha: Option<f64>,
}

pub fn format_value(v: f64, decimals: usize) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.decimals$}")
    }
}

fn parse_value(text: &str) -> Result<f64, String> {
    match text {
        "inf" => Ok(f64::INFINITY),
        _ => text.parse().map_err(|_| format!("bad number {text:?}")),
    }
}

pub fn format_report(header: &ReportHeader, report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# jerkmag metrics report");
    let _ = writeln!(out, "# version: {REPORT_VERSION}");
    let _ = writeln!(out, "# source: {}", header.source);
    let _ = writeln!(out, "# magnified: {}", header.magnified);
    if let Some(mode) = header.mode {
        let _ = writeln!(out, "# mode: {}", mode.name());
    }
    if let Some(alpha) = header.alpha {
        let _ = writeln!(out, "# alpha: {alpha}");
    }
    let _ = writeln!(out, "frame\tpsnr_db\tssim");
    for f in &report.frames {
        let _ = writeln!(out, "{}\t{}\t{}", f.frame, format_value(f.psnr, 4), format_value(f.ssim, 6));
    }
    let _ = writeln!(out, "[summary]");
    let _ = writeln!(out, "frames_sampled\t{}", report.frames.len());
    let _ = writeln!(out, "requested_frames\t{}", report.requested_len);
    let _ = writeln!(out, "boundary_frames\t{}", report.boundary_frames);
    let _ = writeln!(out, "mean_psnr_db\t{}", format_value(report.mean_psnr, 4));
    let _ = writeln!(out, "mean_ssim\t{}", format_value(report.mean_ssim, 6));
    out
}

/// Parses a report written by [`format_report`] (values at printed precision).
pub fn parse_report(text: &str) -> Result<(ReportHeader, MetricsReport), String> {
    let mut header = ReportHeader::default();
    let mut frames = Vec::new();
    let mut summary = BTreeMap::new();
    let mut in_summary = false;
    let mut version = None;
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix("# ") {
            if let Some((key, value)) = comment.split_once(": ") {
                match key {
                    "version" => version = value.parse::<u32>().ok(),
                    "source" => header.source = value.to_string(),
                    "magnified" => header.magnified = value.to_string(),
                    "mode" => header.mode = Mode::from_name(value),
                    "alpha" => header.alpha = value.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() || line == "frame\tpsnr_db\tssim" {
            continue;
        }
        if line == "[summary]" {
            in_summary = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if in_summary {
            if let [key, value] = fields[..] {
                summary.insert(key.to_string(), value.to_string());
            }
        } else if let [frame, psnr, ssim] = fields[..] {
            frames.push(FrameMetrics {
                frame: frame.parse().map_err(|_| format!("bad frame index {frame:?}"))?,
                psnr: parse_value(psnr)?,
                ssim: parse_value(ssim)?,
            });
        } else {
            return Err(format!("unexpected line {line:?}"));
        }
    }
    match version {
        Some(v) if v <= REPORT_VERSION => {}
        _ => return Err("missing or unsupported report version".to_string()),
    }
    let get = |key: &str| summary.get(key).ok_or_else(|| format!("summary lacks {key}"));
    let report = MetricsReport {
        frames,
        mean_psnr: parse_value(get("mean_psnr_db")?)?,
        mean_ssim: parse_value(get("mean_ssim")?)?,
        requested_len: get("requested_frames")?.parse().map_err(|_| "bad requested_frames")?,
        boundary_frames: get("boundary_frames")?.parse().map_err(|_| "bad boundary_frames")?,
        boundary_excluded: false,
    };
    let report = MetricsReport { boundary_excluded: report.boundary_frames > 0, ..report };
    Ok((header, report))
}

/// Builds a gain-by-mode comparison table from labelled reports.
pub fn format_comparison(source: &str, entries: &[(ReportHeader, MetricsReport)]) -> String {
    let mut alphas: Vec<f64> = entries.iter().filter_map(|(h, _)| h.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let cell = |alpha: f64, mode: Mode, pick: fn(&MetricsReport) -> String| {
        entries
            .iter()
            .find(|(h, _)| h.alpha == Some(alpha) && h.mode == Some(mode))
            .map_or_else(|| "-".to_string(), |(_, r)| pick(r))
    };
    let mut out = String::new();
    let _ = writeln!(out, "# jerkmag comparison table");
    let _ = writeln!(out, "# version: {TABLE_VERSION}");
    let _ = writeln!(out, "# source: {source}");
    let _ = writeln!(out, "{:<8}{:<12}{:>12}{:>12}{:>12}", "alpha", "assessment", "linear", "accel", "jerk");
    for alpha in alphas {
        let label = format!("x{alpha}");
        let rows: [(&str, fn(&MetricsReport) -> String); 2] = [
            ("psnr_db", |r| format_value(r.mean_psnr, 2)),
            ("ssim", |r| format_value(r.mean_ssim, 4)),
        ];
        for (name, pick) in rows {
            let _ = write!(out, "{label:<8}{name:<12}");
            for mode in Mode::ALL {
                let _ = write!(out, "{:>12}", cell(alpha, mode, pick));
            }
            out.push('\n');
        }
    }
    out
}
