use std::f64::consts::PI;

use jerkmag_core::magnifier::boundary_frames;
use jerkmag_core::*;

fn grating_clip(frames: usize, shift: impl Fn(usize) -> f64) -> VideoClip {
    let omega = 2.0 * PI / 8.0;
    let frames = (0..frames)
        .map(|t| {
            let s = shift(t);
            Frame::from_fn(64, 64, |x, _| 0.5 + 0.3 * (omega * (x as f64 - s)).sin())
        })
        .collect();
    VideoClip::new(frames, 30.0).unwrap()
}

fn responsive_bands(series: &PhaseSeries) -> Vec<usize> {
    let n = series.pixels();
    let mean_amp: Vec<f64> = series.bands.iter().map(|b| b.amplitude[..n].iter().sum::<f64>() / n as f64).collect();
    let max = mean_amp.iter().copied().fold(0.0, f64::max);
    (0..mean_amp.len()).filter(|&b| mean_amp[b] > 0.1 * max).collect()
}

#[test]
fn translating_grating_phase_advances_linearly() {
    let velocity = 0.1;
    let clip = grating_clip(30, |t| velocity * t as f64);
    let bank = build_filter_bank(64, 64, 4, 4, OctaveStep::Half).unwrap();
    let series = extract_phase_series(&clip, &bank).unwrap();
    assert_eq!(series.bands.len(), 16);
    assert!(series.bands.iter().all(|b| b.phase.len() == 30 * 64 * 64));
    let n = series.pixels();
    let bands = responsive_bands(&series);
    assert!(!bands.is_empty());
    for b in bands {
        // Least-squares slope of the pixel-mean phase.
        let mean: Vec<f64> = (0..30).map(|t| series.bands[b].phase_at(t, n).iter().sum::<f64>() / n as f64).collect();
        let t_mean = 14.5;
        let y_mean = mean.iter().sum::<f64>() / 30.0;
        let num: f64 = mean.iter().enumerate().map(|(t, y)| (t as f64 - t_mean) * (y - y_mean)).sum();
        let den: f64 = (0..30).map(|t| (t as f64 - t_mean).powi(2)).sum();
        let slope = num / den;
        let expected = 2.0 * PI / 8.0 * velocity;
        assert!((slope.abs() - expected).abs() < 0.01 * expected, "band {b}: {slope}");
    }
}

#[test]
fn constant_velocity_gives_zero_interior_deviation_for_derivative_modes() {
    let clip = grating_clip(60, |t| 0.05 * t as f64);
    for mode in [Mode::Accel, Mode::Jerk] {
        let config = MagnificationConfig::new(mode, 10.0, 30.0);
        let bank = config.filter_bank(64, 64).unwrap();
        let filtered = filter_phase(&extract_phase_series(&clip, &bank).unwrap(), &config).unwrap();
        let boundary = boundary_frames(&config, 60).unwrap();
        let n = filtered.pixels();
        for b in responsive_bands(&filtered) {
            for t in boundary..60 - boundary {
                let worst = filtered.bands[b].phase_at(t, n).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(worst < 1e-9, "{mode:?} band {b} frame {t}: {worst}");
            }
        }
    }
}

#[test]
fn static_clip_gives_zero_deviation() {
    let clip = grating_clip(50, |_| 0.0);
    for mode in Mode::ALL {
        let config = MagnificationConfig::new(mode, 10.0, 30.0);
        let bank = config.filter_bank(64, 64).unwrap();
        let filtered = filter_phase(&extract_phase_series(&clip, &bank).unwrap(), &config).unwrap();
        for b in responsive_bands(&filtered) {
            assert!(filtered.bands[b].phase.iter().all(|v| v.abs() < 1e-9), "{mode:?}");
        }
    }
}

#[test]
fn jerk_magnification_is_local() {
    let mut params = SynthParams::new(64, 64, 30.0, 3.0);
    params.motion_amp = 1.0;
    let synth = synth_clip(&PulseWave::default(), &params).unwrap();
    let out = magnify(&synth.clip, &MagnificationConfig::new(Mode::Jerk, 10.0, 30.0)).unwrap();
    let (cx, cy) = (31.5, 31.5);
    let reach = params.support_radius() + params.motion_amp + 16.0;
    let (mut total, mut count) = (0.0, 0usize);
    for (a, b) in synth.clip.frames().iter().zip(out.frames()) {
        for y in 0..64 {
            for x in 0..64 {
                if ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() > reach {
                    total += (a.get(x, y) - b.get(x, y)).abs();
                    count += 1;
                }
            }
        }
    }
    assert!(count > 0);
    assert!(total / (count as f64) < 0.01);
}

#[test]
fn derivative_modes_leave_constant_velocity_unamplified() {
    // Textured field translating at constant velocity plus a pulsing bump.
    let model = PulseWave::default();
    let sampler = model.sampler();
    let (w, h, n) = (64usize, 64usize, 90usize);
    let (cx, cy) = (31.5, 31.5);
    let frames = (0..n)
        .map(|t| {
            let drift = 0.03 * t as f64;
            let d = 0.5 * sampler.displacement(t as f64 / 30.0);
            Frame::from_fn(w, h, |x, y| {
                let (xs, y) = (x as f64 - drift, y as f64);
                let texture = 0.1 * (2.0 * PI * (xs / 11.0 + y / 23.0)).sin() + 0.08 * (2.0 * PI * xs / 7.0).cos();
                let bump = 0.3 * (-((xs - cx - d).powi(2) + (y - cy).powi(2)) / 18.0).exp();
                0.45 + texture + bump
            })
        })
        .collect();
    let clip = VideoClip::new(frames, 30.0).unwrap();
    let energy = |mode: Mode| {
        let config = MagnificationConfig::new(mode, 10.0, 30.0);
        let boundary = boundary_frames(&MagnificationConfig::new(Mode::Jerk, 10.0, 30.0), n).unwrap();
        let out = magnify(&clip, &config).unwrap();
        let mut e = 0.0;
        for t in boundary..n - boundary {
            for y in 0..h {
                for x in 0..w {
                    if ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() > 20.0 {
                        e += (out.frame(t).get(x, y) - clip.frame(t).get(x, y)).powi(2);
                    }
                }
            }
        }
        e
    };
    let (linear, jerk) = (energy(Mode::Linear), energy(Mode::Jerk));
    assert!(linear >= 5.0 * jerk, "linear {linear} jerk {jerk}");
}

#[test]
fn zero_gain_pipeline_scores_near_perfect() {
    let mut params = SynthParams::new(48, 48, 30.0, 3.0);
    params.texture = true;
    let synth = synth_clip(&PulseWave::default(), &params).unwrap();
    let out = magnify(&synth.clip, &MagnificationConfig::new(Mode::Jerk, 0.0, 30.0)).unwrap();
    let report = evaluate_clip(&synth.clip, &out, 40, 22).unwrap();
    assert!(report.mean_ssim >= 0.999);
}

#[test]
fn slice_of_static_clip_has_identical_rows() {
    let clip = grating_clip(12, |_| 0.0);
    let slice = extract_sts(&clip, SliceLine::Polyline(vec![(2.0, 3.0), (40.5, 50.0)])).unwrap();
    let image = &slice.image;
    assert_eq!(image.height(), 12);
    for t in 1..12 {
        for i in 0..image.width() {
            assert_eq!(image.get(i, t), image.get(i, 0));
        }
    }
}

#[test]
fn slice_ridge_repeats_with_the_pulse_period() {
    let mut params = SynthParams::new(48, 32, 30.0, 4.0);
    params.motion_amp = 2.0;
    let synth = synth_clip(&PulseWave::default(), &params).unwrap();
    let slice = extract_sts(&synth.clip, SliceLine::Row(16)).unwrap();
    let image = &slice.image;
    // Ridge position per row by intensity centroid above the background.
    let ridge: Vec<f64> = (0..image.height())
        .map(|t| {
            let (mut m, mut s) = (0.0, 0.0);
            for x in 0..image.width() {
                let v = image.get(x, t) - 0.3;
                m += v;
                s += v * x as f64;
            }
            s / m
        })
        .collect();
    let mean = ridge.iter().sum::<f64>() / ridge.len() as f64;
    let centred: Vec<f64> = ridge.iter().map(|r| r - mean).collect();
    let autocorrelation = |lag: usize| -> f64 {
        (0..centred.len() - lag).map(|i| centred[i] * centred[i + lag]).sum::<f64>() / (centred.len() - lag) as f64
    };
    let best = (10..60).max_by(|&a, &b| autocorrelation(a).total_cmp(&autocorrelation(b))).unwrap();
    assert_eq!(best, 30);
}
