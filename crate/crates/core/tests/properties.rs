use std::f64::consts::PI;

use jerkmag_core::magnifier::BandPhase;
use jerkmag_core::pulse::magnify_1d;
use jerkmag_core::*;
use proptest::prelude::*;

fn frame_strategy(width: usize, height: usize) -> impl Strategy<Value = Frame> {
    prop::collection::vec(0.0f64..1.0, width * height).prop_map(move |data| Frame::new(width, height, data).unwrap())
}

fn sized_frame() -> impl Strategy<Value = Frame> {
    (16usize..40, 16usize..40).prop_flat_map(|(w, h)| frame_strategy(w, h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pyramid_round_trip(frame in sized_frame()) {
        let bank = build_filter_bank(frame.width(), frame.height(), 2, 4, OctaveStep::Half).unwrap();
        let back = reconstruct(&decompose(&frame, &bank).unwrap(), &bank).unwrap();
        prop_assert!(back.max_abs_diff(&frame) < 1e-9);
    }

    #[test]
    fn pyramid_is_linear(a in frame_strategy(24, 20), b in frame_strategy(24, 20), s in -2.0f64..2.0) {
        let bank = build_filter_bank(24, 20, 2, 3, OctaveStep::Half).unwrap();
        let mix = Frame::from_fn(24, 20, |x, y| a.get(x, y) + s * b.get(x, y));
        let (pa, pb, pm) = (decompose(&a, &bank).unwrap(), decompose(&b, &bank).unwrap(), decompose(&mix, &bank).unwrap());
        for ((ba, bb), bm) in pa.bands().iter().zip(pb.bands()).zip(pm.bands()) {
            for ((ca, cb), cm) in ba.iter().zip(bb).zip(bm) {
                prop_assert!((ca + cb * s - cm).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn unwrapped_deltas_lie_in_half_open_range(raw in prop::collection::vec(-PI..PI, 2..60)) {
        let series = PhaseSeries {
            width: 1,
            height: 1,
            frames: raw.len(),
            fps: 30.0,
            bands: vec![BandPhase { level: 0, orientation: 0, phase: raw.clone(), amplitude: vec![1.0; raw.len()] }],
        };
        let out = unwrap_phase_temporal(series);
        let phase = &out.bands[0].phase;
        prop_assert_eq!(phase[0], raw[0]);
        for (t, pair) in phase.windows(2).enumerate() {
            let d = pair[1] - pair[0];
            prop_assert!(d > -PI - 1e-12 && d <= PI + 1e-12);
            // Unwrapping only adds multiples of 2 pi.
            let turns = (phase[t + 1] - raw[t + 1]) / (2.0 * PI);
            prop_assert!((turns - turns.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn temporal_convolution_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 60),
        b in prop::collection::vec(-1.0f64..1.0, 60),
        s in -3.0f64..3.0,
    ) {
        let kernel = gaussian_derivative_kernel(gaussian_sigma(30.0, 1.0).unwrap(), DerivativeOrder::Third).unwrap();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let (ca, cb, cm) = (convolve_time(&a, &kernel).unwrap(), convolve_time(&b, &kernel).unwrap(), convolve_time(&mix, &kernel).unwrap());
        for i in 0..60 {
            prop_assert!((ca[i] + s * cb[i] - cm[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn magnify_1d_is_linear_in_gain(a1 in 0.0f64..20.0, a2 in 0.0f64..20.0, mode_index in 0usize..3) {
        let model = PulseWave::default();
        let mode = Mode::ALL[mode_index];
        let o1 = magnify_1d(&model, mode, a1, 30.0).unwrap();
        let o2 = magnify_1d(&model, mode, a2, 30.0).unwrap();
        let o12 = magnify_1d(&model, mode, a1 + a2, 30.0).unwrap();
        for i in 0..o1.input.len() {
            let s = o1.input[i];
            prop_assert!((o1.output[i] + o2.output[i] - 2.0 * s - (o12.output[i] - s)).abs() < 1e-9);
        }
    }

    #[test]
    fn ssim_is_symmetric(a in frame_strategy(20, 18), b in frame_strategy(20, 18)) {
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_ignores_common_offset_for_structural_distortion(
        base in frame_strategy(24, 24),
        strength in 0.0f64..0.2,
        offset in -0.3f64..0.3,
    ) {
        // A checkerboard has (near) zero local mean, so both frames share local means.
        let distorted = Frame::from_fn(24, 24, |x, y| base.get(x, y) + strength * if (x + y) % 2 == 0 { 1.0 } else { -1.0 });
        let shift = |f: &Frame| Frame::from_fn(24, 24, |x, y| f.get(x, y) + offset);
        let before = ssim(&base, &distorted).unwrap();
        let after = ssim(&shift(&base), &shift(&distorted)).unwrap();
        prop_assert!((before - after).abs() < 1e-3, "{before} vs {after}");
    }

    #[test]
    fn psnr_decreases_with_noise_level(base in frame_strategy(16, 16), pattern in frame_strategy(16, 16)) {
        let values: Vec<f64> = [0.01, 0.02, 0.04, 0.08, 0.16]
            .iter()
            .map(|sd| {
                let noisy = Frame::from_fn(16, 16, |x, y| base.get(x, y) + sd * (pattern.get(x, y) - 0.5));
                psnr(&base, &noisy).unwrap()
            })
            .collect();
        for pair in values.windows(2) {
            prop_assert!(pair[1] < pair[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn static_clips_are_fixed_points(frame in frame_strategy(32, 32), alpha in 0.0f64..20.0, mode_index in 0usize..3) {
        let clip = VideoClip::new(vec![frame; 48], 30.0).unwrap();
        let out = magnify(&clip, &MagnificationConfig::new(Mode::ALL[mode_index], alpha, 30.0)).unwrap();
        prop_assert!(out.max_abs_diff(&clip) < 1e-4);
    }

    #[test]
    fn zero_gain_is_identity(frames in prop::collection::vec(frame_strategy(32, 32), 48), mode_index in 0usize..3) {
        let clip = VideoClip::new(frames, 30.0).unwrap();
        let out = magnify(&clip, &MagnificationConfig::new(Mode::ALL[mode_index], 0.0, 30.0)).unwrap();
        prop_assert!(out.max_abs_diff(&clip) < 1e-4);
    }
}
