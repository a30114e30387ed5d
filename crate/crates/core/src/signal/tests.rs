use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::Error;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| alloc::format!("C{i}")).collect()
}

fn seg(rows: &[Vec<f64>], sr: f64) -> EegSegment {
    EegSegment::from_rows(labels(rows.len()), sr, rows, SegmentKey::new("u", "q", "j", "p")).unwrap()
}

fn sine(freq: f64, sr: f64, n: usize, amp: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amp * libm::sin(2.0 * PI * freq * i as f64 / sr))
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}

#[test]
fn rejects_invalid_segments() {
    let ok = vec![vec![0.0; 10]];
    assert!(EegSegment::from_rows(labels(1), 89.0, &ok, SegmentKey::default()).is_err());
    assert!(EegSegment::from_rows(labels(2), 1000.0, &ok, SegmentKey::default()).is_err());
    let empty: Vec<Vec<f64>> = vec![vec![]];
    assert!(EegSegment::from_rows(labels(1), 1000.0, &empty, SegmentKey::default()).is_err());
    let ragged = vec![vec![0.0; 3], vec![0.0; 4]];
    assert!(EegSegment::from_rows(labels(2), 1000.0, &ragged, SegmentKey::default()).is_err());
}

#[test]
fn rereference_all_channels_zeroes_column_means() {
    let s = seg(&[vec![1.0, -4.0, 2.5], vec![3.0, 0.5, 7.0]], 1000.0);
    let out = rereference(&s, &["C0", "C1"]).unwrap();
    for c in 0..3 {
        let mean = (out.channel(0)[c] + out.channel(1)[c]) / 2.0;
        assert!(mean.abs() < 1e-15);
    }
}

#[test]
fn rereference_single_channel_zeroes_that_row() {
    let s = seg(&[vec![1.0, -4.0, 2.5], vec![3.0, 0.5, 7.0]], 1000.0);
    let out = rereference(&s, &["C1"]).unwrap();
    assert!(out.channel(1).iter().all(|&v| v == 0.0));
}

#[test]
fn rereference_constant_fixture() {
    let s = seg(&[vec![1.0; 4], vec![2.0; 4], vec![3.0; 4]], 1000.0);
    let out = rereference(&s, &["C0", "C1"]).unwrap();
    assert_eq!(out.channel(0), &[-0.5; 4]);
    assert_eq!(out.channel(1), &[0.5; 4]);
    assert_eq!(out.channel(2), &[1.5; 4]);
}

#[test]
fn rereference_unknown_channel_is_config_error() {
    let s = seg(&[vec![1.0; 4]], 1000.0);
    assert!(matches!(rereference(&s, &["M1"]), Err(Error::Config(_))));
    let none: [&str; 0] = [];
    assert!(matches!(rereference(&s, &none), Err(Error::Config(_))));
}

#[test]
fn baseline_constant_becomes_zero() {
    let s = seg(&[vec![5.0; 100]], 1000.0);
    let out = baseline_correct(&s, TimeWindow::new(0.01, 0.05)).unwrap();
    assert!(out.channel(0).iter().all(|&v| v == 0.0));
}

#[test]
fn baseline_whole_segment_sums_to_zero() {
    let row: Vec<f64> = (0..500).map(|i| libm::sin(i as f64 * 0.1) + 0.3).collect();
    let s = seg(&[row], 1000.0);
    let out = baseline_correct(&s, TimeWindow::new(0.0, 0.5)).unwrap();
    let max = out.channel(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = out.channel(0).iter().sum::<f64>() / 500.0;
    assert!(mean.abs() < 1e-12 * max);
}

#[test]
fn baseline_first_half_fixture() {
    let s = seg(&[vec![1.0, 1.0, 3.0, 3.0]], 1000.0);
    let out = baseline_correct(&s, TimeWindow::new(0.0, 0.002)).unwrap();
    assert_eq!(out.channel(0), &[0.0, 0.0, 2.0, 2.0]);
}

#[test]
fn baseline_empty_window_is_config_error() {
    let s = seg(&[vec![1.0; 100]], 1000.0);
    assert!(matches!(
        baseline_correct(&s, TimeWindow::new(0.05, 0.05)),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        baseline_correct(&s, TimeWindow::new(0.2, 0.3)),
        Err(Error::Config(_))
    ));
}

/// Measured RMS gain of the zero-phase band-pass over the settled middle of a
/// long tone, next to the designed response `|H(f)|^2`.
fn measured_vs_designed(freq: f64, order: usize) -> (f64, f64) {
    let sr = 1000.0;
    let n = 20_000;
    let cfg = PreprocessConfig {
        filter_order: order,
        ..PreprocessConfig::default()
    };
    let input = sine(freq, sr, n, 1.0);
    let out = bandpass(&seg(&[input.clone()], sr), &cfg).unwrap();
    let trim = 4000;
    let measured = rms(&out.channel(0)[trim..n - trim]) / rms(&input[trim..n - trim]);
    let designed = design_bandpass(&cfg, sr).unwrap().zero_phase_magnitude(freq, sr);
    (measured, designed)
}

#[test]
fn sixty_hz_attenuation_tracks_designed_response() {
    let (measured, designed) = measured_vs_designed(60.0, 4);
    assert!((measured - designed).abs() <= 0.1 * designed, "{measured} vs {designed}");
    // Order-4 edges give |H(60 Hz)|^2 = 1 / (1 + r^8) with r the warped ratio.
    let r = libm::tan(PI * 60.0 / 1000.0) / libm::tan(PI * 50.0 / 1000.0);
    let analog = 1.0 / (1.0 + libm::pow(r, 8.0));
    assert!((designed - analog).abs() < 1e-3);
}

#[test]
fn sixty_hz_below_a_tenth_with_steeper_edges() {
    let (measured, designed) = measured_vs_designed(60.0, 8);
    assert!(measured <= 0.1, "{measured}");
    assert!((measured - designed).abs() <= 0.1 * designed);
}

#[test]
fn ten_hz_passes_within_five_percent() {
    let (measured, designed) = measured_vs_designed(10.0, 4);
    assert!((designed - 1.0).abs() < 0.05);
    assert!((measured - 1.0).abs() <= 0.05, "{measured}");
}

#[test]
fn dc_is_removed() {
    let amp = 2.0;
    let s = seg(&[vec![amp; 10_000]], 1000.0);
    let out = bandpass(&s, &PreprocessConfig::default()).unwrap();
    let tail = &out.channel(0)[1000..9000];
    assert!(rms(tail) <= 1e-3 * amp, "{}", rms(tail));
    assert!(design_bandpass(&PreprocessConfig::default(), 1000.0)
        .unwrap()
        .zero_phase_magnitude(0.0, 1000.0)
        < 1e-20);
}

#[test]
fn bandpass_rejects_cutoff_above_nyquist() {
    let s = seg(&[vec![0.0; 200]], 90.0);
    let cfg = PreprocessConfig::default();
    assert!(matches!(bandpass(&s, &cfg), Err(Error::Config(_))));
}

#[test]
fn downsample_halves_length() {
    let s = seg(&[vec![0.0; 4000]], 2000.0);
    let out = downsample(&s, 1000.0).unwrap();
    assert_eq!(out.n_samples(), 2000);
    assert_eq!(out.sample_rate_hz(), 1000.0);
    assert!((out.dwell_seconds() - s.dwell_seconds()).abs() <= 1.0 / 2000.0);
}

#[test]
fn downsample_same_rate_is_identity() {
    let s = seg(&[sine(3.0, 1000.0, 777, 1.0)], 1000.0);
    assert_eq!(downsample(&s, 1000.0).unwrap(), s);
}

#[test]
fn downsampled_sine_matches_direct_sampling() {
    let hi = seg(&[sine(10.0, 2000.0, 4001, 1.0)], 2000.0);
    let lo = downsample(&hi, 1000.0).unwrap();
    let direct = sine(10.0, 1000.0, 2000, 1.0);
    assert_eq!(lo.n_samples(), 2000);
    let max = lo
        .channel(0)
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max < 1e-9);
}

#[test]
fn downsample_non_integer_ratio_is_config_error() {
    let s = seg(&[vec![0.0; 300]], 1500.0);
    assert!(matches!(downsample(&s, 1000.0), Err(Error::Config(_))));
}

#[test]
fn downsample_then_hold_keeps_duration() {
    for n in [999usize, 1000, 1001, 4003] {
        let s = seg(&[vec![1.0; n]], 4000.0);
        let out = downsample(&s, 1000.0).unwrap();
        let held = out.n_samples() * 4;
        assert!(n - held < 4, "n={n}");
        assert!((s.dwell_seconds() - out.dwell_seconds()).abs() < 1.0 / 1000.0);
    }
}

#[test]
fn preprocess_without_reference_or_filter_is_baseline_correction() {
    let rows = vec![sine(7.0, 1000.0, 1500, 1.0), vec![2.0; 1500]];
    let s = seg(&rows, 1000.0);
    let cfg = PreprocessConfig {
        highpass_hz: None,
        lowpass_hz: None,
        ..PreprocessConfig::default()
    };
    let out = preprocess(&s, &cfg).unwrap();
    assert_eq!(out, baseline_correct(&s, cfg.baseline_window).unwrap());
}

#[test]
fn preprocess_is_the_composition_of_its_steps() {
    let rows = vec![
        sine(7.0, 2000.0, 6000, 3e-5),
        sine(61.0, 2000.0, 6000, 1e-5),
        sine(1.0, 2000.0, 6000, 2e-5),
    ];
    let s = seg(&rows, 2000.0);
    let cfg = PreprocessConfig {
        reference_channels: vec!["C0".to_string(), "C2".to_string()],
        ..PreprocessConfig::default()
    };
    let out = preprocess(&s, &cfg).unwrap();
    let manual = downsample(
        &bandpass(
            &baseline_correct(&rereference(&s, &cfg.reference_channels).unwrap(), cfg.baseline_window)
                .unwrap(),
            &cfg,
        )
        .unwrap(),
        cfg.target_rate_hz,
    )
    .unwrap();
    assert_eq!(out, manual);
    assert_eq!(out.sample_rate_hz(), 1000.0);
    assert_eq!(out.n_samples(), 3000);
    assert_eq!(out.channel_labels(), s.channel_labels());
    // Deterministic down to the bit.
    assert_eq!(preprocess(&s, &cfg).unwrap(), out);
}

#[test]
fn slice_whole_recording() {
    let s = seg(&[sine(3.0, 1000.0, 2000, 1.0)], 1000.0);
    let out = slice_by_events(&s, &[ViewEvent::new("p1", 0.0, 2.0)]).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].samples(), s.samples());
    assert_eq!(out[0].key().paragraph, "p1");
}

#[test]
fn slice_two_disjoint_seconds() {
    let s = seg(&[vec![0.5; 3000]], 1000.0);
    let out = slice_by_events(
        &s,
        &[ViewEvent::new("a", 0.0, 1.0), ViewEvent::new("b", 1.5, 2.5)],
    )
    .unwrap();
    assert_eq!(out.iter().map(|s| s.n_samples()).collect::<Vec<_>>(), [1000, 1000]);
    assert_eq!(out[1].key().paragraph, "b");
}

#[test]
fn slice_zero_length_is_degenerate() {
    let s = seg(&[vec![0.5; 3000]], 1000.0);
    let out = slice_by_events(&s, &[ViewEvent::new("z", 1.2, 1.2)]).unwrap();
    assert!(out[0].is_degenerate());
}

#[test]
fn slice_out_of_range_names_event() {
    let s = seg(&[vec![0.5; 3000]], 1000.0);
    let err = slice_by_events(
        &s,
        &[ViewEvent::new("ok", 0.0, 1.0), ViewEvent::new("late", 2.0, 3.5)],
    )
    .unwrap_err();
    match err {
        Error::Data(msg) => assert!(msg.contains("late") && msg.contains("#1"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(slice_by_events(&s, &[ViewEvent::new("neg", 1.0, 0.5)]).is_err());
}

#[test]
fn config_validation() {
    assert!(PreprocessConfig::default().validate().is_ok());
    let bad = PreprocessConfig {
        lowpass_hz: Some(600.0),
        ..PreprocessConfig::default()
    };
    assert!(bad.validate().is_err());
    let inverted = PreprocessConfig {
        highpass_hz: Some(40.0),
        lowpass_hz: Some(30.0),
        ..PreprocessConfig::default()
    };
    assert!(inverted.validate().is_err());
}

fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..5, 4usize..60).prop_flat_map(|(ch, n)| {
        proptest::collection::vec(proptest::collection::vec(-1e-4f64..1e-4, n), ch)
    })
}

proptest! {
    #[test]
    fn rereference_is_idempotent(rows in rows_strategy()) {
        let s = seg(&rows, 1000.0);
        let refs = vec!["C0".to_string()];
        let once = rereference(&s, &refs).unwrap();
        let twice = rereference(&once, &refs).unwrap();
        for (a, b) in once.samples().as_slice().iter().zip(twice.samples().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert_eq!(once.channel_labels(), s.channel_labels());
    }

    #[test]
    fn baseline_is_idempotent(rows in rows_strategy()) {
        let s = seg(&rows, 1000.0);
        let w = TimeWindow::new(0.0, 0.003);
        let once = baseline_correct(&s, w).unwrap();
        let twice = baseline_correct(&once, w).unwrap();
        for (a, b) in once.samples().as_slice().iter().zip(twice.samples().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
