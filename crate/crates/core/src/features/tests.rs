use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::signal::SegmentKey;
use crate::Error;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| alloc::format!("C{i}")).collect()
}

fn segment(rows: &[Vec<f64>], sr: f64) -> EegSegment {
    EegSegment::from_rows(labels(rows.len()), sr, rows, SegmentKey::new("u", "q", "j", "p")).unwrap()
}

fn sine(freq: f64, sr: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| libm::sin(2.0 * PI * freq * i as f64 / sr))
        .collect()
}

/// Direct O(M^2) DFT magnitudes.
fn brute_dft(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    (0..m)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let a = -2.0 * PI * ((k * n) % m) as f64 / m as f64;
                re += v * libm::cos(a);
                im += v * libm::sin(a);
            }
            libm::sqrt(re * re + im * im)
        })
        .collect()
}

fn random_segment(rng: &mut ChaCha8Rng, ch: usize, n: usize, sr: f64) -> EegSegment {
    let rows: Vec<Vec<f64>> = (0..ch)
        .map(|_| (0..n).map(|_| rng.random_range(-5e-5..5e-5)).collect())
        .collect();
    segment(&rows, sr)
}

#[test]
fn split_ten_seconds_by_four() {
    let s = segment(&[vec![0.0; 10_000]], 1000.0);
    let w = split_windows(&s, 4).unwrap();
    assert_eq!(w.len(), 7);
    assert!(w.iter().all(|m| m.cols() == 4000 && m.rows() == 1));
}

#[test]
fn split_window_offsets_are_whole_seconds() {
    let row: Vec<f64> = (0..5000).map(|i| i as f64).collect();
    let s = segment(&[row], 1000.0);
    let w = split_windows(&s, 2).unwrap();
    assert_eq!(w.len(), 4);
    for (i, m) in w.iter().enumerate() {
        assert_eq!(m.get(0, 0), (i * 1000) as f64);
        assert_eq!(m.get(0, 1999), (i * 1000 + 1999) as f64);
    }
}

#[test]
fn split_exact_and_short() {
    let exact = segment(&[vec![0.0; 4000]], 1000.0);
    assert_eq!(split_windows(&exact, 4).unwrap().len(), 1);
    let short = segment(&[vec![0.0; 3500]], 1000.0);
    assert!(split_windows(&short, 4).unwrap().is_empty());
}

#[test]
fn spectrum_of_constant() {
    let c = 0.75;
    let m = 64;
    let spec = window_spectrum(&Matrix::from_rows(&[vec![c; m]]).unwrap());
    assert!((spec.get(0, 0) - c * m as f64).abs() <= 1e-9 * c * m as f64);
    for k in 1..m {
        assert!(spec.get(0, k) <= 1e-9 * c * m as f64);
    }
}

#[test]
fn spectrum_of_ten_hz_tone() {
    let x = sine(10.0, 1000.0, 1000);
    let spec = window_spectrum(&Matrix::from_rows(&[x.clone()]).unwrap());
    let oracle = brute_dft(&x);
    assert!((oracle[10] - 500.0).abs() < 1e-6);
    assert!((spec.get(0, 10) - 500.0).abs() < 1e-6);
    assert!((spec.get(0, 990) - 500.0).abs() < 1e-6);
    for k in (0..1000).filter(|&k| k != 10 && k != 990) {
        assert!(spec.get(0, k) <= 1e-6, "bin {k}: {}", spec.get(0, k));
        assert!((spec.get(0, k) - oracle[k]).abs() < 1e-6);
    }
}

#[test]
fn spectrum_of_random_eight_samples_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let spec = window_spectrum(&Matrix::from_rows(&[x.clone()]).unwrap());
    for (k, o) in brute_dft(&x).iter().enumerate() {
        assert!((spec.get(0, k) - o).abs() <= 1e-9 * o.max(1e-12), "bin {k}");
    }
}

#[test]
fn energy_density_squares() {
    let f = Matrix::from_rows(&[vec![0.0, 3.0, -2.0]]).unwrap();
    assert_eq!(energy_density(&f).row(0), &[0.0, 9.0, 4.0]);
    let z = Matrix::zeros(2, 5);
    assert_eq!(energy_density(&z), z);
}

#[test]
fn parseval_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m = rng.random_range(1..300);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let w = Matrix::from_rows(&rows).unwrap();
        let time: f64 = w.as_slice().iter().map(|v| v * v).sum();
        let freq: f64 = energy_density(&window_spectrum(&w)).as_slice().iter().sum::<f64>() / m as f64;
        assert!((time - freq).abs() <= 1e-9 * time);
    }
}

fn tone_bands(freq: f64, t: u32, mode: BandMode) -> [f64; BAND_COUNT] {
    let sr = 1000.0;
    let x = sine(freq, sr, 1000 * t as usize);
    let p = energy_density(&window_spectrum(&Matrix::from_rows(&[x]).unwrap()));
    let e = band_energies(&p, &BandTable::default(), t, mode).unwrap();
    core::array::from_fn(|b| e.get(0, b))
}

#[test]
fn ten_hz_lands_in_alpha_paper_literal() {
    // One counted bin of magnitude M/2: (1000/2)^2. The mirror bin at 990 is
    // outside every column interval.
    let e = tone_bands(10.0, 1, BandMode::PaperLiteral);
    assert!((e[Band::Alpha.index()] - 250_000.0).abs() < 1e-6);
    for b in [Band::Delta, Band::Theta, Band::Beta, Band::Gamma] {
        assert!(e[b.index()] <= 1e-6 * e[Band::Alpha.index()]);
    }
}

#[test]
fn two_second_window_resolution_aware() {
    let e = tone_bands(10.0, 2, BandMode::ResolutionAware);
    let total: f64 = e.iter().sum();
    assert!(e[Band::Alpha.index()] >= 0.99 * total);
    // Bin 20 of a 2000-point window; its brute-force magnitude is 1000.
    let x = sine(10.0, 1000.0, 2000);
    assert!((brute_dft(&x)[20] - 1000.0).abs() < 1e-6);
    assert!((e[Band::Alpha.index()] - 1_000_000.0).abs() < 1e-3);
}

#[test]
fn boundary_bins_double_count_in_paper_literal_mode() {
    // 8 Hz sits in both theta [5,9] and alpha [9,13] (1-based columns).
    let e = tone_bands(8.0, 1, BandMode::PaperLiteral);
    assert!((e[Band::Theta.index()] - 250_000.0).abs() < 1e-6);
    assert!((e[Band::Alpha.index()] - 250_000.0).abs() < 1e-6);
    let r = tone_bands(8.0, 1, BandMode::ResolutionAware);
    assert!(r[Band::Theta.index()] < 1e-6);
    assert!((r[Band::Alpha.index()] - 250_000.0).abs() < 1e-6);
}

#[test]
fn zero_window_has_zero_energies() {
    let p = Matrix::zeros(3, 1000);
    let e = band_energies(&p, &BandTable::default(), 1, BandMode::ResolutionAware).unwrap();
    assert!(e.energies.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn paper_literal_needs_unit_window() {
    let p = Matrix::zeros(1, 2000);
    assert!(matches!(
        band_energies(&p, &BandTable::default(), 2, BandMode::PaperLiteral),
        Err(Error::Config(_))
    ));
    let ex = FeatureExtractor::new(StatConfig::default(), BandTable::default(), BandMode::PaperLiteral);
    assert!(ex.validate().is_err());
}

fn series_from(values: &[f64]) -> Vec<BandEnergyMatrix> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut energies = Matrix::zeros(1, BAND_COUNT);
            energies.set(0, 2, v);
            BandEnergyMatrix {
                window_index: i,
                energies,
            }
        })
        .collect()
}

#[test]
fn order_statistics_fixture() {
    let stats = combine_stats(&series_from(&[5.0, 1.0, 3.0, 2.0]), &[1, 2], 1);
    assert_eq!([stats.max_at(0, 2, 0), stats.max_at(0, 2, 1)], [5.0, 3.0]);
    assert_eq!([stats.min_at(0, 2, 0), stats.min_at(0, 2, 1)], [1.0, 2.0]);
}

#[test]
fn order_statistics_zero_fill_when_too_few_windows() {
    let stats = combine_stats(&series_from(&[5.0, 1.0, 3.0, 2.0]), &[8], 1);
    assert_eq!(stats.max_at(0, 2, 0), 0.0);
    assert_eq!(stats.min_at(0, 2, 0), 0.0);
    let empty = combine_stats(&[], &[1, 2], 2);
    assert!(empty.max.iter().chain(&empty.min).all(|&v| v == 0.0));
}

#[test]
fn order_statistics_match_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(0..12);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let ranks = [1, 2, 4, 8];
        let stats = combine_stats(&series_from(&values), &ranks, 1);
        let mut desc = values.clone();
        desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (j, &g) in ranks.iter().enumerate() {
            let (mx, mn) = if g <= n { (desc[g - 1], desc[n - g]) } else { (0.0, 0.0) };
            assert_eq!(stats.max_at(0, 2, j), mx);
            assert_eq!(stats.min_at(0, 2, j), mn);
        }
    }
}

#[test]
fn sixty_two_channels_give_9920_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_segment(&mut rng, 62, 3000, 1000.0);
    let v = extract_features(&s, &StatConfig::default(), &BandTable::default()).unwrap();
    assert_eq!(v.len(), 9920);
}

#[test]
fn single_channel_single_scale_has_ten_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = random_segment(&mut rng, 1, 2500, 1000.0);
    let cfg = StatConfig {
        window_lengths: vec![1],
        order_ranks: vec![1],
        ..StatConfig::default()
    };
    assert_eq!(extract_features(&s, &cfg, &BandTable::default()).unwrap().len(), 10);
}

#[test]
fn short_segment_gives_zero_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_segment(&mut rng, 4, 900, 1000.0);
    let v = extract_features(&s, &StatConfig::default(), &BandTable::default()).unwrap();
    assert_eq!(v.len(), 640);
    assert!(v.values.iter().all(|&x| x == 0.0));
}

#[test]
fn layout_descriptor_round_trip() {
    let layout = FeatureLayout::new(&StatConfig::default(), labels(3));
    for i in [0, 1, 5, 14, 15, 29, 30, 100, layout.len() - 1] {
        let d = layout.describe(i).unwrap();
        let t_pos = layout.window_lengths.iter().position(|&t| t == d.t).unwrap();
        let g_pos = layout.order_ranks.iter().position(|&g| g == d.g).unwrap();
        let c = layout.channels.iter().position(|c| *c == d.channel).unwrap();
        assert_eq!(layout.index(t_pos, d.stat, g_pos, c, d.band.index()), i);
    }
    let d = layout.describe(15).unwrap();
    assert_eq!((d.t, d.stat, d.g, d.channel.as_str(), d.band), (1, StatKind::Max, 2, "C0", Band::Delta));
    assert!(layout.describe(layout.len()).is_none());
}

#[test]
fn artifact_windows_are_skipped() {
    let mut row = vec![1e-6; 5000];
    row[2500] = 5e-4;
    let s = segment(&[row], 1000.0);
    let ex = FeatureExtractor::new(
        StatConfig {
            window_lengths: vec![1],
            order_ranks: vec![1],
            ..StatConfig::default()
        },
        BandTable::default(),
        BandMode::ResolutionAware,
    );
    assert_eq!(ex.window_energies(&s, 1).unwrap().len(), 5);
    let strict = ex.clone().with_artifact_threshold(Some(100e-6));
    let kept = strict.window_energies(&s, 1).unwrap();
    assert_eq!(kept.iter().map(|e| e.window_index).collect::<Vec<_>>(), [0, 1, 3, 4]);
}

#[test]
fn scaling_voltages_scales_features_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_segment(&mut rng, 2, 9300, 1000.0);
    let base = extract_features(&s, &StatConfig::default(), &BandTable::default()).unwrap();
    for a in [0.5, 2.0, 10.0] {
        let scaled = extract_features(&s.scaled(a), &StatConfig::default(), &BandTable::default()).unwrap();
        for (x, y) in base.values.iter().zip(&scaled.values) {
            assert!((y - a * a * x).abs() <= 1e-9 * (a * a * x).abs().max(f64::MIN_POSITIVE));
        }
    }
}

#[test]
fn permuting_channels_permutes_feature_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = random_segment(&mut rng, 3, 4200, 1000.0);
    let order = [2, 0, 1];
    let p = s.permute_channels(&order).unwrap();
    let cfg = StatConfig::default();
    let a = extract_features(&s, &cfg, &BandTable::default()).unwrap();
    let b = extract_features(&p, &cfg, &BandTable::default()).unwrap();
    let layout = &a.layout;
    for t in 0..4 {
        for stat in [StatKind::Max, StatKind::Min] {
            for g in 0..4 {
                for (new_c, &old_c) in order.iter().enumerate() {
                    for band in 0..BAND_COUNT {
                        assert_eq!(
                            b.values[layout.index(t, stat, g, new_c, band)],
                            a.values[layout.index(t, stat, g, old_c, band)]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn stat_config_validation() {
    assert!(StatConfig::default().validate().is_ok());
    for bad in [
        StatConfig { window_lengths: vec![], ..StatConfig::default() },
        StatConfig { window_lengths: vec![2, 1], ..StatConfig::default() },
        StatConfig { order_ranks: vec![0, 1], ..StatConfig::default() },
        StatConfig { window_stride_s: 2, ..StatConfig::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_count_matches_enumeration(n in 0usize..20_000, t in 1u32..10) {
        let sps = 1000usize;
        let secs = n as f64 / sps as f64;
        let mut enumerated = 0usize;
        while (enumerated + t as usize) as f64 <= secs {
            enumerated += 1;
        }
        prop_assert_eq!(window_count(n, sps, t), enumerated);
    }

    #[test]
    fn order_stats_are_monotone(values in proptest::collection::vec(0.0f64..1.0, 0..20)) {
        let ranks = [1, 2, 4, 8];
        let stats = combine_stats(&series_from(&values), &ranks, 1);
        for j in 1..ranks.len() {
            if ranks[j] <= values.len() {
                prop_assert!(stats.max_at(0, 2, j) <= stats.max_at(0, 2, j - 1));
                prop_assert!(stats.min_at(0, 2, j) >= stats.min_at(0, 2, j - 1));
            }
        }
    }

    #[test]
    fn feature_length_ignores_duration(n in 1usize..20_000, ch in 1usize..4) {
        let s = segment(&vec![vec![1e-6; n]; ch], 100.0);
        let v = extract_features(&s, &StatConfig::default(), &BandTable::default()).unwrap();
        prop_assert_eq!(v.len(), StatConfig::default().feature_len(ch));
        prop_assert!(v.values.iter().all(|&x| x >= 0.0));
    }
}
