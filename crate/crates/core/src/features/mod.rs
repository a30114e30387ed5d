//! Sliding-window band-energy features.
//!
//! For every window length `t` the segment is cut into 1 s-stride windows,
//! each window row is transformed with an unnormalized DFT, squared into an
//! energy density, and summed over the five EEG bands. The per-window
//! `ch x 5` energy matrices are then reduced to order statistics: the
//! `g`-th largest and `g`-th smallest value over windows for every rank in
//! `g`. The final vector concatenates those statistics in a fixed order
//! (window length, statistic, rank, channel, band), so its length is
//! `2 * |g| * |T| * ch * 5` whatever the segment duration.

mod bands;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::fft::FftPlan;
use crate::matrix::Matrix;
use crate::signal::{exceeds_amplitude, EegSegment};

pub use bands::{Band, BandMode, BandRange, BandTable, BAND_COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatConfig {
    /// Window lengths in whole seconds, strictly increasing.
    pub window_lengths: Vec<u32>,
    /// Order-statistic ranks (1 = extreme value), strictly increasing.
    pub order_ranks: Vec<usize>,
    pub window_stride_s: u32,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self {
            window_lengths: vec![1, 2, 4, 8],
            order_ranks: vec![1, 2, 4, 8],
            window_stride_s: 1,
        }
    }
}

impl StatConfig {
    pub fn validate(&self) -> Result<()> {
        fn strictly_increasing_positive<T: PartialOrd + Default + Copy>(xs: &[T]) -> bool {
            !xs.is_empty()
                && xs[0] > T::default()
                && xs.windows(2).all(|w| w[0] < w[1])
        }
        if !strictly_increasing_positive(&self.window_lengths) {
            return Err(config_err!(
                "window lengths must be nonempty, positive and strictly increasing"
            ));
        }
        if !strictly_increasing_positive(&self.order_ranks) {
            return Err(config_err!(
                "order ranks must be nonempty, positive and strictly increasing"
            ));
        }
        if self.window_stride_s != 1 {
            return Err(config_err!("only a 1 s window stride is supported"));
        }
        Ok(())
    }

    pub fn feature_len(&self, channels: usize) -> usize {
        2 * self.order_ranks.len() * self.window_lengths.len() * channels * BAND_COUNT
    }
}

/// Number of 1 s-stride windows of `t` seconds that fit in `n_samples`:
/// `floor(secs - t) + 1` when `secs >= t`, else 0.
pub fn window_count(n_samples: usize, samples_per_second: usize, t: u32) -> usize {
    let width = samples_per_second * t as usize;
    if width == 0 || n_samples < width {
        0
    } else {
        (n_samples - width) / samples_per_second + 1
    }
}

fn integral_rate(segment: &EegSegment) -> Result<usize> {
    let sr = segment.sample_rate_hz();
    let r = libm::round(sr);
    if (sr - r).abs() > 1e-9 * sr {
        return Err(config_err!(
            "sliding windows need an integer sample rate, got {sr} Hz"
        ));
    }
    Ok(r as usize)
}

/// Start sample of every window of `t` seconds.
fn window_offsets(segment: &EegSegment, t: u32) -> Result<(usize, Vec<usize>)> {
    let sps = integral_rate(segment)?;
    let width = sps * t as usize;
    let n = window_count(segment.n_samples(), sps, t);
    Ok((width, (0..n).map(|i| i * sps).collect()))
}

/// Cuts `segment` into `ch x (sr * t)` windows starting at 0, 1, 2, ... s.
pub fn split_windows(segment: &EegSegment, t: u32) -> Result<Vec<Matrix>> {
    if t == 0 {
        return Err(config_err!("window length must be positive"));
    }
    let (width, offsets) = window_offsets(segment, t)?;
    Ok(offsets
        .into_iter()
        .map(|o| segment.samples().column_block(o, width))
        .collect())
}

/// Per-row DFT magnitudes `|X_k|`, column 0 being DC.
pub fn window_spectrum(window: &Matrix) -> Matrix {
    window_spectrum_with(&FftPlan::new(window.cols()), window)
}

/// [`window_spectrum`] with a caller-held plan of matching length.
pub fn window_spectrum_with(plan: &FftPlan, window: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(window.rows(), window.cols());
    for r in 0..window.rows() {
        let spec = plan.forward_real(window.row(r));
        for (dst, x) in out.row_mut(r).iter_mut().zip(&spec) {
            *dst = x.norm();
        }
    }
    out
}

/// Elementwise square of a magnitude spectrum.
pub fn energy_density(spectrum: &Matrix) -> Matrix {
    spectrum.map(|v| v * v)
}

/// `ch x 5` band energies of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEnergyMatrix {
    pub window_index: usize,
    pub energies: Matrix,
}

impl BandEnergyMatrix {
    pub fn get(&self, channel: usize, band: usize) -> f64 {
        self.energies.get(channel, band)
    }
}

/// Sums an energy-density matrix over each band's columns.
pub fn band_energies(
    density: &Matrix,
    bands: &BandTable,
    t: u32,
    mode: BandMode,
) -> Result<BandEnergyMatrix> {
    let columns = bands.column_ranges(t, mode, density.cols())?;
    let mut energies = Matrix::zeros(density.rows(), BAND_COUNT);
    for r in 0..density.rows() {
        let row = density.row(r);
        for (b, range) in columns.iter().enumerate() {
            // Fixed summation order keeps results independent of scheduling.
            let sum: f64 = row[range.clone()].iter().sum();
            energies.set(r, b, sum);
        }
    }
    Ok(BandEnergyMatrix {
        window_index: 0,
        energies,
    })
}

/// Order statistics over windows, laid out `[channel][band][rank]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub channels: usize,
    pub ranks: Vec<usize>,
    pub max: Vec<f64>,
    pub min: Vec<f64>,
}

impl OrderStats {
    #[inline]
    fn idx(&self, channel: usize, band: usize, rank: usize) -> usize {
        (channel * BAND_COUNT + band) * self.ranks.len() + rank
    }

    /// `g_j`-th largest energy for `(channel, band)`; rank is the position in
    /// `ranks`, not the rank value.
    pub fn max_at(&self, channel: usize, band: usize, rank: usize) -> f64 {
        self.max[self.idx(channel, band, rank)]
    }

    pub fn min_at(&self, channel: usize, band: usize, rank: usize) -> f64 {
        self.min[self.idx(channel, band, rank)]
    }
}

/// `g`-th largest and smallest of every `(channel, band)` entry across the
/// window series. Both are zero when fewer than `g` windows exist.
pub fn combine_stats(series: &[BandEnergyMatrix], ranks: &[usize], channels: usize) -> OrderStats {
    let n = series.len();
    let size = channels * BAND_COUNT * ranks.len();
    let mut stats = OrderStats {
        channels,
        ranks: ranks.to_vec(),
        max: vec![0.0; size],
        min: vec![0.0; size],
    };
    let mut values = Vec::with_capacity(n);
    for ch in 0..channels {
        for band in 0..BAND_COUNT {
            values.clear();
            values.extend(series.iter().map(|e| e.get(ch, band)));
            values.sort_by(f64::total_cmp);
            for (j, &g) in ranks.iter().enumerate() {
                if g == 0 || g > n {
                    continue;
                }
                let i = stats.idx(ch, band, j);
                stats.max[i] = values[n - g];
                stats.min[i] = values[g - 1];
            }
        }
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Max,
    Min,
}

/// Where one feature column comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub index: usize,
    pub t: u32,
    pub stat: StatKind,
    pub g: usize,
    pub channel: String,
    pub band: Band,
}

/// Canonical column layout: window length, statistic (max then min), rank,
/// channel, band, outermost to innermost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub window_lengths: Vec<u32>,
    pub order_ranks: Vec<usize>,
    pub channels: Vec<String>,
}

impl FeatureLayout {
    pub fn new(cfg: &StatConfig, channels: Vec<String>) -> Self {
        Self {
            window_lengths: cfg.window_lengths.clone(),
            order_ranks: cfg.order_ranks.clone(),
            channels,
        }
    }

    pub fn len(&self) -> usize {
        2 * self.order_ranks.len() * self.window_lengths.len() * self.channels.len() * BAND_COUNT
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column of a feature given positions in each axis.
    pub fn index(&self, t_pos: usize, stat: StatKind, g_pos: usize, channel: usize, band: usize) -> usize {
        let ch = self.channels.len();
        let g = self.order_ranks.len();
        let stat_pos = match stat {
            StatKind::Max => 0,
            StatKind::Min => 1,
        };
        (((t_pos * 2 + stat_pos) * g + g_pos) * ch + channel) * BAND_COUNT + band
    }

    pub fn describe(&self, index: usize) -> Option<FeatureDescriptor> {
        if index >= self.len() {
            return None;
        }
        let ch = self.channels.len();
        let g = self.order_ranks.len();
        let band = index % BAND_COUNT;
        let rest = index / BAND_COUNT;
        let channel = rest % ch;
        let rest = rest / ch;
        let g_pos = rest % g;
        let rest = rest / g;
        let stat = if rest % 2 == 0 { StatKind::Max } else { StatKind::Min };
        let t_pos = rest / 2;
        Some(FeatureDescriptor {
            index,
            t: self.window_lengths[t_pos],
            stat,
            g: self.order_ranks[g_pos],
            channel: self.channels[channel].clone(),
            band: Band::ALL[band],
        })
    }

    pub fn descriptors(&self) -> impl Iterator<Item = FeatureDescriptor> + '_ {
        (0..self.len()).filter_map(move |i| self.describe(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Full extraction configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub stats: StatConfig,
    pub bands: BandTable,
    pub mode: BandMode,
    /// Windows containing any sample above this magnitude are skipped.
    pub artifact_threshold_v: Option<f64>,
}

impl FeatureExtractor {
    pub fn new(stats: StatConfig, bands: BandTable, mode: BandMode) -> Self {
        Self {
            stats,
            bands,
            mode,
            artifact_threshold_v: None,
        }
    }

    pub fn with_artifact_threshold(mut self, threshold_v: Option<f64>) -> Self {
        self.artifact_threshold_v = threshold_v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.stats.validate()?;
        self.bands.validate()?;
        if self.mode == BandMode::PaperLiteral {
            if let Some(t) = self.stats.window_lengths.iter().find(|&&t| t != 1) {
                return Err(config_err!(
                    "paper-literal band columns are only defined for 1 s windows, got t = {t}"
                ));
            }
        }
        Ok(())
    }

    /// Band-energy matrices of every accepted window of length `t`.
    pub fn window_energies(&self, segment: &EegSegment, t: u32) -> Result<Vec<BandEnergyMatrix>> {
        let (width, offsets) = window_offsets(segment, t)?;
        if offsets.is_empty() {
            return Ok(Vec::new());
        }
        let columns = self.bands.column_ranges(t, self.mode, width)?;
        let plan = FftPlan::new(width);
        let ch = segment.channel_count();
        let mut out = Vec::with_capacity(offsets.len());
        for (i, &o) in offsets.iter().enumerate() {
            let window = segment.samples().column_block(o, width);
            if let Some(th) = self.artifact_threshold_v {
                if exceeds_amplitude(&window, th) {
                    continue;
                }
            }
            let mut energies = Matrix::zeros(ch, BAND_COUNT);
            for r in 0..ch {
                let spec = plan.forward_real(window.row(r));
                for (b, range) in columns.iter().enumerate() {
                    let sum: f64 = spec[range.clone()].iter().map(|x| x.norm_sqr()).sum();
                    energies.set(r, b, sum);
                }
            }
            out.push(BandEnergyMatrix {
                window_index: i,
                energies,
            });
        }
        Ok(out)
    }

    pub fn layout(&self, segment: &EegSegment) -> FeatureLayout {
        FeatureLayout::new(&self.stats, segment.channel_labels().to_vec())
    }

    pub fn extract(&self, segment: &EegSegment) -> Result<FeatureVector> {
        self.validate()?;
        let layout = self.layout(segment);
        let ch = segment.channel_count();
        let ranks = &self.stats.order_ranks;
        let mut values = vec![0.0; layout.len()];
        if segment.is_degenerate() {
            return Ok(FeatureVector { values, layout });
        }
        for (t_pos, &t) in self.stats.window_lengths.iter().enumerate() {
            let series = self.window_energies(segment, t)?;
            let stats = combine_stats(&series, ranks, ch);
            for (g_pos, _) in ranks.iter().enumerate() {
                for c in 0..ch {
                    for b in 0..BAND_COUNT {
                        values[layout.index(t_pos, StatKind::Max, g_pos, c, b)] =
                            stats.max_at(c, b, g_pos);
                        values[layout.index(t_pos, StatKind::Min, g_pos, c, b)] =
                            stats.min_at(c, b, g_pos);
                    }
                }
            }
        }
        Ok(FeatureVector { values, layout })
    }
}

/// Resolution-aware extraction without artifact rejection.
pub fn extract_features(
    segment: &EegSegment,
    cfg: &StatConfig,
    bands: &BandTable,
) -> Result<FeatureVector> {
    FeatureExtractor::new(cfg.clone(), bands.clone(), BandMode::ResolutionAware).extract(segment)
}

#[cfg(test)]
mod tests;
