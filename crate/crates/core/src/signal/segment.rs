use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, data_err, Result};
use crate::matrix::Matrix;

/// Lowest accepted sampling rate: twice the top of the gamma band.
pub const MIN_SAMPLE_RATE_HZ: f64 = 90.0;

/// Identity of a recording or of one paragraph-reading segment.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentKey {
    pub user: String,
    pub query: String,
    pub judgment: String,
    pub paragraph: String,
}

impl SegmentKey {
    pub fn new(
        user: impl Into<String>,
        query: impl Into<String>,
        judgment: impl Into<String>,
        paragraph: impl Into<String>,
    ) -> Self {
        Self {
            user: user.into(),
            query: query.into(),
            judgment: judgment.into(),
            paragraph: paragraph.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub key: SegmentKey,
    pub dwell_seconds: f64,
}

/// Half-open time interval `[start_s, end_s)` in seconds from segment start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeWindow {
    pub const fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s }
    }
}

/// Converts a time to a sample index by flooring. The small epsilon absorbs
/// representation error such as `0.3 * 1000.0 = 299.99999999999994`.
pub fn time_to_index(time_s: f64, sample_rate_hz: f64) -> usize {
    let x = time_s * sample_rate_hz;
    if x <= 0.0 {
        0
    } else {
        libm::floor(x + 1e-9) as usize
    }
}

/// Continuous multi-channel EEG, `channels x samples`, voltages in volts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegSegment {
    channel_labels: Vec<String>,
    sample_rate_hz: f64,
    samples: Matrix,
    meta: SegmentMeta,
}

impl EegSegment {
    /// Validates and builds a segment. `dwell_seconds` is derived from the
    /// sample count.
    pub fn new(
        channel_labels: Vec<String>,
        sample_rate_hz: f64,
        samples: Matrix,
        key: SegmentKey,
    ) -> Result<Self> {
        if channel_labels.is_empty() {
            return Err(data_err!("segment must have at least one channel"));
        }
        if samples.rows() != channel_labels.len() {
            return Err(data_err!(
                "{} channel labels but {} sample rows",
                channel_labels.len(),
                samples.rows()
            ));
        }
        if samples.cols() == 0 {
            return Err(data_err!("segment must have at least one sample"));
        }
        validate_rate(sample_rate_hz)?;
        if samples.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(data_err!("segment contains non-finite samples"));
        }
        Ok(Self::from_parts(channel_labels, sample_rate_hz, samples, key))
    }

    /// Builds a segment from rows of samples.
    pub fn from_rows<R: AsRef<[f64]>>(
        channel_labels: Vec<String>,
        sample_rate_hz: f64,
        rows: &[R],
        key: SegmentKey,
    ) -> Result<Self> {
        let samples =
            Matrix::from_rows(rows).ok_or_else(|| data_err!("rows have different lengths"))?;
        Self::new(channel_labels, sample_rate_hz, samples, key)
    }

    pub(crate) fn from_parts(
        channel_labels: Vec<String>,
        sample_rate_hz: f64,
        samples: Matrix,
        key: SegmentKey,
    ) -> Self {
        let dwell_seconds = samples.cols() as f64 / sample_rate_hz;
        Self {
            channel_labels,
            sample_rate_hz,
            samples,
            meta: SegmentMeta { key, dwell_seconds },
        }
    }

    pub(crate) fn with_samples(&self, samples: Matrix, sample_rate_hz: f64) -> Self {
        Self::from_parts(
            self.channel_labels.clone(),
            sample_rate_hz,
            samples,
            self.meta.key.clone(),
        )
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn channel_count(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_samples(&self) -> usize {
        self.samples.cols()
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        self.samples.row(index)
    }

    pub fn meta(&self) -> &SegmentMeta {
        &self.meta
    }

    pub fn key(&self) -> &SegmentKey {
        &self.meta.key
    }

    pub fn set_key(&mut self, key: SegmentKey) {
        self.meta.key = key;
    }

    pub fn dwell_seconds(&self) -> f64 {
        self.meta.dwell_seconds
    }

    /// Zero-sample segments come out of zero-length events and are skipped
    /// downstream.
    pub fn is_degenerate(&self) -> bool {
        self.samples.cols() == 0
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l == label)
    }

    /// Multiplies every voltage by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.with_samples(self.samples.map(|v| v * factor), self.sample_rate_hz)
    }

    /// Reorders channels; `order[i]` is the source index of output channel `i`.
    pub fn permute_channels(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.channel_count() {
            return Err(config_err!("permutation length does not match channel count"));
        }
        let mut seen = alloc::vec![false; order.len()];
        for &o in order {
            if o >= order.len() || core::mem::replace(&mut seen[o], true) {
                return Err(config_err!("not a permutation of channel indices"));
            }
        }
        let rows: Vec<&[f64]> = order.iter().map(|&o| self.channel(o)).collect();
        let labels = order.iter().map(|&o| self.channel_labels[o].clone()).collect();
        let samples = Matrix::from_rows(&rows).expect("rows share a length");
        Ok(Self::from_parts(
            labels,
            self.sample_rate_hz,
            samples,
            self.meta.key.clone(),
        ))
    }
}

pub(crate) fn validate_rate(sample_rate_hz: f64) -> Result<()> {
    if !sample_rate_hz.is_finite() || sample_rate_hz < MIN_SAMPLE_RATE_HZ {
        return Err(data_err!(
            "sample rate {sample_rate_hz} Hz is below the {MIN_SAMPLE_RATE_HZ} Hz minimum"
        ));
    }
    Ok(())
}
