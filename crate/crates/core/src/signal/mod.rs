//! Segmented EEG containers and the preprocessing chain applied before
//! feature extraction: re-referencing, baseline correction, zero-phase
//! band-pass, decimation, and slicing by paragraph-view events.

mod filter;
mod segment;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, data_err, Result};
use crate::matrix::Matrix;

pub use filter::{Biquad, SosFilter};
pub use segment::{
    time_to_index, EegSegment, SegmentKey, SegmentMeta, TimeWindow, MIN_SAMPLE_RATE_HZ,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Averaged reference (typically the mastoids). Empty skips re-referencing.
    pub reference_channels: Vec<String>,
    /// `None` disables the high-pass edge.
    pub highpass_hz: Option<f64>,
    /// `None` disables the low-pass edge.
    pub lowpass_hz: Option<f64>,
    pub baseline_window: TimeWindow,
    pub target_rate_hz: f64,
    /// Butterworth order of each band edge.
    pub filter_order: usize,
    /// Windows with any `|v|` above this many volts are dropped before
    /// feature extraction. `None` disables rejection.
    pub artifact_threshold_v: Option<f64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            reference_channels: Vec::new(),
            highpass_hz: Some(0.5),
            lowpass_hz: Some(50.0),
            baseline_window: TimeWindow::new(0.0, 0.2),
            target_rate_hz: 1000.0,
            filter_order: 4,
            artifact_threshold_v: Some(100e-6),
        }
    }
}

impl PreprocessConfig {
    /// Checks cutoffs against the target rate. Channel membership is checked
    /// per segment.
    pub fn validate(&self) -> Result<()> {
        if !(self.target_rate_hz.is_finite() && self.target_rate_hz > 0.0) {
            return Err(config_err!("target rate must be positive"));
        }
        if self.filter_order == 0 {
            return Err(config_err!("filter order must be positive"));
        }
        let nyquist = self.target_rate_hz / 2.0;
        if let Some(hp) = self.highpass_hz {
            if !(hp > 0.0 && hp < nyquist) {
                return Err(config_err!("high-pass cutoff {hp} Hz outside (0, {nyquist})"));
            }
        }
        if let Some(lp) = self.lowpass_hz {
            if !(lp > 0.0 && lp < nyquist) {
                return Err(config_err!("low-pass cutoff {lp} Hz outside (0, {nyquist})"));
            }
        }
        if let (Some(hp), Some(lp)) = (self.highpass_hz, self.lowpass_hz) {
            if hp >= lp {
                return Err(config_err!("high-pass cutoff must be below low-pass cutoff"));
            }
        }
        if let Some(th) = self.artifact_threshold_v {
            if !(th > 0.0) {
                return Err(config_err!("artifact threshold must be positive"));
            }
        }
        let w = self.baseline_window;
        if !(w.start_s >= 0.0 && w.end_s > w.start_s) {
            return Err(config_err!(
                "baseline window [{}, {}) is empty or negative",
                w.start_s,
                w.end_s
            ));
        }
        Ok(())
    }
}

/// Subtracts the per-sample mean of `refs` from every channel.
pub fn rereference<S: AsRef<str>>(segment: &EegSegment, refs: &[S]) -> Result<EegSegment> {
    if refs.is_empty() {
        return Err(config_err!("reference channel list is empty"));
    }
    let indices = refs
        .iter()
        .map(|r| {
            let r = r.as_ref();
            segment
                .channel_index(r)
                .ok_or_else(|| config_err!("unknown reference channel '{r}'"))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = segment.n_samples();
    let mut reference = alloc::vec![0.0; n];
    for &i in &indices {
        for (acc, v) in reference.iter_mut().zip(segment.channel(i)) {
            *acc += v;
        }
    }
    let k = indices.len() as f64;
    reference.iter_mut().for_each(|v| *v /= k);

    let mut out = segment.samples().clone();
    for r in 0..out.rows() {
        for (v, m) in out.row_mut(r).iter_mut().zip(&reference) {
            *v -= m;
        }
    }
    Ok(segment.with_samples(out, segment.sample_rate_hz()))
}

/// Removes from each channel the mean of its samples inside `window`. The
/// window end is clamped to the segment length.
pub fn baseline_correct(segment: &EegSegment, window: TimeWindow) -> Result<EegSegment> {
    if !(window.start_s >= 0.0) || window.end_s <= window.start_s {
        return Err(config_err!(
            "baseline window [{}, {}) is empty",
            window.start_s,
            window.end_s
        ));
    }
    let sr = segment.sample_rate_hz();
    let n = segment.n_samples();
    let lo = time_to_index(window.start_s, sr);
    let hi = time_to_index(window.end_s, sr).min(n);
    if lo >= hi {
        return Err(config_err!(
            "baseline window [{}, {}) holds no samples of a {:.3} s segment",
            window.start_s,
            window.end_s,
            segment.dwell_seconds()
        ));
    }
    let mut out = segment.samples().clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let mean = row[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(segment.with_samples(out, sr))
}

/// Designs the band-pass used by [`bandpass`] for a given input rate.
pub fn design_bandpass(cfg: &PreprocessConfig, sample_rate_hz: f64) -> Result<SosFilter> {
    SosFilter::bandpass(cfg.filter_order, cfg.highpass_hz, cfg.lowpass_hz, sample_rate_hz)
}

/// Zero-phase Butterworth band-pass applied channel by channel.
pub fn bandpass(segment: &EegSegment, cfg: &PreprocessConfig) -> Result<EegSegment> {
    let filter = design_bandpass(cfg, segment.sample_rate_hz())?;
    if filter.is_identity() {
        return Ok(segment.clone());
    }
    let mut out = segment.samples().clone();
    for r in 0..out.rows() {
        let y = filter.filtfilt(out.row(r));
        out.row_mut(r).copy_from_slice(&y);
    }
    Ok(segment.with_samples(out, segment.sample_rate_hz()))
}

/// Integer decimation factor from `rate` to `target`.
pub fn decimation_factor(rate_hz: f64, target_rate_hz: f64) -> Result<usize> {
    if !(target_rate_hz > 0.0) || target_rate_hz > rate_hz {
        return Err(config_err!(
            "cannot downsample {rate_hz} Hz to {target_rate_hz} Hz"
        ));
    }
    let ratio = rate_hz / target_rate_hz;
    let k = libm::round(ratio);
    if (ratio - k).abs() > 1e-9 * ratio {
        return Err(config_err!(
            "{rate_hz} Hz is not an integer multiple of {target_rate_hz} Hz"
        ));
    }
    Ok(k as usize)
}

/// Keeps every `rate / target`-th sample. The caller is responsible for
/// having low-passed below the new Nyquist frequency.
pub fn downsample(segment: &EegSegment, target_rate_hz: f64) -> Result<EegSegment> {
    let k = decimation_factor(segment.sample_rate_hz(), target_rate_hz)?;
    if k == 1 {
        return Ok(segment.clone());
    }
    let n_out = segment.n_samples() / k;
    let rows: Vec<Vec<f64>> = segment
        .samples()
        .iter_rows()
        .map(|row| row.iter().step_by(k).take(n_out).copied().collect())
        .collect();
    let samples = Matrix::from_rows(&rows).expect("equal row lengths");
    Ok(segment.with_samples(samples, target_rate_hz))
}

/// Re-reference, baseline-correct, band-pass, then downsample.
pub fn preprocess(segment: &EegSegment, cfg: &PreprocessConfig) -> Result<EegSegment> {
    cfg.validate()?;
    decimation_factor(segment.sample_rate_hz(), cfg.target_rate_hz)?;
    let referenced = if cfg.reference_channels.is_empty() {
        segment.clone()
    } else {
        rereference(segment, &cfg.reference_channels)?
    };
    let corrected = baseline_correct(&referenced, cfg.baseline_window)?;
    let filtered = bandpass(&corrected, cfg)?;
    downsample(&filtered, cfg.target_rate_hz)
}

/// Time range during which one paragraph was on screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEvent {
    pub paragraph: String,
    /// Overrides the recording's judgment id when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment: Option<String>,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicked: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<crate::model::Annotation>,
}

impl ViewEvent {
    pub fn new(paragraph: impl Into<String>, start_s: f64, end_s: f64) -> Self {
        Self {
            paragraph: paragraph.into(),
            judgment: None,
            start_s,
            end_s,
            clicked: None,
            annotation: None,
        }
    }
}

/// Cuts one segment per event using half-open sample ranges
/// `[floor(start * sr), floor(end * sr))`. Zero-length events yield
/// degenerate zero-sample segments.
pub fn slice_by_events(recording: &EegSegment, events: &[ViewEvent]) -> Result<Vec<EegSegment>> {
    let sr = recording.sample_rate_hz();
    let n = recording.n_samples();
    let secs = recording.dwell_seconds();
    let mut out = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        let ok = ev.start_s.is_finite()
            && ev.end_s.is_finite()
            && ev.start_s >= 0.0
            && ev.end_s >= ev.start_s
            && time_to_index(ev.end_s, sr) <= n;
        if !ok {
            return Err(data_err!(
                "event #{i} (paragraph '{}', [{}, {}) s) lies outside the {secs:.3} s recording",
                ev.paragraph,
                ev.start_s,
                ev.end_s
            ));
        }
        let lo = time_to_index(ev.start_s, sr);
        let hi = time_to_index(ev.end_s, sr);
        let samples = recording.samples().column_block(lo, hi - lo);
        let mut key = recording.key().clone();
        key.paragraph = ev.paragraph.clone();
        if let Some(j) = &ev.judgment {
            key.judgment = j.clone();
        }
        out.push(EegSegment::from_parts(
            recording.channel_labels().to_vec(),
            sr,
            samples,
            key,
        ));
    }
    Ok(out)
}

/// True when any sample exceeds `threshold_v` in magnitude.
pub fn exceeds_amplitude(window: &Matrix, threshold_v: f64) -> bool {
    window.as_slice().iter().any(|v| v.abs() > threshold_v)
}

#[cfg(test)]
mod tests;
