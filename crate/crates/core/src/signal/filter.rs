//! Butterworth IIR design as cascaded second-order sections, plus
//! forward-backward (zero-phase) application.
//!
//! Sections come from the bilinear transform of the analog Butterworth
//! prototype with the cutoff pre-warped, so the -3 dB point of a single pass
//! lands exactly on the requested frequency. A band-pass is the cascade of
//! an order-`n` high-pass and an order-`n` low-pass.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{config_err, Result};

/// One biquad in transposed direct form II, normalized so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = Complex64::new(1.0, 0.0) + z_inv * self.a[0] + z2 * self.a[1];
        num / den
    }

    /// State that makes the output settle immediately for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let gain = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        let z2 = self.b[2] - self.a[1] * gain;
        let z1 = self.b[1] - self.a[0] * gain + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    LowPass,
    HighPass,
}

/// Cascade of biquads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn is_identity(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        design(Kind::LowPass, order, cutoff_hz, sample_rate_hz)
    }

    pub fn highpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        design(Kind::HighPass, order, cutoff_hz, sample_rate_hz)
    }

    /// Band-pass between the two cutoffs. Either edge may be omitted.
    pub fn bandpass(
        order: usize,
        highpass_hz: Option<f64>,
        lowpass_hz: Option<f64>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        if let (Some(hp), Some(lp)) = (highpass_hz, lowpass_hz) {
            if hp >= lp {
                return Err(config_err!(
                    "high-pass cutoff {hp} Hz must be below low-pass cutoff {lp} Hz"
                ));
            }
        }
        let mut sections = Vec::new();
        if let Some(hp) = highpass_hz {
            sections.extend(Self::highpass(order, hp, sample_rate_hz)?.sections);
        }
        if let Some(lp) = lowpass_hz {
            sections.extend(Self::lowpass(order, lp, sample_rate_hz)?.sections);
        }
        Ok(Self { sections })
    }

    /// Magnitude of a single forward pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let z_inv = Complex64::new(libm::cos(w), -libm::sin(w));
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
            .norm()
    }

    /// Magnitude of the forward-backward cascade, `|H(f)|^2`.
    pub fn zero_phase_magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let m = self.magnitude(freq_hz, sample_rate_hz);
        m * m
    }

    /// Causal filtering starting from the given per-section states.
    fn run(&self, x: &mut [f64], mut states: Vec<[f64; 2]>) {
        for (s, state) in self.sections.iter().zip(states.iter_mut()) {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let [mut z1, mut z2] = *state;
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
        }
    }

    /// Initial states for a constant input `level`, propagated through the
    /// cascade.
    fn steady_states(&self, level: f64) -> Vec<[f64; 2]> {
        let mut states = Vec::with_capacity(self.sections.len());
        let mut scale = level;
        for s in &self.sections {
            let [z1, z2] = s.step_state();
            states.push([z1 * scale, z2 * scale]);
            scale *= s.dc_gain();
        }
        states
    }

    /// Number of odd-extension samples added at each end before filtering.
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Zero-phase filtering: odd extension at both ends, steady-state
    /// initial conditions, forward pass, reversed pass, trim.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        if self.sections.is_empty() || x.is_empty() {
            return x.to_vec();
        }
        let n = x.len();
        let pad = self.pad_len().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let first = x[0];
        let last = x[n - 1];
        for i in (1..=pad).rev() {
            ext.push(2.0 * first - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * last - x[n - 1 - i]);
        }

        let start = ext[0];
        self.run(&mut ext, self.steady_states(start));
        ext.reverse();
        let start = ext[0];
        self.run(&mut ext, self.steady_states(start));
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

fn design(kind: Kind, order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(config_err!("filter order must be positive"));
    }
    let nyquist = sample_rate_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(config_err!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and the Nyquist frequency {nyquist} Hz"
        ));
    }
    let fs2 = 2.0 * sample_rate_hz;
    let warped = fs2 * libm::tan(PI * cutoff_hz / sample_rate_hz);
    let bilinear = |s: Complex64| (Complex64::new(fs2, 0.0) + s) / (Complex64::new(fs2, 0.0) - s);

    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let proto = Complex64::new(libm::cos(theta), libm::sin(theta));
        let s_pole = match kind {
            Kind::LowPass => proto * warped,
            Kind::HighPass => Complex64::new(warped, 0.0) / proto,
        };
        let z = bilinear(s_pole);
        let a = [-2.0 * z.re, z.norm_sqr()];
        sections.push(normalize(kind, a));
    }
    if order % 2 == 1 {
        // The real prototype pole maps to -warped for both kinds.
        let z = bilinear(Complex64::new(-warped, 0.0)).re;
        let (b, a) = match kind {
            Kind::LowPass => ([1.0, 1.0, 0.0], [-z, 0.0]),
            Kind::HighPass => ([1.0, -1.0, 0.0], [-z, 0.0]),
        };
        let gain = match kind {
            Kind::LowPass => (1.0 + a[0]) / 2.0,
            Kind::HighPass => (1.0 - a[0]) / 2.0,
        };
        sections.push(Biquad {
            b: [b[0] * gain, b[1] * gain, 0.0],
            a,
        });
    }
    Ok(SosFilter { sections })
}

/// Attaches the double zero at z = -1 (low-pass) or z = +1 (high-pass) and
/// scales for unit gain in the passband edge (DC or Nyquist).
fn normalize(kind: Kind, a: [f64; 2]) -> Biquad {
    match kind {
        Kind::LowPass => {
            let gain = (1.0 + a[0] + a[1]) / 4.0;
            Biquad {
                b: [gain, 2.0 * gain, gain],
                a,
            }
        }
        Kind::HighPass => {
            let gain = (1.0 - a[0] + a[1]) / 4.0;
            Biquad {
                b: [gain, -2.0 * gain, gain],
                a,
            }
        }
    }
}
