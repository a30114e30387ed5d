use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

pub const BAND_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; BAND_COUNT] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }
}

/// How spectrum columns are assigned to bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandMode {
    /// Bin `k` sits at `k / t` Hz; a band `[lo, hi)` takes every bin inside.
    #[default]
    ResolutionAware,
    /// Fixed inclusive 1-based column intervals, valid for 1 s windows only.
    /// Boundary bins at 4, 8, 12 and 30 Hz count toward two bands.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRange {
    pub band: Band,
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Inclusive 1-based spectrum columns used in paper-literal mode.
    pub columns: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub bands: [BandRange; BAND_COUNT],
}

impl Default for BandTable {
    fn default() -> Self {
        let r = |band, lo_hz, hi_hz, columns| BandRange {
            band,
            lo_hz,
            hi_hz,
            columns,
        };
        Self {
            bands: [
                r(Band::Delta, 0.5, 4.0, (2, 5)),
                r(Band::Theta, 4.0, 8.0, (5, 9)),
                r(Band::Alpha, 8.0, 12.0, (9, 13)),
                r(Band::Beta, 12.0, 30.0, (13, 31)),
                r(Band::Gamma, 30.0, 45.0, (31, 46)),
            ],
        }
    }
}

impl BandTable {
    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.bands.iter().enumerate() {
            if b.band != Band::ALL[i] {
                return Err(config_err!("bands must be listed delta, theta, alpha, beta, gamma"));
            }
            if !(b.lo_hz >= 0.0 && b.hi_hz > b.lo_hz) {
                return Err(config_err!("band {} has an empty frequency range", b.band.name()));
            }
            if !(b.columns.0 >= 1 && b.columns.1 >= b.columns.0) {
                return Err(config_err!("band {} has an empty column interval", b.band.name()));
            }
        }
        Ok(())
    }

    /// Highest band edge in Hz.
    pub fn top_hz(&self) -> f64 {
        self.bands.iter().map(|b| b.hi_hz).fold(0.0, f64::max)
    }

    /// Fails when the top band edge is not below the Nyquist frequency.
    pub fn check_rate(&self, sample_rate_hz: f64) -> Result<()> {
        if self.top_hz() >= sample_rate_hz / 2.0 {
            return Err(config_err!(
                "band edge {} Hz is not below the Nyquist frequency of {} Hz",
                self.top_hz(),
                sample_rate_hz
            ));
        }
        Ok(())
    }

    /// Zero-based, half-open spectrum column ranges of each band for a
    /// window of `t` seconds spanning `width` samples.
    pub fn column_ranges(&self, t: u32, mode: BandMode, width: usize) -> Result<[Range<usize>; BAND_COUNT]> {
        let mut out: [Range<usize>; BAND_COUNT] = Default::default();
        for (slot, b) in out.iter_mut().zip(&self.bands) {
            *slot = match mode {
                BandMode::PaperLiteral => {
                    if t != 1 {
                        return Err(config_err!(
                            "paper-literal band columns require t = 1, got t = {t}"
                        ));
                    }
                    b.columns.0 - 1..b.columns.1
                }
                BandMode::ResolutionAware => {
                    let t = t as f64;
                    let lo = libm::ceil(b.lo_hz * t - 1e-9) as usize;
                    let hi = libm::ceil(b.hi_hz * t - 1e-9) as usize;
                    lo..hi
                }
            };
            if slot.end > width / 2 + 1 {
                return Err(config_err!(
                    "band {} needs spectrum columns up to {} but a {width}-sample window only resolves {}",
                    b.band.name(),
                    slot.end,
                    width / 2 + 1
                ));
            }
        }
        Ok(out)
    }
}
