//! Coherence-length estimators.

use serde::{Deserialize, Serialize};

use super::{envelope_magnitude, CoherenceFunction};
use crate::SPEED_OF_LIGHT_UM_PER_FS;

/// Power-equivalent width `c·∫|γ|²dτ` over the available lag window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PewLength {
    pub length_um: f64,
    /// The integral runs over `[-max_lag_fs, max_lag_fs]`.
    pub max_lag_fs: f64,
}

/// Trapezoidal quadrature of `|γ|²` over the whole truncated lag window.
pub fn coherence_length_pew(gamma: &CoherenceFunction) -> PewLength {
    let v = gamma.values();
    let sum_sq: f64 = v.iter().map(|g| g * g).sum();
    let ends = (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]) / 2.0;
    // A single-point window has no width.
    let integral = if v.len() > 1 {
        (sum_sq - ends) * gamma.dt()
    } else {
        0.0
    };
    PewLength {
        length_um: SPEED_OF_LIGHT_UM_PER_FS * integral,
        max_lag_fs: gamma.max_lag_fs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FwhmStatus {
    #[serde(rename = "OK")]
    Ok,
    /// The curve stays above half maximum on at least one side.
    #[serde(rename = "NO_CROSSING")]
    NoCrossing,
    /// The curve crosses half maximum more than once on at least one side.
    #[serde(rename = "MULTI_CROSSING")]
    MultiCrossing,
}

impl FwhmStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FwhmStatus::Ok => "OK",
            FwhmStatus::NoCrossing => "NO_CROSSING",
            FwhmStatus::MultiCrossing => "MULTI_CROSSING",
        }
    }

    pub fn is_ill_defined(self) -> bool {
        self != FwhmStatus::Ok
    }
}

impl std::fmt::Display for FwhmStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which curve the half-maximum width is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwhmTarget {
    /// Analytic-signal envelope of γ.
    #[default]
    Envelope,
    /// γ itself, carrier oscillation included.
    RawGamma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwhmResult {
    pub status: FwhmStatus,
    /// Full width in fs; present only when `status` is OK.
    pub width_fs: Option<f64>,
    pub length_um: Option<f64>,
    /// Curve value at zero lag; the half-maximum level is half of this.
    pub peak: f64,
    pub crossings_negative: usize,
    pub crossings_positive: usize,
}

impl FwhmResult {
    pub fn half_width_fs(&self) -> Option<f64> {
        self.width_fs.map(|w| w / 2.0)
    }
}

/// Fraction of the lag window, at each end, excluded from envelope crossing
/// searches.
pub const ENVELOPE_EDGE_GUARD: f64 = 0.01;

/// Half-maximum crossings walking outward from the centre: count and, for the
/// last one, the interpolated distance from the centre in samples.
fn crossings<I: Iterator<Item = f64>>(mut side: I, half: f64) -> (usize, Option<f64>) {
    let Some(mut prev) = side.next() else {
        return (0, None);
    };
    let mut count = 0;
    let mut last = None;
    for (i, cur) in side.enumerate() {
        if (prev >= half) != (cur >= half) {
            count += 1;
            last = Some(i as f64 + (prev - half) / (prev - cur));
        }
        prev = cur;
    }
    (count, last)
}

/// Full width at half maximum of γ's envelope (or of γ itself).
///
/// Exactly one half-maximum crossing is required on each side of zero lag.
/// No crossing within the window gives [`FwhmStatus::NoCrossing`]; more than
/// one on either side gives [`FwhmStatus::MultiCrossing`]. Both are values,
/// not errors.
///
/// The analytic envelope is distorted within a few samples of the window
/// ends, so envelope crossings are only searched up to
/// `max_lag - ceil(ENVELOPE_EDGE_GUARD * max_lag)` steps.
pub fn coherence_length_fwhm(gamma: &CoherenceFunction, target: FwhmTarget) -> FwhmResult {
    let center = gamma.max_lag_steps();
    let (curve, reach) = match target {
        FwhmTarget::Envelope => {
            let guard = (ENVELOPE_EDGE_GUARD * center as f64).ceil() as usize;
            (envelope_magnitude(gamma), center - guard.min(center))
        }
        FwhmTarget::RawGamma => (gamma.values().to_vec(), center),
    };
    let peak = curve[center];
    let half = peak / 2.0;

    let (n_pos, x_pos) = crossings(curve[center..=center + reach].iter().copied(), half);
    let (n_neg, x_neg) = crossings(curve[center - reach..=center].iter().rev().copied(), half);

    let status = if n_pos == 0 || n_neg == 0 {
        FwhmStatus::NoCrossing
    } else if n_pos > 1 || n_neg > 1 {
        FwhmStatus::MultiCrossing
    } else {
        FwhmStatus::Ok
    };
    let width_fs = match (status, x_neg, x_pos) {
        (FwhmStatus::Ok, Some(a), Some(b)) => Some((a + b) * gamma.dt()),
        _ => None,
    };
    FwhmResult {
        status,
        width_fs,
        length_um: width_fs.map(|w| w * SPEED_OF_LIGHT_UM_PER_FS),
        peak,
        crossings_negative: n_neg,
        crossings_positive: n_pos,
    }
}
