//! First-order temporal coherence of a field record.
//!
//! The estimator is the normalized time-average autocorrelation of the
//! mean-subtracted field,
//!
//! ```text
//! γ(k·dt) = [ Σ_{j<N-k} x_j x_{j+k} / (N - k) ] / [ Σ_j x_j² / N ]
//! ```
//!
//! evaluated for `|k| ≤ L`. The lag-k products are averaged over the `N - k`
//! overlapping pairs while the denominator averages all `N` samples, so
//! `|γ|` may exceed one by a hair at extreme lags on short records.

mod autocorr;
mod length;
mod spectrum;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub use autocorr::{autocorrelation_direct, autocorrelation_spectral, centered};
pub use length::{
    coherence_length_fwhm, coherence_length_pew, FwhmResult, FwhmStatus, FwhmTarget, PewLength,
    ENVELOPE_EDGE_GUARD,
};
pub use spectrum::{
    autocovariance_biased_direct, autocovariance_from_periodogram, periodogram_two_sided,
    power_spectral_density, SpectrumEstimate,
};

/// Slack allowed on `|γ| ≤ 1` from the overlap-count normalization.
pub const GAMMA_BOUND_SLACK: f64 = 1e-9;

/// Normalized autocorrelation on the symmetric lag grid `-L..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceFunction {
    max_lag_steps: usize,
    dt: f64,
    gamma: Vec<f64>,
    norm: f64,
    n_samples_source: usize,
}

impl CoherenceFunction {
    /// Builds the symmetric function from its values at lags `0..=L`.
    /// `one_sided[0]` is replaced by exactly 1.
    pub fn from_one_sided(one_sided: &[f64], dt: f64, norm: f64, n_samples_source: usize) -> Self {
        assert!(!one_sided.is_empty(), "need at least the zero lag");
        let max_lag_steps = one_sided.len() - 1;
        let mut gamma = Vec::with_capacity(2 * max_lag_steps + 1);
        gamma.extend(one_sided[1..].iter().rev());
        gamma.push(1.0);
        gamma.extend(&one_sided[1..]);
        Self {
            max_lag_steps,
            dt,
            gamma,
            norm,
            n_samples_source,
        }
    }

    pub fn max_lag_steps(&self) -> usize {
        self.max_lag_steps
    }

    pub fn max_lag_fs(&self) -> f64 {
        self.max_lag_steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The `⟨E(t)E(t)⟩` value used as denominator.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn n_samples_source(&self) -> usize {
        self.n_samples_source
    }

    /// All `2L + 1` values, most negative lag first.
    pub fn values(&self) -> &[f64] {
        &self.gamma
    }

    /// Values at lags `0..=L`.
    pub fn one_sided(&self) -> &[f64] {
        &self.gamma[self.max_lag_steps..]
    }

    pub fn at(&self, lag: isize) -> f64 {
        self.gamma[(self.max_lag_steps as isize + lag) as usize]
    }

    /// Lag in fs of entry `i` of [`values`](Self::values).
    pub fn lag_fs(&self, i: usize) -> f64 {
        (i as f64 - self.max_lag_steps as f64) * self.dt
    }
}

/// Magnitude of the analytic signal of `values`, computed by zeroing the
/// negative-frequency half of its DFT.
pub fn analytic_envelope(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let positive_end = m.div_ceil(2);
    for (k, c) in buf.iter_mut().enumerate() {
        if k == 0 || (m.is_multiple_of(2) && k == m / 2) {
            continue;
        } else if k < positive_end {
            *c *= 2.0;
        } else {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter().map(|c| c.norm() * scale).collect()
}

/// Envelope of γ along the lag axis, on the same grid as [`CoherenceFunction::values`].
pub fn envelope_magnitude(gamma: &CoherenceFunction) -> Vec<f64> {
    analytic_envelope(gamma.values())
}
