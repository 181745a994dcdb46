//! Periodogram estimates and the autocovariance they transform into.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::autocorr::centered;
use crate::error::{Error, Result};
use crate::synthesis::FieldSignal;

/// One-sided power spectral density on `[0, 1/(2·dt)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Cycles per fs.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Bin spacing, `1/(N·dt)`.
    pub df: f64,
    pub convention: &'static str,
}

impl SpectrumEstimate {
    pub const CONVENTION: &'static str =
        "one-sided rectangular-window periodogram of the mean-subtracted record, |X_m|^2*dt/N, interior bins doubled";

    /// `Σ P·df`, equal to the (biased) variance of the record.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.df
    }

    /// Index of the largest bin.
    pub fn peak_bin(&self) -> usize {
        self.power
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |best, (i, &p)| if p > best.1 { (i, p) } else { best },
            )
            .0
    }

    /// Frequency below which `fraction` of the total power lies.
    pub fn quantile_frequency(&self, fraction: f64) -> f64 {
        let total: f64 = self.power.iter().sum();
        let target = fraction * total;
        let mut acc = 0.0;
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            acc += p;
            if acc >= target {
                return *f;
            }
        }
        *self.frequencies.last().unwrap_or(&0.0)
    }
}

fn forward(x: &[f64], n_fft: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n_fft);
    buf.extend(x.iter().map(|&v| Complex::new(v, 0.0)));
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::<f64>::new()
        .plan_fft_forward(n_fft)
        .process(&mut buf);
    buf
}

pub fn power_spectral_density(signal: &FieldSignal) -> Result<SpectrumEstimate> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let dt = signal.grid().dt;
    let (x, _) = centered(signal.samples())?;
    let spectrum = forward(&x, n);
    let scale = dt / n as f64;
    let df = 1.0 / (n as f64 * dt);
    let last = n / 2;
    let power = (0..=last)
        .map(|m| {
            let p = spectrum[m].norm_sqr() * scale;
            let mirrored = m != 0 && !(n.is_multiple_of(2) && m == last);
            if mirrored {
                2.0 * p
            } else {
                p
            }
        })
        .collect();
    Ok(SpectrumEstimate {
        frequencies: (0..=last).map(|m| m as f64 * df).collect(),
        power,
        df,
        convention: SpectrumEstimate::CONVENTION,
    })
}

/// Two-sided periodogram `|X_m|²·dt/N` of the mean-subtracted record
/// zero-padded to `n_fft` points (`n_fft ≥ N`).
pub fn periodogram_two_sided(signal: &FieldSignal, n_fft: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    if n_fft < n {
        return Err(Error::InvalidParameter(format!(
            "periodogram length {n_fft} is shorter than the record ({n})"
        )));
    }
    let (x, _) = centered(signal.samples())?;
    let scale = signal.grid().dt / n as f64;
    Ok(forward(&x, n_fft)
        .iter()
        .map(|c| c.norm_sqr() * scale)
        .collect())
}

/// Inverse transform of a two-sided periodogram, i.e. the biased
/// autocovariance `Σ_j x_j x_{j+k} / N` at lags `0..=max_lag`. The lags are
/// linear (not wrapped) whenever the periodogram was padded to `≥ N + max_lag`.
pub fn autocovariance_from_periodogram(periodogram: &[f64], dt: f64, max_lag: usize) -> Vec<f64> {
    let n_fft = periodogram.len();
    let mut buf: Vec<Complex<f64>> = periodogram.iter().map(|&p| Complex::new(p, 0.0)).collect();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(n_fft)
        .process(&mut buf);
    // Σ_m S_m e^{2πimk/n_fft} · df with df = 1/(n_fft·dt).
    let scale = 1.0 / (n_fft as f64 * dt);
    buf[..=max_lag.min(n_fft - 1)]
        .iter()
        .map(|c| c.re * scale)
        .collect()
}

/// `Σ_{j<N-k} x_j x_{j+k} / N` of the mean-subtracted record, by explicit sums.
pub fn autocovariance_biased_direct(signal: &FieldSignal, max_lag: usize) -> Result<Vec<f64>> {
    let (x, _) = centered(signal.samples())?;
    let n = x.len();
    Ok((0..=max_lag.min(n - 1))
        .map(|k| {
            x[..n - k]
                .iter()
                .zip(&x[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect())
}
