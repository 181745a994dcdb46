use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::CoherenceFunction;
use crate::error::{Error, Result};
use crate::synthesis::FieldSignal;

/// Power left after mean removal below this fraction of the raw power counts
/// as no signal at all.
const DEGENERATE_POWER_FRACTION: f64 = 1e-20;

/// Mean-subtracted copy of the samples and the lag-0 average `Σx²/N`.
pub fn centered(samples: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let raw_power = samples.iter().map(|v| v * v).sum::<f64>() / n;
    let x: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    let power = x.iter().map(|v| v * v).sum::<f64>() / n;
    if power.is_nan() || power <= DEGENERATE_POWER_FRACTION * raw_power || power == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    Ok((x, power))
}

fn check_lag(n_samples: usize, max_lag_steps: usize) -> Result<()> {
    if 2 * max_lag_steps >= n_samples {
        return Err(Error::InvalidParameter(format!(
            "max lag {max_lag_steps} steps needs fewer than half the {n_samples} samples"
        )));
    }
    Ok(())
}

/// γ by explicit lag products. O(N·L); the reference for the spectral path.
pub fn autocorrelation_direct(
    signal: &FieldSignal,
    max_lag_steps: usize,
) -> Result<CoherenceFunction> {
    let n = signal.len();
    check_lag(n, max_lag_steps)?;
    let (x, power) = centered(signal.samples())?;
    let one_sided: Vec<f64> = (0..=max_lag_steps)
        .map(|k| {
            let sum: f64 = x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum();
            sum / (n - k) as f64 / power
        })
        .collect();
    Ok(CoherenceFunction::from_one_sided(
        &one_sided,
        signal.grid().dt,
        power,
        n,
    ))
}

/// γ through the power spectrum of the zero-padded record.
///
/// The record is padded to a power of two of at least `2N` samples so the
/// circular correlation of the padded buffer equals the linear one.
pub fn autocorrelation_spectral(
    signal: &FieldSignal,
    max_lag_steps: usize,
) -> Result<CoherenceFunction> {
    let n = signal.len();
    check_lag(n, max_lag_steps)?;
    let (x, power) = centered(signal.samples())?;
    let sums = lag_sums_fft(&x, max_lag_steps);
    let one_sided: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(k, s)| s / (n - k) as f64 / power)
        .collect();
    Ok(CoherenceFunction::from_one_sided(
        &one_sided,
        signal.grid().dt,
        power,
        n,
    ))
}

/// `Σ_{j<N-k} x_j x_{j+k}` for `k = 0..=max_lag` via FFT.
pub(crate) fn lag_sums_fft(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n_fft = (2 * x.len()).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n_fft);
    buf.extend(x.iter().map(|&v| Complex::new(v, 0.0)));
    buf.resize(n_fft, Complex::new(0.0, 0.0));

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n_fft).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n_fft).process(&mut buf);
    let scale = 1.0 / n_fft as f64;
    buf[..=max_lag].iter().map(|c| c.re * scale).collect()
}
