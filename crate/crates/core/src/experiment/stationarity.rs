use crate::error::{Error, Result};
use crate::synthesis::FieldSignal;

/// Lags (in steps) at which segment-wise γ estimates are compared.
pub const STATIONARITY_LAGS: [usize; 8] = [1, 2, 5, 10, 25, 50, 100, 250];

/// Segments must span at least this many mean periods.
const MIN_PERIODS_PER_SEGMENT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub segment_len: usize,
    /// Mean-subtracted variance of each segment.
    pub variances: Vec<f64>,
    /// max / min over segments; infinite when some segment is silent.
    pub variance_ratio: f64,
    /// (max - min) / mean over segments.
    pub variance_dispersion: f64,
    pub lags: Vec<usize>,
    /// Largest |γ_a(k) - γ_b(k)| over segment pairs and compared lags,
    /// ignoring silent segments.
    pub max_gamma_discrepancy: f64,
}

fn segment_gamma(x: &[f64], lags: &[usize]) -> Option<Vec<f64>> {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let power = c.iter().map(|v| v * v).sum::<f64>() / m;
    if power <= 0.0 {
        return None;
    }
    Some(
        lags.iter()
            .map(|&k| {
                let s: f64 = c[..c.len() - k]
                    .iter()
                    .zip(&c[k..])
                    .map(|(a, b)| a * b)
                    .sum();
                s / (c.len() - k) as f64 / power
            })
            .collect(),
    )
}

/// Splits the record into `n_segments` equal contiguous pieces (the remainder
/// at the end is dropped) and compares their second-order statistics.
pub fn stationarity_diagnostic(
    signal: &FieldSignal,
    n_segments: usize,
    mean_period_fs: f64,
) -> Result<StationarityReport> {
    if n_segments < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 segments, got {n_segments}"
        )));
    }
    let dt = signal.grid().dt;
    let segment_len = signal.len() / n_segments;
    let segment_fs = segment_len as f64 * dt;
    let required_fs = MIN_PERIODS_PER_SEGMENT * mean_period_fs;
    if segment_fs < required_fs || segment_len < 2 {
        return Err(Error::SegmentTooShort {
            segment_fs,
            required_fs,
        });
    }
    let lags: Vec<usize> = STATIONARITY_LAGS
        .iter()
        .copied()
        .filter(|&k| 2 * k < segment_len)
        .collect();

    let segments: Vec<&[f64]> = signal
        .samples()
        .chunks_exact(segment_len)
        .take(n_segments)
        .collect();
    let variances: Vec<f64> = segments
        .iter()
        .map(|s| {
            let m = s.len() as f64;
            let mean = s.iter().sum::<f64>() / m;
            s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m
        })
        .collect();
    let max = variances.iter().cloned().fold(f64::MIN, f64::max);
    let min = variances.iter().cloned().fold(f64::MAX, f64::min);
    let mean = variances.iter().sum::<f64>() / variances.len() as f64;

    let gammas: Vec<Vec<f64>> = segments
        .iter()
        .filter_map(|s| segment_gamma(s, &lags))
        .collect();
    let mut max_gamma_discrepancy = 0.0f64;
    for (i, a) in gammas.iter().enumerate() {
        for b in &gammas[i + 1..] {
            for (x, y) in a.iter().zip(b) {
                max_gamma_discrepancy = max_gamma_discrepancy.max((x - y).abs());
            }
        }
    }

    Ok(StationarityReport {
        segment_len,
        variance_ratio: if min > 0.0 { max / min } else { f64::INFINITY },
        variance_dispersion: if mean > 0.0 { (max - min) / mean } else { 0.0 },
        variances,
        lags,
        max_gamma_discrepancy,
    })
}
