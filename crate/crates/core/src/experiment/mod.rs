//! Coherence length as a function of emitter count.
//!
//! A sweep runs every `(model, emitter count, replicate)` point through
//! synthesis, the spectral γ estimator and both coherence-length estimators.
//! Replicate seeds are pure functions of the master seed, model, emitter count
//! and replicate index, so adding replicates or counts never changes existing
//! rows.

mod persist;
mod stationarity;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::{
    autocorrelation_spectral, coherence_length_fwhm, coherence_length_pew, FwhmResult, FwhmStatus,
    FwhmTarget, PewLength,
};
use crate::error::{Error, Result};
use crate::rng::mix_seed;
use crate::synthesis::{generate_superposition, EmissionModel, ModelTag, SimulationGrid};

pub use persist::{
    aggregate_csv_text, conventions, metadata, read_rows_csv, write_json, write_results,
    OutputPaths, AGGREGATE_HEADER, ROW_HEADER,
};
pub use stationarity::{stationarity_diagnostic, StationarityReport, STATIONARITY_LAGS};

/// Emitter counts spanning one to 10^5.
pub const DEFAULT_EMITTER_COUNTS: [usize; 6] = [1, 10, 100, 1_000, 10_000, 100_000];
/// Desk-scale counts used by quick sweeps.
pub const QUICK_EMITTER_COUNTS: [usize; 5] = [1, 10, 100, 1_000, 10_000];
pub const DEFAULT_REPLICATES: usize = 8;
/// ±800 fs at 0.04 fs steps.
pub const DEFAULT_MAX_LAG_STEPS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub models: Vec<EmissionModel>,
    pub grid: SimulationGrid,
    pub emitter_counts: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub max_lag_steps: usize,
    pub fwhm_target: FwhmTarget,
    /// Fill the `wall_ms` column. Off by default since timings break
    /// byte-identical reruns.
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.grid.violations();
        if self.models.is_empty() {
            out.push("at least one model is required".into());
        }
        for m in &self.models {
            out.extend(m.violations());
        }
        let mut tags: Vec<_> = self.models.iter().map(EmissionModel::tag).collect();
        tags.sort();
        tags.dedup();
        if tags.len() != self.models.len() {
            out.push("each model may appear only once".into());
        }
        if self.emitter_counts.is_empty() {
            out.push("emitter counts must not be empty".into());
        }
        if self.emitter_counts.contains(&0) {
            out.push("emitter counts must be positive".into());
        }
        if !self.emitter_counts.windows(2).all(|w| w[0] < w[1]) {
            out.push("emitter counts must be strictly increasing".into());
        }
        if self.replicates == 0 {
            out.push("replicates must be at least 1".into());
        }
        if self.max_lag_steps.saturating_mul(2) >= self.grid.n_samples {
            out.push(format!(
                "max lag ({} steps) must be below half the record ({} samples)",
                self.max_lag_steps, self.grid.n_samples
            ));
        }
        out
    }
}

/// Seed of one sweep point.
pub fn replicate_seed(
    master_seed: u64,
    model: ModelTag,
    n_emitters: usize,
    replicate: usize,
) -> u64 {
    let tag = match model {
        ModelTag::M1 => 1,
        ModelTag::M2 => 2,
    };
    mix_seed(&[master_seed, tag, n_emitters as u64, replicate as u64])
}

/// Both estimators for one synthesized record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMeasurement {
    pub pew: PewLength,
    pub fwhm: FwhmResult,
}

pub fn run_point(
    model: &EmissionModel,
    n_emitters: usize,
    grid: &SimulationGrid,
    seed: u64,
    max_lag_steps: usize,
    fwhm_target: FwhmTarget,
) -> Result<PointMeasurement> {
    let signal = generate_superposition(model, n_emitters, grid, seed)?;
    let gamma = autocorrelation_spectral(&signal, max_lag_steps)?;
    Ok(PointMeasurement {
        pew: coherence_length_pew(&gamma),
        fwhm: coherence_length_fwhm(&gamma, fwhm_target),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: ModelTag,
    pub n_emitters: usize,
    pub replicate: usize,
    pub seed: u64,
    pub l_pew_um: Option<f64>,
    pub l_fwhm_um: Option<f64>,
    /// Absent when the point failed.
    pub fwhm_status: Option<FwhmStatus>,
    pub gamma_peak_halfwidth_fs: Option<f64>,
    pub max_lag_fs: f64,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn fwhm_ill_defined(&self) -> bool {
        self.fwhm_status.is_some_and(FwhmStatus::is_ill_defined)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub model: ModelTag,
    pub n_emitters: usize,
    pub replicates: usize,
    pub l_pew_mean_um: Option<f64>,
    pub l_pew_sd_um: Option<f64>,
    pub l_pew_cv: Option<f64>,
    pub fwhm_ill_defined_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl SweepResult {
    pub fn aggregate_for(&self, model: ModelTag, n_emitters: usize) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.model == model && a.n_emitters == n_emitters)
    }
}

fn row_for(
    config: &SweepConfig,
    model: &EmissionModel,
    n_emitters: usize,
    replicate: usize,
) -> SweepRow {
    let seed = replicate_seed(config.master_seed, model.tag(), n_emitters, replicate);
    let started = Instant::now();
    let outcome = run_point(
        model,
        n_emitters,
        &config.grid,
        seed,
        config.max_lag_steps,
        config.fwhm_target,
    );
    let wall_ms = config
        .record_timing
        .then(|| started.elapsed().as_secs_f64() * 1e3);
    let mut row = SweepRow {
        model: model.tag(),
        n_emitters,
        replicate,
        seed,
        l_pew_um: None,
        l_fwhm_um: None,
        fwhm_status: None,
        gamma_peak_halfwidth_fs: None,
        max_lag_fs: config.max_lag_steps as f64 * config.grid.dt,
        wall_ms,
        error: None,
    };
    match outcome {
        Ok(m) => {
            row.l_pew_um = Some(m.pew.length_um);
            row.l_fwhm_um = m.fwhm.length_um;
            row.fwhm_status = Some(m.fwhm.status);
            row.gamma_peak_halfwidth_fs = m.fwhm.half_width_fs();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every point of the sweep. Failed points are recorded in their rows.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut models = config.models.clone();
    models.sort_by_key(EmissionModel::tag);
    let points: Vec<(EmissionModel, usize, usize)> = models
        .iter()
        .flat_map(|m| {
            config
                .emitter_counts
                .iter()
                .flat_map(move |&n| (0..config.replicates).map(move |r| (*m, n, r)))
        })
        .collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|(m, n, r)| row_for(config, m, *n, *r))
        .collect();
    let aggregates = aggregate(&rows);
    Ok(SweepResult { rows, aggregates })
}

/// Per-(model, n) statistics of `l_pew` over successful rows, in order of
/// first appearance.
pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let mut cells: Vec<(ModelTag, usize)> = Vec::new();
    for row in rows {
        if !cells.contains(&(row.model, row.n_emitters)) {
            cells.push((row.model, row.n_emitters));
        }
    }
    cells
        .into_iter()
        .map(|(model, n)| {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.model == model && r.n_emitters == n)
                .collect();
            let values: Vec<f64> = cell.iter().filter_map(|r| r.l_pew_um).collect();
            let (mean, sd, cv) = if values.is_empty() {
                (None, None, None)
            } else {
                let k = values.len() as f64;
                let mean = values.iter().sum::<f64>() / k;
                let sd = if values.len() > 1 {
                    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
                } else {
                    0.0
                };
                (Some(mean), Some(sd), Some(sd / mean))
            };
            AggregateRow {
                model,
                n_emitters: n,
                replicates: cell.len(),
                l_pew_mean_um: mean,
                l_pew_sd_um: sd,
                l_pew_cv: cv,
                fwhm_ill_defined_count: cell.iter().filter(|r| r.fwhm_ill_defined()).count(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests;
