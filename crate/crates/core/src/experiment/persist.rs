//! Row CSV, aggregate CSV and run metadata.
//!
//! Floats are written in shortest round-trip form, so parsing the row CSV and
//! re-aggregating reproduces the aggregate CSV byte for byte.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{aggregate, AggregateRow, SweepConfig, SweepResult, SweepRow};
use crate::coherence::{FwhmStatus, SpectrumEstimate};
use crate::error::{Error, Result};
use crate::synthesis::{ModelTag, DAMPING_CONVENTION, PULSE_CUTOFF};
use crate::SPEED_OF_LIGHT_UM_PER_FS;

pub const ROW_HEADER: [&str; 10] = [
    "model",
    "n_emitters",
    "replicate",
    "seed",
    "l_pew_um",
    "l_fwhm_um",
    "fwhm_status",
    "gamma_peak_halfwidth_fs",
    "max_lag_fs",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 7] = [
    "model",
    "n_emitters",
    "replicates",
    "l_pew_mean_um",
    "l_pew_sd_um",
    "l_pew_cv",
    "fwhm_ill_defined_count",
];

const ILL_DEFINED: &str = "ILL_DEFINED";
const ERROR_STATUS: &str = "ERROR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub rows: PathBuf,
    pub aggregate: PathBuf,
    pub metadata: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            rows: dir.join("sweep_rows.csv"),
            aggregate: dir.join("sweep_aggregate.csv"),
            metadata: dir.join("sweep_metadata.json"),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row_record(row: &SweepRow) -> Vec<String> {
    let (fwhm, status) = match (row.fwhm_status, row.l_fwhm_um) {
        (None, _) => (String::new(), ERROR_STATUS.to_string()),
        (Some(FwhmStatus::Ok), v) => (opt(v), FwhmStatus::Ok.to_string()),
        (Some(s), _) => (ILL_DEFINED.to_string(), s.to_string()),
    };
    vec![
        row.model.to_string(),
        row.n_emitters.to_string(),
        row.replicate.to_string(),
        row.seed.to_string(),
        opt(row.l_pew_um),
        fwhm,
        status,
        opt(row.gamma_peak_halfwidth_fs),
        row.max_lag_fs.to_string(),
        opt(row.wall_ms),
    ]
}

fn aggregate_record(a: &AggregateRow) -> Vec<String> {
    vec![
        a.model.to_string(),
        a.n_emitters.to_string(),
        a.replicates.to_string(),
        opt(a.l_pew_mean_um),
        opt(a.l_pew_sd_um),
        opt(a.l_pew_cv),
        a.fwhm_ill_defined_count.to_string(),
    ]
}

fn write_csv<I>(path: &Path, header: &[&str], records: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(header).map_err(csv_err)?;
    for record in records {
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Every convention that affects the numbers, keyed by topic.
pub fn conventions() -> serde_json::Value {
    json!({
        "pulse_damping": DAMPING_CONVENTION,
        "pulse_envelope_cutoff": PULSE_CUTOFF,
        "phase_law": "uniform on [0, 2pi), redrawn at every jump (M1) or pulse (M2)",
        "event_process": "independent Bernoulli trial per time step with probability = rate, realized by geometric gap sampling",
        "m1_draws": "amplitude and period drawn once per emitter",
        "m2_draws": "amplitude, period, pulse length drawn per pulse",
        "positive_normal": "normal draws resampled until positive",
        "rng": "ChaCha8, key = 4 SplitMix64 outputs from the point seed, stream = emitter index",
        "replicate_seed": "chained SplitMix64 of (master_seed, model id M1=1 M2=2, n_emitters, replicate)",
        "gamma_estimator": "mean-subtracted; lag-k products averaged over N-k pairs, normalized by the N-sample mean square; zero-padded FFT",
        "l_pew": "c * trapezoid integral of |gamma|^2 over [-max_lag, max_lag]",
        "l_fwhm": "c * full width at half maximum of the analytic-signal envelope of gamma; exactly one crossing per side required; the outer 1% of the lag window is not searched",
        "speed_of_light_um_per_fs": SPEED_OF_LIGHT_UM_PER_FS,
        "psd": SpectrumEstimate::CONVENTION,
    })
}

/// Structured description of a sweep: config echo plus [`conventions`].
pub fn metadata(config: &SweepConfig) -> serde_json::Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "max_lag_fs": config.max_lag_steps as f64 * config.grid.dt,
        "conventions": conventions(),
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(io_err)
}

pub fn write_results(
    result: &SweepResult,
    config: &SweepConfig,
    paths: &OutputPaths,
) -> Result<()> {
    write_csv(&paths.rows, &ROW_HEADER, result.rows.iter().map(row_record))?;
    write_csv(
        &paths.aggregate,
        &AGGREGATE_HEADER,
        result.aggregates.iter().map(aggregate_record),
    )?;
    write_json(&paths.metadata, &metadata(config))
}

/// Re-aggregates rows and renders the aggregate CSV text.
pub fn aggregate_csv_text(rows: &[SweepRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Csv {
        path: PathBuf::from("<memory>"),
        source: e,
    };
    writer.write_record(AGGREGATE_HEADER).map_err(to_err)?;
    for a in aggregate(rows) {
        writer.write_record(aggregate_record(&a)).map_err(to_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses a row CSV written by [`write_results`].
pub fn read_rows_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |what: String| Error::InvalidParameter(format!("{}: {what}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(ROW_HEADER) {
        return Err(bad(format!("unexpected header {:?}", header)));
    }

    let float = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() || s == ILL_DEFINED {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| bad(format!("not a number: {s}")))
        }
    };
    let int =
        |s: &str| -> Result<u64> { s.parse().map_err(|_| bad(format!("not an integer: {s}"))) };

    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(csv_err)?;
        let model = match &r[0] {
            "M1" => ModelTag::M1,
            "M2" => ModelTag::M2,
            other => return Err(bad(format!("unknown model {other}"))),
        };
        let fwhm_status = match &r[6] {
            "OK" => Some(FwhmStatus::Ok),
            "NO_CROSSING" => Some(FwhmStatus::NoCrossing),
            "MULTI_CROSSING" => Some(FwhmStatus::MultiCrossing),
            ERROR_STATUS => None,
            other => return Err(bad(format!("unknown status {other}"))),
        };
        rows.push(SweepRow {
            model,
            n_emitters: int(&r[1])? as usize,
            replicate: int(&r[2])? as usize,
            seed: int(&r[3])?,
            l_pew_um: float(&r[4])?,
            l_fwhm_um: float(&r[5])?,
            fwhm_status,
            gamma_peak_halfwidth_fs: float(&r[7])?,
            max_lag_fs: float(&r[8])?.unwrap_or(0.0),
            wall_ms: float(&r[9])?,
            error: fwhm_status
                .is_none()
                .then(|| "recorded failure".to_string()),
        });
    }
    Ok(rows)
}
