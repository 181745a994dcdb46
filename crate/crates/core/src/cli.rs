//! `cohsim` command-line front end.
//!
//! A run is described by a [`RunConfig`]: the built-in defaults, then an
//! optional JSON file, then command-line flags, each layer overriding the
//! previous one. The effective configuration is validated in full before any
//! computation and echoed into every metadata file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::coherence::{
    autocorrelation_spectral, coherence_length_fwhm, coherence_length_pew, envelope_magnitude,
    power_spectral_density, FwhmStatus, FwhmTarget,
};
use crate::error::{Error, Result};
use crate::experiment::{
    conventions, replicate_seed, run_sweep, write_json, write_results, OutputPaths, SweepConfig,
    DEFAULT_EMITTER_COUNTS, DEFAULT_REPLICATES,
};
use crate::synthesis::{
    generate_superposition, EmissionModel, FieldSignal, M1Params, M2Params, SimulationGrid,
};

/// Largest emitter count kept by `--quick`.
pub const QUICK_MAX_EMITTERS: usize = 10_000;
/// Replicate cap applied by `--quick`.
pub const QUICK_MAX_REPLICATES: usize = 8;

/// Relative tolerance of the `--parseval` check.
pub const PARSEVAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    M1,
    M2,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: SimulationGrid,
    pub m1: M1Params,
    pub m2: M2Params,
    pub model: ModelChoice,
    /// Emitter count for `simulate`, `gamma` and `psd`.
    pub emitters: usize,
    /// Emitter counts for `sweep`.
    pub emitter_counts: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub max_lag_fs: f64,
    pub fwhm_target: FwhmTarget,
    pub out: PathBuf,
    /// Keep every k-th row of emitted data files.
    pub decimate: usize,
    pub quick: bool,
    pub record_timing: bool,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: SimulationGrid::default(),
            m1: M1Params::default(),
            m2: M2Params::default(),
            model: ModelChoice::Both,
            emitters: 1,
            emitter_counts: DEFAULT_EMITTER_COUNTS.to_vec(),
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            max_lag_fs: 800.0,
            fwhm_target: FwhmTarget::Envelope,
            out: PathBuf::from("out"),
            decimate: 1,
            quick: false,
            record_timing: false,
            verbosity: 0,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cohsim",
    version,
    about = "Stochastic field synthesis and temporal coherence analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthesized field record as (t_fs, field).
    Simulate,
    /// Write γ and its envelope as (lag_fs, gamma, envelope) and print both coherence lengths.
    Gamma,
    /// Write the one-sided power spectral density as (freq_cyc_per_fs, power).
    Psd,
    /// Run the coherence-length sweep over emitter counts and replicates.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Gamma => "gamma",
            Command::Psd => "psd",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Desk-scale sweep: emitter counts up to 10^4, at most 8 replicates.
    #[arg(long, global = true)]
    pub quick: bool,
    #[arg(long, global = true, value_name = "K")]
    pub decimate: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long, global = true, value_name = "N")]
    pub emitters: Option<usize>,
    #[arg(long, global = true, value_name = "X")]
    pub max_lag_fs: Option<f64>,
    #[arg(long, global = true, value_name = "R")]
    pub replicates: Option<usize>,
    /// Measure the FWHM on γ itself instead of its envelope.
    #[arg(long, global = true)]
    pub fwhm_raw: bool,
    /// Fill the wall_ms column of the sweep rows.
    #[arg(long, global = true)]
    pub timing: bool,
    /// With `psd`: compare the integrated spectrum with the record variance.
    #[arg(long, global = true)]
    pub parseval: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Defaults, then the config file, then flags, then `--quick`.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut c = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = &flags.out {
            c.out = v.clone();
        }
        if let Some(v) = flags.decimate {
            c.decimate = v;
        }
        if let Some(v) = flags.model {
            c.model = v;
        }
        if let Some(v) = flags.emitters {
            c.emitters = v;
        }
        if let Some(v) = flags.max_lag_fs {
            c.max_lag_fs = v;
        }
        if let Some(v) = flags.replicates {
            c.replicates = v;
        }
        if flags.fwhm_raw {
            c.fwhm_target = FwhmTarget::RawGamma;
        }
        c.quick |= flags.quick;
        c.record_timing |= flags.timing;
        c.verbosity = c.verbosity.max(flags.verbose);
        if c.quick {
            c.apply_quick();
        }
        Ok(c)
    }

    fn apply_quick(&mut self) {
        self.emitter_counts.retain(|&n| n <= QUICK_MAX_EMITTERS);
        self.replicates = self.replicates.min(QUICK_MAX_REPLICATES);
    }

    pub fn models(&self) -> Vec<EmissionModel> {
        match self.model {
            ModelChoice::M1 => vec![EmissionModel::PhaseJump(self.m1)],
            ModelChoice::M2 => vec![EmissionModel::Pulsed(self.m2)],
            ModelChoice::Both => vec![
                EmissionModel::PhaseJump(self.m1),
                EmissionModel::Pulsed(self.m2),
            ],
        }
    }

    /// Lag window in steps, rounded to the grid.
    pub fn max_lag_steps(&self) -> usize {
        (self.max_lag_fs / self.grid.dt).round() as usize
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            models: self.models(),
            grid: self.grid,
            emitter_counts: self.emitter_counts.clone(),
            replicates: self.replicates,
            master_seed: self.seed,
            max_lag_steps: self.max_lag_steps(),
            fwhm_target: self.fwhm_target,
            record_timing: self.record_timing,
        }
    }

    /// Every constraint the given command depends on that this config breaks.
    pub fn violations(&self, command: Command) -> Vec<String> {
        let lag_ok = self.max_lag_fs.is_finite() && self.max_lag_fs > 0.0;
        let mut out = if command == Command::Sweep && lag_ok {
            self.sweep_config().violations()
        } else {
            let mut v = self.grid.violations();
            for m in self.models() {
                v.extend(m.violations());
            }
            v
        };
        if self.decimate == 0 {
            out.push("decimate must be at least 1".into());
        }
        if command != Command::Sweep && self.emitters == 0 {
            out.push("emitters must be at least 1".into());
        }
        if matches!(command, Command::Gamma | Command::Sweep) {
            if !lag_ok {
                out.push(format!(
                    "max_lag_fs must be positive and finite, got {}",
                    self.max_lag_fs
                ));
            } else if command == Command::Gamma
                && self.max_lag_steps().saturating_mul(2) >= self.grid.n_samples
            {
                out.push(format!(
                    "max lag ({} steps) must be below half the record ({} samples)",
                    self.max_lag_steps(),
                    self.grid.n_samples
                ));
            }
        }
        if command == Command::Psd && self.grid.n_samples < 2 {
            out.push("psd needs at least 2 samples".into());
        }
        out
    }

    /// The configuration as it will actually run: the lag window snapped to
    /// the grid.
    fn effective(mut self) -> Self {
        if self.max_lag_fs.is_finite() && self.max_lag_fs > 0.0 {
            self.max_lag_fs = self.max_lag_steps() as f64 * self.grid.dt;
        }
        self
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_table<const K: usize>(
    path: &Path,
    header: [&str; K],
    rows: impl Iterator<Item = [f64; K]>,
    decimate: usize,
) -> Result<usize> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    let mut written = 0;
    for row in rows.step_by(decimate) {
        w.write_record(row.iter().map(f64::to_string))
            .map_err(csv_err)?;
        written += 1;
    }
    w.flush().map_err(io_err(path))?;
    Ok(written)
}

struct Runner {
    config: RunConfig,
    command: Command,
    parseval: bool,
}

impl Runner {
    fn log(&self, msg: impl FnOnce() -> String) {
        if self.config.verbosity > 0 {
            eprintln!("{}", msg());
        }
    }

    fn signal(&self, model: &EmissionModel) -> Result<(FieldSignal, u64)> {
        let seed = replicate_seed(self.config.seed, model.tag(), self.config.emitters, 0);
        self.log(|| {
            format!(
                "synthesizing {} n={} seed={seed}",
                model.tag(),
                self.config.emitters
            )
        });
        Ok((
            generate_superposition(model, self.config.emitters, &self.config.grid, seed)?,
            seed,
        ))
    }

    fn write_meta(&self, data: &Path, model: &EmissionModel, seed: u64, rows: usize) -> Result<()> {
        let meta = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command.name(),
            "data_file": data.file_name().map(|f| f.to_string_lossy()),
            "rows": rows,
            "model": model.tag(),
            "n_emitters": self.config.emitters,
            "point_seed": seed,
            "config": self.config,
            "conventions": conventions(),
        });
        write_json(&data.with_extension("meta.json"), &meta)
    }

    fn data_path(&self, stem: &str, model: &EmissionModel) -> PathBuf {
        self.config.out.join(format!("{stem}_{}.csv", model.tag()))
    }

    fn simulate(&self, model: &EmissionModel) -> Result<()> {
        let (signal, seed) = self.signal(model)?;
        let path = self.data_path("signal", model);
        let grid = *signal.grid();
        let rows = signal
            .samples()
            .iter()
            .enumerate()
            .map(|(k, &v)| [grid.time(k), v]);
        let n = write_table(&path, ["t_fs", "field"], rows, self.config.decimate)?;
        self.write_meta(&path, model, seed, n)?;
        println!("{}: wrote {n} rows to {}", model.tag(), path.display());
        Ok(())
    }

    fn gamma(&self, model: &EmissionModel) -> Result<()> {
        let (signal, seed) = self.signal(model)?;
        let gamma = autocorrelation_spectral(&signal, self.config.max_lag_steps())?;
        let envelope = envelope_magnitude(&gamma);
        let pew = coherence_length_pew(&gamma);
        let fwhm = coherence_length_fwhm(&gamma, self.config.fwhm_target);

        let path = self.data_path("gamma", model);
        let rows = gamma
            .values()
            .iter()
            .zip(&envelope)
            .enumerate()
            .map(|(i, (&g, &e))| [gamma.lag_fs(i), g, e]);
        let n = write_table(
            &path,
            ["lag_fs", "gamma", "envelope"],
            rows,
            self.config.decimate,
        )?;
        self.write_meta(&path, model, seed, n)?;

        let l_fwhm = match (fwhm.status, fwhm.length_um) {
            (FwhmStatus::Ok, Some(v)) => v.to_string(),
            _ => "ILL_DEFINED".to_string(),
        };
        println!(
            "{} n={} seed={seed}: l_pew_um={} l_fwhm_um={l_fwhm} fwhm_status={} max_lag_fs={}",
            model.tag(),
            self.config.emitters,
            pew.length_um,
            fwhm.status,
            pew.max_lag_fs
        );
        Ok(())
    }

    fn psd(&self, model: &EmissionModel) -> Result<()> {
        let (signal, seed) = self.signal(model)?;
        let spectrum = power_spectral_density(&signal)?;
        let path = self.data_path("psd", model);
        let rows = spectrum
            .frequencies
            .iter()
            .zip(&spectrum.power)
            .map(|(&f, &p)| [f, p]);
        let n = write_table(
            &path,
            ["freq_cyc_per_fs", "power"],
            rows,
            self.config.decimate,
        )?;
        self.write_meta(&path, model, seed, n)?;
        let peak = spectrum.frequencies[spectrum.peak_bin()];
        println!(
            "{}: wrote {n} rows to {}; peak at {peak} cyc/fs",
            model.tag(),
            path.display()
        );
        if self.parseval {
            let x = signal.samples();
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let variance = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
            let total = spectrum.total_power();
            let rel = (total - variance).abs() / variance;
            let verdict = if rel <= PARSEVAL_TOLERANCE {
                "match"
            } else {
                "MISMATCH"
            };
            println!(
                "{}: parseval variance={variance} spectrum_integral={total} relative_difference={rel:e} {verdict}",
                model.tag()
            );
        }
        Ok(())
    }

    fn sweep(&self) -> Result<()> {
        let sweep = self.config.sweep_config();
        self.log(|| {
            format!(
                "sweep: {} models x {} counts x {} replicates",
                sweep.models.len(),
                sweep.emitter_counts.len(),
                sweep.replicates
            )
        });
        let result = run_sweep(&sweep)?;
        let paths = OutputPaths::in_dir(&self.config.out);
        write_results(&result, &sweep, &paths)?;
        for a in &result.aggregates {
            let mean = a
                .l_pew_mean_um
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            let sd = a
                .l_pew_sd_um
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "{} n={}: l_pew_um={mean} sd={sd} ill_defined_fwhm={}/{}",
                a.model, a.n_emitters, a.fwhm_ill_defined_count, a.replicates
            );
        }
        let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
        if failed > 0 {
            eprintln!("warning: {failed} sweep points failed; see ERROR rows");
        }
        println!("wrote {}", paths.rows.display());
        println!("wrote {}", paths.aggregate.display());
        println!("wrote {}", paths.metadata.display());
        Ok(())
    }
}

/// Runs one invocation. Nothing is computed or written unless the whole
/// configuration is valid.
pub fn run(cli: &Cli) -> Result<()> {
    let config = RunConfig::resolve(&cli.flags)?;
    let problems = config.violations(cli.command);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let config = config.effective();
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    let runner = Runner {
        config,
        command: cli.command,
        parseval: cli.flags.parseval,
    };
    match cli.command {
        Command::Sweep => runner.sweep(),
        cmd => {
            for model in runner.config.models() {
                match cmd {
                    Command::Simulate => runner.simulate(&model)?,
                    Command::Gamma => runner.gamma(&model)?,
                    Command::Psd => runner.psd(&model)?,
                    Command::Sweep => unreachable!(),
                }
            }
            Ok(())
        }
    }
}
