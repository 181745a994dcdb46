//! Primitive emitter signals and their superposition.
//!
//! Two emission models are supported:
//!
//! * **M1, phase-jump sine.** Each emitter radiates `A·sin(ωt + Φ(t))` with a
//!   fixed amplitude and period drawn once per emitter. `Φ` is piecewise
//!   constant and redrawn uniformly on `[0, 2π)` at Poisson event steps.
//! * **M2, Gaussian pulse train.** Each emitter radiates a sum of pulses
//!   `A_i·exp(-((t - t_i)/C_i)²)·sin(ω_i t + Φ_i)` with centres at Poisson
//!   event steps and amplitude, period, length and phase drawn per pulse.
//!
//! Pulse lengths are given in units of the mean period. The Gaussian damping
//! is `C_i = L_i·T̄/2`, so the envelope has fallen to `1/e` at half the pulse
//! length on either side of the centre. Each pulse is evaluated only where its
//! envelope exceeds `1e-8` of the peak, i.e. within `±C_i·sqrt(ln 1e8)`, and
//! is clipped at the record edges.
//!
//! All randomness for emitter `i` comes from
//! [`derive_emitter_rng`](crate::rng::derive_emitter_rng)`(master_seed, i)`.

mod render;
mod sampling;

use std::f64::consts::TAU;
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_emitter_rng;
use render::{add_gaussian_sine, add_sine, BlockSource, Rotation};

pub use render::BLOCK_LEN;
pub use sampling::{sample_event_steps, sample_phase, sample_positive_normal, MAX_REJECTIONS};

/// Envelope level (relative to the peak) below which pulses are not evaluated.
pub const PULSE_CUTOFF: f64 = 1e-8;

/// Description of the pulse length to damping convention, echoed into run metadata.
pub const DAMPING_CONVENTION: &str = "C_i = L_i * mean_period / 2 (envelope exp(-((t-t_i)/C_i)^2) is 1/e at +/- half the pulse length)";

/// Number of emitters whose plans are held in memory at once.
const EMITTER_BATCH: usize = 4096;

/// Uniform time axis in femtoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationGrid {
    pub dt: f64,
    pub n_samples: usize,
    pub t0: f64,
}

impl SimulationGrid {
    pub fn new(dt: f64, n_samples: usize) -> Result<Self> {
        Self::with_start(dt, n_samples, 0.0)
    }

    pub fn with_start(dt: f64, n_samples: usize, t0: f64) -> Result<Self> {
        let grid = Self { dt, n_samples, t0 };
        let problems = grid.violations();
        if problems.is_empty() {
            Ok(grid)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!(
                "grid.dt must be a positive finite number, got {}",
                self.dt
            ));
        }
        if self.n_samples < 2 {
            out.push(format!(
                "grid.n_samples must be at least 2, got {}",
                self.n_samples
            ));
        }
        if !self.t0.is_finite() {
            out.push(format!("grid.t0 must be finite, got {}", self.t0));
        }
        out
    }

    #[inline]
    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_samples as f64
    }
}

impl Default for SimulationGrid {
    /// 0.04 fs resolution over 10^6 samples (40 ps).
    fn default() -> Self {
        Self {
            dt: 0.04,
            n_samples: 1_000_000,
            t0: 0.0,
        }
    }
}

/// Phase-jump sine parameters. Periods in fs, rates per time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct M1Params {
    pub mean_period: f64,
    pub sigma_period: f64,
    pub mean_amplitude: f64,
    pub sigma_amplitude: f64,
    pub jump_rate: f64,
}

impl Default for M1Params {
    fn default() -> Self {
        Self {
            mean_period: 2.0,
            sigma_period: 0.2,
            mean_amplitude: 1.0,
            sigma_amplitude: 0.1,
            jump_rate: 1e-4,
        }
    }
}

impl M1Params {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        positive("m1.mean_period", self.mean_period, &mut out);
        positive("m1.mean_amplitude", self.mean_amplitude, &mut out);
        non_negative("m1.sigma_period", self.sigma_period, &mut out);
        non_negative("m1.sigma_amplitude", self.sigma_amplitude, &mut out);
        unit_rate("m1.jump_rate", self.jump_rate, &mut out);
        out
    }
}

/// Gaussian pulse train parameters. Pulse lengths are in units of the mean period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct M2Params {
    pub mean_period: f64,
    pub sigma_period: f64,
    pub mean_amplitude: f64,
    pub sigma_amplitude: f64,
    pub mean_pulse_length_periods: f64,
    pub sigma_pulse_length_periods: f64,
    pub emission_rate: f64,
}

impl Default for M2Params {
    fn default() -> Self {
        Self {
            mean_period: 2.0,
            sigma_period: 0.2,
            mean_amplitude: 1.0,
            sigma_amplitude: 0.1,
            mean_pulse_length_periods: 50.0,
            sigma_pulse_length_periods: 5.0,
            emission_rate: 1e-4,
        }
    }
}

impl M2Params {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        positive("m2.mean_period", self.mean_period, &mut out);
        positive("m2.mean_amplitude", self.mean_amplitude, &mut out);
        positive(
            "m2.mean_pulse_length_periods",
            self.mean_pulse_length_periods,
            &mut out,
        );
        non_negative("m2.sigma_period", self.sigma_period, &mut out);
        non_negative("m2.sigma_amplitude", self.sigma_amplitude, &mut out);
        non_negative(
            "m2.sigma_pulse_length_periods",
            self.sigma_pulse_length_periods,
            &mut out,
        );
        unit_rate("m2.emission_rate", self.emission_rate, &mut out);
        out
    }

    /// Gaussian damping `C` (fs) for a pulse of `length_periods` mean periods.
    pub fn damping_for_length(&self, length_periods: f64) -> f64 {
        length_periods * self.mean_period / 2.0
    }
}

fn positive(name: &str, v: f64, out: &mut Vec<String>) {
    if !(v > 0.0 && v.is_finite()) {
        out.push(format!("{name} must be positive and finite, got {v}"));
    }
}

fn non_negative(name: &str, v: f64, out: &mut Vec<String>) {
    if !(v >= 0.0 && v.is_finite()) {
        out.push(format!("{name} must be non-negative and finite, got {v}"));
    }
}

fn unit_rate(name: &str, v: f64, out: &mut Vec<String>) {
    if !(0.0..1.0).contains(&v) {
        out.push(format!("{name} must lie in [0, 1), got {v}"));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    M1,
    M2,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::M1 => "M1",
            ModelTag::M2 => "M2",
        }
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EmissionModel {
    PhaseJump(M1Params),
    Pulsed(M2Params),
}

impl EmissionModel {
    pub fn tag(&self) -> ModelTag {
        match self {
            EmissionModel::PhaseJump(_) => ModelTag::M1,
            EmissionModel::Pulsed(_) => ModelTag::M2,
        }
    }

    pub fn mean_period(&self) -> f64 {
        match self {
            EmissionModel::PhaseJump(p) => p.mean_period,
            EmissionModel::Pulsed(p) => p.mean_period,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        match self {
            EmissionModel::PhaseJump(p) => p.violations(),
            EmissionModel::Pulsed(p) => p.violations(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub model: ModelTag,
    /// Absent for primitives generated from a caller-supplied stream.
    pub master_seed: Option<u64>,
    pub n_emitters: usize,
}

/// One real field component sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSignal {
    grid: SimulationGrid,
    samples: Vec<f64>,
    meta: SignalMeta,
}

impl FieldSignal {
    pub fn new(grid: SimulationGrid, samples: Vec<f64>, meta: SignalMeta) -> Result<Self> {
        if samples.len() != grid.n_samples {
            return Err(Error::InvalidParameter(format!(
                "signal has {} samples but the grid has {}",
                samples.len(),
                grid.n_samples
            )));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample {k} is not finite")));
        }
        Ok(Self {
            grid,
            samples,
            meta,
        })
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn meta(&self) -> &SignalMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// One M1 emitter: fixed amplitude and frequency, phase redrawn at each jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseJumpEmitter {
    amplitude: f64,
    omega: f64,
    /// Steps at which a new phase takes effect, strictly increasing.
    jump_steps: Vec<usize>,
    /// `phases[s]` holds on segment `s`; one more entry than `jump_steps`.
    phases: Vec<f64>,
    rotation: Rotation,
}

impl PhaseJumpEmitter {
    /// Draw order: amplitude, period, initial phase, jump steps, one phase per jump.
    pub fn draw<R: Rng + ?Sized>(
        params: &M1Params,
        grid: &SimulationGrid,
        rng: &mut R,
    ) -> Result<Self> {
        let amplitude = sample_positive_normal(params.mean_amplitude, params.sigma_amplitude, rng)?;
        let period = sample_positive_normal(params.mean_period, params.sigma_period, rng)?;
        let initial = sample_phase(rng);
        let jump_steps = sample_event_steps(params.jump_rate, grid.n_samples, rng)?;
        let mut phases = Vec::with_capacity(jump_steps.len() + 1);
        phases.push(initial);
        phases.extend((0..jump_steps.len()).map(|_| sample_phase(rng)));
        Self::from_parts(amplitude, period, jump_steps, phases, grid)
    }

    /// An emitter with explicit jump schedule. `phases` must have one more
    /// entry than `jump_steps`.
    pub fn from_parts(
        amplitude: f64,
        period: f64,
        jump_steps: Vec<usize>,
        phases: Vec<f64>,
        grid: &SimulationGrid,
    ) -> Result<Self> {
        if phases.len() != jump_steps.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} jumps need {} phases, got {}",
                jump_steps.len(),
                jump_steps.len() + 1,
                phases.len()
            )));
        }
        if !jump_steps.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "jump steps must be strictly increasing".into(),
            ));
        }
        if period.is_nan() || period <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        let omega = TAU / period;
        Ok(Self {
            amplitude,
            omega,
            jump_steps,
            phases,
            rotation: Rotation::new(omega * grid.dt),
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn jump_steps(&self) -> &[usize] {
        &self.jump_steps
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

impl BlockSource for PhaseJumpEmitter {
    fn add_block(&self, grid: &SimulationGrid, start: usize, out: &mut [f64]) {
        let end = start + out.len();
        let mut segment = self.jump_steps.partition_point(|&j| j <= start);
        let mut pos = start;
        while pos < end {
            let segment_end = self.jump_steps.get(segment).map_or(end, |&j| j.min(end));
            let phase0 = self.omega * grid.time(pos) + self.phases[segment];
            add_sine(
                &mut out[pos - start..segment_end - start],
                self.amplitude,
                phase0,
                &self.rotation,
            );
            pos = segment_end;
            segment += 1;
        }
    }
}

/// One Gaussian-enveloped pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    center_step: usize,
    amplitude: f64,
    omega: f64,
    damping: f64,
    phase: f64,
    half_window: usize,
    rotation: Rotation,
}

impl Pulse {
    /// `damping` is `C` in fs; `period` in fs.
    pub fn new(
        center_step: usize,
        amplitude: f64,
        period: f64,
        damping: f64,
        phase: f64,
        grid: &SimulationGrid,
    ) -> Result<Self> {
        if period.is_nan() || period <= 0.0 || damping.is_nan() || damping <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pulse period and damping must be positive, got {period} and {damping}"
            )));
        }
        let omega = TAU / period;
        let reach = damping * (1.0 / PULSE_CUTOFF).ln().sqrt();
        Ok(Self {
            center_step,
            amplitude,
            omega,
            damping,
            phase,
            half_window: (reach / grid.dt).floor() as usize,
            rotation: Rotation::new(omega * grid.dt),
        })
    }

    pub fn center_step(&self) -> usize {
        self.center_step
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Steps on either side of the centre that are evaluated.
    pub fn half_window(&self) -> usize {
        self.half_window
    }

    fn add_range(&self, grid: &SimulationGrid, start: usize, out: &mut [f64]) {
        let end = start + out.len();
        let lo = self.center_step.saturating_sub(self.half_window).max(start);
        let hi = (self.center_step + self.half_window + 1).min(end);
        if lo >= hi {
            return;
        }
        let offset0 = (lo as f64 - self.center_step as f64) * grid.dt;
        let phase0 = self.omega * grid.time(lo) + self.phase;
        add_gaussian_sine(
            &mut out[lo - start..hi - start],
            self.amplitude,
            phase0,
            &self.rotation,
            offset0,
            grid.dt,
            1.0 / (self.damping * self.damping),
        );
    }
}

/// One M2 emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    /// Sorted by centre step.
    pulses: Vec<Pulse>,
    max_half_window: usize,
}

impl PulseTrain {
    /// Draw order: pulse centre steps, then per pulse amplitude, period,
    /// length and phase.
    pub fn draw<R: Rng + ?Sized>(
        params: &M2Params,
        grid: &SimulationGrid,
        rng: &mut R,
    ) -> Result<Self> {
        let centers = sample_event_steps(params.emission_rate, grid.n_samples, rng)?;
        let mut pulses = Vec::with_capacity(centers.len());
        for center in centers {
            let amplitude =
                sample_positive_normal(params.mean_amplitude, params.sigma_amplitude, rng)?;
            let period = sample_positive_normal(params.mean_period, params.sigma_period, rng)?;
            let length = sample_positive_normal(
                params.mean_pulse_length_periods,
                params.sigma_pulse_length_periods,
                rng,
            )?;
            let phase = sample_phase(rng);
            pulses.push(Pulse::new(
                center,
                amplitude,
                period,
                params.damping_for_length(length),
                phase,
                grid,
            )?);
        }
        Ok(Self::from_pulses(pulses))
    }

    pub fn from_pulses(mut pulses: Vec<Pulse>) -> Self {
        pulses.sort_by_key(|p| p.center_step);
        let max_half_window = pulses.iter().map(|p| p.half_window).max().unwrap_or(0);
        Self {
            pulses,
            max_half_window,
        }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }
}

impl BlockSource for PulseTrain {
    fn add_block(&self, grid: &SimulationGrid, start: usize, out: &mut [f64]) {
        let end = start + out.len();
        let first_center = start.saturating_sub(self.max_half_window);
        let last_center = end + self.max_half_window;
        let first = self
            .pulses
            .partition_point(|p| p.center_step < first_center);
        for pulse in self.pulses[first..]
            .iter()
            .take_while(|p| p.center_step < last_center)
        {
            pulse.add_range(grid, start, out);
        }
    }
}

/// Realized randomness of one emitter under either model.
#[derive(Debug, Clone, PartialEq)]
pub enum EmitterPlan {
    PhaseJump(PhaseJumpEmitter),
    Pulsed(PulseTrain),
}

impl EmitterPlan {
    pub fn draw<R: Rng + ?Sized>(
        model: &EmissionModel,
        grid: &SimulationGrid,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match model {
            EmissionModel::PhaseJump(p) => {
                EmitterPlan::PhaseJump(PhaseJumpEmitter::draw(p, grid, rng)?)
            }
            EmissionModel::Pulsed(p) => EmitterPlan::Pulsed(PulseTrain::draw(p, grid, rng)?),
        })
    }

    /// Samples of this emitter alone.
    pub fn render(&self, grid: &SimulationGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_samples];
        render::render(grid, std::slice::from_ref(self), &mut out);
        out
    }
}

impl BlockSource for EmitterPlan {
    fn add_block(&self, grid: &SimulationGrid, start: usize, out: &mut [f64]) {
        match self {
            EmitterPlan::PhaseJump(e) => e.add_block(grid, start, out),
            EmitterPlan::Pulsed(t) => t.add_block(grid, start, out),
        }
    }
}

fn primitive(model: ModelTag, grid: &SimulationGrid, plan: &EmitterPlan) -> Result<FieldSignal> {
    FieldSignal::new(
        *grid,
        plan.render(grid),
        SignalMeta {
            model,
            master_seed: None,
            n_emitters: 1,
        },
    )
}

/// One M1 primitive signal drawn from `rng`.
pub fn generate_m1<R: Rng + ?Sized>(
    params: &M1Params,
    grid: &SimulationGrid,
    rng: &mut R,
) -> Result<FieldSignal> {
    check(params.violations())?;
    let plan = EmitterPlan::PhaseJump(PhaseJumpEmitter::draw(params, grid, rng)?);
    primitive(ModelTag::M1, grid, &plan)
}

/// One M2 primitive signal drawn from `rng`.
pub fn generate_m2<R: Rng + ?Sized>(
    params: &M2Params,
    grid: &SimulationGrid,
    rng: &mut R,
) -> Result<FieldSignal> {
    check(params.violations())?;
    let plan = EmitterPlan::Pulsed(PulseTrain::draw(params, grid, rng)?);
    primitive(ModelTag::M2, grid, &plan)
}

fn check(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

/// Sum of the primitive signals of emitters `0..n_emitters`.
///
/// Emitter `i` draws from `derive_emitter_rng(master_seed, i)`. Every sample
/// is accumulated in ascending emitter order, so the result is bit-identical
/// across runs and thread counts.
pub fn generate_superposition(
    model: &EmissionModel,
    n_emitters: usize,
    grid: &SimulationGrid,
    master_seed: u64,
) -> Result<FieldSignal> {
    if n_emitters == 0 {
        return Err(Error::InvalidParameter(
            "n_emitters must be at least 1".into(),
        ));
    }
    let samples = superpose_range(model, 0..n_emitters, grid, master_seed)?;
    FieldSignal::new(
        *grid,
        samples,
        SignalMeta {
            model: model.tag(),
            master_seed: Some(master_seed),
            n_emitters,
        },
    )
}

/// Sum over an arbitrary range of emitter indices.
pub fn superpose_range(
    model: &EmissionModel,
    emitters: Range<usize>,
    grid: &SimulationGrid,
    master_seed: u64,
) -> Result<Vec<f64>> {
    check(grid.violations())?;
    check(model.violations())?;
    let mut out = vec![0.0; grid.n_samples];
    let mut batch_start = emitters.start;
    while batch_start < emitters.end {
        let batch_end = (batch_start + EMITTER_BATCH).min(emitters.end);
        let plans = (batch_start..batch_end)
            .into_par_iter()
            .map(|i| EmitterPlan::draw(model, grid, &mut derive_emitter_rng(master_seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        render::render(grid, &plans, &mut out);
        batch_start = batch_end;
    }
    Ok(out)
}
