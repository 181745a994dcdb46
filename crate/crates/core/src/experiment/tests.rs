use super::*;
use crate::coherence::autocorrelation_direct;
use crate::synthesis::{M1Params, M2Params};
use crate::SPEED_OF_LIGHT_UM_PER_FS as C_LIGHT;

fn row(
    model: ModelTag,
    n: usize,
    replicate: usize,
    l_pew: Option<f64>,
    status: Option<FwhmStatus>,
) -> SweepRow {
    SweepRow {
        model,
        n_emitters: n,
        replicate,
        seed: 0,
        l_pew_um: l_pew,
        l_fwhm_um: None,
        fwhm_status: status,
        gamma_peak_halfwidth_fs: None,
        max_lag_fs: 800.0,
        wall_ms: None,
        error: status.is_none().then(|| "boom".to_string()),
    }
}

fn small_config() -> SweepConfig {
    SweepConfig {
        models: vec![
            EmissionModel::Pulsed(M2Params {
                emission_rate: 1e-3,
                ..M2Params::default()
            }),
            EmissionModel::PhaseJump(M1Params {
                jump_rate: 1e-3,
                ..M1Params::default()
            }),
        ],
        grid: SimulationGrid::new(0.04, 20_000).unwrap(),
        emitter_counts: vec![1, 3],
        replicates: 2,
        master_seed: 5,
        max_lag_steps: 2_000,
        fwhm_target: FwhmTarget::Envelope,
        record_timing: false,
    }
}

#[test]
fn aggregate_of_single_row_has_zero_spread() {
    let a = aggregate(&[row(ModelTag::M1, 10, 0, Some(12.5), Some(FwhmStatus::Ok))]);
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].l_pew_mean_um, Some(12.5));
    assert_eq!(a[0].l_pew_sd_um, Some(0.0));
    assert_eq!(a[0].l_pew_cv, Some(0.0));
}

#[test]
fn aggregate_uses_sample_standard_deviation() {
    let a = aggregate(&[
        row(ModelTag::M2, 1, 0, Some(10.0), Some(FwhmStatus::Ok)),
        row(
            ModelTag::M2,
            1,
            1,
            Some(20.0),
            Some(FwhmStatus::MultiCrossing),
        ),
        row(ModelTag::M2, 1, 2, None, None),
    ]);
    assert_eq!(a[0].replicates, 3);
    assert_eq!(a[0].l_pew_mean_um, Some(15.0));
    assert!((a[0].l_pew_sd_um.unwrap() - 7.0710678118654755).abs() < 1e-12);
    assert_eq!(a[0].fwhm_ill_defined_count, 1);
}

#[test]
fn aggregate_keeps_cells_apart() {
    let a = aggregate(&[
        row(ModelTag::M1, 1, 0, Some(1.0), Some(FwhmStatus::NoCrossing)),
        row(ModelTag::M1, 10, 0, Some(2.0), Some(FwhmStatus::Ok)),
        row(ModelTag::M2, 1, 0, None, None),
    ]);
    assert_eq!(a.len(), 3);
    assert_eq!(a[0].fwhm_ill_defined_count, 1);
    assert_eq!(a[2].l_pew_mean_um, None);
}

#[test]
fn replicate_seeds_are_distinct_and_stable() {
    let a = replicate_seed(1, ModelTag::M1, 10, 0);
    assert_eq!(a, replicate_seed(1, ModelTag::M1, 10, 0));
    assert_ne!(a, replicate_seed(1, ModelTag::M2, 10, 0));
    assert_ne!(a, replicate_seed(1, ModelTag::M1, 100, 0));
    assert_ne!(a, replicate_seed(1, ModelTag::M1, 10, 1));
    assert_ne!(a, replicate_seed(2, ModelTag::M1, 10, 0));
}

#[test]
fn run_point_is_deterministic() {
    let grid = SimulationGrid::new(0.04, 50_000).unwrap();
    let model = EmissionModel::PhaseJump(M1Params::default());
    let a = run_point(&model, 4, &grid, 9, 5_000, FwhmTarget::Envelope).unwrap();
    let b = run_point(&model, 4, &grid, 9, 5_000, FwhmTarget::Envelope).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unjumped_m1_saturates_the_window() {
    let grid = SimulationGrid::new(0.04, 400_000).unwrap();
    let model = EmissionModel::PhaseJump(M1Params {
        jump_rate: 0.0,
        ..M1Params::default()
    });
    let m = run_point(&model, 1, &grid, 1, 20_000, FwhmTarget::Envelope).unwrap();
    let saturated = C_LIGHT * 800.0;
    assert!(
        (m.pew.length_um - saturated).abs() / saturated < 0.01,
        "{}",
        m.pew.length_um
    );
    assert_eq!(m.fwhm.status, FwhmStatus::NoCrossing);
}

#[test]
fn single_m2_emitter_pew_matches_direct_integration() {
    let grid = SimulationGrid::new(0.04, 200_000).unwrap();
    let model = EmissionModel::Pulsed(M2Params {
        emission_rate: 5e-4,
        ..M2Params::default()
    });
    let max_lag = 5_000;
    let m = run_point(&model, 1, &grid, 3, max_lag, FwhmTarget::Envelope).unwrap();

    let signal = generate_superposition(&model, 1, &grid, 3).unwrap();
    let gamma = autocorrelation_direct(&signal, max_lag).unwrap();
    let g = gamma.values();
    let mut integral = 0.0;
    for w in g.windows(2) {
        integral += 0.5 * (w[0] * w[0] + w[1] * w[1]) * grid.dt;
    }
    let oracle = C_LIGHT * integral;
    assert!((m.pew.length_um - oracle).abs() / oracle < 1e-6);
    // Per-pulse period spread dephases γ within a few fs: sub-µm to µm scale.
    assert!((0.3..3.0).contains(&m.pew.length_um), "{}", m.pew.length_um);
}

#[test]
fn sweep_rows_are_canonical_and_complete() {
    let config = small_config();
    let result = run_sweep(&config).unwrap();
    assert_eq!(result.rows.len(), 2 * 2 * 2);
    let keys: Vec<_> = result
        .rows
        .iter()
        .map(|r| (r.model, r.n_emitters, r.replicate))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys[0], (ModelTag::M1, 1, 0));
    assert!(result
        .rows
        .iter()
        .all(|r| r.error.is_none() && r.wall_ms.is_none()));
    assert_eq!(result.aggregates.len(), 4);
}

#[test]
fn adding_replicates_keeps_existing_rows() {
    let config = small_config();
    let more = SweepConfig {
        replicates: 3,
        ..small_config()
    };
    let a = run_sweep(&config).unwrap();
    let b = run_sweep(&more).unwrap();
    for row in &a.rows {
        assert!(b.rows.contains(row));
    }
}

#[test]
fn failed_points_are_recorded_not_fatal() {
    let config = SweepConfig {
        models: vec![EmissionModel::Pulsed(M2Params {
            emission_rate: 0.0,
            ..M2Params::default()
        })],
        ..small_config()
    };
    let result = run_sweep(&config).unwrap();
    assert_eq!(result.rows.len(), 4);
    for r in &result.rows {
        assert!(r.error.as_deref().unwrap().contains("zero power"));
        assert!(r.l_pew_um.is_none() && r.fwhm_status.is_none());
    }
}

#[test]
fn invalid_sweep_lists_every_problem() {
    let config = SweepConfig {
        emitter_counts: vec![10, 10, 0],
        replicates: 0,
        max_lag_steps: 10_000,
        ..small_config()
    };
    match run_sweep(&config) {
        Err(Error::Config(problems)) => assert_eq!(problems.len(), 4, "{problems:?}"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn timing_is_opt_in() {
    let config = SweepConfig {
        record_timing: true,
        replicates: 1,
        emitter_counts: vec![1],
        ..small_config()
    };
    let result = run_sweep(&config).unwrap();
    assert!(result.rows.iter().all(|r| r.wall_ms.is_some()));
}
