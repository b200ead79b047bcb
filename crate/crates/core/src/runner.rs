//! Drives one trajectory from a [`SchemeConfig`] and records every step.

use std::time::Instant;

use crate::config::{SchemeConfig, SchemeKind};
use crate::diagnostics::{RunSeries, Snapshot, StepRecord};
use crate::error::{Error, Result};
use crate::ficn::FicnStepper;
use crate::init::init_field;
use crate::model::{ChParams, GradFlowModel};
use crate::output::write_series;
use crate::sav::SavStepper;
use crate::scalar::Scalar;
use crate::spectral::{mean, Grid2D, RealField};
use crate::stepper::TimeStepper;
use crate::svm::{SvmConfig, SvmStepper, SvmVariant};

/// A finished or aborted trajectory. `failure` holds the [`Error::Step`]
/// that stopped it; `series` then ends at the last accepted step.
#[derive(Debug)]
pub struct RunOutcome<T: Scalar> {
    pub series: RunSeries<T>,
    pub failure: Option<Error>,
}

impl<T: Scalar> RunOutcome<T> {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn build_model<T: Scalar>(cfg: &SchemeConfig) -> Result<GradFlowModel<T>> {
    let grid = Grid2D::new(cfg.n)?;
    let params = ChParams::new(T::lit(cfg.epsilon), T::lit(cfg.lambda))?;
    Ok(GradFlowModel::cahn_hilliard(&grid, params).with_dealiasing(cfg.dealias))
}

pub fn build_stepper<T: Scalar>(
    cfg: &SchemeConfig,
    model: GradFlowModel<T>,
    phi0: RealField<T>,
) -> Box<dyn TimeStepper<T> + Send> {
    let tau = T::lit(cfg.tau);
    let svm = |variant| SvmConfig {
        variant,
        newton_tol: T::lit(cfg.newton_tol),
        max_newton_iters: cfg.max_newton_iters,
        max_abs_beta: T::lit(cfg.max_abs_beta),
    };
    match cfg.scheme {
        SchemeKind::Svm1 => Box::new(SvmStepper::new(model, phi0, tau, svm(SvmVariant::SvmI))),
        SchemeKind::Svm2 => Box::new(SvmStepper::new(model, phi0, tau, svm(SvmVariant::SvmII))),
        SchemeKind::SavCn => Box::new(SavStepper::new(model, phi0, tau, T::lit(cfg.c0))),
        SchemeKind::Ficn => Box::new(FicnStepper::new(model, phi0, tau, T::lit(cfg.picard_tol), cfg.max_picard_iters)),
    }
}

/// Step indices at which snapshots are taken: the nearest step to each
/// requested time, sorted and deduplicated.
pub fn snapshot_steps(cfg: &SchemeConfig) -> Vec<usize> {
    let last = cfg.steps();
    let mut steps: Vec<usize> = cfg.snapshot_times.iter().map(|t| ((t / cfg.tau).round() as usize).min(last)).collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Integrates in memory without touching `out_dir`.
pub fn simulate<T: Scalar>(cfg: &SchemeConfig) -> Result<RunOutcome<T>> {
    cfg.validate()?;
    let model = build_model::<T>(cfg)?;
    let phi0 = init_field(&cfg.init, model.grid())?;
    let mu0 = model.mu(&phi0);
    let dissipation0 = model.dissipation_rate(&mu0).as_f64();
    let mut stepper = build_stepper(cfg, model, phi0);

    let snap_steps = snapshot_steps(cfg);
    let mut next_snap = snap_steps.iter().peekable();
    let mut snapshots = Vec::new();
    let mut take_snapshot = |step: usize, phi: &RealField<T>, snapshots: &mut Vec<Snapshot<T>>| {
        if next_snap.next_if_eq(&&step).is_some() {
            snapshots.push(Snapshot { step, t: step as f64 * cfg.tau, phi: phi.clone() });
        }
    };

    let steps = cfg.steps();
    let mut records = Vec::with_capacity(steps + 1);
    records.push(StepRecord {
        step: 0,
        t: 0.0,
        energy: stepper.energy().as_f64(),
        energy_target: stepper.scheme_energy().as_f64(),
        mass: mean(stepper.phi()).as_f64(),
        alpha: 0.0,
        beta: 0.0,
        solver_iters: 0,
        dissipation: dissipation0,
        wall_ns: 0,
    });
    take_snapshot(0, stepper.phi(), &mut snapshots);

    let mut failure = None;
    for step in 1..=steps {
        let t = step as f64 * cfg.tau;
        let start = Instant::now();
        let info = match stepper.step() {
            Ok(info) => info,
            Err(source) => {
                failure = Some(Error::Step { step, t, source });
                break;
            }
        };
        let wall_ns = start.elapsed().as_nanos() as u64;
        records.push(StepRecord {
            step,
            t,
            energy: stepper.energy().as_f64(),
            energy_target: info.energy_target.as_f64(),
            mass: mean(stepper.phi()).as_f64(),
            alpha: info.alpha.as_f64(),
            beta: info.beta.as_f64(),
            solver_iters: info.solver_iters,
            dissipation: info.dissipation.as_f64(),
            wall_ns,
        });
        take_snapshot(step, stepper.phi(), &mut snapshots);
    }

    let series = RunSeries { config_echo: cfg.to_kv(), records, snapshots, final_phi: stepper.phi().clone() };
    Ok(RunOutcome { series, failure })
}

/// [`simulate`] followed by writing `run.csv`, snapshots and the config echo
/// into `cfg.out_dir`. Files are written even when a step fails.
pub fn run<T: Scalar>(cfg: &SchemeConfig) -> Result<RunOutcome<T>> {
    let outcome = simulate::<T>(cfg)?;
    write_series(&cfg.out_dir, &outcome.series)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitKind;
    use crate::error::StepFailure;
    use crate::output::{read_run_csv, snapshot_paths, CONFIG_ECHO, RUN_CSV};

    fn small(scheme: SchemeKind) -> SchemeConfig {
        SchemeConfig { scheme, n: 16, tau: 1e-2, t_end: 0.05, epsilon: 0.05, lambda: 1e-2, ..Default::default() }
    }

    #[test]
    fn records_every_step() {
        for scheme in SchemeKind::ALL {
            let out = simulate::<f64>(&small(scheme)).unwrap();
            assert!(out.completed());
            let r = &out.series.records;
            assert_eq!(r.len(), 6);
            assert_eq!(r.iter().map(|r| r.step).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
            assert!((r[5].t - 0.05).abs() < 1e-15);
            for w in r.windows(2) {
                assert!(w[1].energy <= w[0].energy + 1e-11, "{scheme}");
                assert!((w[1].mass - w[0].mass).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_step_run() {
        let cfg = SchemeConfig { t_end: 1e-2, ..small(SchemeKind::Svm2) };
        assert_eq!(simulate::<f64>(&cfg).unwrap().series.records.len(), 2);
    }

    #[test]
    fn snapshots_at_nearest_steps() {
        let cfg = SchemeConfig { snapshot_times: vec![0.0, 0.031, 0.05, 0.049], ..small(SchemeKind::SavCn) };
        assert_eq!(snapshot_steps(&cfg), vec![0, 3, 5]);
        let out = simulate::<f64>(&cfg).unwrap();
        let steps: Vec<_> = out.series.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 3, 5]);
        assert_eq!(out.series.snapshots[2].phi, out.series.final_phi);
    }

    #[test]
    fn failure_keeps_partial_records() {
        let cfg = SchemeConfig {
            scheme: SchemeKind::Ficn,
            n: 32,
            tau: 1.0,
            t_end: 3.0,
            epsilon: 0.1,
            lambda: 1.0,
            init: InitKind::Taylor,
            ..Default::default()
        };
        let out = simulate::<f64>(&cfg).unwrap();
        match out.failure {
            Some(Error::Step { step: 1, source: StepFailure::PicardDiverged { .. }, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(out.series.records.len(), 1);
    }

    #[test]
    fn run_writes_files_and_echo_reproduces() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SchemeConfig { out_dir: dir.path().join("a"), snapshot_times: vec![0.02], ..small(SchemeKind::Svm1) };
        run::<f64>(&cfg).unwrap();
        let records = read_run_csv(&cfg.out_dir.join(RUN_CSV)).unwrap();
        assert_eq!(records.len(), 6);
        let (bin, pgm) = snapshot_paths(&cfg.out_dir, 2);
        assert!(bin.exists() && pgm.exists());

        let echo = std::fs::read_to_string(cfg.out_dir.join(CONFIG_ECHO)).unwrap();
        let again = SchemeConfig::from_kv(&echo).unwrap();
        assert_eq!(again, cfg);
        let rerun = simulate::<f64>(&again).unwrap();
        for (a, b) in rerun.series.records.iter().zip(&records) {
            assert_eq!(StepRecord { wall_ns: 0, ..*a }, StepRecord { wall_ns: 0, ..*b });
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SchemeConfig { n: 12, ..Default::default() };
        assert!(matches!(simulate::<f64>(&cfg), Err(Error::Config(_))));
    }
}
