//! Experiment drivers: temporal refinement, cost comparison and the
//! coarsening step-size ladder. Each returns an in-memory report and, given
//! an output directory, writes it as CSV.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{InitKind, SchemeConfig, SchemeKind};
use crate::diagnostics::{error_norms, order_fit, refinement_errors, ErrorNorms, RefinementMode, StepRecord};
use crate::error::{Error, Result};
use crate::runner::{run, simulate, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Refine,
    Cpu,
    Coarsen,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Refine => "refine",
            ExperimentKind::Cpu => "cpu",
            ExperimentKind::Coarsen => "coarsen",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "refine" => Ok(ExperimentKind::Refine),
            "cpu" => Ok(ExperimentKind::Cpu),
            "coarsen" => Ok(ExperimentKind::Coarsen),
            _ => Err(Error::Config(format!("unknown experiment '{s}' (expected refine, cpu or coarsen)"))),
        }
    }
}

/// Problem sizes: `Paper` runs the full-size setups, `Desk` shrinks
/// grids, horizons and reference step sizes to run in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    Paper,
    #[default]
    Desk,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::Config(format!("unknown profile '{s}' (expected paper or desk)"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub profile: Profile,
    /// Reports (and, for coarsening, per-run directories) go here when set.
    pub out_dir: Option<PathBuf>,
    /// Timing repetitions for the cost comparison; the fastest is kept.
    pub cpu_repeats: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { profile: Profile::Desk, out_dir: None, cpu_repeats: 3 }
    }
}

/// Conservation and dissipation summary of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub scheme: SchemeKind,
    pub tau: f64,
    pub steps: usize,
    /// `max |energy - energy_target| / max(1, |energy_target|)` over steps.
    pub max_energy_residual: f64,
    /// Largest step-to-step increase of the scheme's own energy.
    pub max_energy_increase: f64,
    /// `max |mass - mass₀|`.
    pub mass_drift: f64,
    pub wall_ns: u64,
}

impl RunSummary {
    /// `scheme_energy` is the column the scheme dissipates: the free energy
    /// for SVM and FICN, the modified energy for SAV-CN.
    pub fn from_records(scheme: SchemeKind, tau: f64, records: &[StepRecord]) -> Self {
        let scheme_energy = |r: &StepRecord| if scheme == SchemeKind::SavCn { r.energy_target } else { r.energy };
        let mass0 = records.first().map_or(0.0, |r| r.mass);
        let body = records.get(1..).unwrap_or(&[]);
        Self {
            scheme,
            tau,
            steps: body.len(),
            max_energy_residual: if scheme.is_svm() {
                body.iter()
                    .map(|r| (r.energy - r.energy_target).abs() / r.energy_target.abs().max(1.0))
                    .fold(0.0, f64::max)
            } else {
                0.0
            },
            max_energy_increase: records
                .windows(2)
                .map(|w| scheme_energy(&w[1]) - scheme_energy(&w[0]))
                .fold(f64::NEG_INFINITY, f64::max),
            mass_drift: records.iter().map(|r| (r.mass - mass0).abs()).fold(0.0, f64::max),
            wall_ns: records.iter().map(|r| r.wall_ns).sum(),
        }
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

fn complete(outcome: RunOutcome<f64>) -> Result<RunOutcome<f64>> {
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

// ---------------------------------------------------------------- refine

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRefinement {
    pub scheme: SchemeKind,
    pub taus: Vec<f64>,
    /// `‖u_τ - u_{τ/2}‖` for each adjacent pair, coarse to fine.
    pub errors: Vec<ErrorNorms>,
    pub l2_slope: f64,
    pub linf_slope: f64,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineReport {
    pub schemes: Vec<SchemeRefinement>,
}

pub fn refine_configs(profile: Profile, scheme: SchemeKind) -> Vec<SchemeConfig> {
    let (n, levels) = match profile {
        Profile::Paper => (256, 7),
        Profile::Desk => (128, 6),
    };
    (0..levels)
        .map(|k| SchemeConfig {
            scheme,
            n,
            tau: 1.25e-2 / f64::powi(2.0, k),
            t_end: 1.0,
            epsilon: 1e-2,
            lambda: 1e-3,
            init: InitKind::Taylor,
            ..SchemeConfig::default()
        })
        .collect()
}

/// Halves `τ` from `1.25e-2` for SVM-I and SVM-II and fits the order from
/// adjacent-pair differences at `t = 1`.
pub fn refine(opts: &ExperimentOptions) -> Result<RefineReport> {
    let mut schemes = Vec::new();
    for scheme in [SchemeKind::Svm1, SchemeKind::Svm2] {
        let configs = refine_configs(opts.profile, scheme);
        let outcomes: Vec<RunOutcome<f64>> =
            configs.par_iter().map(|c| simulate::<f64>(c).and_then(complete)).collect::<Result<_>>()?;
        let finals: Vec<_> = outcomes.iter().map(|o| o.series.final_phi.clone()).collect();
        let errors = refinement_errors(&finals, RefinementMode::AdjacentPairs);
        let l2: Vec<f64> = errors.iter().map(|e| e.l2).collect();
        let linf: Vec<f64> = errors.iter().map(|e| e.linf).collect();
        schemes.push(SchemeRefinement {
            scheme,
            taus: configs.iter().map(|c| c.tau).collect(),
            l2_slope: order_fit(&l2, 2.0)?,
            linf_slope: order_fit(&linf, 2.0)?,
            runs: configs
                .iter()
                .zip(&outcomes)
                .map(|(c, o)| RunSummary::from_records(scheme, c.tau, &o.series.records))
                .collect(),
            errors,
        });
    }
    let report = RefineReport { schemes };
    if let Some(dir) = &opts.out_dir {
        write_refine(dir, &report)?;
    }
    Ok(report)
}

fn write_refine(dir: &Path, report: &RefineReport) -> Result<()> {
    let (mut errors, mut slopes, mut runs) = (String::new(), String::new(), String::new());
    errors.push_str("scheme,tau,tau_fine,l2,linf\n");
    slopes.push_str("scheme,l2_slope,linf_slope\n");
    runs.push_str(RUN_SUMMARY_HEADER);
    for s in &report.schemes {
        for (w, e) in s.taus.windows(2).zip(&s.errors) {
            let _ = writeln!(errors, "{},{:e},{:e},{:.16e},{:.16e}", s.scheme, w[0], w[1], e.l2, e.linf);
        }
        let _ = writeln!(slopes, "{},{:.6},{:.6}", s.scheme, s.l2_slope, s.linf_slope);
        for r in &s.runs {
            runs.push_str(&summary_row(r));
        }
    }
    write_file(dir, "refine_errors.csv", &errors)?;
    write_file(dir, "refine_slopes.csv", &slopes)?;
    write_file(dir, "refine_runs.csv", &runs)
}

const RUN_SUMMARY_HEADER: &str = "scheme,tau,steps,max_energy_residual,max_energy_increase,mass_drift,wall_s\n";

fn summary_row(r: &RunSummary) -> String {
    format!(
        "{},{:e},{},{:e},{:e},{:e},{:.6}\n",
        r.scheme,
        r.tau,
        r.steps,
        r.max_energy_residual,
        r.max_energy_increase,
        r.mass_drift,
        r.wall_ns as f64 * 1e-9
    )
}

// ---------------------------------------------------------------- cpu

#[derive(Debug, Clone, PartialEq)]
pub struct CpuTiming {
    pub n: usize,
    pub scheme: SchemeKind,
    /// Fastest total stepping time over the repetitions.
    pub wall_ns: u64,
    pub mean_solver_iters: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpuReport {
    pub timings: Vec<CpuTiming>,
}

impl CpuReport {
    pub fn wall(&self, n: usize, scheme: SchemeKind) -> Option<u64> {
        self.timings.iter().find(|t| t.n == n && t.scheme == scheme).map(|t| t.wall_ns)
    }
}

pub fn cpu_config(n: usize, scheme: SchemeKind) -> SchemeConfig {
    SchemeConfig {
        scheme,
        n,
        tau: 1e-2,
        t_end: 1.0,
        epsilon: 1e-2,
        lambda: 1e-3,
        init: InitKind::Taylor,
        ..SchemeConfig::default()
    }
}

/// Times all four schemes at `τ = 1e-2` to `t = 1`. Runs are sequential and
/// the schemes interleaved within each repetition, so they see the same
/// machine state.
pub fn cpu(opts: &ExperimentOptions) -> Result<CpuReport> {
    cpu_at(opts, &[128, 256])
}

pub fn cpu_at(opts: &ExperimentOptions, sizes: &[usize]) -> Result<CpuReport> {
    let mut timings = Vec::new();
    for &n in sizes {
        let mut best: Vec<Option<CpuTiming>> = vec![None; SchemeKind::ALL.len()];
        for _ in 0..opts.cpu_repeats.max(1) {
            for (slot, scheme) in best.iter_mut().zip(SchemeKind::ALL) {
                let out = complete(simulate::<f64>(&cpu_config(n, scheme))?)?;
                let records = &out.series.records[1..];
                let t = CpuTiming {
                    n,
                    scheme,
                    wall_ns: out.series.total_wall_ns(),
                    mean_solver_iters: records.iter().map(|r| r.solver_iters as f64).sum::<f64>()
                        / records.len() as f64,
                };
                if slot.as_ref().is_none_or(|b| t.wall_ns < b.wall_ns) {
                    *slot = Some(t);
                }
            }
        }
        timings.extend(best.into_iter().flatten());
    }
    let report = CpuReport { timings };
    if let Some(dir) = &opts.out_dir {
        let mut s = String::from("n,scheme,wall_s,mean_solver_iters\n");
        for t in &report.timings {
            let _ = writeln!(s, "{},{},{:.6},{:.3}", t.n, t.scheme, t.wall_ns as f64 * 1e-9, t.mean_solver_iters);
        }
        write_file(dir, "cpu.csv", &s)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------- coarsen

/// Relative `L²` deviation from the reference below which a run counts as
/// reproducing the reference dynamics.
pub const COARSEN_THRESHOLD: f64 = 5e-2;

/// `|α|` is traced only after this initial transient.
pub const ALPHA_TRANSIENT: f64 = 2e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenSetup {
    pub n: usize,
    pub t_end: f64,
    pub reference_tau: f64,
    /// Step-size ladder per scheme, largest first.
    pub ladders: Vec<(SchemeKind, Vec<f64>)>,
    /// Largest step expected to stay within [`COARSEN_THRESHOLD`] at full scale.
    pub expected_max_tau: Vec<(SchemeKind, f64)>,
}

impl CoarsenSetup {
    pub fn for_profile(profile: Profile) -> Self {
        let expected_max_tau = vec![(SchemeKind::Svm2, 2e-4), (SchemeKind::Svm1, 5e-5), (SchemeKind::SavCn, 1.5625e-6)];
        match profile {
            Profile::Desk => Self {
                n: 128,
                t_end: 0.02,
                reference_tau: 2.5e-6,
                ladders: vec![
                    (SchemeKind::Svm2, vec![2e-4, 1e-4, 5e-5]),
                    (SchemeKind::Svm1, vec![1e-4, 5e-5, 4e-5]),
                    (SchemeKind::SavCn, vec![4e-5, 1e-5, 3.125e-6]),
                ],
                expected_max_tau,
            },
            Profile::Paper => Self {
                n: 128,
                t_end: 0.1,
                reference_tau: 1e-6,
                ladders: vec![
                    (SchemeKind::Svm2, vec![4e-4, 2e-4, 1e-4]),
                    (SchemeKind::Svm1, vec![1e-4, 5e-5, 2.5e-5]),
                    (SchemeKind::SavCn, vec![3.125e-6, 1.5625e-6]),
                ],
                expected_max_tau,
            },
        }
    }

    pub fn config(&self, scheme: SchemeKind, tau: f64) -> SchemeConfig {
        SchemeConfig {
            scheme,
            n: self.n,
            tau,
            t_end: self.t_end,
            epsilon: 1e-2,
            lambda: 1.0,
            init: InitKind::Coarsening,
            snapshot_times: vec![0.0, self.t_end],
            ..SchemeConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenRun {
    pub scheme: SchemeKind,
    pub tau: f64,
    /// `None` when the run stopped early; the message says why.
    pub failure: Option<String>,
    /// `‖φ - φ_ref‖ / ‖φ_ref‖` at `t_end`; infinite for failed runs.
    pub rel_l2: f64,
    /// `max |α|` after [`ALPHA_TRANSIENT`]; zero for non-SVM schemes.
    pub max_abs_alpha: f64,
    pub summary: RunSummary,
}

impl CoarsenRun {
    pub fn within_threshold(&self) -> bool {
        self.failure.is_none() && self.rel_l2 < COARSEN_THRESHOLD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenReport {
    pub setup: CoarsenSetup,
    pub reference: RunSummary,
    pub runs: Vec<CoarsenRun>,
}

impl CoarsenReport {
    pub fn run(&self, scheme: SchemeKind, tau: f64) -> Option<&CoarsenRun> {
        self.runs.iter().find(|r| r.scheme == scheme && r.tau == tau)
    }
}

/// Runs the reference (FICN at the smallest step) and every ladder entry,
/// in parallel, each into its own directory when `out_dir` is set.
pub fn coarsen(opts: &ExperimentOptions) -> Result<CoarsenReport> {
    coarsen_with(opts, &CoarsenSetup::for_profile(opts.profile))
}

pub fn coarsen_with(opts: &ExperimentOptions, setup: &CoarsenSetup) -> Result<CoarsenReport> {
    let mut jobs = vec![setup.config(SchemeKind::Ficn, setup.reference_tau)];
    for (scheme, taus) in &setup.ladders {
        jobs.extend(taus.iter().map(|&tau| setup.config(*scheme, tau)));
    }
    for job in &mut jobs {
        if let Some(dir) = &opts.out_dir {
            job.out_dir = dir.join(format!("{}_tau{:e}", job.scheme, job.tau));
        }
    }
    let outcomes: Vec<RunOutcome<f64>> = jobs
        .par_iter()
        .map(|c| if opts.out_dir.is_some() { run::<f64>(c) } else { simulate::<f64>(c) })
        .collect::<Result<_>>()?;

    let mut outcomes = outcomes.into_iter();
    let reference = complete(outcomes.next().expect("reference job"))?;
    let ref_phi = &reference.series.final_phi;
    let ref_norm = error_norms(ref_phi, &ref_phi.map(|_| 0.0)).l2;

    let runs: Vec<CoarsenRun> = jobs[1..]
        .iter()
        .zip(outcomes)
        .map(|(c, o)| {
            let records = &o.series.records;
            let max_abs_alpha =
                records.iter().filter(|r| r.t > ALPHA_TRANSIENT).map(|r| r.alpha.abs()).fold(0.0, f64::max);
            CoarsenRun {
                scheme: c.scheme,
                tau: c.tau,
                rel_l2: if o.completed() {
                    error_norms(&o.series.final_phi, ref_phi).l2 / ref_norm
                } else {
                    f64::INFINITY
                },
                failure: o.failure.as_ref().map(ToString::to_string),
                max_abs_alpha,
                summary: RunSummary::from_records(c.scheme, c.tau, records),
            }
        })
        .collect();

    let report = CoarsenReport {
        setup: setup.clone(),
        reference: RunSummary::from_records(SchemeKind::Ficn, setup.reference_tau, &reference.series.records),
        runs,
    };
    if let Some(dir) = &opts.out_dir {
        write_coarsen(dir, &report)?;
    }
    Ok(report)
}

fn write_coarsen(dir: &Path, report: &CoarsenReport) -> Result<()> {
    let mut s = String::from("scheme,tau,completed,rel_l2,within_threshold,max_abs_alpha,expected_max_tau,failure\n");
    for r in &report.runs {
        let expected = report.setup.expected_max_tau.iter().find(|(k, _)| *k == r.scheme).map_or(f64::NAN, |p| p.1);
        let _ = writeln!(
            s,
            "{},{:e},{},{:.6e},{},{:.6e},{:e},{}",
            r.scheme,
            r.tau,
            r.failure.is_none(),
            r.rel_l2,
            r.within_threshold(),
            r.max_abs_alpha,
            expected,
            r.failure.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    write_file(dir, "coarsen_summary.csv", &s)?;

    let mut runs = String::from(RUN_SUMMARY_HEADER);
    runs.push_str(&summary_row(&report.reference));
    for r in &report.runs {
        runs.push_str(&summary_row(&r.summary));
    }
    write_file(dir, "coarsen_runs.csv", &runs)
}

/// Dispatches on `kind` and returns a short human-readable summary.
pub fn run_experiment(kind: ExperimentKind, opts: &ExperimentOptions) -> Result<String> {
    let mut s = String::new();
    match kind {
        ExperimentKind::Refine => {
            for r in refine(opts)?.schemes {
                let _ = writeln!(s, "{}: L2 slope {:.3}, Linf slope {:.3}", r.scheme, r.l2_slope, r.linf_slope);
            }
        }
        ExperimentKind::Cpu => {
            for t in cpu(opts)?.timings {
                let _ = writeln!(
                    s,
                    "n {:4} {:6} {:10.3} s  ({:.2} solver iterations/step)",
                    t.n,
                    t.scheme,
                    t.wall_ns as f64 * 1e-9,
                    t.mean_solver_iters
                );
            }
        }
        ExperimentKind::Coarsen => {
            let report = coarsen(opts)?;
            for r in &report.runs {
                let status = match &r.failure {
                    Some(f) => format!("failed: {f}"),
                    None => format!("rel L2 {:.3e}, max |alpha| {:.3e}", r.rel_l2, r.max_abs_alpha),
                };
                let _ = writeln!(s, "{:6} tau {:e}: {status}", r.scheme, r.tau);
            }
        }
    }
    Ok(s)
}
