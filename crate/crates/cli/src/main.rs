use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svmflow::{run, run_experiment, Error, ExperimentKind, ExperimentOptions, Profile, SchemeConfig};

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Exit status for a run stopped by a failed time step.
const EXIT_STEP: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_CONFIG: u8 = 1;

#[derive(Parser)]
#[command(name = "svmflow", version, about = "Cahn-Hilliard time integrators with energy-dissipation-rate control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write run.csv, snapshots and config.txt.
    Run(RunArgs),
    /// Reproduce one of the benchmark studies.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// svm1, svm2, savcn or ficn.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// taylor, coarsening or file:<path>.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    c0: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshot_at: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<SchemeConfig, Error> {
        let mut cfg = SchemeConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_kv(&text)?;
        }
        let flags = [
            ("scheme", &self.scheme),
            ("n", &self.n),
            ("tau", &self.tau),
            ("t_end", &self.t_end),
            ("epsilon", &self.epsilon),
            ("lambda", &self.lambda),
            ("init", &self.init),
            ("c0", &self.c0),
            ("out", &self.out),
            ("snapshot_at", &self.snapshot_at),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// refine, cpu or coarsen.
    name: String,
    /// paper or desk.
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Report directory; defaults to out/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timing repetitions for cpu; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Step { .. } => EXIT_STEP,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn run_command(args: &RunArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let outcome = run::<f64>(&cfg)?;
    let records = &outcome.series.records;
    let last = records.last().expect("initial record");
    eprintln!(
        "{}: {} steps to t = {}, energy {:.10e}, {:.3} s stepping, output in {}",
        cfg.scheme,
        last.step,
        last.t,
        last.energy,
        outcome.series.total_wall_ns() as f64 * 1e-9,
        cfg.out_dir.display()
    );
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn experiment_command(args: &ExperimentArgs) -> Result<(), Error> {
    let kind: ExperimentKind = args.name.parse()?;
    let opts = ExperimentOptions {
        profile: args.profile.parse::<Profile>()?,
        out_dir: Some(args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()))),
        cpu_repeats: args.repeats,
    };
    print!("{}", run_experiment(kind, &opts)?);
    Ok(())
}

/// `SVM_THREADS` caps the worker pool used for independent runs.
fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("SVM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("SVM_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Experiment(args) => experiment_command(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
