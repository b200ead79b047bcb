use std::path::PathBuf;

use thiserror::Error;

/// Why a single time step could not be completed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepFailure {
    /// The energy constraint has zero slope in the supplementary variable
    /// while being violated: `(mu, g)` vanishes away from equilibrium.
    #[error("energy constraint is singular: u(0) = {c0:e}, u'(0) = {c1:e}")]
    SingularConstraint { c0: f64, c1: f64 },
    /// Newton iteration for the supplementary variable failed or left the
    /// admissible neighbourhood of zero; the step size is too large.
    #[error("root solve for beta diverged (last iterate {beta:e} after {iters} iterations)")]
    RootDiverged { beta: f64, iters: usize },
    /// Fixed-point iteration of the implicit scheme did not contract.
    #[error("picard iteration did not converge: update {update:e} after {iters} iterations")]
    PicardDiverged { update: f64, iters: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("grid mismatch: expected n = {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step {step} (t = {t:e}) failed: {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: StepFailure,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
