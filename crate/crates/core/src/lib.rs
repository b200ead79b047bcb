//! Supplementary-variable time integrators for gradient flows on a periodic
//! square, with a Fourier pseudo-spectral discretization of Cahn-Hilliard.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which every driver and experiment uses.
//!
//! ```
//! use svmflow::{ChParams, Grid, Model, RealField, SvmConfig, SvmStepper, SvmVariant, TimeStepper};
//!
//! let grid = Grid::new(32).unwrap();
//! let model = Model::cahn_hilliard(&grid, ChParams::new(0.05, 1e-2).unwrap());
//! let phi0 = RealField::from_fn(&grid, |x, y| 0.25 * (6.0 * x).sin() * (6.0 * y).cos());
//! let mut svm = SvmStepper::new(model, phi0, 1e-2, SvmConfig::new(SvmVariant::SvmII));
//! let e0 = svm.energy();
//! svm.step().unwrap();
//! assert!(svm.energy() <= e0);
//! ```

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod ficn;
pub mod init;
pub mod model;
pub mod output;
pub mod predictor;
pub mod runner;
pub mod sav;
pub mod scalar;
pub mod spectral;
pub mod stepper;
pub mod svm;

pub use config::{InitKind, SchemeConfig, SchemeKind};
pub use diagnostics::{error_norms, order_fit, refinement_errors, ErrorNorms, RefinementMode, RunSeries, StepRecord};
pub use error::{Error, Result, StepFailure};
pub use experiment::{run_experiment, ExperimentKind, ExperimentOptions, Profile};
pub use ficn::{ficn_step, FicnStepper};
pub use init::init_field;
pub use model::{ChParams, GradFlowModel, Mobility};
pub use predictor::{extrapolate, predict, PredictorOutput};
pub use runner::{run, simulate, RunOutcome};
pub use sav::{sav_step, SavState, SavStepper};
pub use scalar::Scalar;
pub use spectral::{apply_symbol, fft_forward, fft_inverse, inner_product, mean, Grid2D, RealField, SpectralField};
pub use stepper::{StepInfo, TimeStepper};
pub use svm::{energy_poly, solve_beta, svm_step, EnergyPoly, SvmConfig, SvmStepper, SvmVariant};

pub type Grid = Grid2D<f64>;
pub type Field = RealField<f64>;
pub type Spectrum = SpectralField<f64>;
pub type Model = GradFlowModel<f64>;

pub type GridF32 = Grid2D<f32>;
pub type FieldF32 = RealField<f32>;
pub type ModelF32 = GradFlowModel<f32>;
