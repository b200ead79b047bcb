use crate::error::StepFailure;
use crate::scalar::Scalar;
use crate::spectral::RealField;

/// Scheme-level diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo<T> {
    /// The energy the scheme guarantees after the step: `F̃^{n+1}` for SVM,
    /// the modified energy for SAV-CN, `F[φⁿ] - τ D` for FICN.
    pub energy_target: T,
    pub alpha: T,
    pub beta: T,
    pub solver_iters: usize,
    /// `(μ, Mμ)_h` for the scheme's own chemical potential.
    pub dissipation: T,
}

/// A time integrator advancing one trajectory with a fixed step.
pub trait TimeStepper<T: Scalar> {
    fn step(&mut self) -> Result<StepInfo<T>, StepFailure>;

    fn phi(&self) -> &RealField<T>;

    /// Discrete free energy `F[φ]` of the current state.
    fn energy(&self) -> T;

    /// The energy the scheme dissipates (differs from `energy` for SAV-CN).
    fn scheme_energy(&self) -> T;
}
