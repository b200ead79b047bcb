//! Fully implicit Crank-Nicolson comparator with the secant nonlinearity
//! `q(a, b) = (f(a) - f(b)) / (a - b)`, solved by Picard iteration.
//!
//! The secant quotient makes the discrete chain rule exact, so
//! `F[φ^{n+1}] - F[φⁿ] = -τ (μ, Mμ)_h` with `μ = Lφ^{n+1/2} + q` holds up to
//! the fixed-point tolerance.

use crate::error::StepFailure;
use crate::model::{CnSymbols, GradFlowModel};
use crate::scalar::Scalar;
use crate::spectral::{RealField, SpectralField};
use crate::stepper::{StepInfo, TimeStepper};

/// `¼ (a + b)(a² + b² - 2)`, the difference quotient of the double well.
#[inline]
pub fn secant_quotient<T: Scalar>(a: T, b: T) -> T {
    T::lit(0.25) * (a + b) * (a * a + b * b - T::lit(2.0))
}

#[derive(Debug, Clone)]
pub struct FicnStep<T: Scalar> {
    pub phi_next: RealField<T>,
    pub iters: usize,
    /// `(μ, Mμ)_h` with `μ = Lφ^{n+1/2} + q(φ^{n+1}, φⁿ)`.
    pub dissipation: T,
    phi_modes: SpectralField<T>,
}

pub fn ficn_step<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_n: &RealField<T>,
    tau: T,
    tol: T,
    max_iters: usize,
) -> Result<FicnStep<T>, StepFailure> {
    assert!(tau > T::zero(), "time step must be positive");
    ficn_step_with(model, phi_n, &phi_n.forward(), &model.cn_symbols(tau), tol, max_iters)
}

fn ficn_step_with<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_n: &RealField<T>,
    phi_n_modes: &SpectralField<T>,
    cn: &CnSymbols<T>,
    tol: T,
    max_iters: usize,
) -> Result<FicnStep<T>, StepFailure> {
    let tau = cn.tau;
    let base = phi_n_modes.map_modes(|k, c| c * cn.prop[k]);
    let secant_modes = |phi: &RealField<T>| {
        let q = phi.values().iter().zip(phi_n.values()).map(|(&a, &b)| secant_quotient(a, b));
        let mut hat = model.grid().forward_iter(q);
        if model.dealias() {
            hat.truncate_two_thirds();
        }
        hat
    };

    let mut phi = phi_n.clone();
    let mut update = T::infinity();
    for iter in 1..=max_iters {
        let q = secant_modes(&phi);
        let qc = q.coeffs();
        let modes = base.map_modes(|k, b| b - qc[k] * (tau * cn.m_inv[k]));
        let next = modes.inverse();
        update = next.values().iter().zip(phi.values()).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        phi = next;
        if !update.is_finite() {
            break;
        }
        if update <= tol {
            // μ = L(φ^{n+1} + φⁿ)/2 + q(φ^{n+1}, φⁿ)
            let q = secant_modes(&phi);
            let (l, m) = (model.l_symbol(), model.m_symbol());
            let half = T::lit(0.5);
            let dissipation = modes
                .coeffs()
                .iter()
                .zip(phi_n_modes.coeffs())
                .zip(q.coeffs())
                .enumerate()
                .map(|(k, ((&a, &b), &c))| m[k] * ((a + b) * (half * l[k]) + c).norm_sqr())
                .sum();
            return Ok(FicnStep { phi_next: phi, iters: iter, dissipation, phi_modes: modes });
        }
    }
    Err(StepFailure::PicardDiverged { update: update.as_f64(), iters: max_iters })
}

#[derive(Debug, Clone)]
pub struct FicnStepper<T: Scalar> {
    model: GradFlowModel<T>,
    cn: CnSymbols<T>,
    tol: T,
    max_iters: usize,
    phi: RealField<T>,
    phi_modes: SpectralField<T>,
    energy: T,
}

impl<T: Scalar> FicnStepper<T> {
    pub fn new(model: GradFlowModel<T>, phi0: RealField<T>, tau: T, tol: T, max_iters: usize) -> Self {
        assert!(tau > T::zero(), "time step must be positive");
        let phi_modes = phi0.forward();
        let energy = model.free_energy_with_hat(&phi0, &phi_modes);
        let cn = model.cn_symbols(tau);
        Self { model, cn, tol, max_iters, phi: phi0, phi_modes, energy }
    }
}

impl<T: Scalar> TimeStepper<T> for FicnStepper<T> {
    fn step(&mut self) -> Result<StepInfo<T>, StepFailure> {
        let s = ficn_step_with(&self.model, &self.phi, &self.phi_modes, &self.cn, self.tol, self.max_iters)?;
        let target = self.energy - self.cn.tau * s.dissipation;
        self.phi = s.phi_next;
        self.phi_modes = s.phi_modes;
        self.energy = self.model.free_energy_with_hat(&self.phi, &self.phi_modes);
        Ok(StepInfo {
            energy_target: target,
            alpha: T::zero(),
            beta: T::zero(),
            solver_iters: s.iters,
            dissipation: s.dissipation,
        })
    }

    fn phi(&self) -> &RealField<T> {
        &self.phi
    }

    fn energy(&self) -> T {
        self.energy
    }

    fn scheme_energy(&self) -> T {
        self.energy
    }
}
