//! SAV-CN comparator: scalar auxiliary variable `r ≈ √(E₁[φ] + C₀)` with a
//! linearly implicit Crank-Nicolson step. Dissipates the modified energy
//! `½(φ, Lφ)_h + r² - C₀` unconditionally.

use crate::error::StepFailure;
use crate::model::{f_bulk, CnSymbols, GradFlowModel};
use crate::scalar::Scalar;
use crate::spectral::{RealField, SpectralField};
use crate::stepper::{StepInfo, TimeStepper};

#[derive(Debug, Clone)]
pub struct SavState<T: Scalar> {
    pub phi: RealField<T>,
    pub r: T,
    pub c0: T,
}

impl<T: Scalar> SavState<T> {
    /// `r⁰ = √(E₁[φ⁰] + C₀)`.
    pub fn new(model: &GradFlowModel<T>, phi: RealField<T>, c0: T) -> Self {
        assert!(c0 >= T::zero(), "C0 must be nonnegative");
        let r = (model.bulk_energy(&phi) + c0).sqrt();
        Self { phi, r, c0 }
    }

    /// `½(φ, Lφ)_h + r² - C₀`.
    pub fn modified_energy(&self, model: &GradFlowModel<T>) -> T {
        model.gradient_energy_hat(&self.phi.forward()) + self.r * self.r - self.c0
    }
}

#[derive(Debug, Clone)]
pub struct SavStep<T: Scalar> {
    pub state: SavState<T>,
    /// `(μ_sav, M μ_sav)_h` at the half step.
    pub dissipation: T,
    pub modified_energy: T,
    phi_modes: SpectralField<T>,
}

pub fn sav_step<T: Scalar>(
    model: &GradFlowModel<T>,
    state: &SavState<T>,
    phi_nm1: &RealField<T>,
    tau: T,
) -> SavStep<T> {
    assert!(tau > T::zero(), "time step must be positive");
    sav_step_with(model, state, &state.phi.forward(), phi_nm1, &model.cn_symbols(tau))
}

fn sav_step_with<T: Scalar>(
    model: &GradFlowModel<T>,
    state: &SavState<T>,
    phi_n_modes: &SpectralField<T>,
    phi_nm1: &RealField<T>,
    cn: &CnSymbols<T>,
) -> SavStep<T> {
    let tau = cn.tau;
    let quarter_tau = T::lit(0.25) * tau;
    let half = T::lit(0.5);
    let three_halves = T::lit(1.5);
    let l = model.l_symbol();
    let h = model.grid().h();

    let phi_bar = || state.phi.values().iter().zip(phi_nm1.values()).map(move |(&a, &b)| three_halves * a - half * b);
    let bulk_bar = phi_bar().map(f_bulk).sum::<T>() * h * h;
    let scale = T::one() / (bulk_bar + state.c0).sqrt();
    let b_modes = model.nonlinear_hat_iter(phi_bar()).map_modes(|_, c| c * scale);
    let b_phi_n = b_modes.dot(phi_n_modes);

    // s₁ = A⁻¹[(1 - τ/2 ML)φⁿ - τ rⁿ Mb + τ/4 (b, φⁿ) Mb],  s₂ = A⁻¹ M b
    let explicit = tau * state.r - quarter_tau * b_phi_n;
    let bc = b_modes.coeffs();
    let s1 = phi_n_modes.map_modes(|k, c| c * cn.prop[k] - bc[k] * (explicit * cn.m_inv[k]));
    let s2 = b_modes.map_modes(|k, c| c * cn.m_inv[k]);
    let b_phi_next = b_modes.dot(&s1) / (T::one() + quarter_tau * b_modes.dot(&s2));
    let phi_next_modes = s1.axpy(-quarter_tau * b_phi_next, &s2);
    let r_next = state.r + half * (b_phi_next - b_phi_n);

    let r_mid = half * (state.r + r_next);
    let mu_mid = phi_next_modes.zip_map(phi_n_modes, |a, b| (a + b) * half).map_modes(|k, c| c * l[k] + bc[k] * r_mid);
    let dissipation = model.dissipation_rate_hat(&mu_mid);

    let modified_energy = model.gradient_energy_hat(&phi_next_modes) + r_next * r_next - state.c0;
    SavStep {
        state: SavState { phi: phi_next_modes.inverse(), r: r_next, c0: state.c0 },
        dissipation,
        modified_energy,
        phi_modes: phi_next_modes,
    }
}

#[derive(Debug, Clone)]
pub struct SavStepper<T: Scalar> {
    model: GradFlowModel<T>,
    cn: CnSymbols<T>,
    state: SavState<T>,
    phi_modes: SpectralField<T>,
    phi_prev: RealField<T>,
    modified_energy: T,
    energy: T,
}

impl<T: Scalar> SavStepper<T> {
    pub fn new(model: GradFlowModel<T>, phi0: RealField<T>, tau: T, c0: T) -> Self {
        assert!(tau > T::zero(), "time step must be positive");
        let state = SavState::new(&model, phi0.clone(), c0);
        let phi_modes = phi0.forward();
        let energy = model.free_energy_with_hat(&phi0, &phi_modes);
        let modified_energy = state.modified_energy(&model);
        let cn = model.cn_symbols(tau);
        Self { model, cn, state, phi_modes, phi_prev: phi0, modified_energy, energy }
    }

    pub fn state(&self) -> &SavState<T> {
        &self.state
    }
}

impl<T: Scalar> TimeStepper<T> for SavStepper<T> {
    fn step(&mut self) -> Result<StepInfo<T>, StepFailure> {
        let next = sav_step_with(&self.model, &self.state, &self.phi_modes, &self.phi_prev, &self.cn);
        self.phi_prev = std::mem::replace(&mut self.state, next.state).phi;
        self.phi_modes = next.phi_modes;
        self.modified_energy = next.modified_energy;
        self.energy = self.model.free_energy_with_hat(&self.state.phi, &self.phi_modes);
        Ok(StepInfo {
            energy_target: next.modified_energy,
            alpha: T::zero(),
            beta: T::zero(),
            solver_iters: 0,
            dissipation: next.dissipation,
        })
    }

    fn phi(&self) -> &RealField<T> {
        &self.state.phi
    }

    fn energy(&self) -> T {
        self.energy
    }

    fn scheme_energy(&self) -> T {
        self.modified_energy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChParams;
    use crate::spectral::{mean, Grid2D};
    use std::f64::consts::PI;

    fn model(n: usize, eps: f64, lambda: f64) -> GradFlowModel<f64> {
        GradFlowModel::cahn_hilliard(&Grid2D::new(n).unwrap(), ChParams::new(eps, lambda).unwrap())
    }

    #[test]
    fn equilibrium() {
        let m = model(16, 0.05, 1e-2);
        let one = RealField::constant(m.grid(), 1.0);
        let s = SavState::new(&m, one.clone(), 1.0);
        assert_eq!(s.r, 1.0);
        let next = sav_step(&m, &s, &one, 0.1);
        assert!((&next.state.phi - &one).max_abs() < 1e-15);
        assert_eq!(next.state.r, 1.0);
    }

    #[test]
    fn modified_energy_identity_and_mass() {
        let m = model(32, 0.02, 1.0);
        let phi0 = RealField::from_fn(m.grid(), |x, y| {
            0.05 * ((6.0 * PI * x).cos() * (8.0 * PI * y).cos() + (2.0 * PI * x - 10.0 * PI * y).cos())
        });
        for tau in [1e-6, 1e-4, 1e-2, 1.0] {
            let mut s = SavStepper::new(m.clone(), phi0.clone(), tau, 1.0);
            let mut e = s.scheme_energy();
            for _ in 0..10 {
                let info = s.step().unwrap();
                let residual = info.energy_target - e + tau * info.dissipation;
                assert!(residual.abs() <= 1e-11 * e.abs().max(1.0), "tau {tau}: {residual:e}");
                assert!(info.energy_target <= e + 1e-11);
                assert!((mean(s.phi()) - mean(&phi0)).abs() < 1e-12);
                e = info.energy_target;
            }
        }
    }

    #[test]
    fn initial_modified_energy_is_the_free_energy() {
        let m = model(16, 0.05, 1.0);
        let phi = RealField::from_fn(m.grid(), |x, _| 0.3 * (2.0 * PI * x).cos());
        let s = SavState::new(&m, phi.clone(), 1.0);
        assert!((s.modified_energy(&m) - m.free_energy(&phi)).abs() < 1e-14);
    }
}
