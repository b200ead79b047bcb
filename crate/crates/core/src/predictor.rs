//! Half-step IMEX predictor: produces the intermediate state `Φ̃^{n+1/2}`,
//! the chemical potential sample `μ*` and the target energy
//! `F̃^{n+1} = F[Φⁿ] - τ (μ*, Mμ*)_h` that the corrector must hit.

use crate::model::{CnSymbols, GradFlowModel};
use crate::scalar::Scalar;
use crate::spectral::{RealField, SpectralField};

#[derive(Debug, Clone)]
pub struct PredictorOutput<T: Scalar> {
    pub phi_tilde: RealField<T>,
    /// Target energy `F̃^{n+1}`.
    pub f_tilde: T,
    /// `(μ*, Mμ*)_h`.
    pub diss: T,
    /// `F[Φⁿ]`.
    pub energy_n: T,
    pub(crate) phi_n_hat: SpectralField<T>,
    pub(crate) mu_star_hat: SpectralField<T>,
    /// Transform of `f'(Φ̃^{n+1/2})`.
    pub(crate) nonlinear_tilde_hat: SpectralField<T>,
}

impl<T: Scalar> PredictorOutput<T> {
    /// `μ* = LΦ̃ + f'(Φ̃)` at the nodes.
    pub fn mu_star(&self) -> RealField<T> {
        self.mu_star_hat.inverse()
    }
}

/// Second-order extrapolation `(3Φⁿ - Φ^{n-1}) / 2` to the half step.
pub fn extrapolate<T: Scalar>(phi_n: &RealField<T>, phi_nm1: &RealField<T>) -> RealField<T> {
    let half = T::lit(0.5);
    let three_halves = T::lit(1.5);
    phi_n.zip_map(phi_nm1, |a, b| three_halves * a - half * b)
}

pub fn predict<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_n: &RealField<T>,
    phi_nm1: &RealField<T>,
    tau: T,
) -> PredictorOutput<T> {
    assert!(tau > T::zero(), "time step must be positive");
    let phi_n_hat = phi_n.forward();
    let energy_n = model.free_energy_with_hat(phi_n, &phi_n_hat);
    predict_with_hat(model, phi_n, phi_n_hat, energy_n, phi_nm1, &model.cn_symbols(tau))
}

/// [`predict`] with the transform and energy of `Φⁿ` already known.
pub(crate) fn predict_with_hat<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_n: &RealField<T>,
    phi_n_hat: SpectralField<T>,
    energy_n: T,
    phi_nm1: &RealField<T>,
    cn: &CnSymbols<T>,
) -> PredictorOutput<T> {
    let tau = cn.tau;
    let half = T::lit(0.5);
    let three_halves = T::lit(1.5);

    // (1 + τ/2 ML) Φ̃ = Φⁿ - τ/2 M f'(Φ̄)
    let phi_bar = phi_n.values().iter().zip(phi_nm1.values()).map(|(&a, &b)| three_halves * a - half * b);
    let nonlinear_bar_hat = model.nonlinear_hat_iter(phi_bar);
    let nb = nonlinear_bar_hat.coeffs();
    let half_tau = half * tau;
    let phi_tilde_hat = phi_n_hat.map_modes(|k, c| c * cn.inv[k] - nb[k] * (half_tau * cn.m_inv[k]));
    let phi_tilde = phi_tilde_hat.inverse();

    // μ* = LΦ̃ + f'(Φ̃), with f' re-evaluated at Φ̃
    let nonlinear_tilde_hat = model.nonlinear_hat(&phi_tilde);
    let nt = nonlinear_tilde_hat.coeffs();
    let l = model.l_symbol();
    let mu_star_hat = phi_tilde_hat.map_modes(|k, c| c * l[k] + nt[k]);
    let diss = model.dissipation_rate_hat(&mu_star_hat);

    PredictorOutput {
        phi_tilde,
        f_tilde: energy_n - tau * diss,
        diss,
        energy_n,
        phi_n_hat,
        mu_star_hat,
        nonlinear_tilde_hat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{error_norms, order_fit};
    use crate::ficn::ficn_step;
    use crate::model::ChParams;
    use crate::spectral::{mean, Grid2D};
    use std::f64::consts::PI;

    fn model(n: usize, eps: f64, lambda: f64) -> GradFlowModel<f64> {
        GradFlowModel::cahn_hilliard(&Grid2D::new(n).unwrap(), ChParams::new(eps, lambda).unwrap())
    }

    fn bumpy(m: &GradFlowModel<f64>) -> RealField<f64> {
        RealField::from_fn(m.grid(), |x, y| {
            0.3 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.2 * (4.0 * PI * x + 0.3).cos() + 0.1
        })
    }

    #[test]
    fn extrapolation_examples() {
        let g = Grid2D::<f64>::new(8).unwrap();
        let c = RealField::constant(&g, 0.4);
        assert!((&extrapolate(&c, &c) - &c).max_abs() < 1e-15);
        let u = RealField::from_fn(&g, |x, y| x - 2.0 * y);
        let two_u = &u * 2.0;
        assert!((&extrapolate(&two_u, &u) - &(&u * 2.5)).max_abs() < 1e-15);
    }

    #[test]
    fn extrapolation_is_second_order() {
        // Φ(t) = e^t sin(2πx); compare against Φ(t + τ/2)
        let g = Grid2D::<f64>::new(8).unwrap();
        let at = |t: f64| RealField::from_fn(&g, move |x, _| t.exp() * (2.0 * PI * x).sin());
        let errs: Vec<f64> = (0..5)
            .map(|k| {
                let tau = 0.1 / 2f64.powi(k);
                let t = 0.3;
                (&extrapolate(&at(t), &at(t - tau)) - &at(t + 0.5 * tau)).max_abs()
            })
            .collect();
        let slope = order_fit(&errs, 2.0).unwrap();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn equilibrium_fixed_points() {
        let m = model(16, 0.05, 1e-2);
        let one = RealField::constant(m.grid(), 1.0);
        let p = predict(&m, &one, &one, 0.1);
        assert!((&p.phi_tilde - &one).max_abs() <= 1e-14);
        assert!(p.mu_star().max_abs() < 1e-15);
        assert_eq!(p.diss, 0.0);
        assert_eq!(p.f_tilde, 0.0);

        let zero = RealField::zeros(m.grid());
        let p = predict(&m, &zero, &zero, 0.1);
        assert!(p.phi_tilde.max_abs() < 1e-15);
        assert!(p.mu_star().max_abs() < 1e-15);
        assert!((p.f_tilde - 0.25).abs() < 1e-15);
    }

    #[test]
    fn preserves_mean_and_dissipates_target() {
        let m = model(32, 0.05, 1e-2);
        let phi = bumpy(&m);
        let prev = phi.map(|v| 0.98 * v);
        for tau in [1e-3, 1e-2, 1e-1, 1.0] {
            let p = predict(&m, &phi, &prev, tau);
            assert!((mean(&p.phi_tilde) - mean(&phi)).abs() < 1e-13);
            assert!(p.diss >= 0.0);
            assert!(p.f_tilde <= m.free_energy(&phi));
            assert_eq!(p.f_tilde, p.energy_n - tau * p.diss);
        }
    }

    #[test]
    fn half_step_error_is_second_order() {
        // reference: FICN at τ/64 from Φ(0), which also supplies Φ(τ) as Φⁿ
        let m = model(32, 0.05, 0.05);
        let phi0 = RealField::from_fn(m.grid(), |x, y| 0.25 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let reference = |tau: f64, t_end: f64| {
            let fine = tau / 64.0;
            let steps = (t_end / fine).round() as usize;
            let mut phi = phi0.clone();
            for _ in 0..steps {
                phi = ficn_step(&m, &phi, fine, 1e-13, 500).unwrap().phi_next;
            }
            phi
        };
        let mut errs = Vec::new();
        for tau in [0.02, 0.01, 0.005] {
            let phi_n = reference(tau, tau);
            let exact_half = reference(tau, 1.5 * tau);
            let p = predict(&m, &phi_n, &phi0, tau);
            errs.push(error_norms(&p.phi_tilde, &exact_half).l2);
        }
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!(r1 > 3.4 && r1 < 4.6 && r2 > 3.4 && r2 < 4.6, "ratios {r1} {r2} {errs:?}");
    }
}
