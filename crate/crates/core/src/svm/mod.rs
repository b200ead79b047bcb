//! Supplementary-variable corrector.
//!
//! The gradient flow is perturbed by `α g[Φ]` and discretized with IMEX
//! Crank-Nicolson; the scalar `α` is fixed each step by demanding that the
//! new state carry exactly the predicted energy `F̃^{n+1}`. Because the
//! scheme is linear in `β = τα`, one step is
//!
//! ```text
//! Φ̂ = (1 + τ/2 ML)⁻¹ ((1 - τ/2 ML) Φⁿ - τ M f'(Φ̃))
//! w  = (1 + τ/2 ML)⁻¹ g[Φ̃]
//! Φ^{n+1} = Φ̂ + β w,   F[Φ̂ + β w] = F̃^{n+1}
//! ```
//!
//! and for the quartic double well `F[Φ̂ + βw]` is a quartic in `β`.

mod beta;

pub use beta::{real_roots, solve_beta, BetaRoot, BetaSolverOptions, EnergyPoly};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, StepFailure};
use crate::ficn::secant_quotient;
use crate::model::{f_bulk, f_prime, f_second, CnSymbols, GradFlowModel};
use crate::predictor::{predict_with_hat, PredictorOutput};
use crate::scalar::Scalar;
use crate::spectral::{RealField, SpectralField};
use crate::stepper::{StepInfo, TimeStepper};

/// Placement of the supplementary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SvmVariant {
    /// `g[Φ] = M f'(Φ)`: modifies the chemical potential to `LΦ + (1 - α) f'(Φ)`.
    SvmI,
    /// `g[Φ] = -M (LΦ + f'(Φ))`: modifies the mobility to `(1 + α) M`.
    SvmII,
}

impl fmt::Display for SvmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SvmVariant::SvmI => "svm1",
            SvmVariant::SvmII => "svm2",
        })
    }
}

impl FromStr for SvmVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "svm1" | "SVM-I" => Ok(SvmVariant::SvmI),
            "svm2" | "SVM-II" => Ok(SvmVariant::SvmII),
            _ => Err(Error::Config(format!("unknown SVM variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig<T> {
    pub variant: SvmVariant,
    /// Relative tolerance; the absolute bound on `|u(β)|` is `newton_tol * max(1, |F̃|)`.
    pub newton_tol: T,
    pub max_newton_iters: usize,
    pub max_abs_beta: T,
}

impl<T: Scalar> SvmConfig<T> {
    pub fn new(variant: SvmVariant) -> Self {
        Self { variant, newton_tol: T::lit(1e-13), max_newton_iters: 50, max_abs_beta: T::lit(0.5) }
    }
}

/// `Φ̂^{n+1}` and `wⁿ` in nodal and modal form.
#[derive(Debug, Clone)]
pub struct CorrectorFields<T: Scalar> {
    pub phi_hat: RealField<T>,
    pub w: RealField<T>,
    pub(crate) phi_hat_modes: SpectralField<T>,
    pub(crate) w_modes: SpectralField<T>,
}

pub fn corrector_fields<T: Scalar>(
    model: &GradFlowModel<T>,
    pred: &PredictorOutput<T>,
    variant: SvmVariant,
    tau: T,
) -> CorrectorFields<T> {
    assert!(tau > T::zero(), "time step must be positive");
    corrector_fields_with(model, pred, variant, &model.cn_symbols(tau))
}

fn corrector_fields_with<T: Scalar>(
    model: &GradFlowModel<T>,
    pred: &PredictorOutput<T>,
    variant: SvmVariant,
    cn: &CnSymbols<T>,
) -> CorrectorFields<T> {
    let tau = cn.tau;
    let nl = pred.nonlinear_tilde_hat.coeffs();
    let phi_hat_modes = pred.phi_n_hat.map_modes(|k, c| c * cn.prop[k] - nl[k] * (tau * cn.m_inv[k]));
    let w_modes = match variant {
        SvmVariant::SvmI => pred.nonlinear_tilde_hat.map_modes(|k, c| c * cn.m_inv[k]),
        SvmVariant::SvmII => pred.mu_star_hat.map_modes(|k, c| -c * cn.m_inv[k]),
    };
    let (phi_hat, w) = model.grid().inverse_pair(&phi_hat_modes, &w_modes);
    CorrectorFields { phi_hat, w, phi_hat_modes, w_modes }
}

/// Coefficients of `F[Φ̂ + βw] - F̃` as a quartic in `β`.
pub fn energy_poly<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_hat: &RealField<T>,
    w: &RealField<T>,
    f_tilde: T,
) -> EnergyPoly<T> {
    let mut c = quartic_terms(model, phi_hat, &phi_hat.forward(), w, &w.forward(), None);
    c[0] = c[0] - f_tilde;
    EnergyPoly::new(c)
}

/// `[F[Φ̂] - F[base], c1, c2, c3, c4]`, with `F[base] = 0` when no base state
/// is given. The difference uses the incremental form of
/// [`GradFlowModel::energy_difference`]. One nodal and one modal sweep.
fn quartic_terms<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_hat: &RealField<T>,
    phi_hat_modes: &SpectralField<T>,
    w: &RealField<T>,
    w_modes: &SpectralField<T>,
    base: Option<(&RealField<T>, &SpectralField<T>)>,
) -> [T; 5] {
    let zero = T::zero();
    let half = T::lit(0.5);
    let h = model.grid().h();
    let area = h * h;
    let l = model.l_symbol();

    let (mut bulk, mut b1, mut b2, mut b3, mut b4) = (zero, zero, zero, zero, zero);
    let base_values = base.map(|(b, _)| b.values());
    for (idx, (&p, &v)) in phi_hat.values().iter().zip(w.values()).enumerate() {
        let v2 = v * v;
        bulk = bulk
            + match base_values {
                Some(q) => (p - q[idx]) * secant_quotient(p, q[idx]),
                None => f_bulk(p),
            };
        b1 = b1 + f_prime(p) * v;
        b2 = b2 + f_second(p) * v2;
        b3 = b3 + p * v2 * v;
        b4 = b4 + v2 * v2;
    }

    let (mut grad, mut gaw, mut gww) = (zero, zero, zero);
    let base_modes = base.map(|(_, m)| m.coeffs());
    for (k, (a, b)) in phi_hat_modes.coeffs().iter().zip(w_modes.coeffs()).enumerate() {
        grad = grad
            + l[k]
                * match base_modes {
                    // Re((a - c) conj(a + c))
                    Some(c) => (a.re - c[k].re) * (a.re + c[k].re) + (a.im - c[k].im) * (a.im + c[k].im),
                    None => a.norm_sqr(),
                };
        gaw = gaw + l[k] * (a.re * b.re + a.im * b.im);
        gww = gww + l[k] * b.norm_sqr();
    }

    [half * grad + area * bulk, gaw + area * b1, half * gww + half * area * b2, area * b3, T::lit(0.25) * area * b4]
}

#[derive(Debug, Clone)]
pub struct SvmStepResult<T: Scalar> {
    pub phi_next: RealField<T>,
    /// `β = τ α^{n+1/2}`.
    pub beta: T,
    pub alpha: T,
    pub newton_iters: usize,
    /// `F[Φ^{n+1}] - F̃^{n+1}`, recomputed from the new state.
    pub energy_residual: T,
    pub energy_next: T,
    pub f_tilde: T,
    /// `(μ*, Mμ*)_h`.
    pub diss: T,
    pub(crate) phi_next_modes: SpectralField<T>,
}

/// One SVM step from `(Φⁿ, Φ^{n-1})`.
pub fn svm_step<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_n: &RealField<T>,
    phi_nm1: &RealField<T>,
    tau: T,
    cfg: &SvmConfig<T>,
) -> Result<SvmStepResult<T>, StepFailure> {
    assert!(tau > T::zero(), "time step must be positive");
    let phi_n_modes = phi_n.forward();
    let energy_n = model.free_energy_with_hat(phi_n, &phi_n_modes);
    svm_step_with(model, phi_n, phi_n_modes, energy_n, phi_nm1, &model.cn_symbols(tau), cfg)
}

fn svm_step_with<T: Scalar>(
    model: &GradFlowModel<T>,
    phi_n: &RealField<T>,
    phi_n_modes: SpectralField<T>,
    energy_n: T,
    phi_nm1: &RealField<T>,
    cn: &CnSymbols<T>,
    cfg: &SvmConfig<T>,
) -> Result<SvmStepResult<T>, StepFailure> {
    let tau = cn.tau;
    let pred = predict_with_hat(model, phi_n, phi_n_modes, energy_n, phi_nm1, cn);
    let cf = corrector_fields_with(model, &pred, cfg.variant, cn);
    // F[Φ̂] - F̃ as (F[Φ̂] - F[Φⁿ]) + τ(μ*, Mμ*), free of the cancellation between O(1) energies
    let mut c =
        quartic_terms(model, &cf.phi_hat, &cf.phi_hat_modes, &cf.w, &cf.w_modes, Some((phi_n, &pred.phi_n_hat)));
    c[0] = c[0] + tau * pred.diss;
    let opts = BetaSolverOptions {
        tol: cfg.newton_tol * T::one().max(pred.f_tilde.abs()),
        max_iters: cfg.max_newton_iters,
        max_abs_beta: cfg.max_abs_beta,
    };
    let root = solve_beta(&EnergyPoly::new(c), &opts)?;
    let beta = root.beta;

    let (phi_next, phi_next_modes, energy_next) = combine(model, &cf, beta);
    Ok(SvmStepResult {
        phi_next,
        beta,
        alpha: beta / tau,
        newton_iters: root.iters,
        energy_residual: energy_next - pred.f_tilde,
        energy_next,
        f_tilde: pred.f_tilde,
        diss: pred.diss,
        phi_next_modes,
    })
}

/// `Φ̂ + βw` in both representations together with its free energy.
fn combine<T: Scalar>(
    model: &GradFlowModel<T>,
    cf: &CorrectorFields<T>,
    beta: T,
) -> (RealField<T>, SpectralField<T>, T) {
    let h = model.grid().h();
    let mut bulk = T::zero();
    let phi = cf.phi_hat.zip_map(&cf.w, |p, v| {
        let x = p + beta * v;
        bulk = bulk + f_bulk(x);
        x
    });
    let modes = cf.phi_hat_modes.axpy(beta, &cf.w_modes);
    let energy = model.gradient_energy_hat(&modes) + bulk * h * h;
    (phi, modes, energy)
}

/// Stateful SVM trajectory. The first step uses `Φ^{-1} = Φ⁰`.
#[derive(Debug, Clone)]
pub struct SvmStepper<T: Scalar> {
    model: GradFlowModel<T>,
    cfg: SvmConfig<T>,
    cn: CnSymbols<T>,
    phi: RealField<T>,
    phi_modes: SpectralField<T>,
    phi_prev: RealField<T>,
    energy: T,
}

impl<T: Scalar> SvmStepper<T> {
    pub fn new(model: GradFlowModel<T>, phi0: RealField<T>, tau: T, cfg: SvmConfig<T>) -> Self {
        assert!(tau > T::zero(), "time step must be positive");
        let phi_modes = phi0.forward();
        let energy = model.free_energy_with_hat(&phi0, &phi_modes);
        let cn = model.cn_symbols(tau);
        Self { model, cfg, cn, phi_prev: phi0.clone(), phi: phi0, phi_modes, energy }
    }

    /// Advances one step, returning the full corrector diagnostics.
    pub fn advance(&mut self) -> Result<SvmStepResult<T>, StepFailure> {
        let res = svm_step_with(
            &self.model,
            &self.phi,
            self.phi_modes.clone(),
            self.energy,
            &self.phi_prev,
            &self.cn,
            &self.cfg,
        )?;
        self.phi_prev = std::mem::replace(&mut self.phi, res.phi_next.clone());
        self.phi_modes = res.phi_next_modes.clone();
        self.energy = res.energy_next;
        Ok(res)
    }

    /// [`SvmStepper::advance`] without copying the new state out.
    fn advance_in_place(&mut self) -> Result<StepInfo<T>, StepFailure> {
        let modes = std::mem::replace(&mut self.phi_modes, SpectralField::placeholder(self.model.grid()));
        let r = match svm_step_with(&self.model, &self.phi, modes, self.energy, &self.phi_prev, &self.cn, &self.cfg) {
            Ok(r) => r,
            Err(e) => {
                self.phi_modes = self.phi.forward();
                return Err(e);
            }
        };
        self.phi_prev = std::mem::replace(&mut self.phi, r.phi_next);
        self.phi_modes = r.phi_next_modes;
        self.energy = r.energy_next;
        Ok(StepInfo {
            energy_target: r.f_tilde,
            alpha: r.alpha,
            beta: r.beta,
            solver_iters: r.newton_iters,
            dissipation: r.diss,
        })
    }
}

impl<T: Scalar> TimeStepper<T> for SvmStepper<T> {
    fn step(&mut self) -> Result<StepInfo<T>, StepFailure> {
        self.advance_in_place()
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
