//! Gradient-flow model `∂tφ = -M (Lφ + f'(φ))` with the quartic double well
//! `f(φ) = ¼(φ² - 1)²`, `L = -ε²Δ` and, for Cahn-Hilliard, `M = -λΔ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ficn::secant_quotient;
use crate::scalar::Scalar;
use crate::spectral::{Grid2D, RealField, SpectralField};

/// Physical parameters of the Cahn-Hilliard free energy and mobility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChParams<T> {
    /// Interface width ε.
    pub epsilon: T,
    /// Mobility coefficient λ.
    pub lambda: T,
}

impl<T: Scalar> ChParams<T> {
    pub fn new(epsilon: T, lambda: T) -> Result<Self> {
        if !(epsilon > T::zero() && lambda > T::zero()) || !epsilon.is_finite() || !lambda.is_finite() {
            return Err(Error::Config(format!(
                "epsilon and lambda must be positive and finite (got {epsilon}, {lambda})"
            )));
        }
        Ok(Self { epsilon, lambda })
    }
}

/// Shape of the mobility operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mobility {
    /// `M = -λΔ` (Cahn-Hilliard, mass conserving).
    #[default]
    Conserved,
    /// `M = λ` (Allen-Cahn).
    NonConserved,
}

#[inline]
pub fn f_bulk<T: Scalar>(phi: T) -> T {
    let s = phi * phi - T::one();
    T::lit(0.25) * s * s
}

#[inline]
pub fn f_prime<T: Scalar>(phi: T) -> T {
    phi * phi * phi - phi
}

#[inline]
pub fn f_second<T: Scalar>(phi: T) -> T {
    T::lit(3.0) * phi * phi - T::one()
}

/// Symbols for one step size `τ`, computed once per trajectory.
#[derive(Debug, Clone)]
pub struct CnSymbols<T> {
    pub tau: T,
    /// `(1 + τ/2 ML)⁻¹`.
    pub inv: Vec<T>,
    /// `(1 + τ/2 ML)⁻¹ (1 - τ/2 ML)`.
    pub prop: Vec<T>,
    /// `M (1 + τ/2 ML)⁻¹`.
    pub m_inv: Vec<T>,
}

/// The discrete model: grid plus the Fourier symbols of `L` and `M`.
#[derive(Debug, Clone)]
pub struct GradFlowModel<T: Scalar> {
    params: ChParams<T>,
    grid: Arc<Grid2D<T>>,
    l_symbol: Vec<T>,
    m_symbol: Vec<T>,
    ml_symbol: Vec<T>,
    dealias: bool,
}

impl<T: Scalar> GradFlowModel<T> {
    pub fn cahn_hilliard(grid: &Arc<Grid2D<T>>, params: ChParams<T>) -> Self {
        Self::new(grid, params, Mobility::Conserved)
    }

    pub fn new(grid: &Arc<Grid2D<T>>, params: ChParams<T>, mobility: Mobility) -> Self {
        let eps2 = params.epsilon * params.epsilon;
        let l_symbol: Vec<T> = grid.k2().iter().map(|&k2| eps2 * k2).collect();
        let m_symbol: Vec<T> = match mobility {
            Mobility::Conserved => grid.k2().iter().map(|&k2| params.lambda * k2).collect(),
            Mobility::NonConserved => vec![params.lambda; grid.len()],
        };
        let ml_symbol = l_symbol.iter().zip(&m_symbol).map(|(&l, &m)| m * l).collect();
        Self { params, grid: Arc::clone(grid), l_symbol, m_symbol, ml_symbol, dealias: false }
    }

    /// Enables 2/3-rule truncation of the transformed nonlinearity `f'(φ)`.
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn params(&self) -> ChParams<T> {
        self.params
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }

    pub fn l_symbol(&self) -> &[T] {
        &self.l_symbol
    }

    pub fn m_symbol(&self) -> &[T] {
        &self.m_symbol
    }

    /// Symbol of the product `ML`.
    pub fn ml_symbol(&self) -> &[T] {
        &self.ml_symbol
    }

    /// Symbol of `(1 + (τ/2) M L)⁻¹`.
    pub fn cn_inverse_symbol(&self, tau: T) -> Vec<T> {
        let half = tau * T::lit(0.5);
        self.ml_symbol.iter().map(|&ml| T::one() / (T::one() + half * ml)).collect()
    }

    /// Symbol of `(1 + (τ/2) M L)⁻¹ (1 - (τ/2) M L)`.
    pub fn cn_propagator_symbol(&self, tau: T) -> Vec<T> {
        let half = tau * T::lit(0.5);
        self.ml_symbol.iter().map(|&ml| (T::one() - half * ml) / (T::one() + half * ml)).collect()
    }

    /// Step-size dependent symbols of the Crank-Nicolson linear solve.
    pub fn cn_symbols(&self, tau: T) -> CnSymbols<T> {
        let inv = self.cn_inverse_symbol(tau);
        let prop = self.cn_propagator_symbol(tau);
        let m_inv = self.m_symbol.iter().zip(&inv).map(|(&m, &i)| m * i).collect();
        CnSymbols { tau, inv, prop, m_inv }
    }

    /// Transform of `f'(φ)`, truncated when dealiasing is on.
    pub fn nonlinear_hat(&self, phi: &RealField<T>) -> SpectralField<T> {
        self.nonlinear_hat_iter(phi.values().iter().copied())
    }

    /// [`GradFlowModel::nonlinear_hat`] of nodal values produced on the fly.
    pub fn nonlinear_hat_iter(&self, phi: impl Iterator<Item = T>) -> SpectralField<T> {
        let mut hat = self.grid.forward_iter(phi.map(f_prime));
        if self.dealias {
            hat.truncate_two_thirds();
        }
        hat
    }

    /// `h² Σ f(φ)`.
    pub fn bulk_energy(&self, phi: &RealField<T>) -> T {
        let h = self.grid.h();
        phi.values().iter().map(|&v| f_bulk(v)).sum::<T>() * h * h
    }

    /// `½ (φ, Lφ)_h` evaluated from Fourier coefficients.
    pub fn gradient_energy_hat(&self, phi_hat: &SpectralField<T>) -> T {
        T::lit(0.5) * phi_hat.weighted_dot(phi_hat, &self.l_symbol)
    }

    /// Discrete free energy `½ ε² Σ k²|φ̂|² + h² Σ f(φ)`.
    pub fn free_energy(&self, phi: &RealField<T>) -> T {
        self.free_energy_with_hat(phi, &phi.forward())
    }

    pub fn free_energy_with_hat(&self, phi: &RealField<T>, phi_hat: &SpectralField<T>) -> T {
        self.gradient_energy_hat(phi_hat) + self.bulk_energy(phi)
    }

    /// `F[a] - F[b]` in incremental form: the gradient part as
    /// `½(a - b, L(a + b))` and the bulk part through the secant quotient.
    /// Keeps relative accuracy when the difference is far below `F` itself.
    pub fn energy_difference(
        &self,
        a: &RealField<T>,
        a_hat: &SpectralField<T>,
        b: &RealField<T>,
        b_hat: &SpectralField<T>,
    ) -> T {
        let h = self.grid.h();
        let diff = a_hat.axpy(-T::one(), b_hat);
        let sum = a_hat.axpy(T::one(), b_hat);
        let bulk: T = a.values().iter().zip(b.values()).map(|(&u, &v)| (u - v) * secant_quotient(u, v)).sum();
        T::lit(0.5) * diff.weighted_dot(&sum, &self.l_symbol) + bulk * h * h
    }

    /// Chemical potential `μ = Lφ + f'(φ)`.
    pub fn mu(&self, phi: &RealField<T>) -> RealField<T> {
        let lphi = phi.forward().scale_by(&self.l_symbol).inverse();
        lphi.zip_map(phi, |l, p| l + f_prime(p))
    }

    /// `μ̂ = L φ̂ + (f'(φ))^`.
    pub fn mu_hat(&self, phi: &RealField<T>, phi_hat: &SpectralField<T>) -> SpectralField<T> {
        phi_hat.scale_by(&self.l_symbol).axpy(T::one(), &self.nonlinear_hat(phi))
    }

    /// `(μ, Mμ)_h`.
    pub fn dissipation_rate(&self, mu: &RealField<T>) -> T {
        self.dissipation_rate_hat(&mu.forward())
    }

    pub fn dissipation_rate_hat(&self, mu_hat: &SpectralField<T>) -> T {
        mu_hat.weighted_dot(mu_hat, &self.m_symbol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::inner_product;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn model(n: usize, eps: f64, lambda: f64) -> GradFlowModel<f64> {
        let g = Grid2D::new(n).unwrap();
        GradFlowModel::cahn_hilliard(&g, ChParams::new(eps, lambda).unwrap())
    }

    /// Random smooth field built from a handful of low Fourier modes.
    fn smooth_field(grid: &Arc<Grid2D<f64>>, seed: u64) -> RealField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(f64, f64, f64, f64)> = (0..5)
            .map(|_| {
                (
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        RealField::from_fn(grid, |x, y| {
            terms.iter().map(|&(a, kx, ky, ph)| a * (2.0 * PI * (kx * x + ky * y) + ph).cos()).sum()
        })
    }

    #[test]
    fn params_validation() {
        assert!(ChParams::new(0.0, 1.0).is_err());
        assert!(ChParams::new(0.1, -1.0).is_err());
        assert!(ChParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn bulk_potential_values() {
        assert_eq!(f_bulk(0.0), 0.25);
        assert_eq!(f_bulk(1.0), 0.0);
        assert_eq!(f_bulk(2.0), 2.25);
        assert_eq!(f_prime(0.0), 0.0);
        assert_eq!(f_prime(1.0), 0.0);
        assert_eq!(f_prime(2.0), 6.0);
        for &p in &[-1.3f64, -0.2, 0.4, 1.7] {
            let d = 1e-4;
            let fd = (f_bulk(p + d) - f_bulk(p - d)) / (2.0 * d);
            assert!((fd - f_prime(p)).abs() < 1e-7);
        }
    }

    #[test]
    fn symbols_are_nonnegative() {
        let m = model(16, 0.1, 0.5);
        assert_eq!(m.l_symbol()[0], 0.0);
        assert!(m.l_symbol()[1..].iter().all(|&l| l > 0.0));
        assert!(m.m_symbol().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn energy_of_constant_states() {
        let m = model(16, 0.01, 1e-3);
        assert!((m.free_energy(&RealField::zeros(m.grid())) - 0.25).abs() < 1e-15);
        assert_eq!(m.free_energy(&RealField::constant(m.grid(), 1.0)), 0.0);
    }

    #[test]
    fn energy_of_taylor_profile() {
        // closed form: ε²π²/16 + ¼(1 - 1/32 + (9/64)/16)
        let eps = 0.01;
        let exact = eps * eps * PI * PI / 16.0 + 0.25 * (1.0 - 0.03125 + 9.0 / 64.0 * 0.0625 * 0.0625);
        let taylor = |x: f64, y: f64| 0.25 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
        // fine-grid quadrature oracle
        let fine = model(1024, eps, 1e-3);
        let quad = fine.free_energy(&RealField::from_fn(fine.grid(), taylor));
        assert!((quad - exact).abs() < 1e-13);

        let m = model(128, eps, 1e-3);
        let e = m.free_energy(&RealField::from_fn(m.grid(), taylor));
        assert!((e - exact).abs() < 1e-13, "{e} vs {exact}");
        assert!((e - 0.2423865).abs() < 5e-7);
    }

    #[test]
    fn chemical_potential_examples() {
        let m = model(16, 0.1, 1e-3);
        assert!(m.mu(&RealField::constant(m.grid(), 1.0)).max_abs() < 1e-15);
        assert!(m.mu(&RealField::zeros(m.grid())).max_abs() < 1e-15);
        let s = RealField::from_fn(m.grid(), |x, _| (2.0 * PI * x).sin());
        let expect = s.map(|v| 0.01 * 4.0 * PI * PI * v + v * v * v - v);
        assert!((&m.mu(&s) - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn dissipation_examples() {
        let m = model(16, 0.1, 1.0);
        assert!(m.dissipation_rate(&RealField::constant(m.grid(), 0.4)).abs() < 1e-15);
        let s = RealField::from_fn(m.grid(), |x, _| (2.0 * PI * x).sin());
        assert!((m.dissipation_rate(&s) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn dissipation_of_taylor_potential_matches_fine_grid() {
        let taylor = |x: f64, y: f64| 0.25 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
        let coarse = model(128, 0.01, 1e-3);
        let fine = model(512, 0.01, 1e-3);
        let d = coarse.dissipation_rate(&coarse.mu(&RealField::from_fn(coarse.grid(), taylor)));
        let oracle = fine.dissipation_rate(&fine.mu(&RealField::from_fn(fine.grid(), taylor)));
        assert!(d > 0.0);
        assert!((d - oracle).abs() <= 1e-10 * oracle);
    }

    #[test]
    fn mu_is_the_variational_derivative() {
        let m = model(32, 0.05, 1e-3);
        for seed in 0..5 {
            let phi = smooth_field(m.grid(), seed);
            let v = smooth_field(m.grid(), seed + 100);
            let d = 1e-5;
            let fd = (m.free_energy(&phi.axpy(d, &v)) - m.free_energy(&phi.axpy(-d, &v))) / (2.0 * d);
            let exact = inner_product(&m.mu(&phi), &v);
            assert!((fd - exact).abs() < 1e-7, "{fd} vs {exact}");
        }
    }

    #[test]
    fn incremental_energy_difference() {
        let m = model(32, 0.05, 1.0);
        let a = smooth_field(m.grid(), 3);
        let b = smooth_field(m.grid(), 4);
        let (ah, bh) = (a.forward(), b.forward());
        let direct = m.free_energy(&a) - m.free_energy(&b);
        assert!((m.energy_difference(&a, &ah, &b, &bh) - direct).abs() < 1e-13);
        assert_eq!(m.energy_difference(&a, &ah, &a, &ah), 0.0);

        // a 1e-9 perturbation: the incremental form matches the second-order
        // expansion far below the rounding level of F itself
        let eta = 1e-9;
        let c = a.map(|v| v + eta * v * v);
        let d = m.energy_difference(&c, &c.forward(), &a, &ah);
        let delta = &c - &a;
        let dh = delta.forward();
        let hessian =
            dh.weighted_dot(&dh, m.l_symbol()) + inner_product(&a.map(f_second), &delta.zip_map(&delta, |x, y| x * y));
        let taylor = inner_product(&m.mu(&a), &delta) + 0.5 * hessian;
        // differencing two O(0.1) energies would leave ~1e-4 relative error here
        assert!(((d - taylor) / taylor).abs() < 1e-5, "{d:e} vs {taylor:e}");
    }

    #[test]
    fn parity() {
        let m = model(32, 0.05, 1e-3);
        let phi = smooth_field(m.grid(), 7);
        let neg = -&phi;
        assert!((m.free_energy(&phi) - m.free_energy(&neg)).abs() < 1e-15);
        assert!((&m.mu(&neg) + &m.mu(&phi)).max_abs() < 1e-14);
    }

    #[test]
    fn allen_cahn_mobility() {
        let g = Grid2D::<f64>::new(8).unwrap();
        let m = GradFlowModel::new(&g, ChParams::new(0.1, 2.0).unwrap(), Mobility::NonConserved);
        assert!(m.m_symbol().iter().all(|&x| x == 2.0));
    }

    proptest::proptest! {
        #[test]
        fn dissipation_is_nonnegative(seed in 0u64..500) {
            let m = model(8, 0.1, 0.3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals = (0..64).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mu = RealField::from_values(m.grid(), vals).unwrap();
            proptest::prop_assert!(m.dissipation_rate(&mu) >= 0.0);
        }
    }
}
