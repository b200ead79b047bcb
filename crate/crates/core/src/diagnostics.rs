//! Per-step records, field error norms and convergence-order fitting.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::RealField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub linf: f64,
}

/// Discrete `L²` and max-norm of `u - v`.
pub fn error_norms<T: Scalar>(u: &RealField<T>, v: &RealField<T>) -> ErrorNorms {
    let h = u.grid().h().as_f64();
    let (mut sq, mut max) = (0.0f64, 0.0f64);
    for (&a, &b) in u.values().iter().zip(v.values()) {
        let d = (a - b).as_f64();
        sq += d * d;
        max = max.max(d.abs());
    }
    ErrorNorms { l2: (sq * h * h).sqrt(), linf: max }
}

/// Least-squares slope of `log(error)` against `log(τ)` for a sequence of
/// errors at `τ, τ/ratio, τ/ratio², ...`.
pub fn order_fit(errors: &[f64], ratio: f64) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::Config("order fit needs at least two errors".into()));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::Config(format!("order fit needs positive finite errors, got {bad}")));
    }
    if !(ratio > 1.0) {
        return Err(Error::Config(format!("refinement ratio must exceed 1, got {ratio}")));
    }
    let xs: Vec<f64> = (0..errors.len()).map(|k| -(k as f64) * ratio.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// How refinement errors are formed from a step-halving sequence of solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefinementMode {
    /// `‖u_τ - u_{τ/2}‖`, each level against the next finer one.
    #[default]
    AdjacentPairs,
    /// `‖u_τ - u_finest‖` against the finest solution.
    FinestReference,
}

/// Refinement errors from solutions ordered coarse to fine.
pub fn refinement_errors<T: Scalar>(solutions: &[RealField<T>], mode: RefinementMode) -> Vec<ErrorNorms> {
    match mode {
        RefinementMode::AdjacentPairs => solutions.windows(2).map(|w| error_norms(&w[0], &w[1])).collect(),
        RefinementMode::FinestReference => match solutions.split_last() {
            Some((finest, rest)) => rest.iter().map(|u| error_norms(u, finest)).collect(),
            None => Vec::new(),
        },
    }
}

/// One row of `run.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub energy_target: f64,
    pub mass: f64,
    pub alpha: f64,
    pub beta: f64,
    pub solver_iters: usize,
    pub dissipation: f64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone)]
pub struct Snapshot<T: Scalar> {
    pub step: usize,
    pub t: f64,
    pub phi: RealField<T>,
}

/// Everything a run produces in memory.
#[derive(Debug, Clone)]
pub struct RunSeries<T: Scalar> {
    /// Echo of the configuration, as `key = value` lines.
    pub config_echo: String,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_phi: RealField<T>,
}

impl<T: Scalar> RunSeries<T> {
    pub fn total_wall_ns(&self) -> u64 {
        self.records.iter().map(|r| r.wall_ns).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid2D;
    use std::f64::consts::PI;

    #[test]
    fn norms() {
        let g = Grid2D::<f64>::new(16).unwrap();
        let u = RealField::from_fn(&g, |x, y| x * y);
        assert_eq!(error_norms(&u, &u), ErrorNorms { l2: 0.0, linf: 0.0 });

        let shifted = u.map(|v| v - 0.3);
        let e = error_norms(&u, &shifted);
        assert!((e.l2 - 0.3).abs() < 1e-14 && (e.linf - 0.3).abs() < 1e-14);

        let s = RealField::from_fn(&g, |x, _| (2.0 * PI * x).sin());
        let e = error_norms(&(&u + &s), &u);
        assert!((e.l2 - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((e.linf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norms_form_a_metric() {
        let g = Grid2D::<f64>::new(8).unwrap();
        let a = RealField::from_fn(&g, |x, y| (x - y).sin());
        let b = RealField::from_fn(&g, |x, y| x * x + y);
        let c = RealField::from_fn(&g, |x, _| (3.0 * x).cos());
        let (ab, ba) = (error_norms(&a, &b), error_norms(&b, &a));
        assert_eq!(ab, ba);
        let (bc, ac) = (error_norms(&b, &c), error_norms(&a, &c));
        assert!(ac.l2 <= ab.l2 + bc.l2 + 1e-15);
        assert!(ac.linf <= ab.linf + bc.linf + 1e-15);
    }

    #[test]
    fn fitted_orders() {
        assert!((order_fit(&[1.0, 0.25, 0.0625], 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((order_fit(&[1.0, 0.5], 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((order_fit(&[1.0, 1.0 / 27.0], 3.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(order_fit(&[1.0], 2.0).is_err());
        assert!(order_fit(&[1.0, 0.0], 2.0).is_err());
        assert!(order_fit(&[1.0, -0.5], 2.0).is_err());
    }

    #[test]
    fn refinement_modes() {
        let g = Grid2D::<f64>::new(8).unwrap();
        let sols: Vec<_> = [0.0, 0.5, 0.75].iter().map(|&c| RealField::constant(&g, c)).collect();
        let adj = refinement_errors(&sols, RefinementMode::AdjacentPairs);
        assert_eq!(adj.iter().map(|e| e.linf).collect::<Vec<_>>(), vec![0.5, 0.25]);
        let fin = refinement_errors(&sols, RefinementMode::FinestReference);
        assert_eq!(fin.iter().map(|e| e.linf).collect::<Vec<_>>(), vec![0.75, 0.25]);
    }
}
