//! Scalar root solve for the energy constraint `u(β) = Σ cᵢ βⁱ = 0`.

use crate::error::StepFailure;
use crate::scalar::Scalar;

/// Coefficients `c0..c4` of `u(β) = F[Φ̂ + βw] - F̃^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoly<T> {
    pub c: [T; 5],
}

impl<T: Scalar> EnergyPoly<T> {
    pub fn new(c: [T; 5]) -> Self {
        Self { c }
    }

    pub fn eval(&self, beta: T) -> T {
        horner(&self.c, beta)
    }

    pub fn derivative(&self, beta: T) -> T {
        let c = &self.c;
        horner(&[c[1], T::lit(2.0) * c[2], T::lit(3.0) * c[3], T::lit(4.0) * c[4]], beta)
    }
}

fn horner<T: Scalar>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + ci)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSolverOptions<T> {
    /// Absolute tolerance on `|u(β)|`.
    pub tol: T,
    pub max_iters: usize,
    /// Roots with `|β|` above this are rejected as spurious.
    pub max_abs_beta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRoot<T> {
    pub beta: T,
    pub iters: usize,
}

/// Below this `|u'(0)|` the constraint is treated as singular.
const SINGULAR_SLOPE: f64 = 1e-14;

/// Newton iteration from `β = 0`; the result is the real root of smallest
/// magnitude, so a Newton iterate that overshoots past a nearer root is
/// replaced by that root. At least one Newton step is taken, so `β` resolves
/// the defect `c0` even when it is already below tolerance.
pub fn solve_beta<T: Scalar>(poly: &EnergyPoly<T>, opts: &BetaSolverOptions<T>) -> Result<BetaRoot<T>, StepFailure> {
    assert!(opts.tol > T::zero(), "tolerance must be positive");
    let [c0, c1, ..] = poly.c;
    if c1.abs() < T::lit(SINGULAR_SLOPE) {
        if c0.abs() <= opts.tol {
            return Ok(BetaRoot { beta: T::zero(), iters: 0 });
        }
        return Err(StepFailure::SingularConstraint { c0: c0.as_f64(), c1: c1.as_f64() });
    }

    let mut beta = T::zero();
    let mut converged = None;
    let mut iters = 0;
    while iters < opts.max_iters {
        iters += 1;
        let slope = poly.derivative(beta);
        let next = beta - poly.eval(beta) / slope;
        if !next.is_finite() {
            break;
        }
        beta = next;
        if poly.eval(beta).abs() <= opts.tol {
            converged = Some(beta);
            break;
        }
    }

    let radius = match converged {
        Some(b) => b.abs(),
        None if opts.max_abs_beta.is_finite() => opts.max_abs_beta,
        None => cauchy_bound(&poly.c),
    };
    let nearest = real_roots(&poly.c, -radius, radius, opts.tol)
        .into_iter()
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let chosen = match (converged, nearest) {
        (Some(b), Some(r)) if r.abs() < b.abs() && poly.eval(r).abs() <= opts.tol => r,
        (Some(b), _) => b,
        (None, Some(r)) if poly.eval(r).abs() <= opts.tol => r,
        _ => return Err(StepFailure::RootDiverged { beta: beta.as_f64(), iters }),
    };
    if chosen.abs() > opts.max_abs_beta {
        return Err(StepFailure::RootDiverged { beta: chosen.as_f64(), iters });
    }
    Ok(BetaRoot { beta: chosen, iters })
}

fn degree<T: Scalar>(c: &[T]) -> usize {
    c.iter().rposition(|&x| x != T::zero()).unwrap_or(0)
}

fn cauchy_bound<T: Scalar>(c: &[T]) -> T {
    let d = degree(c);
    if d == 0 {
        return T::one();
    }
    let lead = c[d].abs();
    T::one() + c[..d].iter().fold(T::zero(), |m, &x| m.max(x.abs() / lead))
}

/// All real roots of the polynomial with coefficients `c` (ascending powers)
/// inside `[lo, hi]`, sorted ascending.
///
/// The interval is cut at the critical points (found recursively from the
/// derivative) so every piece is monotone; sign changes are then bisected.
/// A critical point where `|p| <= tol` is reported as a touching root.
pub fn real_roots<T: Scalar>(c: &[T], lo: T, hi: T, tol: T) -> Vec<T> {
    let d = degree(c);
    let c = &c[..=d];
    if d == 0 || lo > hi {
        return Vec::new();
    }
    if d == 1 {
        let r = -c[0] / c[1];
        return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
    }
    let deriv: Vec<T> = (1..=d).map(|i| T::lit(i as f64) * c[i]).collect();
    let crit = real_roots(&deriv, lo, hi, tol);

    let mut cuts = Vec::with_capacity(crit.len() + 2);
    cuts.push(lo);
    cuts.extend(crit.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);

    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (horner(c, a), horner(c, b));
        if fa == T::zero() {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != T::zero() {
            roots.push(bisect(c, a, b, fa));
        }
    }
    if horner(c, hi) == T::zero() {
        roots.push(hi);
    }
    for &x in &crit {
        if horner(c, x).abs() <= tol {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(16.0) * (T::one() + b.abs()));
    roots
}

fn bisect<T: Scalar>(c: &[T], mut a: T, mut b: T, mut fa: T) -> T {
    let two = T::lit(2.0);
    for _ in 0..200 {
        let m = (a + b) / two;
        if m <= a || m >= b {
            break;
        }
        let fm = horner(c, m);
        if fm == T::zero() {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    (a + b) / two
}
