//! Initial data.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::InitKind;
use crate::error::{Error, Result};
use crate::output::read_snapshot;
use crate::scalar::Scalar;
use crate::spectral::{Grid2D, RealField};

pub fn taylor(x: f64, y: f64) -> f64 {
    0.25 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
}

pub fn coarsening(x: f64, y: f64) -> f64 {
    let sq = (8.0 * PI * x).cos() * (6.0 * PI * y).cos();
    0.05 * ((6.0 * PI * x).cos() * (8.0 * PI * y).cos()
        + sq * sq
        + (2.0 * PI * x - 10.0 * PI * y).cos() * (4.0 * PI * x - 2.0 * PI * y).cos())
}

/// Evaluates the initial condition at the grid nodes.
pub fn init_field<T: Scalar>(kind: &InitKind, grid: &Arc<Grid2D<T>>) -> Result<RealField<T>> {
    let eval = |f: fn(f64, f64) -> f64| RealField::from_fn(grid, |x: T, y: T| T::lit(f(x.as_f64(), y.as_f64())));
    match kind {
        InitKind::Taylor => Ok(eval(taylor)),
        InitKind::Coarsening => Ok(eval(coarsening)),
        InitKind::File(path) => {
            let (n, values) =
                read_snapshot(path).map_err(|e| Error::Config(format!("unreadable initial data: {e}")))?;
            if n != grid.n() {
                return Err(Error::Config(format!(
                    "{}: snapshot is {n}x{n} but the grid is {}x{}",
                    path.display(),
                    grid.n(),
                    grid.n()
                )));
            }
            RealField::from_values(grid, values.into_iter().map(T::lit).collect())
        }
    }
}
