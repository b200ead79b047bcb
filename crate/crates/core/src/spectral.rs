//! Periodic grid on the unit square, 2D discrete Fourier transforms and
//! the diagonal operators built on top of them.
//!
//! Forward transforms carry the `1/n²` normalization, so the `(0, 0)`
//! coefficient of a field is its mean and the discrete `L²` inner product
//! `(u, v)_h = h² Σ u v` equals `Σ_k û_k conj(v̂_k)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform `n × n` periodic grid on `[0, 1]²` with its wavenumber tables.
pub struct Grid2D<T: Scalar> {
    n: usize,
    h: T,
    kx: Vec<i32>,
    ky: Vec<i32>,
    k2: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// Recycled `n²` work buffers; avoids a fresh large allocation per transform.
    work: Mutex<Vec<Vec<Complex<T>>>>,
}

impl<T: Scalar> fmt::Debug for Grid2D<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D").field("n", &self.n).field("h", &self.h).finish()
    }
}

fn signed_frequency(p: usize, n: usize) -> i32 {
    if p < n / 2 {
        p as i32
    } else {
        p as i32 - n as i32
    }
}

impl<T: Scalar> Grid2D<T> {
    /// Builds a shared grid. `n` must be a power of two and at least 8.
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid size must be a power of two >= 8, got {n}")));
        }
        let two_pi = T::TAU();
        let mut kx = Vec::with_capacity(n * n);
        let mut ky = Vec::with_capacity(n * n);
        let mut k2 = Vec::with_capacity(n * n);
        for p in 0..n {
            let fx = signed_frequency(p, n);
            for q in 0..n {
                let fy = signed_frequency(q, n);
                let wx = two_pi * T::lit(fx as f64);
                let wy = two_pi * T::lit(fy as f64);
                kx.push(fx);
                ky.push(fy);
                k2.push(wx * wx + wy * wy);
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            h: T::one() / T::lit(n as f64),
            kx,
            ky,
            k2,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            work: Mutex::new(Vec::new()),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Number of nodes (equivalently, Fourier modes).
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Integer x-wavenumber per mode, row-major over `(kx index, ky index)`.
    pub fn kx(&self) -> &[i32] {
        &self.kx
    }

    pub fn ky(&self) -> &[i32] {
        &self.ky
    }

    /// `|k|² = (2π kx)² + (2π ky)²` per mode.
    pub fn k2(&self) -> &[T] {
        &self.k2
    }

    /// Flat index of the mode with signed wavenumbers `(kx, ky)`.
    pub fn mode_index(&self, kx: i32, ky: i32) -> usize {
        let n = self.n as i32;
        let p = kx.rem_euclid(n) as usize;
        let q = ky.rem_euclid(n) as usize;
        p * self.n + q
    }

    /// Coordinates of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (T, T) {
        (T::lit(i as f64) * self.h, T::lit(j as f64) * self.h)
    }

    fn transform(&self, buf: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        let n = self.n;
        let mut cols = self.work.lock().unwrap().pop().unwrap_or_default();
        let scratch_len = fft.get_inplace_scratch_len();
        cols.resize(buf.len().max(scratch_len), Complex::default());
        // rows (y direction), then columns through a transpose; whichever
        // buffer is not holding the data serves as FFT scratch
        fft.process_with_scratch(buf, &mut cols[..scratch_len]);
        transpose::transpose(buf, &mut cols[..buf.len()], n, n);
        fft.process_with_scratch(&mut cols[..buf.len()], &mut buf[..scratch_len]);
        transpose::transpose(&cols[..buf.len()], buf, n, n);
        self.work.lock().unwrap().push(cols);
    }

    /// Forward transform with `1/n²` normalization.
    pub fn forward(self: &Arc<Self>, field: &RealField<T>) -> SpectralField<T> {
        self.forward_iter(field.values.iter().copied())
    }

    /// Forward transform of nodal values produced on the fly, in storage order.
    pub fn forward_iter(self: &Arc<Self>, values: impl Iterator<Item = T>) -> SpectralField<T> {
        // n is a power of two, so pre-scaling by 1/n² is exact
        let scale = T::one() / T::lit(self.len() as f64);
        let mut buf: Vec<Complex<T>> = values.map(|v| Complex::new(v * scale, T::zero())).collect();
        assert_eq!(buf.len(), self.len(), "value count does not match the grid");
        self.transform(&mut buf, &self.forward);
        SpectralField { grid: Arc::clone(self), coeffs: buf }
    }

    /// Inverse transform; the imaginary residue of the synthesis is discarded.
    pub fn inverse(self: &Arc<Self>, spec: &SpectralField<T>) -> RealField<T> {
        let mut buf = spec.coeffs.clone();
        self.transform(&mut buf, &self.inverse);
        RealField { grid: Arc::clone(self), values: buf.into_iter().map(|c| c.re).collect() }
    }

    /// Inverse transforms of two real fields' spectra with one complex
    /// transform: `a + i b` synthesizes to `u + i v`.
    pub fn inverse_pair(self: &Arc<Self>, a: &SpectralField<T>, b: &SpectralField<T>) -> (RealField<T>, RealField<T>) {
        let mut buf: Vec<Complex<T>> =
            a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| Complex::new(x.re - y.im, x.im + y.re)).collect();
        self.transform(&mut buf, &self.inverse);
        let u = buf.iter().map(|c| c.re).collect();
        let v = buf.iter().map(|c| c.im).collect();
        (RealField { grid: Arc::clone(self), values: u }, RealField { grid: Arc::clone(self), values: v })
    }
}

fn assert_same_grid<T: Scalar>(a: &Arc<Grid2D<T>>, b: &Arc<Grid2D<T>>) {
    assert!(Arc::ptr_eq(a, b) || a.n == b.n, "fields live on different grids ({} vs {})", a.n, b.n);
}

/// Nodal values of a scalar field; node `(i, j)` sits at `(i h, j h)` and is
/// stored at `i * n + j`.
#[derive(Debug, Clone)]
pub struct RealField<T: Scalar> {
    grid: Arc<Grid2D<T>>,
    values: Vec<T>,
}

impl<T: Scalar> PartialEq for RealField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.grid.n == other.grid.n && self.values == other.values
    }
}

impl<T: Scalar> RealField<T> {
    pub fn zeros(grid: &Arc<Grid2D<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Arc<Grid2D<T>>, c: T) -> Self {
        Self { grid: Arc::clone(grid), values: vec![c; grid.len()] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: &Arc<Grid2D<T>>, f: impl Fn(T, T) -> T) -> Self {
        let n = grid.n;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (x, y) = grid.node(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid: Arc::clone(grid), values }
    }

    pub fn from_values(grid: &Arc<Grid2D<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid: Arc::clone(grid), values })
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.n + j]
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self { grid: Arc::clone(&self.grid), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Self {
        assert_same_grid(&self.grid, &other.grid);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: Arc::clone(&self.grid), values }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        self.zip_map(other, |u, v| u + a * v)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn forward(&self) -> SpectralField<T> {
        self.grid.forward(self)
    }
}

impl<T: Scalar> Add for &RealField<T> {
    type Output = RealField<T>;
    fn add(self, rhs: Self) -> RealField<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &RealField<T> {
    type Output = RealField<T>;
    fn sub(self, rhs: Self) -> RealField<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Mul<T> for &RealField<T> {
    type Output = RealField<T>;
    fn mul(self, rhs: T) -> RealField<T> {
        self.map(|a| a * rhs)
    }
}

impl<T: Scalar> Neg for &RealField<T> {
    type Output = RealField<T>;
    fn neg(self) -> RealField<T> {
        self.map(|a| -a)
    }
}

/// Fourier coefficients `φ̂_k = (1/n²) Σ φ_ij e^{-i 2π (kx x + ky y)}`.
#[derive(Debug, Clone)]
pub struct SpectralField<T: Scalar> {
    grid: Arc<Grid2D<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> SpectralField<T> {
    pub fn zeros(grid: &Arc<Grid2D<T>>) -> Self {
        Self { grid: Arc::clone(grid), coeffs: vec![Complex::default(); grid.len()] }
    }

    /// Coefficient-free stand-in for a field that is about to be replaced.
    pub(crate) fn placeholder(grid: &Arc<Grid2D<T>>) -> Self {
        Self { grid: Arc::clone(grid), coeffs: Vec::new() }
    }

    pub fn from_coeffs(grid: &Arc<Grid2D<T>>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: coeffs.len() });
        }
        Ok(Self { grid: Arc::clone(grid), coeffs })
    }

    pub fn grid(&self) -> &Arc<Grid2D<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Coefficient of the mode with signed wavenumbers `(kx, ky)`.
    pub fn coeff(&self, kx: i32, ky: i32) -> Complex<T> {
        self.coeffs[self.grid.mode_index(kx, ky)]
    }

    /// Multiplies mode-wise by a real symbol table.
    pub fn apply_symbol(&self, symbol: &[T]) -> Result<Self> {
        if symbol.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch { expected: self.coeffs.len(), found: symbol.len() });
        }
        Ok(self.scale_by(symbol))
    }

    pub(crate) fn scale_by(&self, symbol: &[T]) -> Self {
        debug_assert_eq!(symbol.len(), self.coeffs.len());
        let coeffs = self.coeffs.iter().zip(symbol).map(|(&c, &s)| c * s).collect();
        Self { grid: Arc::clone(&self.grid), coeffs }
    }

    pub fn map_modes(&self, f: impl Fn(usize, Complex<T>) -> Complex<T>) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(k, &c)| f(k, c)).collect();
        Self { grid: Arc::clone(&self.grid), coeffs }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_same_grid(&self.grid, &other.grid);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: Arc::clone(&self.grid), coeffs }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        self.zip_map(other, |u, v| u + v * a)
    }

    /// `Σ_k symbol_k Re(û_k conj(v̂_k))`; with a unit symbol this is `(u, v)_h`.
    pub fn weighted_dot(&self, other: &Self, symbol: &[T]) -> T {
        assert_same_grid(&self.grid, &other.grid);
        self.coeffs.iter().zip(&other.coeffs).zip(symbol).map(|((a, b), &s)| s * (a.re * b.re + a.im * b.im)).sum()
    }

    /// `Σ_k Re(û_k conj(v̂_k)) = (u, v)_h`.
    pub fn dot(&self, other: &Self) -> T {
        assert_same_grid(&self.grid, &other.grid);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    /// Zeroes every mode with `|kx| > n/3` or `|ky| > n/3` (2/3 rule).
    pub fn truncate_two_thirds(&mut self) {
        let cut = (self.grid.n / 3) as i32;
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            if self.grid.kx[k].abs() > cut || self.grid.ky[k].abs() > cut {
                *c = Complex::default();
            }
        }
    }

    pub fn inverse(&self) -> RealField<T> {
        self.grid.inverse(self)
    }
}

pub fn fft_forward<T: Scalar>(field: &RealField<T>) -> SpectralField<T> {
    field.forward()
}

pub fn fft_inverse<T: Scalar>(spec: &SpectralField<T>) -> RealField<T> {
    spec.inverse()
}

pub fn apply_symbol<T: Scalar>(spec: &SpectralField<T>, symbol: &[T]) -> Result<SpectralField<T>> {
    spec.apply_symbol(symbol)
}

/// Discrete `L²` inner product `h² Σ_ij u_ij v_ij`.
pub fn inner_product<T: Scalar>(u: &RealField<T>, v: &RealField<T>) -> T {
    assert_same_grid(&u.grid, &v.grid);
    let h = u.grid.h;
    u.values.iter().zip(&v.values).map(|(&a, &b)| a * b).sum::<T>() * h * h
}

/// `(u, 1)_h`, the mean over the unit square.
pub fn mean<T: Scalar>(u: &RealField<T>) -> T {
    let h = u.grid.h;
    u.values.iter().copied().sum::<T>() * h * h
}
