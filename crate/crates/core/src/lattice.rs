//! Periodic spectral fields on flat complex tori `C^n / (2πZ)^{2n}`.
//!
//! Real axes are ordered `(x_1, y_1, x_2, y_2)` with `z_α = x_α + i y_α`;
//! samples are stored row-major with the first real axis slowest.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Cubic sampling grid on the fundamental domain `[0, 2π)^{2n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    points: usize,
}

impl TorusGrid {
    /// Largest total sample count accepted (`N^{2n}`).
    pub const MAX_SAMPLES: usize = 1 << 22;

    /// `dim` is the complex dimension (1 or 2), `points` the samples per
    /// real axis (power of two in `8..=256`).
    pub fn new(dim: usize, points: usize) -> Result<Self> {
        let ok = (dim == 1 || dim == 2)
            && points.is_power_of_two()
            && (8..=256).contains(&points)
            && points
                .checked_pow(2 * dim as u32)
                .is_some_and(|t| t <= Self::MAX_SAMPLES);
        if ok {
            Ok(Self { dim, points })
        } else {
            Err(Error::InvalidGrid { dim, points })
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn real_axes(&self) -> usize {
        2 * self.dim
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.real_axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.spacing(), self.real_axes() as f64)
    }

    /// Lebesgue volume `(2π)^{2n}` of the fundamental domain.
    pub fn volume(&self) -> f64 {
        libm::pow(2.0 * PI, self.real_axes() as f64)
    }

    /// Per-axis sample indices of a flat index; unused trailing slots are 0.
    pub fn multi_index(&self, index: usize) -> [usize; 4] {
        let mut out = [0; 4];
        let mut rest = index;
        for axis in (0..self.real_axes()).rev() {
            out[axis] = rest % self.points;
            rest /= self.points;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.real_axes()]
            .iter()
            .fold(0, |acc, &i| acc * self.points + (i % self.points))
    }

    /// Real coordinates of a sample.
    pub fn coordinates(&self, index: usize) -> [f64; 4] {
        let h = self.spacing();
        self.multi_index(index).map(|i| i as f64 * h)
    }

    /// Signed integer wavenumber of a per-axis index.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.points as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber used for odd derivatives: the Nyquist mode is dropped.
    fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.points / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    /// Largest per-axis wavenumber kept by the 2/3 dealiasing rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.points / 3
    }

    fn check(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::MismatchedGrids)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purity {
    Real,
    Complex,
}

/// Whether a complex derivative is `∂/∂z^α` or `∂/∂z̄^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Holomorphic,
    Antiholomorphic,
}

/// Sampled function on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<Complex64>,
    purity: Purity,
}

impl Field {
    pub fn real(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MismatchedGrids);
        }
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Ok(Self {
            grid,
            values,
            purity: Purity::Real,
        })
    }

    pub fn complex(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MismatchedGrids);
        }
        Ok(Self {
            grid,
            values,
            purity: Purity::Complex,
        })
    }

    /// Builds a field from values and a purity flag; a `Real` flag
    /// requires imaginary parts within `1e-12·max|value|`.
    pub fn with_purity(grid: TorusGrid, values: Vec<Complex64>, purity: Purity) -> Result<Self> {
        let field = Self::complex(grid, values)?;
        match purity {
            Purity::Complex => Ok(field),
            Purity::Real => {
                let scale = field.sup_norm().max(f64::MIN_POSITIVE);
                if field.values.iter().any(|v| v.im.abs() > 1e-12 * scale) {
                    return Err(Error::InvalidArgument(
                        "field flagged real has imaginary part".into(),
                    ));
                }
                Ok(field.real_part())
            }
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let axes = grid.real_axes();
        let values = (0..grid.len())
            .map(|i| Complex64::new(f(&grid.coordinates(i)[..axes]), 0.0))
            .collect();
        Self {
            grid,
            values,
            purity: Purity::Real,
        }
    }

    pub fn from_complex_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let axes = grid.real_axes();
        let values = (0..grid.len())
            .map(|i| f(&grid.coordinates(i)[..axes]))
            .collect();
        Self {
            grid,
            values,
            purity: Purity::Complex,
        }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(c, 0.0); grid.len()],
            purity: Purity::Real,
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn purity(&self) -> Purity {
        self.purity
    }

    pub fn is_real(&self) -> bool {
        self.purity == Purity::Real
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Drops imaginary parts and flags the result real.
    pub fn real_part(&self) -> Field {
        let values = self
            .values
            .iter()
            .map(|v| Complex64::new(v.re, 0.0))
            .collect();
        Field {
            grid: self.grid,
            values,
            purity: Purity::Real,
        }
    }

    pub fn imag_part(&self) -> Field {
        let values = self
            .values
            .iter()
            .map(|v| Complex64::new(v.im, 0.0))
            .collect();
        Field {
            grid: self.grid,
            values,
            purity: Purity::Real,
        }
    }

    pub fn conj(&self) -> Field {
        let values = self.values.iter().map(|v| v.conj()).collect();
        Field {
            grid: self.grid,
            values,
            purity: self.purity,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Lebesgue mean over the fundamental domain.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    fn zip_with(
        &self,
        other: &Field,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.grid.check(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(*a, *b))
            .collect();
        let purity = if self.is_real() && other.is_real() {
            Purity::Real
        } else {
            Purity::Complex
        };
        Ok(Field {
            grid: self.grid,
            values,
            purity,
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b * c)
    }

    pub fn scale(&self, c: f64) -> Field {
        let values = self.values.iter().map(|v| v * c).collect();
        Field {
            grid: self.grid,
            values,
            purity: self.purity,
        }
    }

    pub fn shift(&self, c: f64) -> Field {
        let values = self.values.iter().map(|v| v + c).collect();
        Field {
            grid: self.grid,
            values,
            purity: self.purity,
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        let values = self.values.iter().map(|v| f(*v)).collect();
        Field {
            grid: self.grid,
            values,
            purity: Purity::Complex,
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut coeffs = self.values.clone();
        Fft::new(self.grid.points).transform_cube(&mut coeffs, self.grid.real_axes(), false);
        let scale = 1.0 / self.grid.len() as f64;
        for c in coeffs.iter_mut() {
            *c *= scale;
        }
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn derivative(&self, axis: usize, direction: Direction) -> Field {
        spectral_derivative(self, axis, direction)
    }

    /// Low-pass filter keeping wavenumbers `|k| <= N/3` on every axis.
    pub fn dealiased(&self) -> Field {
        self.spectrum().dealiased().to_field(self.purity)
    }
}

/// Fourier coefficients `c_k` with `f(x) = Σ_k c_k e^{i k·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_coefficients(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::MismatchedGrids);
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Signed wavenumber vector of a coefficient slot.
    pub fn wavevector(&self, index: usize) -> [i64; 4] {
        let multi = self.grid.multi_index(index);
        let mut k = [0; 4];
        for axis in 0..self.grid.real_axes() {
            k[axis] = self.grid.wavenumber(multi[axis]);
        }
        k
    }

    fn multiplier(&self, index: usize, axis: usize, direction: Direction) -> Complex64 {
        let multi = self.grid.multi_index(index);
        let kx = self.grid.derivative_wavenumber(multi[2 * axis]);
        let ky = self.grid.derivative_wavenumber(multi[2 * axis + 1]);
        match direction {
            Direction::Holomorphic => Complex64::new(0.5 * ky, 0.5 * kx),
            Direction::Antiholomorphic => Complex64::new(-0.5 * ky, 0.5 * kx),
        }
    }

    pub fn derivative(&self, axis: usize, direction: Direction) -> Spectrum {
        assert!(axis < self.grid.dim, "complex axis out of range");
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.multiplier(i, axis, direction))
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// `∂_α ∂_β̄` in one pass.
    pub fn mixed(&self, alpha: usize, beta: usize) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c * self.multiplier(i, alpha, Direction::Holomorphic)
                    * self.multiplier(i, beta, Direction::Antiholomorphic)
            })
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn dealiased(&self) -> Spectrum {
        let cutoff = self.grid.dealias_cutoff() as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.wavevector(i);
                if k.iter().all(|v| v.abs() <= cutoff) {
                    *c
                } else {
                    ZERO
                }
            })
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// `Σ_k |c_k|²`; times the volume this is `∫|f|²` (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn to_field(&self, purity: Purity) -> Field {
        let mut values = self.coeffs.clone();
        let fft = Fft::new(self.grid.points);
        fft.transform_cube(&mut values, self.grid.real_axes(), true);
        let scale = self.grid.len() as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
        let field = Field {
            grid: self.grid,
            values,
            purity: Purity::Complex,
        };
        match purity {
            Purity::Real => field.real_part(),
            Purity::Complex => field,
        }
    }
}

/// Per-point `n×n` complex tensor `T_{αβ̄}` (or `T^α_β̄`), row index first.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: TorusGrid,
    data: Vec<Complex64>,
}

impl TensorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.dim();
        Self {
            grid,
            data: vec![ZERO; grid.len() * n * n],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn at(&self, point: usize, a: usize, b: usize) -> Complex64 {
        let n = self.grid.dim();
        self.data[(point * n + a) * n + b]
    }

    #[inline]
    pub fn set(&mut self, point: usize, a: usize, b: usize, v: Complex64) {
        let n = self.grid.dim();
        self.data[(point * n + a) * n + b] = v;
    }

    pub fn component(&self, a: usize, b: usize) -> Field {
        let values = (0..self.grid.len()).map(|p| self.at(p, a, b)).collect();
        Field {
            grid: self.grid,
            values,
            purity: Purity::Complex,
        }
    }

    pub fn set_component(&mut self, a: usize, b: usize, field: &Field) {
        for (p, v) in field.values.iter().enumerate() {
            self.set(p, a, b, *v);
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// `∂f/∂z^α` or `∂f/∂z̄^α` by Fourier multiplier.
pub fn spectral_derivative(f: &Field, axis: usize, direction: Direction) -> Field {
    f.spectrum()
        .derivative(axis, direction)
        .to_field(Purity::Complex)
}

/// Complex Hessian `f_{,αβ̄}`.
pub fn mixed_hessian(f: &Field) -> TensorField {
    let spec = f.spectrum();
    let n = f.grid.dim();
    let mut out = TensorField::zeros(f.grid);
    for a in 0..n {
        for b in 0..n {
            out.set_component(a, b, &spec.mixed(a, b).to_field(Purity::Complex));
        }
    }
    out
}

/// `Σ f·density·(cell volume)`.
pub fn integrate(f: &Field, density: &Field) -> Result<Complex64> {
    f.grid.check(&density.grid)?;
    let sum: Complex64 = f
        .values
        .iter()
        .zip(&density.values)
        .map(|(a, w)| a * w.re)
        .sum();
    Ok(sum * f.grid.cell_volume())
}

/// `integrate(f·conj(g), density)`.
pub fn inner_product(f: &Field, g: &Field, density: &Field) -> Result<Complex64> {
    f.grid.check(&g.grid)?;
    f.grid.check(&density.grid)?;
    let sum: Complex64 = f
        .values
        .iter()
        .zip(&g.values)
        .zip(&density.values)
        .map(|((a, b), w)| a * b.conj() * w.re)
        .sum();
    Ok(sum * f.grid.cell_volume())
}
