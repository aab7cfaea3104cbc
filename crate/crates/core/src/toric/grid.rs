//! Chebyshev–Gauss collocation on the moment interval `(-1, 1)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// `K` interior Chebyshev–Gauss nodes in ascending order, with Fejér
/// quadrature weights and basis tables.
#[derive(Debug)]
pub struct MomentGrid {
    k: usize,
    theta: Vec<f64>,
    x: Vec<f64>,
    one_minus_x2: Vec<f64>,
    weights: Vec<f64>,
    cheb: Vec<f64>,
    legendre: Vec<f64>,
}

impl PartialEq for MomentGrid {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
    }
}

impl MomentGrid {
    pub const MIN_NODES: usize = 32;

    pub fn new(k: usize) -> Result<Arc<Self>> {
        if !(Self::MIN_NODES..=1024).contains(&k) {
            return Err(Error::InvalidArgument(
                "moment grid needs 32..=1024 nodes".into(),
            ));
        }
        // ascending x_j = cos θ_j with θ_j decreasing from π
        let theta: Vec<f64> = (0..k)
            .map(|j| PI - (2 * j + 1) as f64 * PI / (2 * k) as f64)
            .collect();
        let x: Vec<f64> = theta.iter().map(|t| libm::cos(*t)).collect();
        let one_minus_x2 = theta
            .iter()
            .map(|t| libm::sin(*t) * libm::sin(*t))
            .collect();
        let weights = theta
            .iter()
            .map(|t| {
                let tail: f64 = (1..=k / 2)
                    .map(|l| libm::cos(2.0 * l as f64 * t) / (4.0 * (l * l) as f64 - 1.0))
                    .sum();
                2.0 / k as f64 * (1.0 - 2.0 * tail)
            })
            .collect();
        let mut cheb = vec![0.0; k * k];
        let mut legendre = vec![0.0; k * k];
        for j in 0..k {
            for m in 0..k {
                cheb[j * k + m] = libm::cos(m as f64 * theta[j]);
            }
            let (mut p0, mut p1) = (1.0, x[j]);
            legendre[j * k] = 1.0;
            if k > 1 {
                legendre[j * k + 1] = p1;
            }
            for m in 2..k {
                let p2 = ((2 * m - 1) as f64 * x[j] * p1 - (m - 1) as f64 * p0) / m as f64;
                legendre[j * k + m] = p2;
                p0 = p1;
                p1 = p2;
            }
        }
        Ok(Arc::new(Self {
            k,
            theta,
            x,
            one_minus_x2,
            weights,
            cheb,
            legendre,
        }))
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// `1 − x_j²`, computed as `sin²θ_j`.
    pub fn one_minus_x2(&self) -> &[f64] {
        &self.one_minus_x2
    }

    /// Fejér weights: exact for polynomials of degree `< K` on `[-1, 1]`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Default degree of potential corrections: Galerkin products of two
    /// such polynomials stay within the exactness of the quadrature.
    pub fn galerkin_degree(&self) -> usize {
        self.k / 2 - 1
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Values at nodes → Chebyshev coefficients of the interpolant.
    pub fn chebyshev_coefficients(&self, values: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut out: Vec<f64> = (0..k)
            .map(|m| {
                (0..k)
                    .map(|j| values[j] * self.cheb[j * k + m])
                    .sum::<f64>()
                    * 2.0
                    / k as f64
            })
            .collect();
        out[0] *= 0.5;
        out
    }

    /// Chebyshev coefficients (any length `<= K`) → node values.
    pub fn chebyshev_values(&self, coeffs: &[f64]) -> Vec<f64> {
        let k = self.k;
        (0..k)
            .map(|j| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * self.cheb[j * k + m])
                    .sum()
            })
            .collect()
    }

    /// Legendre coefficients (length `<= K`) → node values.
    pub fn legendre_values(&self, coeffs: &[f64]) -> Vec<f64> {
        let k = self.k;
        (0..k)
            .map(|j| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * self.legendre[j * k + m])
                    .sum()
            })
            .collect()
    }

    /// `P_m(x_j)`.
    pub fn legendre_at(&self, node: usize, degree: usize) -> f64 {
        self.legendre[node * self.k + degree]
    }

    /// Fejér projection onto `P_0..=P_degree`; exact when the integrand
    /// `f·P_m` has degree below `K`.
    pub fn legendre_project(&self, values: &[f64], degree: usize) -> Vec<f64> {
        let k = self.k;
        (0..=degree)
            .map(|m| {
                let s: f64 = (0..k)
                    .map(|j| self.weights[j] * values[j] * self.legendre[j * k + m])
                    .sum();
                s * (2 * m + 1) as f64 / 2.0
            })
            .collect()
    }
}

/// Derivative of a Chebyshev series.
pub fn chebyshev_derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut d = vec![0.0; n];
    // d_{m-1} = d_{m+1} + 2m·c_m, then halve d_0
    for m in (1..n).rev() {
        let above = if m + 1 < n { d[m + 1] } else { 0.0 };
        d[m - 1] = above + 2.0 * m as f64 * coeffs[m];
    }
    if n > 0 {
        d[0] *= 0.5;
    }
    d
}

/// Derivative of a Legendre series.
pub fn legendre_derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    // d_{m-1} = (2m-1) (b_m + d_{m+1}/(2m+3))
    for m in (1..n).rev() {
        let above = if m + 1 < n {
            d[m + 1] / (2 * m + 3) as f64
        } else {
            0.0
        };
        d[m - 1] = (2 * m - 1) as f64 * (coeffs[m] + above);
    }
    d
}

/// `Σ b_m P_m(x)` by the three-term recurrence.
pub fn legendre_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    let (mut p0, mut p1) = (1.0, x);
    for (m, b) in coeffs.iter().enumerate() {
        let p = match m {
            0 => 1.0,
            1 => x,
            _ => {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        sum += b * p;
    }
    sum
}

/// `Σ a_m T_m(x)` by Clenshaw.
pub fn chebyshev_eval(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// A function sampled on a [`MomentGrid`], carried as the Chebyshev
/// coefficients of its interpolant.
#[derive(Debug, Clone)]
pub struct Profile {
    grid: Arc<MomentGrid>,
    coeffs: Vec<f64>,
    values: Vec<f64>,
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Profile {
    pub fn from_values(grid: &Arc<MomentGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MismatchedGrids);
        }
        let mut coeffs = grid.chebyshev_coefficients(&values);
        chop_coefficients(&mut coeffs, CHOP_LEVEL);
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            values,
        })
    }

    pub fn from_fn(grid: &Arc<MomentGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|x| f(*x)).collect();
        Self::from_values(grid, values).expect("grid length")
    }

    /// Exact representation from Chebyshev coefficients (length `<= K`).
    pub fn from_chebyshev(grid: &Arc<MomentGrid>, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > grid.len() {
            return Err(Error::InvalidArgument(
                "more Chebyshev coefficients than nodes".into(),
            ));
        }
        coeffs.resize(grid.len(), 0.0);
        let values = grid.chebyshev_values(&coeffs);
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            values,
        })
    }

    /// Exact representation of a Legendre series of degree `< K`.
    pub fn from_legendre(grid: &Arc<MomentGrid>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > grid.len() {
            return Err(Error::InvalidArgument(
                "more Legendre coefficients than nodes".into(),
            ));
        }
        Self::from_chebyshev(grid, legendre_to_chebyshev(coeffs))
    }

    pub fn constant(grid: &Arc<MomentGrid>, c: f64) -> Self {
        Self::from_chebyshev(grid, vec![c]).expect("length 1")
    }

    pub fn grid(&self) -> &Arc<MomentGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn chebyshev(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn derivative(&self) -> Profile {
        let coeffs = chebyshev_derivative(&self.coeffs);
        let values = self.grid.chebyshev_values(&coeffs);
        Profile {
            grid: self.grid.clone(),
            coeffs,
            values,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        chebyshev_eval(&self.coeffs, x)
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Mean with respect to `dx` on `[-1, 1]`.
    pub fn mean(&self) -> f64 {
        0.5 * self.integral()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Profile {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| f(j, *v))
            .collect();
        Profile::from_values(&self.grid, values).expect("grid length")
    }

    pub fn zip_values(&self, other: &Profile, f: impl Fn(f64, f64) -> f64) -> Profile {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Profile::from_values(&self.grid, values).expect("grid length")
    }

    pub fn add(&self, other: &Profile) -> Profile {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Profile {
            grid: self.grid.clone(),
            coeffs,
            values,
        }
    }

    pub fn sub(&self, other: &Profile) -> Profile {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Profile {
        Profile {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn mul(&self, other: &Profile) -> Profile {
        self.zip_values(other, |a, b| a * b)
    }
}

/// Drops the trailing coefficients that sit below `rel · max|c|`, which for
/// interpolants of smooth data is rounding noise that high derivatives
/// would otherwise amplify.
pub fn chop_coefficients(coeffs: &mut Vec<f64>, rel: f64) {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let keep = coeffs
        .iter()
        .rposition(|c| c.abs() > rel * max)
        .map_or(1, |i| i + 1);
    coeffs.truncate(keep);
}

/// Relative level used by [`Profile::from_values`] to discard interpolation noise.
pub const CHOP_LEVEL: f64 = 1e-14;

/// Converts a Legendre series to a Chebyshev series of the same degree.
pub fn legendre_to_chebyshev(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut out = vec![0.0; n.max(1)];
    if n == 0 {
        return out;
    }
    // Chebyshev coefficients of P_m via the recurrence on coefficient vectors
    let mut p_prev = vec![0.0; n];
    let mut p_cur = vec![0.0; n];
    p_prev[0] = 1.0;
    out[0] += coeffs[0];
    if n > 1 {
        p_cur[1] = 1.0;
        out[1] += coeffs[1];
    }
    for m in 2..n {
        // x·T_i = (T_{i+1} + T_{|i-1|})/2
        let mut xp = vec![0.0; n];
        for (i, c) in p_cur.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if i + 1 < n {
                xp[i + 1] += if i == 0 { *c } else { 0.5 * c };
            }
            if i >= 1 {
                xp[i - 1] += if i == 1 { *c * 0.5 } else { 0.5 * c };
            }
        }
        let a = (2 * m - 1) as f64 / m as f64;
        let b = (m - 1) as f64 / m as f64;
        let next: Vec<f64> = xp.iter().zip(&p_prev).map(|(x, p)| a * x - b * p).collect();
        for (o, v) in out.iter_mut().zip(&next) {
            *o += coeffs[m] * v;
        }
        p_prev = core::mem::replace(&mut p_cur, next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_weights_integrate_polynomials() {
        let g = MomentGrid::new(32).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let x4: Vec<f64> = g.nodes().iter().map(|x| libm::pow(*x, 4.0)).collect();
        assert!((g.integrate(&x4) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_round_trip_and_derivative() {
        let g = MomentGrid::new(32).unwrap();
        let f = Profile::from_fn(&g, |x| libm::exp(x) * libm::sin(2.0 * x));
        let back = g.chebyshev_values(f.chebyshev());
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let d = f.derivative();
        for (x, v) in g.nodes().iter().zip(d.values()) {
            let exact = libm::exp(*x) * (libm::sin(2.0 * x) + 2.0 * libm::cos(2.0 * x));
            assert!((v - exact).abs() < 1e-11, "{} {}", x, v - exact);
        }
        assert!((f.eval(0.3) - libm::exp(0.3) * libm::sin(0.6)).abs() < 1e-13);
    }

    #[test]
    fn legendre_machinery_is_consistent() {
        let g = MomentGrid::new(32).unwrap();
        let b = [0.3, -0.2, 0.5, 0.1, -0.05];
        let prof = Profile::from_legendre(&g, &b).unwrap();
        let vals = g.legendre_values(&b);
        for (j, x) in g.nodes().iter().enumerate() {
            assert!((prof.values()[j] - vals[j]).abs() < 1e-14);
            assert!((legendre_eval(&b, *x) - vals[j]).abs() < 1e-14);
        }
        let proj = g.legendre_project(&vals, 6);
        for (m, c) in proj.iter().enumerate() {
            let exact = b.get(m).copied().unwrap_or(0.0);
            assert!((c - exact).abs() < 1e-14);
        }
        let db = legendre_derivative(&b);
        let dprof = prof.derivative();
        for (j, x) in g.nodes().iter().enumerate() {
            assert!((legendre_eval(&db, *x) - dprof.values()[j]).abs() < 1e-13);
        }
    }
}
