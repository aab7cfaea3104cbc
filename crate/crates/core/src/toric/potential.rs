//! Symplectic potentials, their curvature and the inverse moment map.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::grid::{
    chebyshev_derivative, chebyshev_eval, chop_coefficients, legendre_to_chebyshev, MomentGrid,
    Profile, CHOP_LEVEL,
};
use crate::error::{Error, Result};

/// `u = u₀ + h` with `h` a Chebyshev series on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricPotential {
    grid: Arc<MomentGrid>,
    coeffs: Vec<f64>,
}

/// Holomorphy potential `a·x + b` of a twisting vector field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ToricTwist {
    pub a: f64,
    pub b: f64,
}

impl ToricTwist {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0
    }
}

/// `∫_{-1}^{1} T_m dx`.
fn chebyshev_integral(m: usize) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        2.0 / (1.0 - (m * m) as f64)
    }
}

impl ToricPotential {
    /// The Fubini–Study potential `u₀`.
    pub fn canonical(grid: &Arc<MomentGrid>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![0.0],
        }
    }

    pub fn from_chebyshev(grid: &Arc<MomentGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > grid.len() {
            return Err(Error::InvalidArgument(
                "correction degree must be below K".into(),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn from_legendre(grid: &Arc<MomentGrid>, coeffs: &[f64]) -> Result<Self> {
        Self::from_chebyshev(grid, legendre_to_chebyshev(coeffs))
    }

    /// Interpolates `h` at the nodes and keeps degrees `<= degree`.
    pub fn from_node_values(grid: &Arc<MomentGrid>, values: &[f64], degree: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MismatchedGrids);
        }
        let mut coeffs = grid.chebyshev_coefficients(values);
        coeffs.truncate((degree + 1).min(grid.len()));
        chop_coefficients(&mut coeffs, CHOP_LEVEL);
        Self::from_chebyshev(grid, coeffs)
    }

    /// `h = f` sampled at the nodes, truncated to the Galerkin degree.
    pub fn from_fn(grid: &Arc<MomentGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().iter().map(|x| f(*x)).collect();
        Self::from_node_values(grid, &values, grid.galerkin_degree()).expect("grid length")
    }

    pub fn grid(&self) -> &Arc<MomentGrid> {
        &self.grid
    }

    /// Chebyshev coefficients of `h`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.grid.chebyshev_values(&self.coeffs)
    }

    pub fn h_profile(&self) -> Profile {
        Profile::from_chebyshev(&self.grid, self.coeffs.clone()).expect("degree below K")
    }

    pub fn h(&self, x: f64) -> f64 {
        chebyshev_eval(&self.coeffs, x)
    }

    /// Full potential `u(x)` (finite on `[-1, 1]`).
    pub fn value(&self, x: f64) -> f64 {
        canonical_value(x) + self.h(x)
    }

    /// `∫ h dx`.
    pub fn h_integral(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * chebyshev_integral(m))
            .sum()
    }

    /// Same potential with `∫ h dx = 0`.
    pub fn normalized(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] -= 0.5 * self.h_integral();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `a·self + b·other` on the corrections.
    pub fn combine(&self, a: f64, other: &ToricPotential, b: f64) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|m| {
                a * self.coeffs.get(m).copied().unwrap_or(0.0)
                    + b * other.coeffs.get(m).copied().unwrap_or(0.0)
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `h + Σ_m c_m P_m` for Legendre coefficients `c`.
    pub fn add_legendre(&self, coeffs: &[f64]) -> Self {
        let extra = legendre_to_chebyshev(coeffs);
        let len = self.coeffs.len().max(extra.len());
        let coeffs = (0..len)
            .map(|m| {
                self.coeffs.get(m).copied().unwrap_or(0.0) + extra.get(m).copied().unwrap_or(0.0)
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Chebyshev coefficients of `h^{(order)}`.
    pub fn derivative_coefficients(&self, order: usize) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        for _ in 0..order {
            c = chebyshev_derivative(&c);
        }
        c
    }

    /// Sup-norm of the difference of corrections at the nodes, after
    /// removing the `dx`-mean.
    pub fn distance(&self, other: &ToricPotential) -> f64 {
        let d = self.combine(1.0, other, -1.0).normalized();
        d.h_values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `u₀(x)` with the `0·log 0 = 0` convention at the endpoints.
pub fn canonical_value(x: f64) -> f64 {
    let term = |l: f64| if l <= 0.0 { 0.0 } else { l * libm::log(l) };
    0.5 * (term(1.0 - x) + term(1.0 + x))
}

/// Evaluator for `h'`, `h''` of a fixed potential at arbitrary points,
/// used to invert the moment map.
#[derive(Debug, Clone)]
pub struct MomentInverter {
    d1: Vec<f64>,
    d2: Vec<f64>,
    bound: f64,
}

/// A point located through the inverse moment map: `y = tanh σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPoint {
    pub y: f64,
    pub sigma: f64,
    /// `1 − y²`, computed as `sech²σ`.
    pub one_minus_y2: f64,
}

impl MomentInverter {
    pub fn new(v: &ToricPotential) -> Self {
        let d1 = v.derivative_coefficients(1);
        let d2 = chebyshev_derivative(&d1);
        let bound = d1.iter().map(|c| c.abs()).sum::<f64>();
        Self { d1, d2, bound }
    }

    /// `h'(y)`.
    pub fn slope(&self, y: f64) -> f64 {
        chebyshev_eval(&self.d1, y)
    }

    /// `h''(y)`.
    pub fn curvature(&self, y: f64) -> f64 {
        chebyshev_eval(&self.d2, y)
    }

    /// Solves `v'(y) = s`, i.e. `σ + h'(tanh σ) = s`, by safeguarded Newton
    /// in `σ` (uniformly well conditioned up to the poles).
    pub fn solve(&self, s: f64) -> Result<MomentPoint> {
        let g = |sigma: f64| sigma + self.slope(libm::tanh(sigma)) - s;
        let (mut lo, mut hi) = (s - self.bound - 1e-12, s + self.bound + 1e-12);
        if !(g(lo) <= 0.0 && g(hi) >= 0.0) {
            return Err(Error::RootBracketFailure { target: s });
        }
        let mut sigma = (s - self.slope(libm::tanh(s))).clamp(lo, hi);
        for _ in 0..200 {
            let y = libm::tanh(sigma);
            let r = sigma + self.slope(y) - s;
            if r == 0.0 {
                break;
            }
            if r < 0.0 {
                lo = sigma;
            } else {
                hi = sigma;
            }
            let sech2 = 1.0 / (libm::cosh(sigma) * libm::cosh(sigma));
            let dr = 1.0 + sech2 * self.curvature(y);
            let mut next = sigma - r / dr;
            if !(dr > 0.0) || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            let step = (next - sigma).abs();
            sigma = next;
            if step <= 1e-15 * (1.0 + sigma.abs()) || hi - lo <= 1e-15 * (1.0 + sigma.abs()) {
                let c = libm::cosh(sigma);
                return Ok(MomentPoint {
                    y: libm::tanh(sigma),
                    sigma,
                    one_minus_y2: 1.0 / (c * c),
                });
            }
        }
        let c = libm::cosh(sigma);
        if (sigma + self.slope(libm::tanh(sigma)) - s).abs() <= 1e-12 * (1.0 + s.abs()) {
            return Ok(MomentPoint {
                y: libm::tanh(sigma),
                sigma,
                one_minus_y2: 1.0 / (c * c),
            });
        }
        Err(Error::RootBracketFailure { target: s })
    }

    /// `1 + (1 − y²)h''(y) = (1 − y²)·v''(y)`.
    pub fn convexity_factor(&self, p: &MomentPoint) -> f64 {
        1.0 + p.one_minus_y2 * self.curvature(p.y)
    }
}

/// Metric quantities of a symplectic potential at the collocation nodes.
#[derive(Debug, Clone)]
pub struct ToricState {
    potential: ToricPotential,
    /// `Φ, Φ', Φ'', Φ'''` in `x`.
    phi: [Vec<f64>; 4],
    /// `1 + (1 − x²)h'' = (1 − x²)u''`.
    convexity: Vec<f64>,
    /// `q = 1/(1 + (1 − x²)h'')` and `q'`.
    reduced: [Vec<f64>; 2],
    h2: Vec<f64>,
    moment: Vec<f64>,
    scalar: Vec<f64>,
    scalar_slope: Vec<f64>,
}

impl ToricState {
    pub fn new(potential: &ToricPotential) -> Result<Self> {
        let grid = potential.grid().clone();
        let mut derivs = Vec::with_capacity(6);
        let mut c = potential.coefficients().to_vec();
        for _ in 0..6 {
            derivs.push(grid.chebyshev_values(&c));
            c = chebyshev_derivative(&c);
        }
        let k = grid.len();
        let mut phi = [vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]];
        let mut convexity = vec![0.0; k];
        let mut reduced = [vec![0.0; k], vec![0.0; k]];
        let mut moment = vec![0.0; k];
        for j in 0..k {
            let x = grid.nodes()[j];
            let w = grid.one_minus_x2()[j];
            let (h1, h2, h3, h4, h5) = (
                derivs[1][j],
                derivs[2][j],
                derivs[3][j],
                derivs[4][j],
                derivs[5][j],
            );
            let p0 = w * h2;
            let p1 = -2.0 * x * h2 + w * h3;
            let p2 = -2.0 * h2 - 4.0 * x * h3 + w * h4;
            let p3 = -6.0 * h3 - 6.0 * x * h4 + w * h5;
            let r = 1.0 + p0;
            if !(r > 0.0) {
                return Err(Error::NonConvexPotential {
                    node: j,
                    value: r / w,
                });
            }
            let q = 1.0 / r;
            let q1 = -p1 * q * q;
            let q2 = 2.0 * p1 * p1 * q * q * q - p2 * q * q;
            let q3 = -6.0 * p1 * p1 * p1 * q * q * q * q + 6.0 * p1 * p2 * q * q * q - p3 * q * q;
            phi[0][j] = w * q;
            phi[1][j] = -2.0 * x * q + w * q1;
            phi[2][j] = -2.0 * q - 4.0 * x * q1 + w * q2;
            phi[3][j] = -6.0 * q1 - 6.0 * x * q2 + w * q3;
            convexity[j] = r;
            reduced[0][j] = q;
            reduced[1][j] = q1;
            moment[j] = libm::atanh(x) + h1;
        }
        let scalar = phi[2].iter().map(|v| -v).collect();
        let scalar_slope = phi[3].iter().map(|v| -v).collect();
        let h2 = derivs.swap_remove(2);
        Ok(Self {
            potential: potential.clone(),
            phi,
            convexity,
            reduced,
            h2,
            moment,
            scalar,
            scalar_slope,
        })
    }

    pub fn potential(&self) -> &ToricPotential {
        &self.potential
    }

    pub fn grid(&self) -> &Arc<MomentGrid> {
        self.potential.grid()
    }

    /// `Φ^{(order)}` at the nodes, `order <= 3`.
    pub fn phi(&self, order: usize) -> &[f64] {
        &self.phi[order]
    }

    /// `S = −Φ''`.
    pub fn scalar(&self) -> &[f64] {
        &self.scalar
    }

    /// `dS/dx`.
    pub fn scalar_slope(&self) -> &[f64] {
        &self.scalar_slope
    }

    /// `s = u'(x)` at the nodes.
    pub fn moment(&self) -> &[f64] {
        &self.moment
    }

    /// `1 + (1 − x²)h''` at the nodes.
    pub fn convexity(&self) -> &[f64] {
        &self.convexity
    }

    /// `q = Φ/(1 − x²)` (order 0) and `q'` (order 1).
    pub fn reduced_phi(&self, order: usize) -> &[f64] {
        &self.reduced[order]
    }

    /// `h''` at the nodes.
    pub fn correction_hessian(&self) -> &[f64] {
        &self.h2
    }

    /// `u''` at the nodes.
    pub fn hessian(&self) -> Vec<f64> {
        self.convexity
            .iter()
            .zip(self.grid().one_minus_x2())
            .map(|(r, w)| r / w)
            .collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.grid().integrate(values)
    }

    /// Discrete average of `S` over `dx`; the cohomological value is 2.
    pub fn scalar_average(&self) -> f64 {
        0.5 * self.integrate(&self.scalar)
    }

    /// `tr_{g_u} ω_v = u''(x)/v''(y)` with `v'(y) = u'(x)`.
    pub fn trace_of(&self, v: &ToricPotential) -> Result<Vec<f64>> {
        let inv = MomentInverter::new(v);
        let w = self.grid().one_minus_x2();
        self.moment
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let p = inv.solve(*s)?;
                Ok(self.convexity[j] * p.one_minus_y2 / (w[j] * inv.convexity_factor(&p)))
            })
            .collect()
    }
}

/// Scalar curvature profile `S = −(1/u'')''`.
pub fn abreu_scalar(u: &ToricPotential) -> Result<Profile> {
    let state = ToricState::new(u)?;
    Profile::from_values(u.grid(), state.scalar.clone())
}

/// `tr_{g_u} ω_v` at the nodes of `u`'s moment coordinate.
pub fn toric_trace(u: &ToricPotential, v: &ToricPotential) -> Result<Profile> {
    let values = ToricState::new(u)?.trace_of(v)?;
    Profile::from_values(u.grid(), values)
}

/// Pull-back of `ω_u` by `z ↦ e^c z`: `u_c = u − c·x`.
pub fn orbit_action(u: &ToricPotential, c: f64) -> ToricPotential {
    let mut coeffs = u.coefficients().to_vec();
    if coeffs.len() < 2 {
        coeffs.resize(2, 0.0);
    }
    coeffs[1] -= c;
    ToricPotential {
        grid: u.grid().clone(),
        coeffs,
    }
}

/// `ρ_u(X) = a·x` in the moment coordinate of `u`; the constant is fixed
/// by `∫ρ dx = 0`, and `x` already has zero mean.
pub fn rho_potential(u: &ToricPotential, twist: &ToricTwist) -> Profile {
    let grid = u.grid();
    Profile::from_chebyshev(grid, vec![0.0, twist.a]).expect("degree 1")
}
