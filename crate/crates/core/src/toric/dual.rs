//! Legendre-dual (complex-coordinate) description of invariant metrics.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::grid::{chebyshev_derivative, chebyshev_eval, MomentGrid, CHOP_LEVEL};
use super::potential::{MomentInverter, ToricPotential};
use crate::error::{Error, Result};

/// `log cosh s` without overflow.
pub fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + libm::log1p(libm::exp(-2.0 * a)) - core::f64::consts::LN_2
}

/// Kähler potential `f(s) = log cosh s + k(tanh s)` in the logarithmic
/// coordinate `s`, with `k` interpolated at the moment nodes in `τ = tanh s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    grid: Arc<MomentGrid>,
    k: Vec<f64>,
    dk: Vec<f64>,
    ddk: Vec<f64>,
}

impl DualPotential {
    fn from_node_values(grid: &Arc<MomentGrid>, values: &[f64]) -> Self {
        let mut k = grid.chebyshev_coefficients(values);
        super::grid::chop_coefficients(&mut k, CHOP_LEVEL);
        let dk = chebyshev_derivative(&k);
        let ddk = chebyshev_derivative(&dk);
        Self {
            grid: grid.clone(),
            k,
            dk,
            ddk,
        }
    }

    /// `f(s) = sup_x (x s − u(x))`.
    pub fn from_potential(u: &ToricPotential) -> Result<Self> {
        let grid = u.grid();
        let inv = MomentInverter::new(u);
        let values = grid
            .nodes()
            .iter()
            .map(|tau| {
                let s = libm::atanh(*tau);
                let p = inv.solve(s)?;
                Ok(p.y * (s - p.sigma) + log_cosh(p.sigma) - log_cosh(s) - u.h(p.y))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self::from_node_values(grid, &values))
    }

    /// `u(x) = sup_s (x s − f(s))`, kept to Chebyshev degree `<= degree`.
    pub fn to_potential(&self, degree: usize) -> Result<ToricPotential> {
        let h = self
            .grid
            .nodes()
            .iter()
            .map(|x| {
                let tau = self.solve_slope(*x)?;
                let gap = (tau - x) / (1.0 - tau * x);
                Ok(
                    x * libm::atanh(gap) + 0.5 * libm::log((1.0 - tau * tau) / (1.0 - x * x))
                        - self.k_at(tau),
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        ToricPotential::from_node_values(&self.grid, &h, degree)
    }

    pub fn grid(&self) -> &Arc<MomentGrid> {
        &self.grid
    }

    fn k_at(&self, tau: f64) -> f64 {
        chebyshev_eval(&self.k, tau)
    }

    /// `τ` with `f'(atanh τ) = x`; `f'` is increasing in `τ`.
    fn solve_slope(&self, x: f64) -> Result<f64> {
        let g = |t: f64| t + (1.0 - t * t) * chebyshev_eval(&self.dk, t) - x;
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut t = x;
        for _ in 0..200 {
            let r = g(t);
            if r == 0.0 {
                return Ok(t);
            }
            if r < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let dk = chebyshev_eval(&self.dk, t);
            let dr = 1.0 - 2.0 * t * dk + (1.0 - t * t) * chebyshev_eval(&self.ddk, t);
            let mut next = t - r / dr;
            if !(dr > 0.0) || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-17 + 1e-16 * t.abs() {
                return Ok(next);
            }
            t = next;
        }
        if g(t).abs() < 1e-13 {
            return Ok(t);
        }
        Err(Error::RootBracketFailure { target: x })
    }

    /// `f(s)`.
    pub fn value(&self, s: f64) -> f64 {
        log_cosh(s) + self.k_at(libm::tanh(s))
    }

    /// `f'(s) = τ + (1 − τ²)k'(τ)`, the moment coordinate.
    pub fn slope(&self, s: f64) -> f64 {
        let t = libm::tanh(s);
        t + (1.0 - t * t) * chebyshev_eval(&self.dk, t)
    }

    /// `f''(s) = Φ`.
    pub fn curvature(&self, s: f64) -> f64 {
        let t = libm::tanh(s);
        let c = libm::cosh(s);
        let w = 1.0 / (c * c);
        w * (1.0 - 2.0 * t * chebyshev_eval(&self.dk, t) + w * chebyshev_eval(&self.ddk, t))
    }

    /// `s ↦ f(s + c)`, the pull-back under `z ↦ e^c z`.
    pub fn orbit(&self, c: f64) -> Self {
        let tc = libm::tanh(c);
        let values: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .map(|t| log_cosh(c) + libm::log1p(t * tc) + self.k_at((t + tc) / (1.0 + t * tc)))
            .collect();
        Self::from_node_values(&self.grid, &values)
    }

    /// `(1 − λ)·self + λ·other`, a straight line of Kähler potentials.
    pub fn interpolate(&self, other: &DualPotential, lambda: f64) -> Self {
        let a = self.grid.chebyshev_values(&self.k);
        let b = self.grid.chebyshev_values(&other.k);
        let values: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
            .collect();
        Self::from_node_values(&self.grid, &values)
    }
}

/// `tr_{g_u} ω_v = f_v''(s)/f_u''(s)` evaluated in the complex coordinate.
pub fn dual_trace(u: &DualPotential, v: &DualPotential, s: f64) -> f64 {
    v.curvature(s) / u.curvature(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::{orbit_action, toric_trace, ToricState};

    fn fixture(g: &Arc<MomentGrid>) -> ToricPotential {
        ToricPotential::from_fn(g, |x| {
            0.1 * (1.0 - x * x) * (1.0 - x * x) + 0.05 * x * (1.0 - x * x)
        })
    }

    #[test]
    fn double_dual_round_trip() {
        let g = MomentGrid::new(64).unwrap();
        let u = fixture(&g);
        let back = DualPotential::from_potential(&u)
            .unwrap()
            .to_potential(g.galerkin_degree())
            .unwrap();
        assert!(back.distance(&u) < 1e-10, "{}", back.distance(&u));
    }

    #[test]
    fn canonical_dual_is_log_cosh() {
        let g = MomentGrid::new(32).unwrap();
        let f = DualPotential::from_potential(&ToricPotential::canonical(&g)).unwrap();
        for s in [-3.0, 0.0, 0.4, 7.0] {
            assert!((f.value(s) - log_cosh(s)).abs() < 1e-14);
        }
    }

    #[test]
    fn orbit_matches_affine_shift() {
        let g = MomentGrid::new(64).unwrap();
        let u = fixture(&g);
        let f = DualPotential::from_potential(&u).unwrap();
        let shifted = f.orbit(0.4).to_potential(g.galerkin_degree()).unwrap();
        assert!(
            shifted
                .normalized()
                .distance(&orbit_action(&u, 0.4).normalized())
                < 1e-9
        );
    }

    #[test]
    fn trace_agrees_with_complex_coordinate() {
        let g = MomentGrid::new(128).unwrap();
        let u = fixture(&g);
        let v = orbit_action(&ToricPotential::canonical(&g), 0.3);
        let tr = toric_trace(&u, &v).unwrap();
        let (fu, fv) = (
            DualPotential::from_potential(&u).unwrap(),
            DualPotential::from_potential(&v).unwrap(),
        );
        let st = ToricState::new(&u).unwrap();
        for (j, s) in st.moment().iter().enumerate() {
            let oracle = dual_trace(&fu, &fv, *s);
            assert!(
                (tr.values()[j] - oracle).abs() < 1e-9 * oracle,
                "{j} {s} {} {oracle}",
                tr.values()[j]
            );
        }
        assert!((tr.integral() - 2.0).abs() < 1e-9);
    }
}
