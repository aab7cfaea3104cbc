//! Lichnerowicz-type operators on the projective line in moment coordinates.
//!
//! Invariant functions are profiles in `x`; the metric enters through
//! `Φ = 1/u''` and `S = −Φ''`. Non-invariant functions are handled one
//! angular mode at a time.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix2, SymmetricEigen};

use super::grid::{chebyshev_derivative, Profile};
use super::potential::ToricState;
use crate::error::{Error, Result};

/// Node values of `f, f', …, f^{(order)}`.
fn jet(f: &Profile, order: usize) -> Vec<Vec<f64>> {
    let grid = f.grid();
    let mut out = Vec::with_capacity(order + 1);
    let mut c = f.chebyshev().to_vec();
    out.push(f.values().to_vec());
    for _ in 0..order {
        c = chebyshev_derivative(&c);
        out.push(grid.chebyshev_values(&c));
    }
    out
}

fn profile(state: &ToricState, values: Vec<f64>) -> Profile {
    Profile::from_values(state.grid(), values).expect("grid length")
}

/// `Δf = (Φ f')'`.
pub fn laplacian(state: &ToricState, f: &Profile) -> Profile {
    let d = jet(f, 2);
    let (p0, p1) = (state.phi(0), state.phi(1));
    profile(
        state,
        (0..d[0].len())
            .map(|j| p0[j] * d[2][j] + p1[j] * d[1][j])
            .collect(),
    )
}

/// `⟨∂a, ∂̄b⟩ = Φ a' b'`.
pub fn grad_pairing(state: &ToricState, a: &Profile, b: &Profile) -> Profile {
    let (da, db) = (a.derivative(), b.derivative());
    let p0 = state.phi(0);
    profile(
        state,
        (0..p0.len())
            .map(|j| p0[j] * da.values()[j] * db.values()[j])
            .collect(),
    )
}

/// `Df = Δ²f + S Δf + ⟨∂S, ∂̄f⟩` on invariant functions.
pub fn lichnerowicz(state: &ToricState, f: &Profile) -> Profile {
    let d = jet(f, 4);
    let p = [state.phi(0), state.phi(1), state.phi(2), state.phi(3)];
    let (s, ds) = (state.scalar(), state.scalar_slope());
    let values = (0..d[0].len())
        .map(|j| {
            let (p0, p1, p2, p3) = (p[0][j], p[1][j], p[2][j], p[3][j]);
            let bilap = p0 * p0 * d[4][j]
                + 4.0 * p0 * p1 * d[3][j]
                + (3.0 * p0 * p2 + 2.0 * p1 * p1) * d[2][j]
                + (p0 * p3 + p1 * p2) * d[1][j];
            let lap = p0 * d[2][j] + p1 * d[1][j];
            bilap + s[j] * lap + p0 * ds[j] * d[1][j]
        })
        .collect();
    profile(state, values)
}

/// `(Φ² f'')''`, the same operator in divergence form.
pub fn lichnerowicz_divergence(state: &ToricState, f: &Profile) -> Profile {
    let f2 = f.derivative().derivative();
    let p0 = state.phi(0);
    let inner = profile(
        state,
        (0..p0.len())
            .map(|j| p0[j] * p0[j] * f2.values()[j])
            .collect(),
    );
    inner.derivative().derivative()
}

/// `∫ Φ² f'' g'' dx = ⟨Lf, Lg⟩`.
pub fn lichnerowicz_form(state: &ToricState, f: &Profile, g: &Profile) -> f64 {
    let f2 = f.derivative().derivative();
    let g2 = g.derivative().derivative();
    let p0 = state.phi(0);
    let integrand: Vec<f64> = (0..p0.len())
        .map(|j| p0[j] * p0[j] * f2.values()[j] * g2.values()[j])
        .collect();
    state.integrate(&integrand)
}

/// Bilinear remainder of the Leibniz rule for `D` along a kernel element:
/// `Δv·Δ²u + Δ(Δu Δv) + Δ²v·Δu + 2S Δu Δv`.
pub fn b_operator(state: &ToricState, u: &Profile, v: &Profile) -> Profile {
    let lu = laplacian(state, u);
    let lv = laplacian(state, v);
    let llu = laplacian(state, &lu);
    let llv = laplacian(state, &lv);
    let cross = laplacian(state, &lu.mul(&lv));
    let s = state.scalar();
    let values = (0..s.len())
        .map(|j| {
            let (a, b) = (lu.values()[j], lv.values()[j]);
            b * llu.values()[j] + cross.values()[j] + llv.values()[j] * a + 2.0 * s[j] * a * b
        })
        .collect();
    profile(state, values)
}

/// `sup |D⟨∂v,∂̄ξ⟩ − ⟨∂v,∂̄Dξ⟩ − B(v, ξ)|` together with the sup of the first
/// term, requiring `‖Dv‖ <= eps_ker`.
pub fn leibniz_residual(
    state: &ToricState,
    v: &Profile,
    xi: &Profile,
    eps_ker: f64,
) -> Result<(f64, f64)> {
    let defect = lichnerowicz(state, v).sup_norm();
    if defect > eps_ker {
        return Err(Error::KernelPreconditionViolated {
            defect,
            threshold: eps_ker,
        });
    }
    let lhs = lichnerowicz(state, &grad_pairing(state, v, xi));
    let rhs = grad_pairing(state, v, &lichnerowicz(state, xi));
    let b = b_operator(state, v, xi);
    Ok((lhs.sub(&rhs).sub(&b).sup_norm(), lhs.sup_norm()))
}

/// A function `(1 − x²)·g(x)·e^{ikθ}` with `|k| = 2`, smooth at both poles.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMode {
    pub k: i32,
    pub g: Profile,
}

impl AngularMode {
    pub fn new(k: i32, g: Profile) -> Result<Self> {
        if k.abs() != 2 {
            return Err(Error::InvalidArgument("angular modes need |k| = 2".into()));
        }
        Ok(Self { k, g })
    }

    /// Values of `(1 − x²)g` at the nodes.
    pub fn values(&self) -> Vec<f64> {
        let w = self.g.grid().one_minus_x2();
        self.g.values().iter().zip(w).map(|(g, w)| g * w).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Δ_k` on `(1 − x²)g`, returned as the new `g`. The `1/Φ` singularity of
/// the angular term cancels against `Φ'` analytically.
fn mode_laplacian_reduced(state: &ToricState, g: &Profile) -> Vec<f64> {
    let d = jet(g, 2);
    let grid = state.grid();
    let (w, x) = (grid.one_minus_x2(), grid.nodes());
    let (q, q1, h2) = (
        state.reduced_phi(0),
        state.reduced_phi(1),
        state.correction_hessian(),
    );
    (0..w.len())
        .map(|j| {
            let (g0, g1, g2) = (d[0][j], d[1][j], d[2][j]);
            let xj = x[j];
            q[j] * (-2.0 * g0 - 4.0 * xj * g1 + w[j] * g2) + (-2.0 * xj * q[j] + w[j] * q1[j]) * g1
                - 4.0 * (1.0 + 2.0 * h2[j] + w[j] * h2[j] * h2[j]) * q[j] * g0
                - 2.0 * xj * q1[j] * g0
        })
        .collect()
}

/// `D` on the angular mode `k`: `Δ_k² + SΔ_k + ⟨∂S, ∂̄·⟩`. The conjugate
/// operator `D̄` acts on mode `k` as `D` on mode `−k`.
pub fn mode_lichnerowicz(state: &ToricState, f: &AngularMode) -> AngularMode {
    let grid = state.grid();
    let (w, x) = (grid.one_minus_x2(), grid.nodes());
    let lap = profile(state, mode_laplacian_reduced(state, &f.g));
    let bilap = mode_laplacian_reduced(state, &lap);
    let dg = f.g.derivative();
    let q = state.reduced_phi(0);
    let (s, ds) = (state.scalar(), state.scalar_slope());
    let k = f.k as f64;
    let values = (0..w.len())
        .map(|j| {
            let g0 = f.g.values()[j];
            let grad = q[j] * (-2.0 * x[j] * g0 + w[j] * dg.values()[j]) - k * g0;
            bilap[j] + s[j] * lap.values()[j] + ds[j] * grad
        })
        .collect();
    AngularMode {
        k: f.k,
        g: profile(state, values),
    }
}

pub fn mode_lichnerowicz_bar(state: &ToricState, f: &AngularMode) -> AngularMode {
    let flipped = AngularMode {
        k: -f.k,
        g: f.g.clone(),
    };
    let out = mode_lichnerowicz(state, &flipped);
    AngularMode { k: f.k, g: out.g }
}

/// `sup |(DD̄ − D̄D)f|` on an angular mode.
pub fn commutator_residual(state: &ToricState, f: &AngularMode) -> f64 {
    let a = mode_lichnerowicz(state, &mode_lichnerowicz_bar(state, f));
    let b = mode_lichnerowicz_bar(state, &mode_lichnerowicz(state, f));
    let w = state.grid().one_minus_x2();
    (0..w.len()).fold(0.0, |m, j| {
        m.max((w[j] * (a.g.values()[j] - b.g.values()[j])).abs())
    })
}

/// Eigenvalues of `D̄` restricted to the invariant kernel `span{1, x}`,
/// ascending. On the projective line this requires `S` affine in `x`.
pub fn eigensplit_kernel_bar(state: &ToricState, tolerance: f64) -> Result<[f64; 2]> {
    let grid = state.grid();
    let s = state.scalar();
    let fit = grid.legendre_project(s, 1);
    let defect = grid
        .nodes()
        .iter()
        .zip(s)
        .fold(0.0f64, |m, (x, s)| m.max((s - fit[0] - fit[1] * x).abs()));
    if defect > tolerance {
        return Err(Error::NotExtremal { defect });
    }
    let basis = [
        Profile::constant(grid, 1.0),
        Profile::from_chebyshev(grid, vec![0.0, 1.0])?,
    ];
    // On invariant functions ⟨∂S, ∂̄f⟩ = ⟨∂̄S, ∂f⟩, so D̄ = D.
    let images: Vec<Profile> = basis.iter().map(|e| lichnerowicz(state, e)).collect();
    let mut stiffness = Matrix2::zeros();
    let mut gram = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            stiffness[(a, b)] = grid.integrate(basis[a].mul(&images[b]).values());
            gram[(a, b)] = grid.integrate(basis[a].mul(&basis[b]).values());
        }
    }
    let inv_sqrt = Matrix2::new(
        1.0 / libm::sqrt(gram[(0, 0)]),
        0.0,
        0.0,
        1.0 / libm::sqrt(gram[(1, 1)]),
    );
    let m = inv_sqrt * stiffness * inv_sqrt;
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let (a, b) = (eig[0], eig[1]);
    Ok(if a <= b { [a, b] } else { [b, a] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::{MomentGrid, ToricPotential};

    fn legendre(grid: &alloc::sync::Arc<crate::toric::MomentGrid>, l: usize) -> Profile {
        let mut c = vec![0.0; l + 1];
        c[l] = 1.0;
        Profile::from_legendre(grid, &c).unwrap()
    }

    #[test]
    fn round_metric_spectrum() {
        let g = MomentGrid::new(64).unwrap();
        let st = ToricState::new(&ToricPotential::canonical(&g)).unwrap();
        for l in 0..8 {
            let p = legendre(&g, l);
            let lam = ((l as f64) - 1.0) * l as f64 * (l as f64 + 1.0) * (l as f64 + 2.0);
            let d = lichnerowicz(&st, &p);
            let err = d.sub(&p.scale(lam)).sup_norm();
            assert!(err < 1e-10 * (1.0 + lam), "l={l} err={err}");
        }
    }

    #[test]
    fn round_metric_mode_spectrum() {
        let g = MomentGrid::new(64).unwrap();
        let st = ToricState::new(&ToricPotential::canonical(&g)).unwrap();
        for l in 2..8 {
            let g2 = legendre(&g, l).derivative().derivative();
            let f = AngularMode::new(2, g2.clone()).unwrap();
            let lam = ((l as f64) - 1.0) * l as f64 * (l as f64 + 1.0) * (l as f64 + 2.0);
            let d = mode_lichnerowicz(&st, &f);
            let err = d.g.sub(&g2.scale(lam)).sup_norm() / g2.sup_norm();
            assert!(err < 1e-10 * (1.0 + lam), "l={l} err={err}");
        }
    }

    #[test]
    fn forms_agree_on_perturbed_metric() {
        let g = MomentGrid::new(128).unwrap();
        let u = ToricPotential::from_fn(&g, |x| {
            0.1 * (1.0 - x * x) * (1.0 - x * x) + 0.05 * x * (1.0 - x * x)
        });
        let st = ToricState::new(&u).unwrap();
        let f = Profile::from_fn(&g, |x| (1.3 * x).sin() + 0.2 * x * x);
        let a = lichnerowicz(&st, &f);
        let b = lichnerowicz_divergence(&st, &f);
        let diff = a.sub(&b).sup_norm();
        assert!(diff < 1e-9 * a.sup_norm(), "{diff} {}", a.sup_norm());
        assert!(
            lichnerowicz(&st, &Profile::from_chebyshev(&g, vec![0.0, 1.0]).unwrap()).sup_norm()
                < 1e-11
        );
        let h = Profile::from_fn(&g, |x| (0.7 * x).cos() * x);
        let weak = lichnerowicz_form(&st, &f, &h);
        let strong = g.integrate(a.mul(&h).values());
        assert!(
            (weak - strong).abs() < 1e-9 * weak.abs().max(1.0),
            "{weak} {strong}"
        );
    }

    #[test]
    fn kernel_eigensplit() {
        let g = MomentGrid::new(64).unwrap();
        let st = ToricState::new(&ToricPotential::canonical(&g)).unwrap();
        let eig = eigensplit_kernel_bar(&st, 1e-8).unwrap();
        assert!(eig[0].abs() < 1e-10 && eig[1].abs() < 1e-10);
        let u = ToricPotential::from_fn(&g, |x| 0.1 * (1.0 - x * x) * (1.0 - x * x));
        let st = ToricState::new(&u).unwrap();
        assert!(matches!(
            eigensplit_kernel_bar(&st, 1e-8),
            Err(Error::NotExtremal { .. })
        ));
    }
}
