//! The one-parameter orbit `z ↦ e^c z` and the functional `ι` along it.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::dual::DualPotential;
use super::potential::{orbit_action, rho_potential, ToricPotential, ToricState, ToricTwist};
use crate::error::{Error, Result};

/// Largest `|c|` searched for a bracket.
pub const ORBIT_LIMIT: f64 = 10.0;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `dι/dc = ∫ x (tr_{u_c} ω_ref − 1) dx`, increasing in `c`.
pub fn orbit_gradient(u: &ToricPotential, reference: &ToricPotential, c: f64) -> Result<f64> {
    let state = ToricState::new(&orbit_action(u, c))?;
    let tr = state.trace_of(reference)?;
    let x = state.grid().nodes();
    let integrand: Vec<f64> = tr.iter().zip(x).map(|(t, x)| x * (t - 1.0)).collect();
    Ok(state.integrate(&integrand))
}

/// `ι(u_c) − ι(u)` by Gauss–Legendre quadrature of the gradient.
pub fn iota_on_orbit(u: &ToricPotential, reference: &ToricPotential, c: f64) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(24);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        sum += w * orbit_gradient(u, reference, 0.5 * c * (1.0 + x))?;
    }
    Ok(0.5 * c * sum)
}

/// Minimizer of `ι` along the orbit of `u`.
#[derive(Debug, Clone)]
pub struct OrbitMinimum {
    pub shift: f64,
    pub potential: ToricPotential,
    /// `|∫ (x − x̄)(tr ω_ref − 1) dx|` at the minimizer.
    pub orthogonality_defect: f64,
}

/// Golden-section search on `ι` to a coarse tolerance, then Newton on the
/// gradient with bisection safeguards.
pub fn minimize_iota_on_orbit(
    u: &ToricPotential,
    reference: &ToricPotential,
) -> Result<OrbitMinimum> {
    let grad = |c: f64| orbit_gradient(u, reference, c);
    let (mut lo, mut hi) = (0.0, 0.0);
    let g0 = grad(0.0)?;
    if g0 > 0.0 {
        let mut step: f64 = 0.5;
        loop {
            lo = -step.min(ORBIT_LIMIT);
            if grad(lo)? <= 0.0 {
                break;
            }
            if step >= ORBIT_LIMIT {
                return Err(Error::LineSearchDiverged);
            }
            hi = lo;
            step *= 2.0;
        }
    } else if g0 < 0.0 {
        let mut step: f64 = 0.5;
        loop {
            hi = step.min(ORBIT_LIMIT);
            if grad(hi)? >= 0.0 {
                break;
            }
            if step >= ORBIT_LIMIT {
                return Err(Error::LineSearchDiverged);
            }
            lo = hi;
            step *= 2.0;
        }
    }

    if hi > lo {
        let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
        let iota = |c: f64| iota_on_orbit(u, reference, c);
        let (mut a, mut b) = (lo, hi);
        let mut c1 = b - ratio * (b - a);
        let mut c2 = a + ratio * (b - a);
        let (mut f1, mut f2) = (iota(c1)?, iota(c2)?);
        while b - a > 1e-3 {
            if f1 < f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - ratio * (b - a);
                f1 = iota(c1)?;
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + ratio * (b - a);
                f2 = iota(c2)?;
            }
        }
        lo = a;
        hi = b;
    }

    let mut c = 0.5 * (lo + hi);
    let mut g = grad(c)?;
    for _ in 0..60 {
        if g.abs() <= 1e-14 {
            break;
        }
        if g < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let h = 1e-6;
        let slope = (grad(c + h)? - grad(c - h)?) / (2.0 * h);
        let mut next = c - g / slope;
        if !(slope > 0.0) || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - c).abs() <= 1e-15 * (1.0 + c.abs()) {
            c = next;
            g = grad(c)?;
            break;
        }
        c = next;
        g = grad(c)?;
    }
    if c.abs() > ORBIT_LIMIT {
        return Err(Error::LineSearchDiverged);
    }
    Ok(OrbitMinimum {
        shift: c,
        potential: orbit_action(u, c),
        orthogonality_defect: g.abs(),
    })
}

/// Holomorphy potential of `X` at `φ_λ = (1 − λ)φ_ref + λφ_u`, assembled in
/// the complex coordinate as `ρ_ref(X) + X(φ_λ − φ_ref)` and normalized to
/// zero `dx`-mean. Returns the potential of `φ_λ` and the complex values at
/// its nodes; the imaginary part is the angular derivative, which vanishes
/// for invariant data.
pub fn rho_along_path(
    reference: &ToricPotential,
    u: &ToricPotential,
    twist: &ToricTwist,
    lambda: f64,
) -> Result<(ToricPotential, Vec<Complex64>)> {
    let grid = u.grid();
    let f_ref = DualPotential::from_potential(reference)?;
    let f_u = DualPotential::from_potential(u)?;
    let f_path = f_ref.interpolate(&f_u, lambda);
    let u_path = f_path.to_potential(grid.len() - 1)?;
    let state = ToricState::new(&u_path)?;
    let rho_ref = rho_potential(reference, twist);
    let ref_inv = super::potential::MomentInverter::new(reference);
    let dtheta = 1e-3;
    let mut values = Vec::with_capacity(grid.len());
    for s in state.moment() {
        // ρ_ref(X) at the point with logarithmic coordinate s
        let y = ref_inv.solve(*s)?.y;
        let base = rho_ref.eval(y);
        let phi_diff = |s: f64, _theta: f64| f_path.value(s) - f_ref.value(s);
        let radial = f_path.slope(*s) - f_ref.slope(*s);
        let angular = (phi_diff(*s, dtheta) - phi_diff(*s, -dtheta)) / (2.0 * dtheta);
        values.push(Complex64::new(base + twist.a * radial, -twist.a * angular));
    }
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let mean = 0.5 * state.integrate(&re);
    for v in &mut values {
        v.re -= mean;
    }
    Ok((u_path, values))
}
