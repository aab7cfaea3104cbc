//! Energy functionals defined through their first variations and evaluated
//! by quadrature along paths of potentials.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::toric::ToricTwist;

/// Smallest path resolution accepted for value quadrature.
pub const MIN_PATH_SAMPLES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    /// Aubin–Yau `I`, gradient `1`.
    Aubin,
    /// `J_χ` with `χ` the reference form, gradient `tr_φ ω`.
    Chi,
    /// `ι = J_ω − nI`, gradient `tr_φ ω − n`.
    Iota,
    /// Mabuchi K-energy, gradient `−(R − R̄)`.
    KEnergy,
    /// Twisted energy `E_t`.
    Twisted { t: f64 },
    /// Modified K-energy for a holomorphy potential.
    Modified { twist: ToricTwist },
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Aubin => "I",
            Self::Chi => "J_chi",
            Self::Iota => "iota",
            Self::KEnergy => "K_energy",
            Self::Twisted { .. } => "E_t",
            Self::Modified { .. } => "E_K",
        }
    }
}

/// Parameter `t'` for which a solution of the continuity equation at `t`
/// is critical for `E_{t'}`; the two gradients differ by the factor `t'`.
pub fn matching_parameter(t: f64) -> f64 {
    1.0 / (2.0 - t)
}

/// Density `G` with `dF = ∫ G φ̇ ω_φⁿ/n!`.
pub fn functional_gradient<G: Geometry>(
    geo: &G,
    kind: &FunctionalKind,
    state: &G::State,
) -> Result<Vec<f64>> {
    let n = geo.complex_dim() as f64;
    let rbar = geo.scalar_average();
    let out = match kind {
        FunctionalKind::Aubin => vec![1.0; geo.weights(state).len()],
        FunctionalKind::Chi => geo.reference_trace(state)?,
        FunctionalKind::Iota => geo.reference_trace(state)?.iter().map(|t| t - n).collect(),
        FunctionalKind::KEnergy => geo
            .scalar_curvature(state)
            .iter()
            .map(|r| rbar - r)
            .collect(),
        FunctionalKind::Twisted { t } => {
            let tr = geo.reference_trace(state)?;
            let r = geo.scalar_curvature(state);
            r.iter()
                .zip(&tr)
                .map(|(r, tr)| -t * (r - rbar) + (1.0 - t) * (tr - n))
                .collect()
        }
        FunctionalKind::Modified { twist } => {
            let rho = geo.twist_potential(state, twist)?;
            let r = geo.scalar_curvature(state);
            r.iter().zip(&rho).map(|(r, rho)| rbar - r + rho).collect()
        }
    };
    Ok(out)
}

/// `‖G − mean‖` in `L²(ω_φⁿ/n!)`.
pub fn criticality_residual<G: Geometry>(
    geo: &G,
    kind: &FunctionalKind,
    state: &G::State,
) -> Result<f64> {
    let g = functional_gradient(geo, kind, state)?;
    let w = geo.weights(state);
    let vol: f64 = w.iter().sum();
    let mean = g.iter().zip(&w).map(|(g, w)| g * w).sum::<f64>() / vol;
    Ok(libm::sqrt(
        g.iter()
            .zip(&w)
            .map(|(g, w)| (g - mean) * (g - mean) * w)
            .sum::<f64>(),
    ))
}

/// Samples `φ_s` on a uniform grid of `s ∈ [0, 1]`, optionally with
/// velocities in the chart of the geometry.
#[derive(Debug, Clone)]
pub struct PotentialPath<P> {
    potentials: Vec<P>,
    velocities: Option<Vec<Vec<f64>>>,
}

impl<P: Clone> PotentialPath<P> {
    pub fn new(potentials: Vec<P>) -> Result<Self> {
        if potentials.len() < 5 {
            return Err(Error::InsufficientSamples);
        }
        Ok(Self {
            potentials,
            velocities: None,
        })
    }

    pub fn with_velocities(potentials: Vec<P>, velocities: Vec<Vec<f64>>) -> Result<Self> {
        if velocities.len() != potentials.len() {
            return Err(Error::InvalidArgument("one velocity per sample".into()));
        }
        let mut path = Self::new(potentials)?;
        path.velocities = Some(velocities);
        Ok(path)
    }

    pub fn from_fn(samples: usize, f: impl Fn(f64) -> P) -> Result<Self> {
        let last = samples.saturating_sub(1).max(1) as f64;
        Self::new((0..samples).map(|i| f(i as f64 / last)).collect())
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.potentials.len() - 1) as f64
    }

    pub fn parameter(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    pub fn potentials(&self) -> &[P] {
        &self.potentials
    }
}

/// Fourth-order difference weights for the first derivative at sample `i`
/// of `len` uniform samples, as (offset, weight) pairs in units of `1/h`.
fn first_derivative_stencil(i: usize, len: usize) -> [(isize, f64); 5] {
    let centered = [
        (-2, 1.0 / 12.0),
        (-1, -8.0 / 12.0),
        (0, 0.0),
        (1, 8.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    let left = [
        (0, -25.0 / 12.0),
        (1, 4.0),
        (2, -3.0),
        (3, 4.0 / 3.0),
        (4, -0.25),
    ];
    let near_left = [
        (-1, -0.25),
        (0, -5.0 / 6.0),
        (1, 1.5),
        (2, -0.5),
        (3, 1.0 / 12.0),
    ];
    let mirror = |s: [(isize, f64); 5]| s.map(|(o, w)| (-o, -w));
    if i == 0 {
        left
    } else if i == 1 {
        near_left
    } else if i + 1 == len {
        mirror(left)
    } else if i + 2 == len {
        mirror(near_left)
    } else {
        centered
    }
}

fn chart_difference<G: Geometry>(
    geo: &G,
    path: &PotentialPath<G::Potential>,
    i: usize,
    stencil: &[(isize, f64)],
    scale: f64,
) -> Vec<f64> {
    let mut out: Option<Vec<f64>> = None;
    for (offset, w) in stencil {
        if *w == 0.0 {
            continue;
        }
        let chart = geo.chart(&path.potentials[(i as isize + offset) as usize]);
        let acc = out.get_or_insert_with(|| vec![0.0; chart.len()]);
        for (a, c) in acc.iter_mut().zip(&chart) {
            *a += w * c * scale;
        }
    }
    out.unwrap_or_default()
}

/// `φ̇` at sample `i`, supplied or by fourth-order differences.
pub fn path_velocity<G: Geometry>(
    geo: &G,
    path: &PotentialPath<G::Potential>,
    i: usize,
) -> Vec<f64> {
    if let Some(v) = &path.velocities {
        return v[i].clone();
    }
    let stencil = first_derivative_stencil(i, path.len());
    chart_difference(geo, path, i, &stencil, 1.0 / path.step())
}

/// `s ↦ ∫ G_k φ̇ ω_φⁿ/n!` for each kind, one row per sample.
pub fn path_densities<G: Geometry>(
    geo: &G,
    kinds: &[FunctionalKind],
    path: &PotentialPath<G::Potential>,
) -> Result<Vec<Vec<f64>>> {
    (0..path.len())
        .map(|i| {
            let state = geo.assemble(&path.potentials[i])?;
            let velocity = path_velocity(geo, path, i);
            kinds
                .iter()
                .map(|k| {
                    let g = functional_gradient(geo, k, &state)?;
                    let prod: Vec<f64> = g.iter().zip(&velocity).map(|(g, v)| g * v).collect();
                    Ok(geo.integrate(&state, &prod))
                })
                .collect()
        })
        .collect()
}

/// Composite Simpson rule on an odd number of uniform samples over `[0, 1]`.
pub fn simpson(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InsufficientSamples);
    }
    let h = 1.0 / (n - 1) as f64;
    let mut sum = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(sum * h / 3.0)
}

/// Running integral from `s = 0` at every sample, by local cubic
/// interpolation (fourth order).
pub fn cumulative(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InsufficientSamples);
    }
    let h = 1.0 / (n - 1) as f64;
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let piece = if i == 0 {
            (9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3]) / 24.0
        } else if i == n - 2 {
            (9.0 * values[n - 1] + 19.0 * values[n - 2] - 5.0 * values[n - 3] + values[n - 4])
                / 24.0
        } else {
            (-values[i - 1] + 13.0 * values[i] + 13.0 * values[i + 1] - values[i + 2]) / 24.0
        };
        out[i + 1] = out[i] + piece * h;
    }
    Ok(out)
}

/// `F(φ_1) − F(φ_0)` along the path.
pub fn functional_value<G: Geometry>(
    geo: &G,
    kind: &FunctionalKind,
    path: &PotentialPath<G::Potential>,
) -> Result<f64> {
    if path.len() < MIN_PATH_SAMPLES || path.len() % 2 == 0 {
        return Err(Error::InsufficientSamples);
    }
    let rows = path_densities(geo, core::slice::from_ref(kind), path)?;
    let densities: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    simpson(&densities)
}

/// Value relative to the reference potential along the straight segment.
pub fn functional_at<G: Geometry>(
    geo: &G,
    kind: &FunctionalKind,
    potential: &G::Potential,
    samples: usize,
) -> Result<f64> {
    let reference = geo.reference();
    let path = PotentialPath::from_fn(samples, |s| geo.combine(&reference, 1.0 - s, potential, s))?;
    functional_value(geo, kind, &path)
}

/// Second derivative of `ι` at sample `i` from the variation formula
/// `∫(φ̈ − |∇φ̇|²)(tr ω − n) + ∫ g^{αμ̄}g^{νβ̄}φ̇_{,μ̄}φ̇_{,ν}ω_{αβ̄}`.
pub fn iota_second_derivative<G: Geometry>(
    geo: &G,
    path: &PotentialPath<G::Potential>,
    i: usize,
) -> Result<f64> {
    let (first, second) = iota_hessian_terms(geo, path, i)?;
    Ok(first + second)
}

/// The two integrals of the `ι` second variation, separately.
pub fn iota_hessian_terms<G: Geometry>(
    geo: &G,
    path: &PotentialPath<G::Potential>,
    i: usize,
) -> Result<(f64, f64)> {
    if i < 2 || i + 2 >= path.len() {
        return Err(Error::InsufficientSamples);
    }
    let h = path.step();
    let accel_stencil = [
        (-2, -1.0 / 12.0),
        (-1, 16.0 / 12.0),
        (0, -30.0 / 12.0),
        (1, 16.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    let accel = chart_difference(geo, path, i, &accel_stencil, 1.0 / (h * h));
    let velocity = path_velocity(geo, path, i);
    let state = geo.assemble(&path.potentials[i])?;
    let n = geo.complex_dim() as f64;
    let defect = geo.geodesic_defect(&state, &accel, &velocity);
    let tr = geo.reference_trace(&state)?;
    let first: Vec<f64> = defect.iter().zip(&tr).map(|(d, t)| d * (t - n)).collect();
    let second = geo.reference_gradient_norm(&state, &velocity);
    Ok((
        geo.integrate(&state, &first),
        geo.integrate(&state, &second),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_orders() {
        let f = |s: f64| libm::exp(s);
        let exact = core::f64::consts::E - 1.0;
        let vals: Vec<f64> = (0..33).map(|i| f(i as f64 / 32.0)).collect();
        assert!((simpson(&vals).unwrap() - exact).abs() < 1e-8);
        let cum = cumulative(&vals).unwrap();
        for (i, c) in cum.iter().enumerate() {
            assert!((c - (f(i as f64 / 32.0) - 1.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn stencils_differentiate_quartics() {
        let len = 9;
        let f = |s: f64| s * s * s * s - 2.0 * s;
        let df = |s: f64| 4.0 * s * s * s - 2.0;
        let h = 1.0 / (len - 1) as f64;
        for i in 0..len {
            let est: f64 = first_derivative_stencil(i, len)
                .iter()
                .map(|(o, w)| w * f((i as isize + o) as f64 * h))
                .sum::<f64>()
                / h;
            assert!((est - df(i as f64 * h)).abs() < 1e-12, "{i}");
        }
    }

    #[test]
    fn reparameterization() {
        assert_eq!(matching_parameter(1.0), 1.0);
        assert!((matching_parameter(0.9) - 1.0 / 1.1).abs() < 1e-15);
    }
}
