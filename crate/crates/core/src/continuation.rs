//! Newton continuation along `R_φ − R̄ − (1−t)(tr_φ ω − n) − ρ_φ(X) = 0`
//! from `t = 1` downwards, with a Lyapunov–Schmidt reduction onto the
//! kernel of the Lichnerowicz operator at the starting metric.
//!
//! All unknowns are Galerkin coefficients of potential increments; the
//! constant gauge is absent from the basis and the residual is projected
//! mean-free.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::functionals::{functional_at, FunctionalKind, MIN_PATH_SAMPLES};
use crate::geometry::Geometry;
use crate::toric::ToricTwist;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Acceptance bound on the sup of the residual and on its mean defect.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central difference step for Jacobian columns.
    pub fd_step: f64,
    /// Kernel threshold relative to the largest eigenvalue of `D`.
    pub kernel_threshold: f64,
    /// Bound on `‖u‖` inside which the reduced iteration is trusted.
    pub trust_radius: f64,
    /// Bound on `1 − t` inside which the reduced iteration is used.
    pub trust_interval: f64,
    /// Smallest step in `t` before path tracking gives up.
    pub min_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 30,
            fd_step: 1e-6,
            kernel_threshold: 1e-8,
            trust_radius: 0.1,
            trust_interval: 0.2,
            min_step: 1e-4,
        }
    }
}

/// Mean-free residual at the sample points, with the removed mean.
#[derive(Debug, Clone)]
pub struct Residual {
    pub values: Vec<f64>,
    pub mean_defect: f64,
}

impl Residual {
    pub fn sup(&self) -> f64 {
        sup_norm(&self.values)
    }
}

fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `R_φ − R̄ − (1−t)(tr_φ ω − n) − ρ_φ(X)` with its `ω_φⁿ` mean removed.
pub fn residual<G: Geometry>(
    geo: &G,
    state: &G::State,
    t: f64,
    twist: &ToricTwist,
) -> Result<Residual> {
    let n = geo.complex_dim() as f64;
    let rbar = geo.scalar_average();
    let r = geo.scalar_curvature(state);
    let tr = geo.reference_trace(state)?;
    let rho = geo.twist_potential(state, twist)?;
    let mut values: Vec<f64> = (0..r.len())
        .map(|j| r[j] - rbar - (1.0 - t) * (tr[j] - n) - rho[j])
        .collect();
    let mean = geo.integrate(state, &values) / geo.volume(state);
    values.iter_mut().for_each(|v| *v -= mean);
    Ok(Residual {
        values,
        mean_defect: mean.abs(),
    })
}

/// Galerkin coefficients of the residual at a potential.
pub fn coefficient_residual<G: Geometry>(
    geo: &G,
    potential: &G::Potential,
    t: f64,
    twist: &ToricTwist,
) -> Result<DVector<f64>> {
    let state = geo.assemble(potential)?;
    let res = residual(geo, &state, t, twist)?;
    Ok(DVector::from_vec(geo.project(&res.values)))
}

/// Central-difference derivatives of the coefficient residual along the
/// columns of `directions`. A non-admissible probe halves the step once.
pub fn directional_jacobian<G: Geometry>(
    geo: &G,
    potential: &G::Potential,
    t: f64,
    twist: &ToricTwist,
    directions: &DMatrix<f64>,
    step: f64,
) -> Result<DMatrix<f64>> {
    let rows = geo.basis_len();
    let mut jac = DMatrix::zeros(rows, directions.ncols());
    for j in 0..directions.ncols() {
        let dir: Vec<f64> = directions.column(j).iter().copied().collect();
        let probe = |h: f64| -> Result<DVector<f64>> {
            let plus: Vec<f64> = dir.iter().map(|d| h * d).collect();
            let minus: Vec<f64> = dir.iter().map(|d| -h * d).collect();
            let rp = coefficient_residual(geo, &geo.displace(potential, &plus), t, twist)?;
            let rm = coefficient_residual(geo, &geo.displace(potential, &minus), t, twist)?;
            Ok((rp - rm) / (2.0 * h))
        };
        let col = match probe(step) {
            Err(Error::NonPositiveMetric { .. }) | Err(Error::NonConvexPotential { .. }) => {
                probe(step / 2.0)?
            }
            other => other?,
        };
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Dense Jacobian of the coefficient residual at fixed `t`.
pub fn linearize<G: Geometry>(
    geo: &G,
    potential: &G::Potential,
    t: f64,
    twist: &ToricTwist,
    step: f64,
) -> Result<DMatrix<f64>> {
    let eye = DMatrix::identity(geo.basis_len(), geo.basis_len());
    directional_jacobian(geo, potential, t, twist, &eye, step)
}

/// Galerkin matrix of the Lichnerowicz operator: column `j` holds the
/// coefficients of `D e_j`.
pub fn lichnerowicz_matrix<G: Geometry>(geo: &G, state: &G::State) -> DMatrix<f64> {
    let m = geo.basis_len();
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let d = geo.lichnerowicz(state, &geo.basis_samples(j));
        out.set_column(j, &DVector::from_vec(geo.project(&d)));
    }
    out
}

/// Discrete kernel of `D` at a constant-scalar-curvature potential and
/// its complement, both orthonormal in `L²(ω_φⁿ)` on coefficient space.
#[derive(Debug, Clone)]
pub struct KernelBasis<P> {
    potential: P,
    kernel: DMatrix<f64>,
    complement: DMatrix<f64>,
    mass: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    threshold: f64,
}

impl<P> KernelBasis<P> {
    pub fn potential(&self) -> &P {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.kernel.ncols()
    }

    /// Coefficient columns of the kernel functions.
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }

    /// `∫ e_i e_j ω_φⁿ` for the raw Galerkin basis.
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// Generalized eigenvalues of `D`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Kernel components `π₁` of a coefficient vector.
    pub fn project_kernel(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.kernel.transpose() * (&self.mass * coeffs)
    }

    /// Complement components `π₂` of a coefficient vector.
    pub fn project_complement(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.complement.transpose() * (&self.mass * coeffs)
    }

    /// Coefficients of `Σ u_a κ_a + Σ q_b c_b`.
    pub fn combine(&self, u: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        &self.kernel * u + &self.complement * q
    }
}

/// Generalized eigen-decomposition of `D_φ` in the `ω_φⁿ` pairing on the
/// resolved subspace. The kernel is the span of eigenvectors below
/// `kernel_threshold · λ_max`; the complement is its `ω_φⁿ`-orthogonal
/// complement in the full coefficient space.
pub fn kernel_basis<G: Geometry>(
    geo: &G,
    potential: &G::Potential,
    options: &SolverOptions,
) -> Result<KernelBasis<G::Potential>> {
    let state = geo.assemble(potential)?;
    let w = geo.weights(&state);
    let m = geo.basis_len();
    let resolved = geo.resolved_len();
    let samples: Vec<Vec<f64>> = (0..m).map(|i| geo.basis_samples(i)).collect();
    let applied: Vec<Vec<f64>> = samples[..resolved]
        .iter()
        .map(|e| geo.lichnerowicz(&state, e))
        .collect();
    let pair = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(&w).map(|((a, b), w)| a * b * w).sum()
    };
    let mass = DMatrix::from_fn(m, m, |i, j| pair(&samples[i], &samples[j]));
    let stiffness = DMatrix::from_fn(resolved, resolved, |i, j| {
        0.5 * (pair(&samples[i], &applied[j]) + pair(&samples[j], &applied[i]))
    });

    let low = mass.view((0, 0), (resolved, resolved)).into_owned();
    let l_inv = inverse_cholesky_factor(low)?;
    let reduced = &l_inv * &stiffness * l_inv.transpose();
    let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..resolved).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda_max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let threshold = options.kernel_threshold * lambda_max;
    let vectors = l_inv.transpose() * &eig.eigenvectors;

    let mut kernel_cols = Vec::new();
    for &k in order
        .iter()
        .filter(|&&k| eig.eigenvalues[k].abs() <= threshold)
    {
        let mut col = DVector::zeros(m);
        col.rows_mut(0, resolved).copy_from(&vectors.column(k));
        // deterministic orientation: largest entry positive
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            col.neg_mut();
        }
        kernel_cols.push(col);
    }
    let kernel = if kernel_cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&kernel_cols)
    };

    // X is M-orthonormal on the full space; B = XᵀME has orthonormal
    // columns and its orthogonal complement in ℝᵐ spans the rest
    let full = inverse_cholesky_factor(mass.clone())?.transpose();
    let b = full.transpose() * &mass * &kernel;
    let split = SymmetricEigen::new(&b * b.transpose());
    let rest: Vec<DVector<f64>> = (0..m)
        .filter(|&k| split.eigenvalues[k] < 0.5)
        .map(|k| &full * split.eigenvectors.column(k))
        .collect();
    let complement = if rest.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&rest)
    };

    Ok(KernelBasis {
        potential: potential.clone(),
        kernel,
        complement,
        mass,
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        threshold,
    })
}

fn inverse_cholesky_factor(mass: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(mass).ok_or(Error::SingularSystem)?;
    chol.l().try_inverse().ok_or(Error::SingularSystem)
}

/// Values of the kernel function `κ_a` at the sample points.
pub fn kernel_function<G: Geometry>(
    geo: &G,
    basis: &KernelBasis<G::Potential>,
    a: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; geo.basis_samples(0).len()];
    for (i, c) in basis.kernel.column(a).iter().enumerate() {
        for (o, e) in out.iter_mut().zip(geo.basis_samples(i)) {
            *o += c * e;
        }
    }
    out
}

/// `max_a |∫ κ_a (tr_φ ω − n) ω_φⁿ|` at the basis potential.
pub fn orthogonality_defect<G: Geometry>(
    geo: &G,
    basis: &KernelBasis<G::Potential>,
) -> Result<f64> {
    let state = geo.assemble(&basis.potential)?;
    let n = geo.complex_dim() as f64;
    let tr: Vec<f64> = geo.reference_trace(&state)?.iter().map(|v| v - n).collect();
    let mut worst = 0.0f64;
    for a in 0..basis.dim() {
        let kappa = kernel_function(geo, basis, a);
        let pairing: Vec<f64> = kappa.iter().zip(&tr).map(|(k, t)| k * t).collect();
        worst = worst.max(geo.integrate(&state, &pairing).abs());
    }
    Ok(worst)
}

/// Solution of the complement block at fixed kernel coordinates.
#[derive(Debug, Clone)]
pub struct OrthogonalSolution<P> {
    /// Complement coordinates `w`.
    pub complement: DVector<f64>,
    pub potential: P,
    pub iterations: usize,
    /// Full coefficient residual at the solution.
    pub residual: DVector<f64>,
}

/// The reduced map and its divided difference in `t`.
#[derive(Debug, Clone)]
pub struct ReducedValue {
    pub p: DVector<f64>,
    pub p_tilde: DVector<f64>,
}

/// One-sided offsets `1 − t` used to extrapolate `P̃` to `t = 1`.
pub const RICHARDSON_OFFSETS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Lyapunov–Schmidt reduction around a kernel basis.
#[derive(Debug, Clone)]
pub struct Reduction<'a, G: Geometry> {
    geo: &'a G,
    basis: &'a KernelBasis<G::Potential>,
    twist: ToricTwist,
    options: SolverOptions,
}

impl<'a, G: Geometry> Reduction<'a, G> {
    pub fn new(
        geo: &'a G,
        basis: &'a KernelBasis<G::Potential>,
        twist: ToricTwist,
        options: SolverOptions,
    ) -> Self {
        Self {
            geo,
            basis,
            twist,
            options,
        }
    }

    fn potential_at(&self, u: &DVector<f64>, w: &DVector<f64>) -> G::Potential {
        let coeffs = self.basis.combine(u, w);
        self.geo.displace(&self.basis.potential, coeffs.as_slice())
    }

    /// Newton on `π₂ F(φ₁ + u·κ + w, t) = 0` over the complement
    /// coordinates `w`, optionally warm-started.
    pub fn orthogonal_solve(
        &self,
        u: &DVector<f64>,
        t: f64,
        warm: Option<&DVector<f64>>,
    ) -> Result<OrthogonalSolution<G::Potential>> {
        let mut w = warm
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.basis.complement.ncols()));
        let mut last = f64::INFINITY;
        for iteration in 0..=self.options.max_iterations {
            let potential = self.potential_at(u, &w);
            let r = coefficient_residual(self.geo, &potential, t, &self.twist)?;
            let g = self.basis.project_complement(&r);
            let size = g.amax();
            let stalled = size >= 0.5 * last && size <= self.options.tolerance;
            if size <= 1e-3 * self.options.tolerance || stalled || w.is_empty() {
                return Ok(OrthogonalSolution {
                    complement: w,
                    potential,
                    iterations: iteration,
                    residual: r,
                });
            }
            last = size;
            let jac = directional_jacobian(
                self.geo,
                &potential,
                t,
                &self.twist,
                &self.basis.complement,
                self.options.fd_step,
            )?;
            let block = self.basis.complement.transpose() * &self.basis.mass * jac;
            let step = block.lu().solve(&g).ok_or(Error::SingularSystem)?;
            w = self.damped_complement_step(u, t, w, &step, g.norm())?;
        }
        Err(Error::NoConvergence {
            iterations: self.options.max_iterations,
            last_residual: last,
        })
    }

    fn damped_complement_step(
        &self,
        u: &DVector<f64>,
        t: f64,
        w: DVector<f64>,
        step: &DVector<f64>,
        base: f64,
    ) -> Result<DVector<f64>> {
        let mut damping = 1.0;
        loop {
            let trial = &w - step * damping;
            let accepted =
                match coefficient_residual(self.geo, &self.potential_at(u, &trial), t, &self.twist)
                {
                    Ok(r) => self.basis.project_complement(&r).norm() < base || damping < 1e-3,
                    Err(Error::NonPositiveMetric { .. })
                    | Err(Error::NonConvexPotential { .. }) => false,
                    Err(e) => return Err(e),
                };
            if accepted {
                return Ok(trial);
            }
            damping *= 0.5;
            if damping < 1e-6 {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    last_residual: base,
                });
            }
        }
    }

    /// `P(u, t) = π₁ F` after the complement solve, and `P̃ = P/(t − 1)`;
    /// at `t = 1`, `P̃` is Richardson-extrapolated from one-sided offsets.
    pub fn reduced_map(&self, u: &DVector<f64>, t: f64) -> Result<ReducedValue> {
        let p = self.kernel_component(u, t, None)?.0;
        let p_tilde = if t < 1.0 {
            &p / (t - 1.0)
        } else {
            self.extrapolated_slope(u)?
        };
        Ok(ReducedValue { p, p_tilde })
    }

    fn kernel_component(
        &self,
        u: &DVector<f64>,
        t: f64,
        warm: Option<&DVector<f64>>,
    ) -> Result<(DVector<f64>, OrthogonalSolution<G::Potential>)> {
        let sol = self.orthogonal_solve(u, t, warm)?;
        Ok((self.basis.project_kernel(&sol.residual), sol))
    }

    fn extrapolated_slope(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let mut quotients = Vec::with_capacity(RICHARDSON_OFFSETS.len());
        let mut warm: Option<DVector<f64>> = None;
        for delta in RICHARDSON_OFFSETS {
            let (p, sol) = self.kernel_component(u, 1.0 - delta, warm.as_ref())?;
            warm = Some(sol.complement);
            quotients.push(-p / delta);
        }
        // first-order error in δ, offsets shrinking by 10
        let r_a = (&quotients[1] * 10.0 - &quotients[0]) / 9.0;
        let r_b = (&quotients[2] * 10.0 - &quotients[1]) / 9.0;
        Ok((r_b * 100.0 - r_a) / 99.0)
    }

    /// `∂P̃/∂u` at `(0, 1)` from `∫ κ_a(−⟨∂κ_b, ∂̄(tr ω − n)⟩ − ⟨i∂∂̄κ_b, ω⟩) ω_φ₁ⁿ`.
    pub fn reduced_jacobian_analytic(&self) -> Result<DMatrix<f64>> {
        let state = self.geo.assemble(&self.basis.potential)?;
        let n = self.geo.complex_dim() as f64;
        let tr: Vec<f64> = self
            .geo
            .reference_trace(&state)?
            .iter()
            .map(|v| v - n)
            .collect();
        let d = self.basis.dim();
        let kappas: Vec<Vec<f64>> = (0..d)
            .map(|a| kernel_function(self.geo, self.basis, a))
            .collect();
        let mut out = DMatrix::zeros(d, d);
        for b in 0..d {
            let grad = self.geo.grad_pairing(&state, &kappas[b], &tr);
            let hess = self.geo.reference_hessian_pairing(&state, &kappas[b]);
            let image: Vec<f64> = grad.iter().zip(&hess).map(|(g, h)| -g - h).collect();
            for a in 0..d {
                let integrand: Vec<f64> =
                    kappas[a].iter().zip(&image).map(|(k, v)| k * v).collect();
                out[(a, b)] = self.geo.integrate(&state, &integrand);
            }
        }
        Ok(out)
    }

    /// `∂P̃/∂u` at `(0, 1)` by central differences of the reduced map.
    pub fn reduced_jacobian_fd(&self, step: f64) -> Result<DMatrix<f64>> {
        let d = self.basis.dim();
        let mut out = DMatrix::zeros(d, d);
        for b in 0..d {
            let mut e = DVector::zeros(d);
            e[b] = step;
            let plus = self.reduced_map(&e, 1.0)?.p_tilde;
            let minus = self.reduced_map(&-e, 1.0)?.p_tilde;
            out.set_column(b, &((plus - minus) / (2.0 * step)));
        }
        Ok(out)
    }

    /// The quadratic form `∫ g^{αμ̄}g^{νβ̄} v_{,μ̄} v_{,ν} ω_{αβ̄} ω_φ₁ⁿ`
    /// on the kernel, polarized.
    pub fn reduced_jacobian_quadrature(&self) -> Result<DMatrix<f64>> {
        let state = self.geo.assemble(&self.basis.potential)?;
        let d = self.basis.dim();
        let kappas: Vec<Vec<f64>> = (0..d)
            .map(|a| kernel_function(self.geo, self.basis, a))
            .collect();
        let form = |v: &[f64]| {
            self.geo
                .integrate(&state, &self.geo.reference_gradient_norm(&state, v))
        };
        Ok(DMatrix::from_fn(d, d, |a, b| {
            let sum: Vec<f64> = kappas[a]
                .iter()
                .zip(&kappas[b])
                .map(|(x, y)| x + y)
                .collect();
            let diff: Vec<f64> = kappas[a]
                .iter()
                .zip(&kappas[b])
                .map(|(x, y)| x - y)
                .collect();
            0.25 * (form(&sum) - form(&diff))
        }))
    }
}

/// One accepted point of the continuity path.
#[derive(Debug, Clone)]
pub struct ContinuationRecord<P> {
    pub t: f64,
    pub potential: P,
    pub residual_sup: f64,
    pub mean_defect: f64,
    /// Kernel coordinates of `φ_t − φ₁`.
    pub reduced: Vec<f64>,
    pub iterations: usize,
    pub iota: f64,
    pub orthogonality_defect: f64,
    /// `‖φ_t − φ_prev‖ / |Δt|` against the previous record of a path.
    pub continuity: Option<f64>,
}

/// Records of a tracked path; `truncated_at` is the last accepted `t`
/// when tracking stopped early.
#[derive(Debug, Clone)]
pub struct TrackedPath<P> {
    pub records: Vec<ContinuationRecord<P>>,
    pub truncated_at: Option<f64>,
}

impl<P> TrackedPath<P> {
    pub fn into_result(self) -> Result<Vec<ContinuationRecord<P>>> {
        match self.truncated_at {
            Some(last_good_t) => Err(Error::PathTruncated { last_good_t }),
            None => Ok(self.records),
        }
    }
}

/// Damped Newton on all Galerkin coefficients. Steps are least-squares
/// solutions, so the iteration is defined at the degenerate point `t = 1`.
pub fn newton_solve<G: Geometry>(
    geo: &G,
    initial: &G::Potential,
    t: f64,
    twist: &ToricTwist,
    options: &SolverOptions,
) -> Result<(G::Potential, usize)> {
    let mut potential = initial.clone();
    let mut last = f64::INFINITY;
    for iteration in 0..=options.max_iterations {
        let state = geo.assemble(&potential)?;
        let res = residual(geo, &state, t, twist)?;
        let size = res.sup();
        if size <= options.tolerance && res.mean_defect <= options.tolerance {
            return Ok((potential, iteration));
        }
        if iteration == options.max_iterations {
            last = size;
            break;
        }
        let r = DVector::from_vec(geo.project(&res.values));
        let jac = linearize(geo, &potential, t, twist, options.fd_step)?;
        let svd = SVD::new(jac, true, true);
        let cut = svd.singular_values.max() * 1e-12;
        let step = svd.solve(&r, cut).map_err(|_| Error::SingularSystem)?;
        let base = r.norm();
        let mut damping = 1.0;
        loop {
            let trial = geo.displace(&potential, (&step * -damping).as_slice());
            match coefficient_residual(geo, &trial, t, twist) {
                Ok(rt) if rt.norm() < base || damping < 1e-3 => {
                    potential = trial;
                    break;
                }
                Ok(_)
                | Err(Error::NonPositiveMetric { .. })
                | Err(Error::NonConvexPotential { .. }) => {
                    damping *= 0.5;
                    if damping < 1e-6 {
                        return Err(Error::NoConvergence {
                            iterations: iteration,
                            last_residual: size,
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        // a step that no longer moves the coefficients cannot help
        if damping * step.amax() < 1e-15 {
            last = size;
            break;
        }
        last = size;
    }
    Err(Error::NoConvergence {
        iterations: options.max_iterations,
        last_residual: last,
    })
}

/// Path solver anchored at a constant-scalar-curvature potential.
#[derive(Debug, Clone)]
pub struct Continuation<'a, G: Geometry> {
    geo: &'a G,
    twist: ToricTwist,
    options: SolverOptions,
    basis: KernelBasis<G::Potential>,
    orthogonality_defect: f64,
}

impl<'a, G: Geometry> Continuation<'a, G> {
    /// Solves at `t = 1` from `initial` (the reference if `None`), moves the
    /// solution to the `ι`-minimizer on its orbit and computes the kernel.
    pub fn anchor(
        geo: &'a G,
        twist: ToricTwist,
        options: SolverOptions,
        initial: Option<&G::Potential>,
    ) -> Result<Self> {
        let start = initial.cloned().unwrap_or_else(|| geo.reference());
        let (solved, _) = newton_solve(geo, &start, 1.0, &twist, &options)?;
        let centered = geo.normalize(&geo.center_on_orbit(&solved)?);
        let (centered, _) = newton_solve(geo, &centered, 1.0, &twist, &options)?;
        Self::from_anchor(geo, twist, options, centered)
    }

    /// Uses `anchor` as `φ₁` without solving.
    pub fn from_anchor(
        geo: &'a G,
        twist: ToricTwist,
        options: SolverOptions,
        anchor: G::Potential,
    ) -> Result<Self> {
        let basis = kernel_basis(geo, &anchor, &options)?;
        let orthogonality_defect = orthogonality_defect(geo, &basis)?;
        Ok(Self {
            geo,
            twist,
            options,
            basis,
            orthogonality_defect,
        })
    }

    pub fn geometry(&self) -> &G {
        self.geo
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn twist(&self) -> &ToricTwist {
        &self.twist
    }

    pub fn basis(&self) -> &KernelBasis<G::Potential> {
        &self.basis
    }

    pub fn anchor_potential(&self) -> &G::Potential {
        &self.basis.potential
    }

    pub fn orthogonality_defect(&self) -> f64 {
        self.orthogonality_defect
    }

    pub fn reduction(&self) -> Reduction<'_, G> {
        Reduction::new(self.geo, &self.basis, self.twist, self.options)
    }

    fn split(&self, potential: &G::Potential) -> (DVector<f64>, DVector<f64>) {
        let c = DVector::from_vec(self.geo.coordinates(&self.basis.potential, potential));
        (
            self.basis.project_kernel(&c),
            self.basis.project_complement(&c),
        )
    }

    /// Accepted record at `t` starting from `initial`.
    pub fn solve_at(
        &self,
        t: f64,
        initial: &G::Potential,
    ) -> Result<ContinuationRecord<G::Potential>> {
        let (u0, w0) = self.split(initial);
        let reduced_regime = self.basis.dim() > 0
            && t < 1.0
            && 1.0 - t <= self.options.trust_interval
            && u0.norm() <= self.options.trust_radius;
        // the reduced iteration only prepares a start; full Newton decides
        let (start, outer) = match reduced_regime.then(|| self.reduced_newton(t, u0, w0)) {
            Some(Ok(found)) => found,
            _ => (initial.clone(), 0),
        };
        let (potential, polish) = newton_solve(self.geo, &start, t, &self.twist, &self.options)?;
        self.record(t, potential, outer + polish)
    }

    /// Outer Newton on the kernel coordinates `u` solving `P̃(u, t) = 0`.
    fn reduced_newton(
        &self,
        t: f64,
        mut u: DVector<f64>,
        w0: DVector<f64>,
    ) -> Result<(G::Potential, usize)> {
        let reduction = self.reduction();
        let mut warm = w0;
        let mut iterations = 0;
        let eta = self.options.fd_step;
        loop {
            let (p, sol) = reduction.kernel_component(&u, t, Some(&warm))?;
            warm = sol.complement.clone();
            iterations += 1 + sol.iterations;
            if p.amax() <= 1e-3 * self.options.tolerance
                || iterations > 4 * self.options.max_iterations
            {
                return Ok((sol.potential, iterations));
            }
            let d = u.len();
            let mut jac = DMatrix::zeros(d, d);
            for b in 0..d {
                let mut e = DVector::zeros(d);
                e[b] = eta;
                let plus = reduction.kernel_component(&(&u + &e), t, Some(&warm))?.0;
                let minus = reduction.kernel_component(&(&u - &e), t, Some(&warm))?.0;
                jac.set_column(b, &((plus - minus) / (2.0 * eta)));
            }
            let step = jac.lu().solve(&p).ok_or(Error::SingularSystem)?;
            u -= &step;
            if step.amax() < 1e-14 {
                let sol = reduction.orthogonal_solve(&u, t, Some(&warm))?;
                return Ok((sol.potential, iterations));
            }
        }
    }

    fn record(
        &self,
        t: f64,
        potential: G::Potential,
        iterations: usize,
    ) -> Result<ContinuationRecord<G::Potential>> {
        let potential = self.geo.normalize(&potential);
        let state = self.geo.assemble(&potential)?;
        let res = residual(self.geo, &state, t, &self.twist)?;
        let iota = functional_at(
            self.geo,
            &FunctionalKind::Iota,
            &potential,
            MIN_PATH_SAMPLES,
        )?;
        let (u, _) = self.split(&potential);
        Ok(ContinuationRecord {
            t,
            residual_sup: res.sup(),
            mean_defect: res.mean_defect,
            reduced: u.iter().copied().collect(),
            iterations,
            iota,
            orthogonality_defect: self.orthogonality_defect,
            continuity: None,
            potential,
        })
    }

    /// Uniform grid `t_k = 1 − k(1 − t_end)/(steps − 1)`, warm-started;
    /// failed steps are bisected down to `min_step`.
    pub fn track_path(&self, t_end: f64, steps: usize) -> Result<TrackedPath<G::Potential>> {
        if steps < 2 || !(t_end < 1.0) {
            return Err(Error::InvalidArgument(
                "need at least two steps and t_end < 1".into(),
            ));
        }
        let first = self.solve_at(1.0, &self.basis.potential)?;
        let mut records = vec![first];
        let dt = (1.0 - t_end) / (steps - 1) as f64;
        for k in 1..steps {
            let target = if k + 1 == steps {
                t_end
            } else {
                1.0 - k as f64 * dt
            };
            loop {
                let prev = records.last().expect("non-empty");
                let full = prev.t - target;
                let mut step = full;
                let accepted = loop {
                    let t = if step == full { target } else { prev.t - step };
                    match self.solve_at(t, &prev.potential) {
                        Ok(rec) => break Some(rec),
                        Err(_) if step / 2.0 >= self.options.min_step => step /= 2.0,
                        Err(_) => break None,
                    }
                };
                let Some(mut rec) = accepted else {
                    let last_good_t = prev.t;
                    return Ok(TrackedPath {
                        records,
                        truncated_at: Some(last_good_t),
                    });
                };
                rec.continuity =
                    Some(self.geo.potential_distance(&rec.potential, &prev.potential) / step);
                let reached = step == full;
                records.push(rec);
                if reached {
                    break;
                }
            }
        }
        Ok(TrackedPath {
            records,
            truncated_at: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ToricGeometry, TorusGeometry};
    use crate::kahler::KahlerBackground;
    use crate::lattice::{Field, TorusGrid};
    use crate::toric::{MomentGrid, ToricPotential};

    fn wavy_torus(points: usize, cutoff: usize) -> TorusGeometry {
        let grid = TorusGrid::new(1, points).unwrap();
        let bg = KahlerBackground::new(Field::from_fn(grid, |p| 0.3 * libm::cos(p[0]))).unwrap();
        TorusGeometry::new(bg, cutoff).unwrap()
    }

    fn round_sphere(k: usize) -> ToricGeometry {
        let grid = MomentGrid::new(k).unwrap();
        ToricGeometry::with_default_degree(ToricPotential::canonical(&grid)).unwrap()
    }

    fn flat_csck(geo: &TorusGeometry) -> Field {
        geo.background().reference_potential().scale(-1.0)
    }

    #[test]
    fn residual_vanishes_at_flat_metric() {
        let geo = wavy_torus(16, 4);
        let none = ToricTwist::default();
        let flat =
            TorusGeometry::new(KahlerBackground::flat(TorusGrid::new(1, 16).unwrap()), 4).unwrap();
        let state = flat.assemble(&flat.reference()).unwrap();
        assert!(residual(&flat, &state, 0.7, &none).unwrap().sup() < 1e-14);

        let state = geo.assemble(&flat_csck(&geo)).unwrap();
        assert!(residual(&geo, &state, 1.0, &none).unwrap().sup() < 1e-13);

        let res = residual(&geo, &state, 0.9, &none).unwrap();
        let tr = geo.reference_trace(&state).unwrap();
        let mean = geo.integrate(&state, &tr) / geo.volume(&state);
        for (f, tr) in res.values.iter().zip(&tr) {
            assert!((f + 0.1 * (tr - mean)).abs() < 1e-13);
        }
        assert!(geo
            .twist_potential(&state, &ToricTwist::new(0.1, 0.0))
            .is_err());
    }

    #[test]
    fn twisted_residual_at_round_metric() {
        let geo = round_sphere(32);
        let state = geo.assemble(&geo.reference()).unwrap();
        let plain = residual(&geo, &state, 0.8, &ToricTwist::default()).unwrap();
        assert!(plain.sup() < 1e-12);
        let twisted = residual(&geo, &state, 1.0, &ToricTwist::new(0.1, 0.0)).unwrap();
        for (f, x) in twisted.values.iter().zip(geo.grid().nodes()) {
            assert!((f + 0.1 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn linearization_at_flat_metric_is_minus_bilaplacian() {
        let geo =
            TorusGeometry::new(KahlerBackground::flat(TorusGrid::new(1, 16).unwrap()), 3).unwrap();
        let jac = linearize(&geo, &geo.reference(), 1.0, &ToricTwist::default(), 1e-6).unwrap();
        for j in 0..geo.basis_len() {
            let k = geo.basis().wavevector(j);
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            for i in 0..geo.basis_len() {
                let expected = if i == j { -k2 * k2 / 16.0 } else { 0.0 };
                assert!(
                    (jac[(i, j)] - expected).abs() < 1e-6 * (1.0 + k2 * k2),
                    "{i} {j}"
                );
            }
        }
    }

    #[test]
    fn jacobian_is_symmetric_at_constant_curvature() {
        // resolved degree, so that every pairing below is integrated exactly
        let grid = MomentGrid::new(32).unwrap();
        let geo = ToricGeometry::new(ToricPotential::canonical(&grid), 14).unwrap();
        let csck = crate::toric::orbit_action(&geo.reference(), 0.3);
        let basis = kernel_basis(&geo, &csck, &SolverOptions::default()).unwrap();
        let jac = linearize(&geo, &csck, 1.0, &ToricTwist::default(), 1e-6).unwrap();
        let form = basis.mass() * jac;
        let defect = (&form - form.transpose()).amax() / form.amax();
        assert!(defect < 1e-4, "{defect}");
    }

    #[test]
    fn torus_kernel_is_empty() {
        let geo = wavy_torus(16, 4);
        let basis = kernel_basis(&geo, &flat_csck(&geo), &SolverOptions::default()).unwrap();
        assert_eq!(basis.dim(), 0);
        assert_eq!(basis.complement().ncols(), geo.basis_len());
    }

    #[test]
    fn sphere_kernel_is_the_moment_map() {
        let geo = round_sphere(32);
        let basis = kernel_basis(&geo, &geo.reference(), &SolverOptions::default()).unwrap();
        assert_eq!(basis.dim(), 1);
        let e = kernel_function(&geo, &basis, 0);
        let scale = libm::sqrt(1.5);
        for (v, x) in e.iter().zip(geo.grid().nodes()) {
            assert!((v - scale * x).abs() < 1e-10);
        }
        let state = geo.assemble(&geo.reference()).unwrap();
        let de = geo.lichnerowicz(&state, &e);
        assert!(de.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= basis.threshold());
        assert!(geo.integrate(&state, &e).abs() < 1e-10);

        let (k, c, m) = (basis.kernel(), basis.complement(), basis.mass());
        let identity = k * k.transpose() * m + c * c.transpose() * m;
        let n = geo.basis_len();
        assert!((identity - DMatrix::<f64>::identity(n, n)).amax() < 1e-10);
        let gram = c.transpose() * m * c;
        assert!((gram - DMatrix::<f64>::identity(n - 1, n - 1)).amax() < 1e-10);
    }

    #[test]
    fn complement_solve_is_flat_in_kernel_directions() {
        let geo = round_sphere(32);
        let options = SolverOptions::default();
        let basis = kernel_basis(&geo, &geo.reference(), &options).unwrap();
        let reduction = Reduction::new(&geo, &basis, ToricTwist::default(), options);
        let zero = reduction
            .orthogonal_solve(&DVector::zeros(1), 1.0, None)
            .unwrap();
        assert_eq!(zero.iterations, 0);
        assert!(zero.complement.amax() == 0.0);

        let ratios: Vec<f64> = [1e-2, 1e-3]
            .iter()
            .map(|&du| {
                let sol = reduction
                    .orthogonal_solve(&DVector::from_element(1, du), 1.0, None)
                    .unwrap();
                sol.complement.norm() / du
            })
            .collect();
        assert!(ratios[1] < 0.2 * ratios[0], "{ratios:?}");
    }

    #[test]
    fn reduced_map_vanishes_at_t_one() {
        let geo = round_sphere(32);
        let options = SolverOptions::default();
        let basis = kernel_basis(&geo, &geo.reference(), &options).unwrap();
        let reduction = Reduction::new(&geo, &basis, ToricTwist::default(), options);
        for u in [-0.05, 0.02, 0.07] {
            let value = reduction
                .reduced_map(&DVector::from_element(1, u), 1.0)
                .unwrap();
            assert!(value.p.amax() < 1e-12);
        }
        let origin = reduction.reduced_map(&DVector::zeros(1), 1.0).unwrap();
        assert!(origin.p_tilde.amax() < 1e-9);
    }

    #[test]
    fn solve_at_one_returns_the_anchor() {
        let geo = round_sphere(32);
        let cont = Continuation::from_anchor(
            &geo,
            ToricTwist::default(),
            SolverOptions::default(),
            geo.reference(),
        )
        .unwrap();
        let rec = cont.solve_at(1.0, cont.anchor_potential()).unwrap();
        assert_eq!(rec.iterations, 0);
        assert!(geo.potential_distance(&rec.potential, &geo.reference()) < 1e-14);
    }

    #[test]
    fn truncated_paths_report_the_last_good_parameter() {
        let path: TrackedPath<f64> = TrackedPath {
            records: Vec::new(),
            truncated_at: Some(0.93),
        };
        assert_eq!(
            path.into_result().unwrap_err(),
            Error::PathTruncated { last_good_t: 0.93 }
        );
    }
}
