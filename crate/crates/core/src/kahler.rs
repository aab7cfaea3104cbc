//! Curvature and the fourth-order operator calculus on flat-torus
//! backgrounds.
//!
//! Index conventions: a [`TensorField`] slot `(a, b)` holds `T_{a b̄}`;
//! the stored inverse metric satisfies `Σ_b g^{a b̄} g_{c b̄} = δ_{ac}`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{mixed_hessian, Direction, Field, Purity, Spectrum, TensorField, TorusGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reference form `ω = ω_flat + i∂∂̄ψ_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerBackground {
    reference: Field,
    metric: TensorField,
}

impl KahlerBackground {
    pub fn new(reference: Field) -> Result<Self> {
        if !reference.is_real() {
            return Err(Error::InvalidArgument(
                "reference potential must be real".into(),
            ));
        }
        let metric = hermitian_metric(&reference);
        min_eigenvalue_check(&metric)?;
        Ok(Self { reference, metric })
    }

    pub fn flat(grid: TorusGrid) -> Self {
        Self::new(Field::zeros(grid)).expect("flat metric is positive")
    }

    pub fn grid(&self) -> &TorusGrid {
        self.reference.grid()
    }

    pub fn reference_potential(&self) -> &Field {
        &self.reference
    }

    /// Components `ω_{αβ̄}` of the reference form.
    pub fn metric(&self) -> &TensorField {
        &self.metric
    }
}

/// `δ + f_{,αβ̄}` with Hermitian symmetry enforced pointwise.
fn hermitian_metric(potential: &Field) -> TensorField {
    let hess = mixed_hessian(potential);
    let grid = *potential.grid();
    let n = grid.dim();
    let mut g = TensorField::zeros(grid);
    for p in 0..grid.len() {
        for a in 0..n {
            g.set(p, a, a, Complex64::new(1.0 + hess.at(p, a, a).re, 0.0));
            for b in a + 1..n {
                let off = 0.5 * (hess.at(p, a, b) + hess.at(p, b, a).conj());
                g.set(p, a, b, off);
                g.set(p, b, a, off.conj());
            }
        }
    }
    g
}

fn min_eigenvalue_at(g: &TensorField, p: usize) -> f64 {
    if g.dim() == 1 {
        g.at(p, 0, 0).re
    } else {
        let a = g.at(p, 0, 0).re;
        let d = g.at(p, 1, 1).re;
        let off = g.at(p, 0, 1).norm();
        let half = 0.5 * (a - d);
        0.5 * (a + d) - libm::sqrt(half * half + off * off)
    }
}

/// Smallest eigenvalue over all points; errors at the first bad point.
fn min_eigenvalue_check(g: &TensorField) -> Result<f64> {
    let mut min = f64::INFINITY;
    for p in 0..g.grid().len() {
        let e = min_eigenvalue_at(g, p);
        if !(e > 0.0) {
            return Err(Error::NonPositiveMetric {
                point: p,
                min_eigenvalue: e,
            });
        }
        min = min.min(e);
    }
    Ok(min)
}

/// A background plus potential with cached curvature.
#[derive(Debug, Clone)]
pub struct MetricState {
    background: KahlerBackground,
    potential: Field,
    metric: TensorField,
    inverse: TensorField,
    det: Vec<f64>,
    ricci: TensorField,
    scalar: Field,
    min_eigenvalue: f64,
}

/// `ω_φ = ω + i∂∂̄φ` with its inverse, determinant, Ricci form and scalar
/// curvature.
pub fn assemble_metric(bg: &KahlerBackground, potential: &Field) -> Result<MetricState> {
    MetricState::new(bg, potential)
}

impl MetricState {
    pub fn new(bg: &KahlerBackground, potential: &Field) -> Result<Self> {
        if bg.grid() != potential.grid() {
            return Err(Error::MismatchedGrids);
        }
        let potential = potential.real_part();
        let total = bg.reference.add(&potential)?;
        let metric = hermitian_metric(&total);
        let min_eigenvalue = min_eigenvalue_check(&metric)?;
        let grid = *bg.grid();
        let n = grid.dim();
        let mut inverse = TensorField::zeros(grid);
        let mut det = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            if n == 1 {
                let g = metric.at(p, 0, 0).re;
                det.push(g);
                inverse.set(p, 0, 0, Complex64::new(1.0 / g, 0.0));
            } else {
                let (g00, g01, g10, g11) = (
                    metric.at(p, 0, 0),
                    metric.at(p, 0, 1),
                    metric.at(p, 1, 0),
                    metric.at(p, 1, 1),
                );
                let d = (g00 * g11 - g01 * g10).re;
                det.push(d);
                inverse.set(p, 0, 0, g11 / d);
                inverse.set(p, 1, 1, g00 / d);
                inverse.set(p, 0, 1, -g10 / d);
                inverse.set(p, 1, 0, -g01 / d);
            }
        }
        let log_det = Field::real(grid, det.iter().map(|d| libm::log(*d)).collect())?;
        let hess = mixed_hessian(&log_det);
        let mut ricci = TensorField::zeros(grid);
        for p in 0..grid.len() {
            for a in 0..n {
                ricci.set(p, a, a, Complex64::new(-hess.at(p, a, a).re, 0.0));
                for b in a + 1..n {
                    let off = -0.5 * (hess.at(p, a, b) + hess.at(p, b, a).conj());
                    ricci.set(p, a, b, off);
                    ricci.set(p, b, a, off.conj());
                }
            }
        }
        let scalar_values = (0..grid.len())
            .map(|p| {
                let mut r = ZERO;
                for a in 0..n {
                    for b in 0..n {
                        r += inverse.at(p, a, b) * ricci.at(p, a, b);
                    }
                }
                r.re
            })
            .collect();
        let scalar = Field::real(grid, scalar_values)?;
        Ok(Self {
            background: bg.clone(),
            potential,
            metric,
            inverse,
            det,
            ricci,
            scalar,
            min_eigenvalue,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.potential.grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn background(&self) -> &KahlerBackground {
        &self.background
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn metric(&self) -> &TensorField {
        &self.metric
    }

    pub fn inverse_metric(&self) -> &TensorField {
        &self.inverse
    }

    pub fn determinant(&self) -> &[f64] {
        &self.det
    }

    pub fn ricci(&self) -> &TensorField {
        &self.ricci
    }

    pub fn scalar_curvature(&self) -> &Field {
        &self.scalar
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Density of `ω_φⁿ/n!` against Lebesgue measure.
    pub fn volume_density(&self) -> Field {
        Field::real(*self.grid(), self.det.clone()).expect("grid length")
    }

    /// `∫ ω_φⁿ/n!`; equals the Lebesgue volume since the class is fixed.
    pub fn volume(&self) -> f64 {
        self.det.iter().sum::<f64>() * self.grid().cell_volume()
    }

    /// `∫ f ω_φⁿ/n!`.
    pub fn integrate(&self, f: &Field) -> Complex64 {
        let sum: Complex64 = f.values().iter().zip(&self.det).map(|(v, d)| v * *d).sum();
        sum * self.grid().cell_volume()
    }

    /// `⟨f, g⟩` in `L²(ω_φⁿ/n!)`.
    pub fn inner(&self, f: &Field, g: &Field) -> Complex64 {
        let sum: Complex64 = f
            .values()
            .iter()
            .zip(g.values())
            .zip(&self.det)
            .map(|((a, b), d)| a * b.conj() * *d)
            .sum();
        sum * self.grid().cell_volume()
    }

    /// Discrete average of the scalar curvature; the cohomological value on
    /// a torus is 0.
    pub fn scalar_average(&self) -> f64 {
        self.integrate(&self.scalar).re / self.volume()
    }

    /// `max_p |Σ_b g^{ab̄} g_{cb̄} − δ_{ac}|`.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for p in 0..self.grid().len() {
            for a in 0..n {
                for c in 0..n {
                    let mut s = ZERO;
                    for b in 0..n {
                        s += self.inverse.at(p, a, b) * self.metric.at(p, c, b);
                    }
                    let target = if a == c { 1.0 } else { 0.0 };
                    worst = worst.max((s - target).norm());
                }
            }
        }
        worst
    }

    fn contract(&self, t: &TensorField) -> Field {
        let n = self.dim();
        let values = (0..self.grid().len())
            .map(|p| {
                let mut s = ZERO;
                for a in 0..n {
                    for b in 0..n {
                        s += self.inverse.at(p, a, b) * t.at(p, a, b);
                    }
                }
                s
            })
            .collect();
        Field::complex(*self.grid(), values).expect("grid length")
    }

    /// `Δ_φ f = g^{αβ̄} f_{,αβ̄}`.
    pub fn laplacian(&self, f: &Field) -> Field {
        let out = self.contract(&mixed_hessian(f));
        if f.is_real() {
            out.real_part()
        } else {
            out
        }
    }

    /// `tr_φ χ = g^{αβ̄} χ_{αβ̄}`.
    pub fn trace_of(&self, chi: &MetricState) -> Result<Field> {
        if self.grid() != chi.grid() {
            return Err(Error::MismatchedGrids);
        }
        Ok(self.contract(&chi.metric).real_part())
    }

    /// `tr_φ ω` for the background form.
    pub fn reference_trace(&self) -> Field {
        self.contract(&self.background.metric).real_part()
    }

    /// `Σ g^{αβ̄} ∂_α v₁ ∂_β̄ v₂`.
    pub fn grad_pairing(&self, v1: &Field, v2: &Field) -> Field {
        let n = self.dim();
        let s1 = v1.spectrum();
        let s2 = v2.spectrum();
        let d1: Vec<Field> = (0..n)
            .map(|a| {
                s1.derivative(a, Direction::Holomorphic)
                    .to_field(Purity::Complex)
            })
            .collect();
        let d2: Vec<Field> = (0..n)
            .map(|b| {
                s2.derivative(b, Direction::Antiholomorphic)
                    .to_field(Purity::Complex)
            })
            .collect();
        let values = (0..self.grid().len())
            .map(|p| {
                let mut s = ZERO;
                for a in 0..n {
                    for b in 0..n {
                        s += self.inverse.at(p, a, b) * d1[a].values()[p] * d2[b].values()[p];
                    }
                }
                s
            })
            .collect();
        Field::complex(*self.grid(), values).expect("grid length")
    }

    /// `⟨A, B⟩ = g^{αβ̄} g^{γδ̄} A_{αδ̄} B_{γβ̄}` (bilinear).
    pub fn form_pairing(&self, a: &TensorField, b: &TensorField) -> Field {
        let n = self.dim();
        let gi = &self.inverse;
        let values = (0..self.grid().len())
            .map(|p| {
                let mut s = ZERO;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                s +=
                                    gi.at(p, i, j) * gi.at(p, k, l) * a.at(p, i, l) * b.at(p, k, j);
                            }
                        }
                    }
                }
                s
            })
            .collect();
        Field::complex(*self.grid(), values).expect("grid length")
    }

    /// `⟨i∂∂̄v, ω⟩_φ` against the background form.
    pub fn reference_hessian_pairing(&self, v: &Field) -> Field {
        self.form_pairing(&mixed_hessian(v), &self.background.metric)
    }

    /// `g^{αμ̄} g^{νβ̄} f_{,μ̄} f_{,ν} ω_{αβ̄}`, the gradient of `f` measured by
    /// the background form.
    pub fn reference_gradient_norm(&self, f: &Field) -> Field {
        let n = self.dim();
        let spec = f.spectrum();
        let hol: Vec<Field> = (0..n)
            .map(|a| {
                spec.derivative(a, Direction::Holomorphic)
                    .to_field(Purity::Complex)
            })
            .collect();
        let anti: Vec<Field> = (0..n)
            .map(|a| {
                spec.derivative(a, Direction::Antiholomorphic)
                    .to_field(Purity::Complex)
            })
            .collect();
        let gi = &self.inverse;
        let om = &self.background.metric;
        let values = (0..self.grid().len())
            .map(|p| {
                let mut s = ZERO;
                for a in 0..n {
                    for m in 0..n {
                        for v in 0..n {
                            for b in 0..n {
                                s += gi.at(p, a, m)
                                    * gi.at(p, v, b)
                                    * anti[m].values()[p]
                                    * hol[v].values()[p]
                                    * om.at(p, a, b);
                            }
                        }
                    }
                }
                s
            })
            .collect();
        Field::complex(*self.grid(), values).expect("grid length")
    }

    /// `(Lf)^α_β̄ = ∂_β̄(g^{αμ̄} f_{,μ̄})`.
    pub fn l_operator(&self, f: &Field) -> TensorField {
        let n = self.dim();
        let spec = f.spectrum();
        let anti: Vec<Field> = (0..n)
            .map(|m| {
                spec.derivative(m, Direction::Antiholomorphic)
                    .to_field(Purity::Complex)
            })
            .collect();
        let mut out = TensorField::zeros(*self.grid());
        for a in 0..n {
            let raised: Vec<Complex64> = (0..self.grid().len())
                .map(|p| {
                    (0..n)
                        .map(|m| self.inverse.at(p, a, m) * anti[m].values()[p])
                        .sum()
                })
                .collect();
            let raised = Field::complex(*self.grid(), raised)
                .expect("grid length")
                .spectrum();
            for b in 0..n {
                out.set_component(
                    a,
                    b,
                    &raised
                        .derivative(b, Direction::Antiholomorphic)
                        .to_field(Purity::Complex),
                );
            }
        }
        out
    }

    /// Pointwise `|A|²_φ = g_{αγ̄} g^{δβ̄} A^α_β̄ conj(A^γ_δ̄)` for a tensor
    /// produced by [`MetricState::l_operator`].
    pub fn l_norm_sq(&self, a: &TensorField) -> Field {
        let n = self.dim();
        let values = (0..self.grid().len())
            .map(|p| {
                let mut s = ZERO;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                s += self.metric.at(p, i, k)
                                    * self.inverse.at(p, l, j)
                                    * a.at(p, i, j)
                                    * a.at(p, k, l).conj();
                            }
                        }
                    }
                }
                s.re
            })
            .collect();
        Field::real(*self.grid(), values).expect("grid length")
    }

    /// `D f = Δ²f + ⟨i∂∂̄f, Ric⟩ + ⟨∂R, ∂̄f⟩`, input dealiased first.
    pub fn lichnerowicz(&self, f: &Field) -> Field {
        let f = f.dealiased();
        let hess = mixed_hessian(&f);
        let lap = self.contract(&hess);
        let bilap = self.contract(&mixed_hessian(&lap));
        let ric = self.form_pairing(&hess, &self.ricci);
        let drift = self.grad_pairing(&self.scalar, &f);
        let values = bilap
            .values()
            .iter()
            .zip(ric.values())
            .zip(drift.values())
            .map(|((a, b), c)| a + b + c)
            .collect();
        Field::complex(*self.grid(), values).expect("grid length")
    }

    /// `D̄ f = conj(D conj f)`.
    pub fn lichnerowicz_bar(&self, f: &Field) -> Field {
        self.lichnerowicz(&f.conj()).conj()
    }

    /// The bilinear operator `B_φ(u, v)` of the Leibniz identity.
    pub fn b_operator(&self, u: &Field, v: &Field) -> Field {
        let u = u.dealiased();
        let v = v.dealiased();
        let hu = mixed_hessian(&u);
        let hv = mixed_hessian(&v);
        let lap_u = self.contract(&hu);
        let lap_v = self.contract(&hv);
        let t1 = self.form_pairing(&hv, &mixed_hessian(&lap_u));
        let t2 = self.laplacian(&self.form_pairing(&hv, &hu));
        let t3 = self.form_pairing(&mixed_hessian(&lap_v), &hu);
        let n = self.dim();
        let gi = &self.inverse;
        let ric = &self.ricci;
        let values = (0..self.grid().len())
            .map(|p| {
                let mut t45 = ZERO;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                for e in 0..n {
                                    for f in 0..n {
                                        let w = gi.at(p, a, b)
                                            * gi.at(p, c, d)
                                            * gi.at(p, e, f)
                                            * ric.at(p, a, f);
                                        t45 += w
                                            * (hu.at(p, c, b) * hv.at(p, e, d)
                                                + hv.at(p, c, b) * hu.at(p, e, d));
                                    }
                                }
                            }
                        }
                    }
                }
                t1.values()[p] + t2.values()[p] + t3.values()[p] + t45
            })
            .collect();
        Field::complex(*self.grid(), values).expect("grid length")
    }

    /// `sup |D⟨∂v,∂̄ξ⟩ − ⟨∂v, ∂̄Dξ⟩ − B(v, ξ)|`, requiring `v` to lie in the
    /// numerical kernel of both `D` and `D̄`.
    pub fn leibniz_residual(&self, v: &Field, xi: &Field, eps_ker: f64) -> Result<f64> {
        let defect = self
            .lichnerowicz(v)
            .sup_norm()
            .max(self.lichnerowicz_bar(v).sup_norm());
        if defect > eps_ker {
            return Err(Error::KernelPreconditionViolated {
                defect,
                threshold: eps_ker,
            });
        }
        let lhs = self.lichnerowicz(&self.grad_pairing(v, xi));
        let rhs = self.grad_pairing(v, &self.lichnerowicz(xi));
        let b = self.b_operator(v, xi);
        Ok(lhs.sub(&rhs)?.sub(&b)?.sup_norm())
    }

    /// `sup |D(D̄f) − D̄(Df)|`.
    pub fn commutator_residual(&self, f: &Field) -> f64 {
        let a = self.lichnerowicz(&self.lichnerowicz_bar(f));
        let b = self.lichnerowicz_bar(&self.lichnerowicz(f));
        a.sub(&b).expect("same grid").sup_norm()
    }
}

/// Real trigonometric basis `{cos k·x, sin k·x}` over a half-space of
/// wavevectors with `0 < max|k_i| <= cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigBasis {
    grid: TorusGrid,
    modes: Vec<([i64; 4], bool)>,
}

impl TrigBasis {
    pub fn new(grid: TorusGrid, cutoff: usize) -> Result<Self> {
        if cutoff == 0 || cutoff > grid.dealias_cutoff() {
            return Err(Error::InvalidArgument(
                "basis cutoff outside (0, N/3]".into(),
            ));
        }
        let axes = grid.real_axes();
        let c = cutoff as i64;
        let side = (2 * c + 1) as usize;
        let mut modes = Vec::new();
        for idx in 0..side.pow(axes as u32) {
            let mut k = [0i64; 4];
            let mut rest = idx;
            for axis in (0..axes).rev() {
                k[axis] = (rest % side) as i64 - c;
                rest /= side;
            }
            let leading = k[..axes].iter().find(|v| **v != 0);
            if let Some(&lead) = leading {
                if lead > 0 {
                    modes.push((k, true));
                    modes.push((k, false));
                }
            }
        }
        Ok(Self { grid, modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn wavevector(&self, i: usize) -> [i64; 4] {
        self.modes[i].0
    }

    /// `∫ b_i² dx` over the fundamental domain.
    pub fn norm_sq(&self, _i: usize) -> f64 {
        0.5 * self.grid.volume()
    }

    pub fn function(&self, i: usize) -> Field {
        let (k, cosine) = self.modes[i];
        Field::from_fn(self.grid, |p| {
            let phase: f64 = p.iter().zip(&k).map(|(x, k)| x * *k as f64).sum();
            if cosine {
                libm::cos(phase)
            } else {
                libm::sin(phase)
            }
        })
    }

    /// `Σ c_i b_i`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Field {
        let len = self.grid.len();
        let mut spec = alloc::vec![ZERO; len];
        for (i, c) in coeffs.iter().enumerate() {
            let (k, cosine) = self.modes[i];
            let plus = self.slot(&k, 1);
            let minus = self.slot(&k, -1);
            // cos = (e⁺ + e⁻)/2, sin = (e⁺ − e⁻)/2i
            if cosine {
                spec[plus] += 0.5 * c;
                spec[minus] += 0.5 * c;
            } else {
                spec[plus] += Complex64::new(0.0, -0.5 * c);
                spec[minus] += Complex64::new(0.0, 0.5 * c);
            }
        }
        Spectrum::from_coefficients(self.grid, spec)
            .expect("grid length")
            .to_field(Purity::Real)
    }

    /// Coefficients `⟨f, b_i⟩/‖b_i‖²` in the Lebesgue pairing.
    pub fn analyze(&self, f: &Field) -> Vec<f64> {
        let spec = f.spectrum();
        self.modes
            .iter()
            .map(|(k, cosine)| {
                let plus = spec.coefficients()[self.slot(k, 1)];
                let minus = spec.coefficients()[self.slot(k, -1)];
                if *cosine {
                    (plus + minus).re
                } else {
                    (Complex64::new(0.0, 1.0) * (plus - minus)).re
                }
            })
            .collect()
    }

    fn slot(&self, k: &[i64; 4], sign: i64) -> usize {
        let n = self.grid.points() as i64;
        let mut multi = [0usize; 4];
        for axis in 0..self.grid.real_axes() {
            multi[axis] = (sign * k[axis]).rem_euclid(n) as usize;
        }
        self.grid.flat_index(&multi)
    }
}
