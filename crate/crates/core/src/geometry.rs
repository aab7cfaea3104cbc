//! A common interface over the two model geometries, used by the energy
//! functionals and the continuation solver.
//!
//! Functions are carried as sample values at the points of a state: grid
//! points on the torus, moment nodes on the projective line. Potential
//! increments are expanded in a fixed real Galerkin basis.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kahler::{assemble_metric, KahlerBackground, MetricState, TrigBasis};
use crate::lattice::Field;
use crate::toric::{self, MomentGrid, Profile, ToricPotential, ToricState, ToricTwist};

pub trait Geometry {
    type Potential: Clone + core::fmt::Debug;
    type State;

    fn complex_dim(&self) -> usize;

    /// Cohomological average of the scalar curvature.
    fn scalar_average(&self) -> f64;

    /// Potential of the reference form itself.
    fn reference(&self) -> Self::Potential;

    fn assemble(&self, potential: &Self::Potential) -> Result<Self::State>;

    fn potential_of<'a>(&self, state: &'a Self::State) -> &'a Self::Potential;

    /// Quadrature weights of `ω_φⁿ/n!` at the sample points.
    fn weights(&self, state: &Self::State) -> Vec<f64>;

    fn scalar_curvature(&self, state: &Self::State) -> Vec<f64>;

    /// `tr_φ ω` against the reference form.
    fn reference_trace(&self, state: &Self::State) -> Result<Vec<f64>>;

    /// Holomorphy potential `ρ_φ(X)`, normalized to zero mean.
    fn twist_potential(&self, state: &Self::State, twist: &ToricTwist) -> Result<Vec<f64>>;

    fn lichnerowicz(&self, state: &Self::State, f: &[f64]) -> Vec<f64>;

    /// `⟨∂a, ∂̄b⟩_φ`.
    fn grad_pairing(&self, state: &Self::State, a: &[f64], b: &[f64]) -> Vec<f64>;

    /// `⟨i∂∂̄v, ω⟩_φ`.
    fn reference_hessian_pairing(&self, state: &Self::State, v: &[f64]) -> Vec<f64>;

    /// `g^{αμ̄}g^{νβ̄} f_{,μ̄} f_{,ν} ω_{αβ̄}`.
    fn reference_gradient_norm(&self, state: &Self::State, f: &[f64]) -> Vec<f64>;

    /// Linear chart in which finite differences of potentials give `φ̇`
    /// at the sample points of any state.
    fn chart(&self, potential: &Self::Potential) -> Vec<f64>;

    /// `φ̈ − |∇φ̇|²_φ` from the chart acceleration and the velocity.
    fn geodesic_defect(
        &self,
        state: &Self::State,
        chart_acceleration: &[f64],
        velocity: &[f64],
    ) -> Vec<f64>;

    /// `a·p + b·q` in the chart.
    fn combine(&self, p: &Self::Potential, a: f64, q: &Self::Potential, b: f64) -> Self::Potential;

    fn basis_len(&self) -> usize;

    /// Leading basis functions whose pairings the quadrature resolves;
    /// spectral questions are asked on this subspace.
    fn resolved_len(&self) -> usize {
        self.basis_len()
    }

    /// `φ + Σ c_i e_i` as a Kähler potential increment.
    fn displace(&self, potential: &Self::Potential, coeffs: &[f64]) -> Self::Potential;

    /// Galerkin coefficients of sampled values in the flat pairing.
    fn project(&self, values: &[f64]) -> Vec<f64>;

    /// `∫ e_i² ` in the flat pairing.
    fn basis_gram(&self) -> Vec<f64>;

    fn basis_samples(&self, index: usize) -> Vec<f64>;

    /// Coefficients `c` with `displace(base, c) ≈ potential`.
    fn coordinates(&self, base: &Self::Potential, potential: &Self::Potential) -> Vec<f64> {
        let diff: Vec<f64> = self
            .chart(potential)
            .iter()
            .zip(&self.chart(base))
            .map(|(a, b)| a - b)
            .collect();
        self.project(&diff)
    }

    /// Removes the additive gauge.
    fn normalize(&self, potential: &Self::Potential) -> Self::Potential;

    /// Sup-norm distance after normalization.
    fn potential_distance(&self, a: &Self::Potential, b: &Self::Potential) -> f64;

    /// Moves a constant-scalar-curvature potential along the automorphism
    /// orbit to the minimizer of `ι`; the identity when there is no orbit.
    fn center_on_orbit(&self, potential: &Self::Potential) -> Result<Self::Potential> {
        Ok(potential.clone())
    }

    fn integrate(&self, state: &Self::State, values: &[f64]) -> f64 {
        self.weights(state)
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }

    fn volume(&self, state: &Self::State) -> f64 {
        self.weights(state).iter().sum()
    }
}

/// Flat torus with a reference form `ω_flat + i∂∂̄ψ_ref`.
#[derive(Debug, Clone)]
pub struct TorusGeometry {
    background: KahlerBackground,
    basis: TrigBasis,
}

impl TorusGeometry {
    pub fn new(background: KahlerBackground, cutoff: usize) -> Result<Self> {
        let basis = TrigBasis::new(*background.grid(), cutoff)?;
        Ok(Self { background, basis })
    }

    pub fn background(&self) -> &KahlerBackground {
        &self.background
    }

    pub fn basis(&self) -> &TrigBasis {
        &self.basis
    }

    fn field(&self, values: &[f64]) -> Field {
        Field::real(*self.background.grid(), values.to_vec()).expect("grid length")
    }
}

impl Geometry for TorusGeometry {
    type Potential = Field;
    type State = MetricState;

    fn complex_dim(&self) -> usize {
        self.background.grid().dim()
    }

    fn scalar_average(&self) -> f64 {
        0.0
    }

    fn reference(&self) -> Field {
        Field::zeros(*self.background.grid())
    }

    fn assemble(&self, potential: &Field) -> Result<MetricState> {
        assemble_metric(&self.background, potential)
    }

    fn potential_of<'a>(&self, state: &'a MetricState) -> &'a Field {
        state.potential()
    }

    fn weights(&self, state: &MetricState) -> Vec<f64> {
        let cell = state.grid().cell_volume();
        state.determinant().iter().map(|d| d * cell).collect()
    }

    fn scalar_curvature(&self, state: &MetricState) -> Vec<f64> {
        state.scalar_curvature().real_values()
    }

    fn reference_trace(&self, state: &MetricState) -> Result<Vec<f64>> {
        Ok(state.reference_trace().real_values())
    }

    fn twist_potential(&self, state: &MetricState, twist: &ToricTwist) -> Result<Vec<f64>> {
        if !twist.is_zero() {
            return Err(Error::UnsupportedTwist);
        }
        Ok(alloc::vec![0.0; state.grid().len()])
    }

    fn lichnerowicz(&self, state: &MetricState, f: &[f64]) -> Vec<f64> {
        state.lichnerowicz(&self.field(f)).real_values()
    }

    fn grad_pairing(&self, state: &MetricState, a: &[f64], b: &[f64]) -> Vec<f64> {
        state
            .grad_pairing(&self.field(a), &self.field(b))
            .real_values()
    }

    fn reference_hessian_pairing(&self, state: &MetricState, v: &[f64]) -> Vec<f64> {
        state
            .reference_hessian_pairing(&self.field(v))
            .real_values()
    }

    fn reference_gradient_norm(&self, state: &MetricState, f: &[f64]) -> Vec<f64> {
        state.reference_gradient_norm(&self.field(f)).real_values()
    }

    fn chart(&self, potential: &Field) -> Vec<f64> {
        potential.real_values()
    }

    fn geodesic_defect(
        &self,
        state: &MetricState,
        chart_acceleration: &[f64],
        velocity: &[f64],
    ) -> Vec<f64> {
        let grad = self.grad_pairing(state, velocity, velocity);
        chart_acceleration
            .iter()
            .zip(&grad)
            .map(|(a, g)| a - g)
            .collect()
    }

    fn combine(&self, p: &Field, a: f64, q: &Field, b: f64) -> Field {
        p.scale(a).axpy(b, q).expect("same grid")
    }

    fn basis_len(&self) -> usize {
        self.basis.len()
    }

    fn displace(&self, potential: &Field, coeffs: &[f64]) -> Field {
        potential
            .add(&self.basis.synthesize(coeffs))
            .expect("same grid")
    }

    fn project(&self, values: &[f64]) -> Vec<f64> {
        self.basis.analyze(&self.field(values))
    }

    fn basis_gram(&self) -> Vec<f64> {
        (0..self.basis.len())
            .map(|i| self.basis.norm_sq(i))
            .collect()
    }

    fn basis_samples(&self, index: usize) -> Vec<f64> {
        self.basis.function(index).real_values()
    }

    fn normalize(&self, potential: &Field) -> Field {
        potential.shift(-potential.mean().re)
    }

    fn potential_distance(&self, a: &Field, b: &Field) -> f64 {
        let d = a.sub(b).expect("same grid");
        self.normalize(&d).sup_norm()
    }
}

/// Circle-invariant metrics on the projective line. Potential increments
/// are Legendre polynomials `P_1..P_M` in the moment coordinate, and a
/// Kähler potential increment `δφ` corresponds to `δh = −δφ`.
#[derive(Debug, Clone)]
pub struct ToricGeometry {
    grid: Arc<MomentGrid>,
    reference: ToricPotential,
    degree: usize,
}

impl ToricGeometry {
    pub fn new(reference: ToricPotential, degree: usize) -> Result<Self> {
        let grid = reference.grid().clone();
        if degree == 0 || degree >= grid.len() {
            return Err(Error::InvalidArgument(
                "Galerkin degree must lie in 1..K".into(),
            ));
        }
        ToricState::new(&reference)?;
        Ok(Self {
            grid,
            reference,
            degree,
        })
    }

    /// Full degree `K − 1`: a vanishing projected residual then vanishes
    /// at every node.
    pub fn with_default_degree(reference: ToricPotential) -> Result<Self> {
        let degree = reference.grid().len() - 1;
        Self::new(reference, degree)
    }

    pub fn grid(&self) -> &Arc<MomentGrid> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn profile(&self, values: &[f64]) -> Profile {
        Profile::from_values(&self.grid, values.to_vec()).expect("grid length")
    }
}

impl Geometry for ToricGeometry {
    type Potential = ToricPotential;
    type State = ToricState;

    fn complex_dim(&self) -> usize {
        1
    }

    fn scalar_average(&self) -> f64 {
        2.0
    }

    fn reference(&self) -> ToricPotential {
        self.reference.clone()
    }

    fn assemble(&self, potential: &ToricPotential) -> Result<ToricState> {
        ToricState::new(potential)
    }

    fn potential_of<'a>(&self, state: &'a ToricState) -> &'a ToricPotential {
        state.potential()
    }

    fn weights(&self, _state: &ToricState) -> Vec<f64> {
        self.grid.weights().to_vec()
    }

    fn scalar_curvature(&self, state: &ToricState) -> Vec<f64> {
        state.scalar().to_vec()
    }

    fn reference_trace(&self, state: &ToricState) -> Result<Vec<f64>> {
        state.trace_of(&self.reference)
    }

    fn twist_potential(&self, state: &ToricState, twist: &ToricTwist) -> Result<Vec<f64>> {
        Ok(toric::rho_potential(state.potential(), twist)
            .values()
            .to_vec())
    }

    fn lichnerowicz(&self, state: &ToricState, f: &[f64]) -> Vec<f64> {
        toric::lichnerowicz(state, &self.profile(f))
            .values()
            .to_vec()
    }

    fn grad_pairing(&self, state: &ToricState, a: &[f64], b: &[f64]) -> Vec<f64> {
        toric::grad_pairing(state, &self.profile(a), &self.profile(b))
            .values()
            .to_vec()
    }

    fn reference_hessian_pairing(&self, state: &ToricState, v: &[f64]) -> Vec<f64> {
        // ⟨i∂∂̄v, ω⟩ = Δv · tr_φ ω in one dimension
        let lap = toric::laplacian(state, &self.profile(v));
        let tr = state
            .trace_of(&self.reference)
            .expect("admissible reference");
        lap.values().iter().zip(&tr).map(|(l, t)| l * t).collect()
    }

    fn reference_gradient_norm(&self, state: &ToricState, f: &[f64]) -> Vec<f64> {
        let df = self.profile(f).derivative();
        let tr = state
            .trace_of(&self.reference)
            .expect("admissible reference");
        let phi = state.phi(0);
        (0..phi.len())
            .map(|j| phi[j] * df.values()[j] * df.values()[j] * tr[j])
            .collect()
    }

    fn chart(&self, potential: &ToricPotential) -> Vec<f64> {
        potential.h_values().iter().map(|h| -h).collect()
    }

    fn geodesic_defect(
        &self,
        _state: &ToricState,
        chart_acceleration: &[f64],
        _velocity: &[f64],
    ) -> Vec<f64> {
        // φ̈ at fixed z equals −ḧ + Φ(ḣ')², so the gradient term cancels
        chart_acceleration.to_vec()
    }

    fn combine(&self, p: &ToricPotential, a: f64, q: &ToricPotential, b: f64) -> ToricPotential {
        p.combine(a, q, b)
    }

    fn basis_len(&self) -> usize {
        self.degree
    }

    fn resolved_len(&self) -> usize {
        self.degree.min(self.grid.galerkin_degree())
    }

    fn displace(&self, potential: &ToricPotential, coeffs: &[f64]) -> ToricPotential {
        let mut legendre = alloc::vec![0.0; coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            legendre[i + 1] = -c;
        }
        potential.add_legendre(&legendre)
    }

    fn project(&self, values: &[f64]) -> Vec<f64> {
        self.grid.legendre_project(values, self.degree)[1..].to_vec()
    }

    fn basis_gram(&self) -> Vec<f64> {
        (1..=self.degree)
            .map(|m| 2.0 / (2 * m + 1) as f64)
            .collect()
    }

    fn basis_samples(&self, index: usize) -> Vec<f64> {
        (0..self.grid.len())
            .map(|j| self.grid.legendre_at(j, index + 1))
            .collect()
    }

    fn normalize(&self, potential: &ToricPotential) -> ToricPotential {
        potential.normalized()
    }

    fn potential_distance(&self, a: &ToricPotential, b: &ToricPotential) -> f64 {
        a.distance(b)
    }

    fn center_on_orbit(&self, potential: &ToricPotential) -> Result<ToricPotential> {
        Ok(toric::minimize_iota_on_orbit(potential, &self.reference)?.potential)
    }
}
