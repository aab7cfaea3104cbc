use nalgebra::DVector;
use twistpath_core::continuation::*;
use twistpath_core::functionals::{functional_at, FunctionalKind};
use twistpath_core::geometry::{Geometry, ToricGeometry, TorusGeometry};
use twistpath_core::kahler::KahlerBackground;
use twistpath_core::lattice::{Field, TorusGrid};
use twistpath_core::toric::{
    orbit_action, orbit_gradient, DualPotential, MomentGrid, ToricPotential, ToricTwist,
};
use twistpath_core::Error;

fn torus() -> TorusGeometry {
    let grid = TorusGrid::new(1, 32).unwrap();
    let bg = KahlerBackground::new(Field::from_fn(grid, |p| 0.3 * p[0].cos())).unwrap();
    TorusGeometry::new(bg, 8).unwrap()
}

fn sphere() -> ToricGeometry {
    let grid = MomentGrid::new(64).unwrap();
    let reference = ToricPotential::from_fn(&grid, |x| {
        0.1 * (1.0 - x * x).powi(2) + 0.05 * x * (1.0 - x * x).powi(2)
    });
    ToricGeometry::with_default_degree(reference).unwrap()
}

fn none() -> ToricTwist {
    ToricTwist::default()
}

/// Columns of the FD Jacobian against `−D` on the lower half of the modes,
/// ordered by the size of `D e_j`.
fn linearization_defect<G: Geometry>(geo: &G, anchor: &G::Potential) -> f64 {
    let jac = linearize(geo, anchor, 1.0, &none(), 1e-6).unwrap();
    let state = geo.assemble(anchor).unwrap();
    let d = lichnerowicz_matrix(geo, &state);
    let mut order: Vec<usize> = (0..geo.basis_len()).collect();
    let norms: Vec<f64> = (0..geo.basis_len()).map(|j| d.column(j).amax()).collect();
    order.sort_by(|a, b| norms[*a].total_cmp(&norms[*b]));
    order[..geo.basis_len() / 2]
        .iter()
        .map(|&j| (jac.column(j) + d.column(j)).amax() / norms[j].max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn linearization_matches_lichnerowicz_on_both_backends() {
    let geo = torus();
    let anchor = geo.background().reference_potential().scale(-1.0);
    let defect = linearization_defect(&geo, &anchor);
    assert!(defect <= 1e-5, "torus {defect:e}");

    let geo = sphere();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let defect = linearization_defect(&geo, cont.anchor_potential());
    assert!(defect <= 1e-5, "sphere {defect:e}");
}

#[test]
fn torus_anchor_is_the_flat_metric() {
    let geo = torus();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let flat = geo.background().reference_potential().scale(-1.0);
    assert!(geo.potential_distance(cont.anchor_potential(), &flat) < 1e-10);
    assert_eq!(cont.basis().dim(), 0);
}

#[test]
fn orbit_minimizer_is_orthogonal_and_reduced_map_vanishes() {
    let geo = sphere();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let reference = geo.reference();
    assert!(
        orbit_gradient(cont.anchor_potential(), &reference, 0.0)
            .unwrap()
            .abs()
            <= 1e-8
    );
    assert!(cont.orthogonality_defect() <= 1e-8);

    let reduction = cont.reduction();
    for u in [-0.08, -0.03, 0.0, 0.04, 0.09] {
        let value = reduction
            .reduced_map(&DVector::from_element(1, u), 1.0)
            .unwrap();
        assert!(value.p.amax() <= 1e-10, "P({u}, 1) = {}", value.p[0]);
    }
    let origin = reduction.reduced_map(&DVector::zeros(1), 1.0).unwrap();
    assert!(origin.p_tilde.amax() <= 1e-6, "{}", origin.p_tilde[0]);
}

#[test]
fn reduced_jacobian_is_positive_and_consistent() {
    let geo = sphere();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let reduction = cont.reduction();
    let analytic = reduction.reduced_jacobian_analytic().unwrap()[(0, 0)];
    let fd = reduction.reduced_jacobian_fd(1e-3).unwrap()[(0, 0)];
    let form = reduction.reduced_jacobian_quadrature().unwrap()[(0, 0)];
    assert!(analytic > 0.0);
    assert!((analytic - fd).abs() <= 1e-4 * analytic, "{analytic} {fd}");
    assert!(
        (analytic - form).abs() <= 1e-4 * analytic,
        "{analytic} {form}"
    );

    // the kernel function is √(3/2)·x, and in the s coordinate the form is
    // (3/2)∫ Φ_ref Φ₁ ds
    let phi_ref = DualPotential::from_potential(&geo.reference()).unwrap();
    let phi_one = DualPotential::from_potential(cont.anchor_potential()).unwrap();
    let (lo, hi, n) = (-12.0, 12.0, 4800);
    let h = (hi - lo) / n as f64;
    let dual: f64 = (0..=n)
        .map(|i| {
            let s = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * phi_ref.curvature(s) * phi_one.curvature(s)
        })
        .sum::<f64>()
        * h
        * 1.5;
    assert!(
        (analytic - dual).abs() <= 1e-4 * analytic,
        "{analytic} {dual}"
    );
}

#[test]
fn torus_path_reaches_the_end_with_small_residuals() {
    let geo = torus();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let records = cont.track_path(0.9, 11).unwrap().into_result().unwrap();
    assert_eq!(records.len(), 11);
    for rec in &records {
        assert!(
            rec.residual_sup <= 1e-10 && rec.mean_defect <= 1e-10,
            "t = {} residual {:e}",
            rec.t,
            rec.residual_sup
        );
    }
    assert!((records[10].t - 0.9).abs() < 1e-15);

    let near = cont
        .track_path(1.0 - 1e-6, 2)
        .unwrap()
        .into_result()
        .unwrap();
    assert!(geo.potential_distance(&near[1].potential, cont.anchor_potential()) <= 1e-4);
}

#[test]
fn sphere_path_reaches_the_end_with_small_residuals() {
    let geo = sphere();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let records = cont.track_path(0.9, 11).unwrap().into_result().unwrap();
    for rec in &records {
        assert!(
            rec.residual_sup <= 1e-10 && rec.mean_defect <= 1e-10,
            "t = {} residual {:e}",
            rec.t,
            rec.residual_sup
        );
        assert_eq!(rec.reduced.len(), 1);
    }
    let near = cont
        .track_path(1.0 - 1e-6, 2)
        .unwrap()
        .into_result()
        .unwrap();
    assert!(geo.potential_distance(&near[1].potential, cont.anchor_potential()) <= 1e-4);
}

#[test]
fn twisted_sphere_has_no_anchor() {
    // ∫x(S − 2)dx vanishes for every potential, while ∫x·ax dx does not
    let geo = sphere();
    let err = Continuation::anchor(
        &geo,
        ToricTwist::new(0.1, 0.0),
        SolverOptions::default(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NoConvergence { .. }), "{err}");
}

#[test]
fn cold_and_warm_starts_agree() {
    let geo = torus();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let warm = cont.solve_at(0.9, cont.anchor_potential()).unwrap();
    let cold = cont.solve_at(0.9, &geo.reference()).unwrap();
    assert!(geo.potential_distance(&warm.potential, &cold.potential) <= 1e-6);

    let geo = sphere();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let warm = cont.solve_at(0.9, cont.anchor_potential()).unwrap();
    let cold = cont.solve_at(0.9, &geo.reference()).unwrap();
    assert!(geo.potential_distance(&warm.potential, &cold.potential) <= 1e-6);
    for shift in [-0.3, 0.3] {
        let start = orbit_action(cont.anchor_potential(), shift);
        let other = cont.solve_at(0.9, &start).unwrap();
        assert!(
            geo.potential_distance(&warm.potential, &other.potential) <= 1e-6,
            "shift {shift}"
        );
    }
}

#[test]
fn iota_decreases_and_k_energy_increases_along_the_path() {
    // φ_t minimizes t'K + (1 − t')ι while φ₁ minimizes K
    let geo = sphere();
    let cont = Continuation::anchor(&geo, none(), SolverOptions::default(), None).unwrap();
    let first = cont.solve_at(1.0, cont.anchor_potential()).unwrap();
    let later = cont.solve_at(0.9, cont.anchor_potential()).unwrap();
    assert!(later.iota < first.iota, "{} {}", later.iota, first.iota);
    let k = |p| functional_at(&geo, &FunctionalKind::KEnergy, p, 65).unwrap();
    assert!(k(&later.potential) > k(&first.potential));
}
