mod common;

use twistpath_core::functionals::*;
use twistpath_core::geometry::{Geometry, ToricGeometry, TorusGeometry};
use twistpath_core::kahler::KahlerBackground;
use twistpath_core::lattice::{Field, TorusGrid};
use twistpath_core::toric::{MomentGrid, ToricPotential, ToricTwist};

fn torus() -> TorusGeometry {
    let grid = TorusGrid::new(1, 32).unwrap();
    let psi = Field::from_fn(grid, |p| 0.3 * p[0].cos() + 0.1 * (p[1] - 0.4).sin());
    TorusGeometry::new(KahlerBackground::new(psi).unwrap(), 4).unwrap()
}

fn torus_point(geo: &TorusGeometry) -> (Field, Field) {
    let grid = *geo.background().grid();
    let phi = Field::from_fn(grid, |p| 0.2 * (p[0] + p[1]).cos() - 0.1 * p[1].sin());
    let delta = Field::from_fn(grid, |p| (2.0 * p[0] - 0.3).cos() + 0.5 * p[1].cos());
    (phi, delta)
}

fn sphere() -> ToricGeometry {
    let grid = MomentGrid::new(64).unwrap();
    let reference = ToricPotential::from_fn(&grid, |x| {
        0.1 * (1.0 - x * x).powi(2) + 0.05 * x * (1.0 - x * x).powi(2)
    });
    ToricGeometry::with_default_degree(reference).unwrap()
}

fn sphere_point(geo: &ToricGeometry) -> (ToricPotential, ToricPotential) {
    let g = geo.grid();
    let u = ToricPotential::from_fn(g, |x| 0.08 * (1.0 - x * x).powi(2) - 0.03 * x * x * x);
    let delta = ToricPotential::from_fn(g, |x| 0.5 * x * x * x * x - 0.2 * x);
    (u, delta)
}

fn kinds() -> Vec<FunctionalKind> {
    vec![
        FunctionalKind::Aubin,
        FunctionalKind::Chi,
        FunctionalKind::Iota,
        FunctionalKind::KEnergy,
        FunctionalKind::Twisted { t: 0.7 },
        FunctionalKind::Modified {
            twist: ToricTwist::default(),
        },
    ]
}

/// FD errors of `(F(φ+hδ) − F(φ−hδ))/2h` against `∫Gδ`, for the three steps.
fn gradient_errors<G: Geometry>(
    geo: &G,
    kind: &FunctionalKind,
    phi: &G::Potential,
    delta: &G::Potential,
) -> [f64; 3] {
    let state = geo.assemble(phi).unwrap();
    let g = functional_gradient(geo, kind, &state).unwrap();
    let chart = geo.chart(delta);
    let prod: Vec<f64> = g.iter().zip(&chart).map(|(g, d)| g * d).collect();
    let exact = geo.integrate(&state, &prod);
    let mut out = [0.0; 3];
    for (slot, h) in [1e-2, 1e-3, 1e-4].into_iter().enumerate() {
        let a = geo.combine(phi, 1.0, delta, -h);
        let b = geo.combine(phi, 1.0, delta, h);
        let path = PotentialPath::from_fn(33, |s| geo.combine(&a, 1.0 - s, &b, s)).unwrap();
        let fd = functional_value(geo, kind, &path).unwrap() / (2.0 * h);
        out[slot] = (fd - exact).abs() / exact.abs().max(1e-3);
    }
    out
}

fn assert_second_order(name: &str, e: [f64; 3]) {
    // below the floor the difference quotient is limited by rounding
    let floor = 1e-9;
    assert!(e[1] <= floor || e[0] / e[1] > 50.0, "{name}: {e:?}");
    assert!(e[2] <= floor || e[1] / e[2] > 50.0, "{name}: {e:?}");
}

#[test]
fn gradients_match_finite_differences_on_torus() {
    let geo = torus();
    let (phi, delta) = torus_point(&geo);
    for kind in kinds() {
        assert_second_order(kind.name(), gradient_errors(&geo, &kind, &phi, &delta));
    }
}

#[test]
fn gradients_match_finite_differences_on_sphere() {
    let geo = sphere();
    let (u, delta) = sphere_point(&geo);
    let mut all = kinds();
    all.push(FunctionalKind::Modified {
        twist: ToricTwist::new(0.3, 0.0),
    });
    for kind in all {
        assert_second_order(kind.name(), gradient_errors(&geo, &kind, &u, &delta));
    }
}

#[test]
fn values_are_path_independent() {
    let geo = torus();
    let (phi, delta) = torus_point(&geo);
    let reference = geo.reference();
    let bump = delta.scale(0.05);
    for kind in kinds() {
        let straight =
            PotentialPath::from_fn(65, |s| geo.combine(&reference, 1.0 - s, &phi, s)).unwrap();
        let curved = PotentialPath::from_fn(65, |s| {
            let r = s * s * (3.0 - 2.0 * s);
            geo.combine(
                &geo.combine(&reference, 1.0 - r, &phi, r),
                1.0,
                &bump,
                s * (1.0 - s),
            )
        })
        .unwrap();
        let a = functional_value(&geo, &kind, &straight).unwrap();
        let b = functional_value(&geo, &kind, &curved).unwrap();
        assert!((a - b).abs() <= 1e-8, "{}: {a} {b}", kind.name());
    }
}

#[test]
fn values_are_additive_along_paths() {
    let geo = sphere();
    let (u, delta) = sphere_point(&geo);
    let a = geo.reference();
    let b = u.clone();
    let c = geo.combine(&u, 1.0, &delta, 0.05);
    let seg = |p: &ToricPotential, q: &ToricPotential| {
        PotentialPath::from_fn(65, |s| geo.combine(p, 1.0 - s, q, s)).unwrap()
    };
    for kind in kinds() {
        let ab = functional_value(&geo, &kind, &seg(&a, &b)).unwrap();
        let bc = functional_value(&geo, &kind, &seg(&b, &c)).unwrap();
        let ac = functional_value(&geo, &kind, &seg(&a, &c)).unwrap();
        assert!((ab + bc - ac).abs() <= 1e-8, "{}", kind.name());
    }
}

#[test]
fn twisted_energy_is_affine_in_t() {
    let geo = torus();
    let (phi, _) = torus_point(&geo);
    let t = 0.35;
    let path =
        PotentialPath::from_fn(33, |s| geo.combine(&geo.reference(), 1.0 - s, &phi, s)).unwrap();
    let rows = path_densities(
        &geo,
        &[
            FunctionalKind::Twisted { t },
            FunctionalKind::KEnergy,
            FunctionalKind::Iota,
        ],
        &path,
    )
    .unwrap();
    let col = |k: usize| simpson(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()).unwrap();
    assert!((col(0) - t * col(1) - (1.0 - t) * col(2)).abs() <= 1e-10);
}

/// `ι(s+δ) − 2ι(s) + ι(s−δ)` over `δ²` along `s ↦ p(s)`.
fn iota_fd<G: Geometry>(geo: &G, p: &dyn Fn(f64) -> G::Potential, s: f64, delta: f64) -> f64 {
    let seg = |a: f64, b: f64| {
        let path = PotentialPath::from_fn(33, |r| p(a + (b - a) * r)).unwrap();
        functional_value(geo, &FunctionalKind::Iota, &path).unwrap()
    };
    (seg(s, s + delta) - seg(s - delta, s)) / (delta * delta)
}

#[test]
fn iota_second_variation_on_torus() {
    let geo = torus();
    let (phi, delta) = torus_point(&geo);
    let p = |s: f64| geo.combine(&phi.scale(s), 1.0, &delta, 0.1 * s * s);
    let path = PotentialPath::from_fn(65, p).unwrap();
    for i in [16, 32, 48] {
        let formula = iota_second_derivative(&geo, &path, i).unwrap();
        let fd = iota_fd(&geo, &p, path.parameter(i), 2e-3);
        assert!(
            (formula - fd).abs() <= 1e-5 * formula.abs().max(1.0),
            "{i}: {formula} {fd}"
        );
        let (_, second) = iota_hessian_terms(&geo, &path, i).unwrap();
        assert!(second >= -1e-10);
    }
}

#[test]
fn iota_second_variation_on_sphere() {
    let geo = sphere();
    let (u, delta) = sphere_point(&geo);
    let p = |s: f64| {
        geo.combine(
            &geo.combine(&geo.reference(), 1.0 - s, &u, s),
            1.0,
            &delta,
            0.05 * s * s,
        )
    };
    let path = PotentialPath::from_fn(65, p).unwrap();
    for i in [16, 40] {
        let formula = iota_second_derivative(&geo, &path, i).unwrap();
        let fd = iota_fd(&geo, &p, path.parameter(i), 2e-3);
        assert!(
            (formula - fd).abs() <= 1e-5 * formula.abs().max(1.0),
            "{i}: {formula} {fd}"
        );
    }
}

#[test]
fn criticality_at_reference_and_away() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let flat = TorusGeometry::new(KahlerBackground::flat(grid), 4).unwrap();
    let state = flat.assemble(&flat.reference()).unwrap();
    for t in [0.0, 0.5, 1.0] {
        let r = criticality_residual(&flat, &FunctionalKind::Twisted { t }, &state).unwrap();
        assert!(r < 1e-10, "{t} {r}");
    }
    let geo = torus();
    let (phi, _) = torus_point(&geo);
    let state = geo.assemble(&phi).unwrap();
    assert!(
        criticality_residual(&geo, &FunctionalKind::Twisted { t: 0.5 }, &state).unwrap() > 1e-3
    );
}

#[test]
fn short_paths_are_rejected() {
    let geo = torus();
    let path = PotentialPath::from_fn(9, |_| geo.reference()).unwrap();
    assert!(functional_value(&geo, &FunctionalKind::Iota, &path).is_err());
    let path = PotentialPath::from_fn(33, |_| geo.reference()).unwrap();
    assert_eq!(
        functional_value(&geo, &FunctionalKind::Iota, &path).unwrap(),
        0.0
    );
}
