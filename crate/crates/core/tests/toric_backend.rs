mod common;

use nalgebra::{DMatrix, SymmetricEigen};
use twistpath_core::toric::*;
use twistpath_core::Error;

fn fixture(grid: &std::sync::Arc<MomentGrid>) -> ToricPotential {
    ToricPotential::from_fn(grid, |x| {
        0.1 * (1.0 - x * x).powi(2) + 0.05 * x * (1.0 - x * x).powi(2)
    })
}

#[test]
fn round_metric_has_constant_curvature() {
    let g = MomentGrid::new(128).unwrap();
    let s = abreu_scalar(&ToricPotential::canonical(&g)).unwrap();
    assert!(s.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
}

#[test]
fn curvature_matches_symbolic_perturbation() {
    // u = u₀ + ε(1−x²)²  ⇒  1/u'' = (1−x²)/(1 + ε(1−x²)(12x²−4))
    let g = MomentGrid::new(64).unwrap();
    let eps = 0.1;
    let u = ToricPotential::from_fn(&g, |x| eps * (1.0 - x * x).powi(2));
    let s = abreu_scalar(&u).unwrap();
    let phi = |x: f64| (1.0 - x * x) / (1.0 + eps * (1.0 - x * x) * (12.0 * x * x - 4.0));
    let second = |x: f64, h: f64| (phi(x + h) - 2.0 * phi(x) + phi(x - h)) / (h * h);
    for x in [-0.6, 0.0, 0.35, 0.8] {
        let fd = -(4.0 * second(x, 1e-3) - second(x, 2e-3)) / 3.0;
        assert!((s.eval(x) - fd).abs() < 1e-6, "{x} {} {fd}", s.eval(x));
    }
}

#[test]
fn total_curvature_is_topological() {
    let g = MomentGrid::new(64).unwrap();
    let mut rng = common::rng(7);
    for _ in 0..20 {
        let u = common::random_toric(&g, 0.3, &mut rng);
        let s = abreu_scalar(&u).unwrap();
        assert!((s.integral() - 4.0).abs() < 1e-6, "{}", s.integral());
    }
}

#[test]
fn trace_is_one_on_itself_and_integrates_to_two() {
    let g = MomentGrid::new(64).unwrap();
    let u = fixture(&g);
    let tr = toric_trace(&u, &u).unwrap();
    assert!(tr.values().iter().all(|t| (t - 1.0).abs() < 1e-12));
    let v = orbit_action(&ToricPotential::canonical(&g), -0.5);
    let tr = toric_trace(&u, &v).unwrap();
    assert!(tr.values().iter().all(|t| *t > 0.0));
    assert!((tr.integral() - 2.0).abs() < 1e-8);
}

#[test]
fn invariant_kernel_is_affine() {
    let g = MomentGrid::new(64).unwrap();
    let st = ToricState::new(&fixture(&g)).unwrap();
    let deg = 12;
    let basis: Vec<Profile> = (0..=deg)
        .map(|m| {
            let mut c = vec![0.0; m + 1];
            c[m] = 1.0;
            Profile::from_legendre(&g, &c).unwrap()
        })
        .collect();
    let mut a = DMatrix::zeros(deg + 1, deg + 1);
    for i in 0..=deg {
        for j in 0..=deg {
            let norm = ((2.0 / (2 * i + 1) as f64) * (2.0 / (2 * j + 1) as f64)).sqrt();
            a[(i, j)] = lichnerowicz_form(&st, &basis[i], &basis[j]) / norm;
        }
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let eps_ker = 1e-8 * eig[deg];
    assert!(eig[0].abs() < eps_ker && eig[1].abs() < eps_ker);
    assert!(eig[2] > 10.0 * eps_ker);
}

#[test]
fn leibniz_identity_converges() {
    let mut rng = common::rng(11);
    let mut residuals = [0.0; 2];
    for (slot, k) in [64, 128].into_iter().enumerate() {
        let g = MomentGrid::new(k).unwrap();
        let st = ToricState::new(&ToricPotential::canonical(&g)).unwrap();
        let v = Profile::from_chebyshev(&g, vec![0.0, 1.0]).unwrap();
        let xi = common::random_wave(&g, 36.0, 44.0, &mut rng);
        let (res, scale) = leibniz_residual(&st, &v, &xi, 1e-8).unwrap();
        residuals[slot] = res / scale;
    }
    assert!(
        residuals[1] <= 1e-6 && residuals[0] >= 10.0 * residuals[1],
        "{residuals:?}"
    );
}

#[test]
fn leibniz_needs_kernel_element() {
    let g = MomentGrid::new(64).unwrap();
    let st = ToricState::new(&ToricPotential::canonical(&g)).unwrap();
    let v = Profile::from_fn(&g, |x| x * x);
    let err = leibniz_residual(&st, &v, &v, 1e-8).unwrap_err();
    assert!(matches!(err, Error::KernelPreconditionViolated { .. }));
}

#[test]
fn commutator_detects_non_extremal_metrics() {
    let g = MomentGrid::new(64).unwrap();
    let f = AngularMode::new(2, Profile::from_fn(&g, |x| (1.7 * x).cos() + 0.3 * x)).unwrap();
    let round = ToricState::new(&orbit_action(&ToricPotential::canonical(&g), 0.4)).unwrap();
    let bumpy = ToricState::new(&ToricPotential::from_fn(&g, |x| {
        0.1 * (1.0 - x * x).powi(2)
    }))
    .unwrap();
    let at_round = commutator_residual(&round, &f) / f.sup_norm();
    let at_bumpy = commutator_residual(&bumpy, &f) / f.sup_norm();
    assert!(at_round <= 1e-6);
    assert!(at_bumpy >= 10.0 * at_round.max(1e-6), "{at_bumpy}");
}

#[test]
fn rho_matches_path_formula() {
    let g = MomentGrid::new(128).unwrap();
    let reference = ToricPotential::canonical(&g);
    let u = fixture(&g);
    let twist = ToricTwist::new(0.7, 0.2);
    for lambda in [0.0, 0.5, 1.0] {
        let (u_path, rho) = rho_along_path(&reference, &u, &twist, lambda).unwrap();
        let direct = rho_potential(&u_path, &twist);
        for (j, r) in rho.iter().enumerate() {
            assert_eq!(r.im, 0.0);
            assert!((r.re - direct.values()[j]).abs() < 1e-8, "{lambda} {j}");
        }
    }
    assert_eq!(rho_potential(&u, &ToricTwist::default()).sup_norm(), 0.0);
}

#[test]
fn orbit_minimum_recentres() {
    let g = MomentGrid::new(64).unwrap();
    let u0 = ToricPotential::canonical(&g);
    let m = minimize_iota_on_orbit(&u0, &orbit_action(&u0, 0.3)).unwrap();
    assert!((m.shift - 0.3).abs() < 1e-6);
    assert!(m.orthogonality_defect <= 1e-8);
}

#[test]
fn file_values_round_trip() {
    let g = MomentGrid::new(64).unwrap();
    let u = fixture(&g);
    let back = ToricPotential::from_node_values(&g, &u.h_values(), g.galerkin_degree()).unwrap();
    assert!(back.distance(&u) < 1e-14);
}
