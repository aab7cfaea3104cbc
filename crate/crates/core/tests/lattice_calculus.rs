mod common;

use common::{random_trig, rng};
use proptest::prelude::*;
use twistpath_core::lattice::{
    inner_product, integrate, mixed_hessian, spectral_derivative, Direction, Field, TorusGrid,
};

#[test]
fn derivative_matches_centered_differences() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let f = random_trig(grid, 4, 1.0, &mut rng(1));
    let coeffs = f.spectrum();
    // evaluate the band-limited interpolant off-grid for the FD stencil
    let eval = |x: f64, y: f64| -> f64 {
        coeffs
            .coefficients()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = coeffs.wavevector(i);
                (c * num_complex::Complex64::from_polar(1.0, k[0] as f64 * x + k[1] as f64 * y)).re
            })
            .sum()
    };
    let h = 2.0 * std::f64::consts::PI / 1024.0;
    let dz = spectral_derivative(&f, 0, Direction::Holomorphic);
    let mut worst: f64 = 0.0;
    for idx in (0..grid.len()).step_by(37) {
        let p = grid.coordinates(idx);
        let fx = (eval(p[0] + h, p[1]) - eval(p[0] - h, p[1])) / (2.0 * h);
        let fy = (eval(p[0], p[1] + h) - eval(p[0], p[1] - h)) / (2.0 * h);
        let fd = num_complex::Complex64::new(0.5 * fx, -0.5 * fy);
        worst = worst.max((dz.values()[idx] - fd).norm());
    }
    // O(h²) with |f'''| ~ 4³·amplitude
    assert!(worst < 64.0 * h * h, "{worst:e}");
}

#[test]
fn parseval_and_round_trip() {
    for (dim, n) in [(1, 64), (2, 8)] {
        let grid = TorusGrid::new(dim, n).unwrap();
        let f = random_trig(grid, 3, 1.0, &mut rng(2));
        let one = Field::constant(grid, 1.0);
        let direct = inner_product(&f, &f, &one).unwrap().re;
        let spectral = f.spectrum().norm_sq() * grid.volume();
        assert!((direct - spectral).abs() <= 1e-12 * direct);
        let back = f.spectrum().to_field(f.purity());
        assert!(back.sub(&f).unwrap().sup_norm() <= 1e-12 * f.sup_norm());
    }
}

#[test]
fn mixed_derivatives_commute() {
    let grid = TorusGrid::new(2, 8).unwrap();
    let f = random_trig(grid, 2, 1.0, &mut rng(3));
    let h = mixed_hessian(&f);
    for a in 0..2 {
        for b in 0..2 {
            let other = spectral_derivative(
                &spectral_derivative(&f, b, Direction::Antiholomorphic),
                a,
                Direction::Holomorphic,
            );
            let diff = other.sub(&h.component(a, b)).unwrap().sup_norm();
            assert!(diff <= 1e-12 * h.sup_norm().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivative_integrates_to_zero(seed in 0u64..1000, axis in 0usize..2, holo in any::<bool>()) {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = random_trig(grid, 3, 1.0, &mut rng(seed)).shift(0.7);
        let dir = if holo { Direction::Holomorphic } else { Direction::Antiholomorphic };
        let d = spectral_derivative(&f, axis, dir);
        let total = integrate(&d, &Field::constant(grid, 1.0)).unwrap().norm();
        prop_assert!(total <= 1e-12 * f.sup_norm());
    }

    #[test]
    fn inner_product_is_hermitian(seed in 0u64..1000) {
        let grid = TorusGrid::new(1, 16).unwrap();
        let mut r = rng(seed);
        let f = random_trig(grid, 3, 1.0, &mut r);
        let g = spectral_derivative(&random_trig(grid, 3, 1.0, &mut r), 0, Direction::Holomorphic);
        let w = random_trig(grid, 2, 0.2, &mut r).shift(1.0);
        let a = inner_product(&f, &g, &w).unwrap();
        let b = inner_product(&g, &f, &w).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0));
    }
}
