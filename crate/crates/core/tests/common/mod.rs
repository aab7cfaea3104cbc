#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twistpath_core::kahler::{assemble_metric, KahlerBackground, MetricState};
use twistpath_core::lattice::{Field, Purity, Spectrum, TorusGrid};
use twistpath_core::toric::{MomentGrid, Profile, ToricPotential, ToricState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real trigonometric polynomial with per-axis wavenumbers up to
/// `kmax`, coefficients decaying like `|k|^-2`.
pub fn random_trig(grid: TorusGrid, kmax: i64, amplitude: f64, rng: &mut ChaCha8Rng) -> Field {
    let axes = grid.real_axes();
    let n = grid.points() as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let side = (2 * kmax + 1) as usize;
    for idx in 0..side.pow(axes as u32) {
        let mut k = [0i64; 4];
        let mut rest = idx;
        for slot in k.iter_mut().take(axes) {
            *slot = (rest % side) as i64 - kmax;
            rest /= side;
        }
        let k2: i64 = k.iter().map(|v| v * v).sum();
        // one representative per ±k pair
        if k2 == 0 || k[..axes].iter().find(|v| **v != 0).is_some_and(|v| *v < 0) {
            continue;
        }
        let a: f64 = rng.random_range(-1.0..1.0) * amplitude / k2 as f64;
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let c = Complex64::from_polar(0.5 * a, phase);
        let plus: Vec<usize> = k[..axes].iter().map(|v| v.rem_euclid(n) as usize).collect();
        let minus: Vec<usize> = k[..axes]
            .iter()
            .map(|v| (-v).rem_euclid(n) as usize)
            .collect();
        coeffs[grid.flat_index(&plus)] += c;
        coeffs[grid.flat_index(&minus)] += c.conj();
    }
    Spectrum::from_coefficients(grid, coeffs)
        .unwrap()
        .to_field(Purity::Real)
}

pub fn random_state(grid: TorusGrid, amplitude: f64, rng: &mut ChaCha8Rng) -> MetricState {
    let kmax = if grid.dim() == 1 { 2 } else { 1 };
    let bg = KahlerBackground::new(random_trig(grid, kmax, amplitude, rng)).unwrap();
    let phi = random_trig(grid, kmax, amplitude, rng);
    assemble_metric(&bg, &phi).unwrap()
}

/// Random admissible symplectic potential with a low-degree Legendre correction.
pub fn random_toric(
    grid: &Arc<MomentGrid>,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> ToricPotential {
    loop {
        let mut coeffs = vec![0.0; 9];
        for (m, c) in coeffs.iter_mut().enumerate().skip(2) {
            *c = rng.random_range(-1.0..1.0) * amplitude / (m * m) as f64;
        }
        let u = ToricPotential::from_legendre(grid, &coeffs).unwrap();
        if ToricState::new(&u).is_ok() {
            return u;
        }
    }
}

/// Sum of three random cosines with frequencies in `[lo, hi]`.
pub fn random_wave(grid: &Arc<MomentGrid>, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Profile {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.5..1.0),
                rng.random_range(lo..hi),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Profile::from_fn(grid, |x| {
        terms.iter().map(|(a, w, p)| a * (w * x + p).cos()).sum()
    })
}
