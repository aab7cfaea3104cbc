//! Seeded random test inputs.

use std::f64::consts::TAU;
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

/// Real trigonometric polynomial with per-axis wavenumbers up to `kmax`
/// and coefficients decaying like `|k|⁻²`.
pub fn random_trig(grid: TorusGrid, kmax: i64, amplitude: f64, rng: &mut ChaCha8Rng) -> Field {
    let axes = grid.real_axes();
    let n = grid.points() as i64;
    let side = (2 * kmax + 1) as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
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
        let a = rng.random_range(-1.0..1.0) * amplitude / k2 as f64;
        let c = Complex64::from_polar(0.5 * a, rng.random_range(0.0..TAU));
        let plus: Vec<usize> = k[..axes].iter().map(|v| v.rem_euclid(n) as usize).collect();
        let minus: Vec<usize> = k[..axes]
            .iter()
            .map(|v| (-v).rem_euclid(n) as usize)
            .collect();
        coeffs[grid.flat_index(&plus)] += c;
        coeffs[grid.flat_index(&minus)] += c.conj();
    }
    Spectrum::from_coefficients(grid, coeffs)
        .expect("coefficient count matches the grid")
        .to_field(Purity::Real)
}

/// Wavenumber cutoff of random backgrounds and potentials on `grid`.
pub fn state_band(grid: TorusGrid) -> i64 {
    let top = if grid.dim() == 1 { 2 } else { 1 };
    (grid.points() as i64 / 8).clamp(1, top)
}

/// Random background and potential of the given amplitude.
pub fn random_state(grid: TorusGrid, amplitude: f64, rng: &mut ChaCha8Rng) -> MetricState {
    let kmax = state_band(grid);
    loop {
        let bg = KahlerBackground::new(random_trig(grid, kmax, amplitude, rng));
        let phi = random_trig(grid, kmax, amplitude, rng);
        if let Ok(state) = bg.and_then(|bg| assemble_metric(&bg, &phi)) {
            return state;
        }
    }
}

/// Admissible symplectic potential with a Legendre correction of degree ≤ 8.
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
        let u = ToricPotential::from_legendre(grid, &coeffs).expect("degree fits the grid");
        if ToricState::new(&u).is_ok() {
            return u;
        }
    }
}

/// Sum of three cosines `a cos(ωx + p)` with `ω ∈ [lo, hi]`.
#[derive(Debug, Clone)]
pub struct Wave {
    terms: Vec<(f64, f64, f64)>,
}

impl Wave {
    pub fn random(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Self {
        let terms = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.5..1.0),
                    rng.random_range(lo..hi),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, w, p)| a * (w * x + p).cos())
            .sum()
    }

    pub fn sample(&self, grid: &Arc<MomentGrid>) -> Profile {
        Profile::from_fn(grid, |x| self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_samples() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let a = random_trig(grid, 3, 1.0, &mut rng(5));
        let b = random_trig(grid, 3, 1.0, &mut rng(5));
        assert_eq!(a, b);
        assert_ne!(a, random_trig(grid, 3, 1.0, &mut rng(6)));
    }

    #[test]
    fn trig_samples_are_real_and_mean_free() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = random_trig(grid, 2, 1.0, &mut rng(1));
        assert!(f.is_real());
        assert!(f.mean().norm() < 1e-14);
    }
}
