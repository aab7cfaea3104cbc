//! Energy scans computed through the library.

use twistpath::commands::energy_rows;
use twistpath::config::{Backend, RunConfig};
use twistpath_core::geometry::Geometry;
use twistpath_core::toric::ToricTwist;

fn small_torus() -> RunConfig {
    let mut config = RunConfig::default_for(Backend::Torus);
    config.torus.points = 16;
    config.torus.cutoff = 5;
    config
}

#[test]
fn constant_path_has_no_increments() {
    let geo = small_torus().torus_geometry().unwrap();
    let rows = energy_rows(&geo, vec![geo.reference(); 5], 0.9, ToricTwist::default()).unwrap();
    for row in &rows {
        for v in [
            row.aubin,
            row.chi,
            row.iota,
            row.k_energy,
            row.twisted,
            row.modified,
        ] {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn twisted_energy_interpolates() {
    let geo = small_torus().torus_geometry().unwrap();
    let a = geo.reference();
    let b = geo.background().reference_potential().scale(-0.5);
    let potentials: Vec<_> = (0..9)
        .map(|i| geo.combine(&a, 1.0 - i as f64 / 8.0, &b, i as f64 / 8.0))
        .collect();
    let t = 0.7;
    for row in energy_rows(&geo, potentials, t, ToricTwist::default()).unwrap() {
        assert!(
            (row.twisted - (t * row.k_energy + (1.0 - t) * row.iota)).abs() < 1e-10,
            "{row:?}"
        );
    }
}

#[test]
fn endpoints_have_no_convexity() {
    let geo = small_torus().torus_geometry().unwrap();
    let rows = energy_rows(&geo, vec![geo.reference(); 5], 0.9, ToricTwist::default()).unwrap();
    assert!(rows[0].convexity.is_none() && rows[4].convexity.is_none());
    assert_eq!(rows[2].convexity, Some(0.0));
}
