//! Circle-invariant metrics on the projective line in moment coordinates.
//!
//! A symplectic potential is `u = u₀ + h` on `[-1, 1]`, where
//! `u₀ = ½[(1−x)log(1−x) + (1+x)log(1+x)]` gives the Fubini–Study metric.
//! With `s = u'(x)` the complex potential `f(s)` has `f'(s) = x` and metric
//! coefficient `Φ = f''(s) = 1/u''(x)`; invariant functions satisfy
//! `d/ds = Φ d/dx`. Scalar curvature is `S = −Φ''` (so `S = 2` for the
//! round metric) and the volume form is `dx`.

mod dual;
mod grid;
mod operators;
mod orbit;
mod potential;

pub use dual::{dual_trace, log_cosh, DualPotential};
pub use grid::{
    chebyshev_derivative, chebyshev_eval, chop_coefficients, legendre_derivative, legendre_eval,
    legendre_to_chebyshev, MomentGrid, Profile,
};
pub use operators::{
    b_operator, commutator_residual, eigensplit_kernel_bar, grad_pairing, laplacian,
    leibniz_residual, lichnerowicz, lichnerowicz_divergence, lichnerowicz_form, mode_lichnerowicz,
    mode_lichnerowicz_bar, AngularMode,
};
pub use orbit::{
    gauss_legendre, iota_on_orbit, minimize_iota_on_orbit, orbit_gradient, rho_along_path,
    OrbitMinimum, ORBIT_LIMIT,
};
pub use potential::{
    abreu_scalar, canonical_value, orbit_action, rho_potential, toric_trace, MomentInverter,
    MomentPoint, ToricPotential, ToricState, ToricTwist,
};
