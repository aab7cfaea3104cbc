//! Numerical core for twisted constant-scalar-curvature continuity paths.
//!
//! Two model geometries are supported: flat complex tori of dimension one
//! or two with periodic spectral fields ([`lattice`], [`kahler`]) and
//! circle-invariant metrics on the projective line in moment coordinates
//! ([`toric`]). Energy functionals and the continuation solver are written
//! once over the [`geometry::Geometry`] abstraction.
//!
//! Volume forms are normalized as `ω_φⁿ/n!`, which on the torus is
//! `det g` times Lebesgue measure and on the projective line is `dx`.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod continuation;
pub mod error;
pub mod fft;
pub mod functionals;
pub mod geometry;
pub mod kahler;
pub mod lattice;
pub mod toric;

pub use error::{Error, Result};
