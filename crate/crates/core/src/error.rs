use core::fmt;

use alloc::string::String;

/// Failures surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid size outside the supported range.
    InvalidGrid { dim: usize, points: usize },
    /// Two fields or states live on different grids.
    MismatchedGrids,
    /// The metric left the Kähler cone at a sample point.
    NonPositiveMetric { point: usize, min_eigenvalue: f64 },
    /// The symplectic potential is not strictly convex at a node.
    NonConvexPotential { node: usize, value: f64 },
    /// `v` is not in the numerical kernel required by the Leibniz identity.
    KernelPreconditionViolated { defect: f64, threshold: f64 },
    /// Twist not representable on this backend.
    UnsupportedTwist,
    /// Newton (or another iteration) stopped without meeting its tolerance.
    NoConvergence {
        iterations: usize,
        last_residual: f64,
    },
    /// Path tracking gave up; `last_good_t` is the last accepted parameter.
    PathTruncated { last_good_t: f64 },
    /// Inverse moment map could not be bracketed.
    RootBracketFailure { target: f64 },
    /// The orbit scan found no bracket for the minimum.
    LineSearchDiverged,
    /// State is not extremal to the requested tolerance.
    NotExtremal { defect: f64 },
    /// Not enough path samples around the requested parameter.
    InsufficientSamples,
    /// Singular linear system in a Newton step or projection.
    SingularSystem,
    /// Any other invalid argument.
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid { dim, points } => {
                write!(
                    f,
                    "unsupported grid: dimension {dim}, {points} points per axis"
                )
            }
            Error::MismatchedGrids => f.write_str("fields live on different grids"),
            Error::NonPositiveMetric {
                point,
                min_eigenvalue,
            } => write!(
                f,
                "metric not positive at point {point} (min eigenvalue {min_eigenvalue:.3e})"
            ),
            Error::NonConvexPotential { node, value } => {
                write!(f, "potential not convex at node {node} (u'' = {value:.3e})")
            }
            Error::KernelPreconditionViolated { defect, threshold } => write!(
                f,
                "kernel precondition violated: defect {defect:.3e} > {threshold:.3e}"
            ),
            Error::UnsupportedTwist => f.write_str("twist not supported on this backend"),
            Error::NoConvergence {
                iterations,
                last_residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {last_residual:.3e})"
            ),
            Error::PathTruncated { last_good_t } => {
                write!(f, "path truncated, last accepted t = {last_good_t}")
            }
            Error::RootBracketFailure { target } => {
                write!(f, "could not bracket inverse moment map at s = {target}")
            }
            Error::LineSearchDiverged => f.write_str("no minimum bracketed on the orbit"),
            Error::NotExtremal { defect } => write!(f, "state not extremal (defect {defect:.3e})"),
            Error::InsufficientSamples => f.write_str("not enough path samples"),
            Error::SingularSystem => f.write_str("singular linear system"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
