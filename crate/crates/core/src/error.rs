//! Error type shared across the crate.

use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by group construction, series evaluation, integration
/// and the moduli solver.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix does not define a usable Möbius transformation.
    #[error("invalid Möbius map: {0}")]
    InvalidMap(String),

    /// Mismatched list lengths or otherwise malformed group data. Reported
    /// separately from geometric validation failures.
    #[error("structural error: {0}")]
    Structural(String),

    /// An operation that requires a validated group was handed one that
    /// failed validation.
    #[error("group failed validation: {0}")]
    InvalidGroup(String),

    /// Evaluation point too close to a pole of an enumerated term.
    #[error("evaluation point {u} within {distance:.3e} of pole {pole}")]
    PoleProximity {
        u: Complex64,
        pole: Complex64,
        distance: f64,
    },

    /// Tail-tolerance truncation mode hit the hard word-length cap.
    #[error("truncation cap {cap} reached with tail estimate {tail_estimate:.3e}")]
    TruncationCap { cap: usize, tail_estimate: f64 },

    /// Branch tracking could not resolve the log argument along a segment.
    #[error("branch tracking failed on segment {start} -> {end} near pole {pole}")]
    BranchTracking {
        start: Complex64,
        end: Complex64,
        pole: Complex64,
    },

    /// A polyline segment crosses a disk, or the planner gave up.
    #[error("path planning failed from {from} to {to}: {geometry}")]
    PathPlanning {
        from: Complex64,
        to: Complex64,
        geometry: String,
    },

    /// Contour quadrature did not stabilize under node doubling.
    #[error(
        "quadrature on circle(center {center}, radius {radius}) did not converge: relative change {relative_change:.3e} at N = {nodes}"
    )]
    QuadratureNonConvergence {
        center: Complex64,
        radius: f64,
        relative_change: f64,
        nodes: usize,
    },

    /// A differential handed to the variational formula is not normalized
    /// over the boundary cycles.
    #[error("differential not normalized over boundary cycles: residual {residual:.3e}")]
    Unnormalized { residual: f64 },

    /// Finite differencing could not find a usable step.
    #[error("finite-difference step failed: {0}")]
    FiniteDifferenceStep(String),

    /// Newton Jacobian is rank deficient (gauge directions present, or
    /// genuinely singular problem).
    #[error("Jacobian rank deficient: condition estimate {condition:.3e}")]
    RankDeficient { condition: f64 },

    /// Backtracking line search could not produce an acceptable step.
    #[error("Newton step blocked at iteration {iteration}: {detail}")]
    StepBlocked { iteration: usize, detail: String },

    /// Newton ran out of iterations.
    #[error("no convergence after {iterations} iterations, residual norm {residual_norm:.3e}")]
    NoConvergence {
        iterations: usize,
        residual_norm: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
