//! Numerics for Riemann surfaces in the Schottky model.
//!
//! The crate builds classical Schottky groups from disk pairs and Möbius
//! generators, evaluates Abelian differentials as truncated linear Poincaré
//! series, integrates them into Abelian integrals and period matrices, and
//! differentiates those quantities with respect to the group generators via
//! boundary contour integrals. A finite-difference oracle cross-checks the
//! analytic derivatives, and a damped Newton solver inverts the moduli map
//! (target periods → generator parameters).
//!
//! Conventions, fixed once for the whole crate:
//! - every boundary-circle integral runs **clockwise** ([`quad::ORIENTATION`]);
//! - the holomorphic basis is normalized so the clockwise a-period matrix is
//!   the identity;
//! - `b[j][s]` is the integral of the j-th basis differential from the base
//!   point `z0` to `S_s(z0)`; under these conventions the period matrix has
//!   negative-definite imaginary part.

pub mod error;
pub mod fd;
pub mod fixtures;
pub mod group;
pub mod integrals;
pub mod moebius;
pub mod quad;
pub mod series;
pub mod solver;
pub mod variational;

pub use error::{Error, Result};
pub use group::{DiskPair, GroupWord, Letter, SchottkyGroup, ValidationReport};
pub use integrals::{IntegrationPath, PathPlanner, PeriodMatrix};
pub use moebius::{Circle, ComplexPoint, Mat2, MoebiusMap};
pub use series::{Differential, HolomorphicBasis, ThirdKindDifferential, Truncation};
pub use variational::{PerturbationDirection, PeriodVariation, VariationResult};
