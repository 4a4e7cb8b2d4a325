//! Reference group configurations used by tests, benchmarks and docs.
//!
//! Both fixtures keep every disk center on the real axis, which is a
//! sufficient condition for absolute convergence of the linear Poincaré
//! series, and both derive each D_k as the exact image of ∂D'_k so the
//! boundary-pairing invariant holds by construction.

use num_complex::Complex64;

use crate::error::Result;
use crate::group::SchottkyGroup;
use crate::moebius::Circle;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Genus-1 group with fixed points ∓1 and the given real multiplier.
///
/// The disks are the unique mirror-symmetric exactly-paired pair for this
/// generator: centers ±(1+μ)/(1−μ), radius 2√μ/(1−μ). For μ = 0.04 that is
/// centers ±1.08333…, radius 0.41666….
pub fn genus1(multiplier: f64) -> Result<SchottkyGroup> {
    let s = (1.0 + multiplier) / (1.0 - multiplier);
    let r = 2.0 * multiplier.sqrt() / (1.0 - multiplier);
    SchottkyGroup::from_fixed_point_data(
        &[(re(1.0), re(-1.0), re(multiplier))],
        &[Circle::new(re(-s), r)],
    )
}

/// Generator triples (attracting, repelling, multiplier) of the genus-2
/// fixture.
pub fn genus2_triples() -> Vec<(Complex64, Complex64, Complex64)> {
    vec![
        (re(-1.6), re(-0.6), re(0.06)),
        (re(1.6), re(0.6), re(0.08)),
    ]
}

/// D'_k disks of the genus-2 fixture.
pub fn genus2_d_primes() -> Vec<Circle> {
    vec![
        Circle::new(re(-0.6), 0.3),
        Circle::new(re(0.6), 0.3),
    ]
}

/// Well-separated genus-2 group with all four disk centers real.
pub fn genus2() -> Result<SchottkyGroup> {
    SchottkyGroup::from_fixed_point_data(&genus2_triples(), &genus2_d_primes())
}

/// Word-length defaults that keep the genus-2 series tails near 1e-9.
pub const GENUS2_WORD_LEN: usize = 10;
