//! First-order variation of Abelian integrals and periods under generator
//! perturbations, computed as boundary contour integrals weighted by the
//! trace-free matrix M(u) = ((−u, u²), (−1, u)).
//!
//! With this crate's conventions — clockwise boundary integrals, a-periods
//! normalized to the identity, b_{js} = ∫ from z0 to S_s(z0) — the realized
//! first-order variations are
//!
//! ```text
//! δ∫_z^{z'} dη = −(2πi)⁻¹ · Σ_l ∮_{∂D_l} (dη/du)(dη_{zz'}/du) tr[M(u)·δŜ_l·Ŝ_l⁻¹] du
//! δb_{js}      = −1      · Σ_l ∮_{∂D_l} (dζ_j/du)(dζ_s/du)   tr[M(u)·δŜ_l·Ŝ_l⁻¹] du
//! ```
//!
//! Both prefactors were pinned once against the genus-1 closed form and the
//! finite-difference oracle and are asserted by regression tests. They are
//! one convention, not two: the third-kind differential whose poles z, S_s z
//! lie in one orbit telescopes to 2πi·dζ_s, so trading dη_{zz'} for dζ_s in
//! the period case absorbs the (2πi)⁻¹.
//!
//! `δŜ_l·Ŝ_l⁻¹` uses the true matrix inverse, so a direction is only
//! meaningful relative to the stored generator representatives: scaling a
//! generator matrix by λ requires scaling its δŜ by λ to describe the same
//! tangent vector.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::integrals::a_periods;
use crate::moebius::{Mat2, MoebiusMap};
use crate::quad::{
    circle_nodes, circle_quadrature_doubling_vec, Orientation, QuadratureHistory, MAX_NODES,
    ORIENTATION,
};
use crate::series::{Differential, HolomorphicBasis, ThirdKindDifferential, Truncation};

/// Prefactor of the clockwise boundary-integral sum for *period*
/// variations (holomorphic weight differential); frozen by the genus-1
/// closed form and the FD oracle.
pub const VARIATION_PREFACTOR: f64 = -1.0;

/// Prefactor for *endpoint-integral* variations (third-kind weight with
/// poles at the integration limits): −1/(2πi) = i/(2π).
pub fn integral_variation_prefactor() -> Complex64 {
    Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI))
}

/// Hejhal's weight matrix M(u) = ((−u, u²), (−1, u)); identically trace-free
/// and singular.
pub fn hejhal_matrix(u: Complex64) -> Mat2 {
    Mat2::new(-u, u * u, -Complex64::new(1.0, 0.0), u)
}

/// tr[M(u)·E] for E = δŜ·Ŝ⁻¹, expanded in closed form.
fn trace_weight(u: Complex64, e: &Mat2) -> Complex64 {
    -(e.e[0][1] + (e.e[0][0] - e.e[1][1]) * u - e.e[1][0] * u * u)
}

/// A tangent direction in generator space: one δŜ_l per generator, on the
/// same projective scale as the stored representatives.
#[derive(Debug, Clone)]
pub struct PerturbationDirection {
    pub deltas: Vec<Mat2>,
}

impl PerturbationDirection {
    pub fn new(deltas: Vec<Mat2>) -> Result<Self> {
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::Structural(
                "perturbation direction has non-finite entries".into(),
            ));
        }
        Ok(PerturbationDirection { deltas })
    }

    pub fn zero(genus: usize) -> Self {
        PerturbationDirection {
            deltas: vec![Mat2::zero(); genus],
        }
    }

    pub fn genus(&self) -> usize {
        self.deltas.len()
    }

    /// Pure scaling of one generator: δŜ_l = ε·Ŝ_l. A gauge direction; the
    /// variational integrand vanishes on it pointwise.
    pub fn scaling(group: &SchottkyGroup, l: usize, eps: Complex64) -> Self {
        let mut deltas = vec![Mat2::zero(); group.genus()];
        deltas[l] = group.generator(l).matrix().scale(eps);
        PerturbationDirection { deltas }
    }

    /// Direction with a single nonzero matrix entry on generator `l`.
    pub fn single_entry(genus: usize, l: usize, row: usize, col: usize, value: Complex64) -> Self {
        let mut deltas = vec![Mat2::zero(); genus];
        deltas[l].e[row][col] = value;
        PerturbationDirection { deltas }
    }

    pub fn scale(&self, lambda: Complex64) -> Self {
        PerturbationDirection {
            deltas: self.deltas.iter().map(|d| d.scale(lambda)).collect(),
        }
    }

    pub fn add(&self, other: &PerturbationDirection) -> Self {
        PerturbationDirection {
            deltas: self
                .deltas
                .iter()
                .zip(&other.deltas)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.deltas
            .iter()
            .map(|d| d.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// The group with generators Ŝ_l + t·δŜ_l and the paired disks
    /// re-derived from the unchanged D'_k.
    pub fn applied_to(&self, group: &SchottkyGroup, t: f64) -> Result<SchottkyGroup> {
        if self.deltas.len() != group.genus() {
            return Err(Error::Structural(format!(
                "direction has {} deltas for a genus-{} group",
                self.deltas.len(),
                group.genus()
            )));
        }
        let generators = group
            .generators()
            .iter()
            .zip(&self.deltas)
            .map(|(s, d)| {
                MoebiusMap::from_matrix(s.matrix().add(&d.scale(Complex64::new(t, 0.0))))
            })
            .collect::<Result<Vec<_>>>()?;
        SchottkyGroup::from_generators_and_d_primes(generators, &group.d_primes())
    }
}

/// First-order effect of conjugating the whole group by I + εX:
/// δŜ_l = X·Ŝ_l − Ŝ_l·X. A gauge direction; periods do not move along it.
pub fn gauge_conjugation_direction(group: &SchottkyGroup, x: &Mat2) -> PerturbationDirection {
    PerturbationDirection {
        deltas: group
            .generators()
            .iter()
            .map(|s| x.mul(s.matrix()).sub(&s.matrix().mul(x)))
            .collect(),
    }
}

/// Derivatives of the stored fixed-point representative
/// Ŝ(A, B, μ) = ((A − μB, AB(μ−1)), (1 − μ, μA − B))
/// with respect to (A, B, μ): the chain-rule adapter from fixed-point /
/// multiplier coordinates to matrix directions.
pub fn fixed_point_parameter_directions(
    attracting: Complex64,
    repelling: Complex64,
    multiplier: Complex64,
) -> (Mat2, Mat2, Mat2) {
    let (a, b, mu) = (attracting, repelling, multiplier);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let d_att = Mat2::new(one, b * (mu - 1.0), zero, mu);
    let d_rep = Mat2::new(-mu, a * (mu - 1.0), zero, -one);
    let d_mu = Mat2::new(-b, a * b, -one, a);
    (d_att, d_rep, d_mu)
}

/// Result of one variational boundary-integral evaluation.
#[derive(Debug, Clone)]
pub struct VariationResult {
    /// The first-order variation (sum of per-circle contributions).
    pub value: Complex64,
    /// Contribution of each ∮_{∂D_l}, prefactor included.
    pub per_circle: Vec<Complex64>,
    pub histories: Vec<QuadratureHistory>,
}

fn weights_for(group: &SchottkyGroup, dir: &PerturbationDirection) -> Result<Vec<Mat2>> {
    if dir.deltas.len() != group.genus() {
        return Err(Error::Structural(format!(
            "direction has {} deltas for a genus-{} group",
            dir.deltas.len(),
            group.genus()
        )));
    }
    Ok(dir
        .deltas
        .iter()
        .zip(group.generators())
        .map(|(d, s)| d.mul(s.inverse().matrix()))
        .collect())
}

/// Core quadrature: Σ_l ∮_{∂D_l} f_eta(u)·f_weight(u)·tr[M(u)·E_l] du with
/// the chosen orientation. Exposed with an orientation parameter for the
/// orientation-flip regression test; production code calls the wrappers
/// below, which use the global convention.
pub fn vary_pairing_with_orientation<D1, D2>(
    d_eta: &D1,
    d_weight: &D2,
    dir: &PerturbationDirection,
    start_nodes: usize,
    orientation: Orientation,
) -> Result<VariationResult>
where
    D1: Differential + Sync + ?Sized,
    D2: Differential + Sync + ?Sized,
{
    let group = d_eta.group();
    let weights = weights_for(group, dir)?;
    let per: Result<Vec<(Complex64, QuadratureHistory)>> = (0..group.genus())
        .into_par_iter()
        .map(|l| {
            let e = &weights[l];
            let circle = group.disks()[l].d;
            let (vs, history) = circle_quadrature_doubling_vec(
                &circle,
                start_nodes,
                MAX_NODES,
                crate::quad::DOUBLING_REL_TOL,
                orientation,
                |u| {
                    let a = d_eta.eval(u)?;
                    let b = d_weight.eval(u)?;
                    Ok(vec![a * b * trace_weight(u, e)])
                },
            )?;
            Ok((VARIATION_PREFACTOR * vs[0], history))
        })
        .collect();
    let per = per?;
    let mut per_circle = Vec::with_capacity(per.len());
    let mut histories = Vec::with_capacity(per.len());
    for (v, h) in per {
        per_circle.push(v);
        histories.push(h);
    }
    Ok(VariationResult {
        value: per_circle.iter().sum(),
        per_circle,
        histories,
    })
}

/// Samples of the variational integrand (du-coefficient, prefactor
/// included) at the quadrature nodes of ∂D_l. Gauge directions like
/// δŜ_l = ε·Ŝ_l make these vanish pointwise, not just in the integral.
pub fn variation_integrand_samples<D1, D2>(
    d_eta: &D1,
    d_weight: &D2,
    dir: &PerturbationDirection,
    l: usize,
    nodes: usize,
) -> Result<Vec<Complex64>>
where
    D1: Differential + ?Sized,
    D2: Differential + ?Sized,
{
    let group = d_eta.group();
    let weights = weights_for(group, dir)?;
    let circle = group.disks()[l].d;
    circle_nodes(&circle, nodes, ORIENTATION)
        .into_iter()
        .map(|(u, _)| {
            Ok(VARIATION_PREFACTOR
                * d_eta.eval(u)?
                * d_weight.eval(u)?
                * trace_weight(u, &weights[l]))
        })
        .collect()
}

/// Rejects differentials whose a-periods are neither 0 nor a unit vector.
fn check_normalized<D: Differential + Sync + ?Sized>(d: &D) -> Result<()> {
    let (values, _) = a_periods(d, 64)?;
    let mut residual = 0.0_f64;
    for v in &values {
        let to_zero = v.norm();
        let to_one = (v - Complex64::new(1.0, 0.0)).norm();
        residual = residual.max(to_zero.min(to_one));
    }
    if residual > 1e-4 {
        return Err(Error::Unnormalized { residual });
    }
    Ok(())
}

/// First-order variation of ∫_z^{z'} dη under `dir`: boundary integrals
/// pairing dη with the third-kind differential dη_{zz'} whose poles are the
/// integration endpoints, scaled by −1/(2πi). `d_eta` must be normalized
/// over the boundary cycles (zero or unit a-periods).
pub fn vary_integral<D: Differential + Sync + ?Sized>(
    d_eta: &D,
    z: crate::moebius::ComplexPoint,
    zprime: crate::moebius::ComplexPoint,
    dir: &PerturbationDirection,
    truncation: Truncation,
    start_nodes: usize,
) -> Result<VariationResult> {
    check_normalized(d_eta)?;
    let d_zz = ThirdKindDifferential::new(d_eta.group(), z, zprime, truncation)?;
    let raw = vary_pairing_with_orientation(d_eta, &d_zz, dir, start_nodes, ORIENTATION)?;
    // vary_pairing applies the period prefactor −1; rescale to −1/(2πi).
    let rescale = integral_variation_prefactor() / VARIATION_PREFACTOR;
    Ok(VariationResult {
        value: raw.value * rescale,
        per_circle: raw.per_circle.iter().map(|v| v * rescale).collect(),
        histories: raw.histories,
    })
}

/// First-order variation of the period matrix: entry (j, s) pairs dζ_j
/// with dζ_s in the boundary integrals (the endpoints of the integration
/// path disappear for periods). Symmetric in (j, s) by construction.
#[derive(Debug, Clone)]
pub struct PeriodVariation {
    pub entries: Vec<Vec<Complex64>>,
    pub histories: Vec<QuadratureHistory>,
}

impl PeriodVariation {
    pub fn genus(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, j: usize, s: usize) -> Complex64 {
        self.entries[j][s]
    }

    pub fn symmetry_residual(&self) -> f64 {
        let g = self.genus();
        let mut worst = 0.0_f64;
        for j in 0..g {
            for s in (j + 1)..g {
                worst = worst.max((self.entries[j][s] - self.entries[s][j]).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// All g² period variations for one direction; the g basis evaluations per
/// quadrature node are shared across entries, and the g circles run in
/// parallel with a deterministic reduction.
pub fn vary_period_matrix(
    basis: &HolomorphicBasis,
    dir: &PerturbationDirection,
    start_nodes: usize,
) -> Result<PeriodVariation> {
    let group = basis.group();
    let g = basis.genus();
    let weights = weights_for(group, dir)?;

    let per_circle: Result<Vec<(Vec<Complex64>, QuadratureHistory)>> = (0..g)
        .into_par_iter()
        .map(|l| {
            let e = &weights[l];
            let circle = group.disks()[l].d;
            circle_quadrature_doubling_vec(
                &circle,
                start_nodes,
                MAX_NODES,
                crate::quad::DOUBLING_REL_TOL,
                ORIENTATION,
                |u| {
                    let w = trace_weight(u, e);
                    let vals: Result<Vec<Complex64>> =
                        (0..g).map(|k| basis.differential(k).eval(u)).collect();
                    let vals = vals?;
                    let mut out = Vec::with_capacity(g * g);
                    for j in 0..g {
                        for s in 0..g {
                            out.push(vals[j] * vals[s] * w);
                        }
                    }
                    Ok(out)
                },
            )
        })
        .collect();

    let per_circle = per_circle?;
    let mut entries = vec![vec![Complex64::new(0.0, 0.0); g]; g];
    let mut histories = Vec::with_capacity(g);
    for (vs, history) in per_circle {
        for j in 0..g {
            for s in 0..g {
                entries[j][s] += VARIATION_PREFACTOR * vs[j * g + s];
            }
        }
        histories.push(history);
    }
    Ok(PeriodVariation { entries, histories })
}
