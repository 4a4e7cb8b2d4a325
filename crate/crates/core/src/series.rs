//! Truncated linear Poincaré series for Abelian differentials of the third
//! kind and the holomorphic basis, with layer-by-layer convergence
//! diagnostics.
//!
//! Evaluation uses the pole-orbit form of the series: the evaluation point
//! stays put and the poles are transported through the group, so each word
//! contributes a pair 1/(u − Sz) − 1/(u − Sz'). Terms are accumulated layer
//! by word length, lexicographically within a layer, with compensated
//! summation; results are therefore deterministic and independent of how
//! the caller parallelizes around them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{Letter, SchottkyGroup};
use crate::moebius::{ComplexPoint, MoebiusMap};
use crate::quad::{circle_quadrature_doubling, CompensatedSum, DEFAULT_NODES, MAX_NODES, ORIENTATION};

/// Minimum allowed distance between an evaluation point and any transported
/// pole.
pub const POLE_PROXIMITY_TOL: f64 = 1e-12;

/// Hard cap on word length in tail-tolerance mode.
pub const TRUNCATION_CAP: usize = 16;

/// Pole pair contributed by one group word.
pub type PolePair = (ComplexPoint, ComplexPoint);

/// Truncation control for a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Sum all words of length ≤ the given bound.
    MaxWordLen(usize),
    /// Add layers until the geometric tail estimate drops below `tol`;
    /// reaching the word-length cap first is an error.
    TailTolerance { tol: f64, cap: usize },
}

impl Truncation {
    /// Tail-tolerance mode with the default cap of [`TRUNCATION_CAP`].
    pub fn tail(tol: f64) -> Truncation {
        Truncation::TailTolerance {
            tol,
            cap: TRUNCATION_CAP,
        }
    }
}

/// Value of the pair term 1/(u − a) − 1/(u − b); a pole at ∞ contributes 0.
fn pair_term(u: Complex64, pair: &PolePair) -> Result<Complex64> {
    let mut value = Complex64::new(0.0, 0.0);
    if let ComplexPoint::Finite(a) = pair.0 {
        let d = u - a;
        if d.norm() < POLE_PROXIMITY_TOL {
            return Err(Error::PoleProximity {
                u,
                pole: a,
                distance: d.norm(),
            });
        }
        value += 1.0 / d;
    }
    if let ComplexPoint::Finite(b) = pair.1 {
        let d = u - b;
        if d.norm() < POLE_PROXIMITY_TOL {
            return Err(Error::PoleProximity {
                u,
                pole: b,
                distance: d.norm(),
            });
        }
        value -= 1.0 / d;
    }
    Ok(value)
}

/// A truncated Poincaré series seen as du-coefficient function.
pub trait Differential {
    fn group(&self) -> &SchottkyGroup;

    /// Overall scalar applied to the raw layered sum (1 for third-kind
    /// differentials, the a-period normalization for basis elements).
    fn scale(&self) -> Complex64;

    /// Pole pairs grouped by word length, lexicographic within each layer.
    fn layers(&self) -> &[Vec<PolePair>];

    fn max_word_len(&self) -> usize {
        self.layers().len().saturating_sub(1)
    }

    /// Series value at `u`. Total off the transported poles: no domain
    /// restriction is enforced, which lets period paths cross into the
    /// disks and gluing tests evaluate on both paired circles.
    fn eval(&self, u: Complex64) -> Result<Complex64> {
        let mut acc = CompensatedSum::new();
        for layer in self.layers() {
            for pair in layer {
                acc.add(pair_term(u, pair)?);
            }
        }
        Ok(self.scale() * acc.value())
    }

    /// Per-layer contributions at `u` (scaled), in word-length order.
    fn layer_values(&self, u: Complex64) -> Result<Vec<Complex64>> {
        self.layers()
            .iter()
            .map(|layer| {
                let mut acc = CompensatedSum::new();
                for pair in layer {
                    acc.add(pair_term(u, pair)?);
                }
                Ok(self.scale() * acc.value())
            })
            .collect()
    }
}

/// Per-layer sup norms over probe points: the empirical convergence
/// diagnostic. Entry L is max over probes of |sum of layer-L terms|.
pub fn layer_norms<D: Differential + ?Sized>(d: &D, probes: &[Complex64]) -> Result<Vec<f64>> {
    let mut norms = vec![0.0_f64; d.layers().len()];
    for &p in probes {
        let values = d.layer_values(p)?;
        for (n, v) in norms.iter_mut().zip(values) {
            *n = n.max(v.norm());
        }
    }
    Ok(norms)
}

/// Geometric tail extrapolation from the last two layer norms.
pub fn geometric_tail_estimate(norms: &[f64]) -> Option<f64> {
    if norms.len() < 2 {
        return None;
    }
    let last = norms[norms.len() - 1];
    let prev = norms[norms.len() - 2];
    if last == 0.0 {
        return Some(0.0);
    }
    if prev <= 0.0 {
        return None;
    }
    let q = last / prev;
    if q < 1.0 {
        Some(last * q / (1.0 - q))
    } else {
        None
    }
}

/// Deterministic probe points: a few points on every boundary circle.
pub fn default_probes(group: &SchottkyGroup) -> Vec<Complex64> {
    let mut probes = Vec::new();
    for circle in group.all_circles() {
        for j in 0..4 {
            probes.push(circle.point_at_angle(0.4 + std::f64::consts::FRAC_PI_2 * j as f64));
        }
    }
    probes
}

/// Walks reduced words one length-layer at a time, one matrix product per
/// word, in the same lexicographic order as [`SchottkyGroup::words_up_to`].
struct LayerCursor<'g> {
    group: &'g SchottkyGroup,
    current: Vec<(MoebiusMap, Option<Letter>)>,
    layer: usize,
}

impl<'g> LayerCursor<'g> {
    fn new(group: &'g SchottkyGroup) -> Self {
        LayerCursor {
            group,
            current: vec![(MoebiusMap::identity(), None)],
            layer: 0,
        }
    }

    fn advance(&mut self) {
        let g = self.group.genus();
        let mut next = Vec::with_capacity(self.current.len() * (2 * g).max(1));
        for (matrix, last) in &self.current {
            for ordinal in 0..2 * g {
                let letter = Letter {
                    index: ordinal / 2,
                    inverse: ordinal % 2 == 1,
                };
                if let Some(prev) = last {
                    if letter.is_inverse_of(prev) {
                        continue;
                    }
                }
                next.push((matrix.compose(self.group.letter_matrix(letter)), Some(letter)));
            }
        }
        self.current = next;
        self.layer += 1;
    }
}

/// Builds per-layer pole pairs by transporting `(z, z')` through the words,
/// with optional coset filtering (words ending in S_k^{±1} skipped).
/// Truncation is resolved here; returns the layers and the layer norms that
/// drove the tail decision.
fn build_layers(
    group: &SchottkyGroup,
    z: ComplexPoint,
    zprime: ComplexPoint,
    truncation: Truncation,
    coset_filter: Option<usize>,
) -> Result<(Vec<Vec<PolePair>>, Vec<f64>)> {
    let probes = default_probes(group);
    let mut cursor = LayerCursor::new(group);
    let mut layers: Vec<Vec<PolePair>> = Vec::new();
    let mut norms: Vec<f64> = Vec::new();

    loop {
        let mut pairs = Vec::new();
        for (matrix, last) in &cursor.current {
            if let (Some(k), Some(letter)) = (coset_filter, last) {
                if letter.index == k {
                    continue;
                }
            }
            pairs.push((matrix.apply(z), matrix.apply(zprime)));
        }

        // Probe the new layer for the convergence diagnostic, skipping
        // probes that collide with a pole.
        let mut norm = 0.0_f64;
        for &p in &probes {
            let mut acc = CompensatedSum::new();
            let mut ok = true;
            for pair in &pairs {
                match pair_term(p, pair) {
                    Ok(v) => acc.add(v),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                norm = norm.max(acc.value().norm());
            }
        }
        layers.push(pairs);
        norms.push(norm);

        match truncation {
            Truncation::MaxWordLen(max_len) => {
                if cursor.layer >= max_len {
                    return Ok((layers, norms));
                }
            }
            Truncation::TailTolerance { tol, cap } => {
                if let Some(tail) = geometric_tail_estimate(&norms) {
                    if tail <= tol {
                        return Ok((layers, norms));
                    }
                }
                if cursor.layer >= cap {
                    return Err(Error::TruncationCap {
                        cap,
                        tail_estimate: geometric_tail_estimate(&norms)
                            .unwrap_or(f64::INFINITY),
                    });
                }
            }
        }
        cursor.advance();
    }
}

/// Abelian differential of the third kind with simple poles (+1 at z,
/// −1 at z'), as a truncated series over the whole group.
#[derive(Debug, Clone)]
pub struct ThirdKindDifferential {
    group: SchottkyGroup,
    pole_z: ComplexPoint,
    pole_zprime: ComplexPoint,
    layers: Vec<Vec<PolePair>>,
    /// Measured norm of the last word-length layer at the construction
    /// probes.
    tail_estimate: f64,
}

impl ThirdKindDifferential {
    pub fn new(
        group: &SchottkyGroup,
        z: ComplexPoint,
        zprime: ComplexPoint,
        truncation: Truncation,
    ) -> Result<Self> {
        group.require_valid()?;
        let scale = group.geometric_scale();
        match (z.as_finite(), zprime.as_finite()) {
            (Some(a), Some(b)) if (a - b).norm() <= 1e-14 * scale => {
                return Err(Error::Structural(
                    "third-kind poles must be distinct".into(),
                ));
            }
            _ => {}
        }
        if z.is_infinity() && zprime.is_infinity() {
            return Err(Error::Structural("third-kind poles must be distinct".into()));
        }
        for (label, p) in [("z", z), ("z'", zprime)] {
            if !group.in_fundamental_domain(p) {
                return Err(Error::Structural(format!(
                    "pole {label} = {p} lies inside a group disk"
                )));
            }
        }
        let (layers, norms) = build_layers(group, z, zprime, truncation, None)?;
        Ok(ThirdKindDifferential {
            group: group.clone(),
            pole_z: z,
            pole_zprime: zprime,
            layers,
            tail_estimate: norms.last().copied().unwrap_or(0.0),
        })
    }

    pub fn poles(&self) -> (ComplexPoint, ComplexPoint) {
        (self.pole_z, self.pole_zprime)
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }
}

impl Differential for ThirdKindDifferential {
    fn group(&self) -> &SchottkyGroup {
        &self.group
    }

    fn scale(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn layers(&self) -> &[Vec<PolePair>] {
        &self.layers
    }
}

struct BasisElementData {
    layers: Vec<Vec<PolePair>>,
    normalization: Complex64,
    tail_estimate: f64,
}

/// The holomorphic basis dζ_1 … dζ_g, built from pole orbits over coset
/// representatives and normalized so the clockwise a-period matrix
/// ∮_{∂D_s} dζ_k is the identity.
pub struct HolomorphicBasis {
    group: SchottkyGroup,
    elements: Vec<BasisElementData>,
}

impl HolomorphicBasis {
    pub fn new(group: &SchottkyGroup, truncation: Truncation) -> Result<Self> {
        group.require_valid()?;
        let mut elements = Vec::with_capacity(group.genus());
        for k in 0..group.genus() {
            let fp = group.generator(k).fixed_points()?;
            let (layers, norms) = build_layers(
                group,
                fp.attracting,
                fp.repelling,
                truncation,
                Some(k),
            )?;
            // Fix the normalization by the measured clockwise a-period over
            // ∂D_k (analytically −2πi for the raw series; pinned here by
            // quadrature rather than assumed).
            let raw_period = {
                let circle = group.disks()[k].d;
                let eval_raw = |u: Complex64| -> Result<Complex64> {
                    let mut acc = CompensatedSum::new();
                    for layer in &layers {
                        for pair in layer {
                            acc.add(pair_term(u, pair)?);
                        }
                    }
                    Ok(acc.value())
                };
                circle_quadrature_doubling(
                    &circle,
                    DEFAULT_NODES,
                    MAX_NODES,
                    1e-12,
                    ORIENTATION,
                    eval_raw,
                )?
                .0
            };
            if raw_period.norm() < 1e-6 {
                return Err(Error::Structural(format!(
                    "degenerate a-period {raw_period} while normalizing basis element {k}"
                )));
            }
            elements.push(BasisElementData {
                layers,
                normalization: 1.0 / raw_period,
                tail_estimate: norms.last().copied().unwrap_or(0.0),
            });
        }
        Ok(HolomorphicBasis {
            group: group.clone(),
            elements,
        })
    }

    pub fn group(&self) -> &SchottkyGroup {
        &self.group
    }

    pub fn genus(&self) -> usize {
        self.elements.len()
    }

    /// View of dζ_k (0-based index).
    pub fn differential(&self, k: usize) -> BasisDifferential<'_> {
        BasisDifferential { basis: self, k }
    }

    pub fn normalization(&self, k: usize) -> Complex64 {
        self.elements[k].normalization
    }

    pub fn tail_estimate(&self, k: usize) -> f64 {
        self.elements[k].tail_estimate
    }
}

/// Borrowed view of one holomorphic basis element.
#[derive(Clone, Copy)]
pub struct BasisDifferential<'b> {
    basis: &'b HolomorphicBasis,
    k: usize,
}

impl BasisDifferential<'_> {
    pub fn index(&self) -> usize {
        self.k
    }
}

impl Differential for BasisDifferential<'_> {
    fn group(&self) -> &SchottkyGroup {
        &self.basis.group
    }

    fn scale(&self) -> Complex64 {
        self.basis.elements[self.k].normalization
    }

    fn layers(&self) -> &[Vec<PolePair>] {
        &self.basis.elements[self.k].layers
    }
}
