//! Classical Schottky groups: paired disks, generator validation, and
//! streaming enumeration of reduced group words with cached matrix products.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moebius::{
    image_of_circle, Circle, ComplexPoint, GeneralizedCircle, MapClass, MoebiusMap,
};

/// Disk-disjointness margin must exceed this.
const DISJOINT_TOL: f64 = 1e-12;
/// Boundary-circle pairing residual must stay below this (scaled).
const PAIRING_TOL: f64 = 1e-10;
/// Boundary classification tolerance for fundamental-domain membership.
const BOUNDARY_TOL: f64 = 1e-12;

/// One generator letter: generator index plus whether it is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Letter {
    pub index: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn is_inverse_of(&self, other: &Letter) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }
}

impl std::fmt::Display for Letter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.inverse {
            write!(f, "S{}⁻¹", self.index + 1)
        } else {
            write!(f, "S{}", self.index + 1)
        }
    }
}

/// A reduced word in the generators with its cached matrix product.
#[derive(Debug, Clone)]
pub struct GroupWord {
    letters: Vec<Letter>,
    matrix: MoebiusMap,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord {
            letters: Vec::new(),
            matrix: MoebiusMap::identity(),
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn matrix(&self) -> &MoebiusMap {
        &self.matrix
    }

    pub fn is_reduced(&self) -> bool {
        self.letters
            .windows(2)
            .all(|w| !w[0].is_inverse_of(&w[1]))
    }
}

/// A pair of disks (D_k, D'_k) exchanged by one generator.
#[derive(Debug, Clone, Copy)]
pub struct DiskPair {
    pub d: Circle,
    pub d_prime: Circle,
}

impl DiskPair {
    pub fn new(d: Circle, d_prime: Circle) -> Result<Self> {
        if d.radius <= 0.0 || d_prime.radius <= 0.0 {
            return Err(Error::Structural("disk radii must be strictly positive".into()));
        }
        Ok(DiskPair { d, d_prime })
    }
}

/// Outcome of a single validation check with its measured margin.
#[derive(Debug, Clone)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    /// Positive margins are healthy; the meaning is check-specific
    /// (disk gap, containment depth, pairing residual with flipped sign).
    pub margin: f64,
    pub detail: String,
}

/// Full validation report: one entry per invariant, with margins.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Smallest gap between any two of the 2g closed disks.
    pub fn min_disk_gap(&self) -> Option<f64> {
        self.checks
            .iter()
            .find(|c| c.name == "disks_pairwise_disjoint")
            .map(|c| c.margin)
    }

    /// Largest boundary-circle pairing residual over the generators.
    pub fn max_pairing_residual(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with("boundary_pairing"))
            .map(|c| -c.margin)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, margin: f64, detail: String) {
        self.checks.push(ValidationCheck {
            name: name.into(),
            passed,
            margin,
            detail,
        });
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{}: {} (margin {:.3e}) {}",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.margin,
                    c.detail
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Where a point sits relative to the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainLocation {
    /// Strictly outside every closed disk (∞ included).
    Inside,
    /// On a boundary circle, within tolerance.
    OnBoundary,
    /// Strictly inside an open disk; `primed` selects D'_k over D_k.
    InDisk { pair: usize, primed: bool },
}

impl DomainLocation {
    /// Outside-or-on convention: boundary points count as in the domain.
    pub fn is_in_domain(&self) -> bool {
        !matches!(self, DomainLocation::InDisk { .. })
    }
}

/// A classical Schottky group: g generators pairing 2g disjoint disks.
///
/// The group is immutable after construction; the validation report is
/// computed once and cached. Operations that assume a classical
/// configuration call [`SchottkyGroup::require_valid`].
#[derive(Debug, Clone)]
pub struct SchottkyGroup {
    generators: Vec<MoebiusMap>,
    inverses: Vec<MoebiusMap>,
    disks: Vec<DiskPair>,
    validation: ValidationReport,
}

impl SchottkyGroup {
    /// Builds a group from explicit generators and disk pairs and validates
    /// it. Structural problems (empty or mismatched lists) are errors;
    /// geometric failures are recorded in the report instead.
    pub fn new(generators: Vec<MoebiusMap>, disks: Vec<DiskPair>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Structural("genus must be at least 1".into()));
        }
        if generators.len() != disks.len() {
            return Err(Error::Structural(format!(
                "{} generators but {} disk pairs",
                generators.len(),
                disks.len()
            )));
        }
        let inverses = generators.iter().map(|g| g.inverse()).collect();
        let validation = run_validation(&generators, &disks);
        Ok(SchottkyGroup {
            generators,
            inverses,
            disks,
            validation,
        })
    }

    /// Builds a group from generators and the D'_k disks alone; each D_k is
    /// derived as the exact image of ∂D'_k under its generator, so the
    /// boundary-pairing invariant holds by construction.
    pub fn from_generators_and_d_primes(
        generators: Vec<MoebiusMap>,
        d_primes: &[Circle],
    ) -> Result<Self> {
        if generators.len() != d_primes.len() {
            return Err(Error::Structural(format!(
                "{} generators but {} disks",
                generators.len(),
                d_primes.len()
            )));
        }
        let mut disks = Vec::with_capacity(d_primes.len());
        for (gen, dp) in generators.iter().zip(d_primes) {
            let image = image_of_circle(gen, dp)?;
            let d = match image.curve {
                GeneralizedCircle::Circle(c) => c,
                GeneralizedCircle::Line { .. } => {
                    return Err(Error::Structural(
                        "D' passes through the generator pole; its image is not a circle".into(),
                    ))
                }
            };
            disks.push(DiskPair::new(d, *dp)?);
        }
        SchottkyGroup::new(generators, disks)
    }

    /// Builds a group from (attracting, repelling, multiplier) triples and
    /// the D'_k disks, deriving each D_k exactly.
    pub fn from_fixed_point_data(
        triples: &[(Complex64, Complex64, Complex64)],
        d_primes: &[Circle],
    ) -> Result<Self> {
        let generators = triples
            .iter()
            .map(|(att, rep, mu)| MoebiusMap::from_fixed_points(*att, *rep, *mu))
            .collect::<Result<Vec<_>>>()?;
        SchottkyGroup::from_generators_and_d_primes(generators, d_primes)
    }

    /// The D'_k circles alone (used when re-deriving paired disks after a
    /// generator perturbation).
    pub fn d_primes(&self) -> Vec<Circle> {
        self.disks.iter().map(|p| p.d_prime).collect()
    }

    pub fn genus(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> &MoebiusMap {
        &self.generators[k]
    }

    /// Cached true inverse of generator k.
    pub fn generator_inverse(&self, k: usize) -> &MoebiusMap {
        &self.inverses[k]
    }

    pub fn disks(&self) -> &[DiskPair] {
        &self.disks
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn is_valid(&self) -> bool {
        self.validation.passed()
    }

    pub fn require_valid(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGroup(
                self.validation
                    .failures()
                    .map(|c| format!("{} ({})", c.name, c.detail))
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// All 2g circles, D_1, D'_1, D_2, D'_2, ...
    pub fn all_circles(&self) -> Vec<Circle> {
        self.disks
            .iter()
            .flat_map(|p| [p.d, p.d_prime])
            .collect()
    }

    /// Length scale of the configuration (largest center offset plus radius).
    pub fn geometric_scale(&self) -> f64 {
        self.all_circles()
            .iter()
            .map(|c| c.center.norm() + c.radius)
            .fold(1.0, f64::max)
    }

    /// Matrix of a single letter (generator or its true inverse).
    pub fn letter_matrix(&self, letter: Letter) -> &MoebiusMap {
        if letter.inverse {
            &self.inverses[letter.index]
        } else {
            &self.generators[letter.index]
        }
    }

    /// Streams every reduced word of length ≤ `max_len`, identity first,
    /// in depth-first lexicographic order with one matrix product per word.
    pub fn words_up_to(&self, max_len: usize) -> WordStream<'_> {
        WordStream::new(self, max_len, None)
    }

    /// Streams one representative per left coset of ⟨S_k⟩ among words of
    /// length ≤ `max_len`: the reduced words whose last letter is not
    /// S_k^{±1}. `k` is a 0-based generator index.
    pub fn cosets_mod_cyclic(&self, k: usize, max_len: usize) -> WordStream<'_> {
        WordStream::new(self, max_len, Some(k))
    }

    /// Locates a sphere point relative to the fundamental domain (the
    /// exterior of all 2g disks). ∞ is always inside since disks are finite.
    pub fn locate(&self, p: ComplexPoint) -> DomainLocation {
        let u = match p {
            ComplexPoint::Infinity => return DomainLocation::Inside,
            ComplexPoint::Finite(u) => u,
        };
        let tol = BOUNDARY_TOL * self.geometric_scale();
        let mut on_boundary = false;
        for (pair, dp) in self.disks.iter().enumerate() {
            for (primed, circle) in [(false, &dp.d), (true, &dp.d_prime)] {
                let gap = circle.boundary_distance(u);
                if gap < -tol {
                    return DomainLocation::InDisk { pair, primed };
                }
                if gap.abs() <= tol {
                    on_boundary = true;
                }
            }
        }
        if on_boundary {
            DomainLocation::OnBoundary
        } else {
            DomainLocation::Inside
        }
    }

    pub fn in_fundamental_domain(&self, p: ComplexPoint) -> bool {
        self.locate(p).is_in_domain()
    }

    /// Conjugates generators and disks by `t`. Fails if any disk image is a
    /// line (disk through the pole of `t`); the caller picks `t` to keep the
    /// configuration finite.
    pub fn conjugated(&self, t: &MoebiusMap) -> Result<SchottkyGroup> {
        let t_inv = t.inverse();
        let generators: Vec<MoebiusMap> = self
            .generators
            .iter()
            .map(|g| t.compose(g).compose(&t_inv))
            .collect();
        let mut disks = Vec::with_capacity(self.disks.len());
        for dp in &self.disks {
            let map_circle = |c: &Circle| -> Result<Circle> {
                match image_of_circle(t, c)?.curve {
                    GeneralizedCircle::Circle(ic) => Ok(ic),
                    GeneralizedCircle::Line { .. } => Err(Error::Structural(
                        "conjugation sends a disk to a half-plane".into(),
                    )),
                }
            };
            disks.push(DiskPair::new(map_circle(&dp.d)?, map_circle(&dp.d_prime)?)?);
        }
        SchottkyGroup::new(generators, disks)
    }
}

fn run_validation(generators: &[MoebiusMap], disks: &[DiskPair]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let scale = disks
        .iter()
        .flat_map(|p| [p.d, p.d_prime])
        .map(|c| c.center.norm() + c.radius)
        .fold(1.0, f64::max);

    // Radii strictly positive (re-checked here so hand-built structs fail
    // loudly in the report).
    let min_radius = disks
        .iter()
        .flat_map(|p| [p.d.radius, p.d_prime.radius])
        .fold(f64::INFINITY, f64::min);
    report.push(
        "radii_positive",
        min_radius > 0.0,
        min_radius,
        format!("smallest radius {min_radius:.6e}"),
    );

    // Pairwise disjointness of all 2g closed disks.
    let circles: Vec<(String, Circle)> = disks
        .iter()
        .enumerate()
        .flat_map(|(k, p)| {
            [
                (format!("D{}", k + 1), p.d),
                (format!("D'{}", k + 1), p.d_prime),
            ]
        })
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut worst_pair = String::new();
    for i in 0..circles.len() {
        for j in (i + 1)..circles.len() {
            let gap = (circles[i].1.center - circles[j].1.center).norm()
                - circles[i].1.radius
                - circles[j].1.radius;
            if gap < min_gap {
                min_gap = gap;
                worst_pair = format!("{} vs {}", circles[i].0, circles[j].0);
            }
        }
    }
    report.push(
        "disks_pairwise_disjoint",
        min_gap > DISJOINT_TOL,
        min_gap,
        format!("tightest pair {worst_pair}, gap {min_gap:.6e}"),
    );

    for (k, (gen, dp)) in generators.iter().zip(disks).enumerate() {
        let label = k + 1;

        // Loxodromy and fixed-point containment.
        match gen.fixed_points() {
            Err(e) => {
                report.push(
                    format!("loxodromic_{label}"),
                    false,
                    f64::NEG_INFINITY,
                    format!("fixed-point analysis failed: {e}"),
                );
            }
            Ok(fp) => {
                let lox = fp.class == MapClass::Loxodromic;
                report.push(
                    format!("loxodromic_{label}"),
                    lox,
                    1.0 - fp.multiplier.norm(),
                    format!("class {:?}, |multiplier| = {:.6e}", fp.class, fp.multiplier.norm()),
                );
                let att_margin = fp
                    .attracting
                    .as_finite()
                    .map(|a| dp.d.radius - (a - dp.d.center).norm())
                    .unwrap_or(f64::NEG_INFINITY);
                report.push(
                    format!("attracting_in_D_{label}"),
                    att_margin > 0.0,
                    att_margin,
                    format!("attracting point {} vs D{label}", fp.attracting),
                );
                let rep_margin = fp
                    .repelling
                    .as_finite()
                    .map(|r| dp.d_prime.radius - (r - dp.d_prime.center).norm())
                    .unwrap_or(f64::NEG_INFINITY);
                report.push(
                    format!("repelling_in_Dprime_{label}"),
                    rep_margin > 0.0,
                    rep_margin,
                    format!("repelling point {} vs D'{label}", fp.repelling),
                );
            }
        }

        // Boundary pairing: S_k(∂D'_k) must coincide with ∂D_k and send the
        // interior of D'_k to the exterior of D_k.
        match image_of_circle(gen, &dp.d_prime) {
            Err(e) => {
                report.push(
                    format!("boundary_pairing_{label}"),
                    false,
                    f64::NEG_INFINITY,
                    format!("circle mapping failed: {e}"),
                );
            }
            Ok(image) => match image.curve {
                GeneralizedCircle::Line { .. } => {
                    report.push(
                        format!("boundary_pairing_{label}"),
                        false,
                        f64::NEG_INFINITY,
                        "image of ∂D' is a line, not a circle".into(),
                    );
                }
                GeneralizedCircle::Circle(ic) => {
                    let residual =
                        (ic.center - dp.d.center).norm() + (ic.radius - dp.d.radius).abs();
                    let ok = residual <= PAIRING_TOL * scale.max(1.0);
                    report.push(
                        format!("boundary_pairing_{label}"),
                        ok,
                        -residual,
                        format!(
                            "S{label}(∂D'{label}) = circle({:.6}, {:.6}), residual {residual:.3e}",
                            ic.center, ic.radius
                        ),
                    );
                    let orient_ok = image.interior_to_interior == Some(false);
                    report.push(
                        format!("interior_to_exterior_{label}"),
                        orient_ok,
                        if orient_ok { 1.0 } else { -1.0 },
                        "interior of D' must map to the exterior of D".into(),
                    );
                }
            },
        }
    }

    report
}

/// Depth-first stream of reduced words; emits each word once, identity
/// first, computing one matrix product per emitted word. With a coset
/// filter set, words ending in S_k^{±1} are traversed but not emitted.
pub struct WordStream<'g> {
    group: &'g SchottkyGroup,
    max_len: usize,
    coset_filter: Option<usize>,
    stack: Vec<Frame>,
    started: bool,
}

struct Frame {
    letters: Vec<Letter>,
    matrix: MoebiusMap,
    next_child: usize,
}

impl<'g> WordStream<'g> {
    fn new(group: &'g SchottkyGroup, max_len: usize, coset_filter: Option<usize>) -> Self {
        WordStream {
            group,
            max_len,
            coset_filter,
            stack: Vec::new(),
            started: false,
        }
    }

    fn emit(&self, frame: &Frame) -> Option<GroupWord> {
        if let (Some(k), Some(last)) = (self.coset_filter, frame.letters.last()) {
            if last.index == k {
                return None;
            }
        }
        Some(GroupWord {
            letters: frame.letters.clone(),
            matrix: frame.matrix,
        })
    }
}

impl<'g> Iterator for WordStream<'g> {
    type Item = GroupWord;

    fn next(&mut self) -> Option<GroupWord> {
        let n_letters = 2 * self.group.genus();
        if !self.started {
            self.started = true;
            let root = Frame {
                letters: Vec::new(),
                matrix: MoebiusMap::identity(),
                next_child: 0,
            };
            let word = self.emit(&root);
            self.stack.push(root);
            if let Some(w) = word {
                return Some(w);
            }
        }
        loop {
            let top = self.stack.last_mut()?;
            if top.letters.len() >= self.max_len {
                self.stack.pop();
                continue;
            }
            let last = top.letters.last().copied();
            let mut chosen = None;
            while top.next_child < n_letters {
                let ordinal = top.next_child;
                top.next_child += 1;
                let letter = Letter {
                    index: ordinal / 2,
                    inverse: ordinal % 2 == 1,
                };
                let reduced = match last {
                    Some(prev) => !letter.is_inverse_of(&prev),
                    None => true,
                };
                if reduced {
                    chosen = Some(letter);
                    break;
                }
            }
            let letter = match chosen {
                Some(l) => l,
                None => {
                    self.stack.pop();
                    continue;
                }
            };
            let mut letters = self.stack.last().unwrap().letters.clone();
            letters.push(letter);
            let matrix = self
                .stack
                .last()
                .unwrap()
                .matrix
                .compose(self.group.letter_matrix(letter));
            let frame = Frame {
                letters,
                matrix,
                next_child: 0,
            };
            let word = self.emit(&frame);
            self.stack.push(frame);
            if let Some(w) = word {
                return Some(w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::moebius::Mat2;

    fn projectively_close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        // Least-squares phase/scale alignment of b onto a.
        let inner = |x: &Mat2, y: &Mat2| -> Complex64 {
            x.e.iter()
                .flatten()
                .zip(y.e.iter().flatten())
                .map(|(p, q)| p * q.conj())
                .sum()
        };
        let lambda = inner(a, b) / inner(b, b);
        let diff = a.sub(&b.scale(lambda)).frobenius_norm();
        diff <= tol * a.frobenius_norm()
    }

    #[test]
    fn genus1_isometric_fixture_validates() {
        let group = fixtures::genus1(0.04).unwrap();
        assert!(group.is_valid(), "{}", group.validation().summary());
        assert!(group.validation().max_pairing_residual().unwrap() < 1e-12);
    }

    #[test]
    fn oversized_disk_fails_disjointness_and_names_pair() {
        let group = fixtures::genus1(0.04).unwrap();
        let mut disks = group.disks().to_vec();
        disks[0].d.radius = 1.8;
        let bad = SchottkyGroup::new(group.generators().to_vec(), disks).unwrap();
        assert!(!bad.is_valid());
        let disjoint = bad
            .validation()
            .checks
            .iter()
            .find(|c| c.name == "disks_pairwise_disjoint")
            .unwrap();
        assert!(!disjoint.passed);
        assert!(disjoint.detail.contains("D1"));
    }

    #[test]
    fn structural_mismatch_is_an_error_not_a_report() {
        let group = fixtures::genus1(0.04).unwrap();
        let err = SchottkyGroup::new(group.generators().to_vec(), vec![]).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn word_counts_match_reduced_word_formula() {
        let g2 = fixtures::genus2().unwrap();
        assert_eq!(g2.words_up_to(0).count(), 1);
        assert_eq!(g2.words_up_to(1).count(), 5);
        assert_eq!(g2.words_up_to(2).count(), 17);
        assert_eq!(g2.words_up_to(3).count(), 17 + 12 * 3);

        let g1 = fixtures::genus1(0.04).unwrap();
        assert_eq!(g1.words_up_to(3).count(), 7);
    }

    #[test]
    fn words_are_reduced_and_unique() {
        let g2 = fixtures::genus2().unwrap();
        let words: Vec<GroupWord> = g2.words_up_to(4).collect();
        let mut seen = std::collections::HashSet::new();
        for w in &words {
            assert!(w.is_reduced());
            let key: Vec<(usize, bool)> =
                w.letters().iter().map(|l| (l.index, l.inverse)).collect();
            assert!(seen.insert(key), "duplicate word {:?}", w.letters());
        }
    }

    #[test]
    fn genus1_word_matrices_match_repeated_squaring() {
        let g1 = fixtures::genus1(0.04).unwrap();
        let s = *g1.generator(0);
        let pow = |n: i64| -> MoebiusMap {
            let base = if n >= 0 { s } else { s.inverse() };
            let mut acc = MoebiusMap::identity();
            let mut b = base;
            let mut e = n.unsigned_abs();
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc.compose(&b);
                }
                b = b.compose(&b);
                e >>= 1;
            }
            acc
        };
        for w in g1.words_up_to(6) {
            let n: i64 = w
                .letters()
                .iter()
                .map(|l| if l.inverse { -1 } else { 1 })
                .sum();
            assert_eq!(w.len() as i64, n.abs(), "genus-1 words are powers");
            assert!(
                projectively_close(w.matrix().matrix(), pow(n).matrix(), 1e-10),
                "word S^{n} matrix mismatch"
            );
        }
    }

    #[test]
    fn coset_stream_genus1_is_identity_only() {
        let g1 = fixtures::genus1(0.04).unwrap();
        let reps: Vec<_> = g1.cosets_mod_cyclic(0, 5).collect();
        assert_eq!(reps.len(), 1);
        assert!(reps[0].is_empty());
    }

    #[test]
    fn coset_stream_genus2_len1() {
        let g2 = fixtures::genus2().unwrap();
        let reps: Vec<_> = g2.cosets_mod_cyclic(0, 1).collect();
        // {id, S2, S2⁻¹}
        assert_eq!(reps.len(), 3);
        assert!(reps.iter().all(|w| w
            .letters()
            .last()
            .map_or(true, |l| l.index != 0)));
    }

    #[test]
    fn coset_representatives_match_brute_force_partition() {
        let g2 = fixtures::genus2().unwrap();
        let max_len = 2;
        let all: Vec<GroupWord> = g2.words_up_to(max_len).collect();
        let s1 = *g2.generator(0);

        // u ~ v iff u⁻¹·v is a power of S_1 (with slack in the exponent).
        let mut powers = Vec::new();
        let mut acc = MoebiusMap::identity();
        powers.push(acc);
        for _ in 0..(2 * max_len + 2) {
            acc = acc.compose(&s1);
            powers.push(acc);
        }
        let mut acc = MoebiusMap::identity();
        let s1_inv = s1.inverse();
        for _ in 0..(2 * max_len + 2) {
            acc = acc.compose(&s1_inv);
            powers.push(acc);
        }
        let same_coset = |u: &GroupWord, v: &GroupWord| -> bool {
            let rel = u.matrix().inverse().compose(v.matrix());
            powers
                .iter()
                .any(|p| projectively_close(rel.matrix(), p.matrix(), 1e-9))
        };

        let mut classes: Vec<GroupWord> = Vec::new();
        for w in &all {
            if !classes.iter().any(|c| same_coset(c, w)) {
                classes.push(w.clone());
            }
        }
        let reps: Vec<_> = g2.cosets_mod_cyclic(0, max_len).collect();
        assert_eq!(reps.len(), classes.len());

        // Representatives are pairwise inequivalent.
        for i in 0..reps.len() {
            for j in (i + 1)..reps.len() {
                assert!(!same_coset(&reps[i], &reps[j]));
            }
        }
    }

    #[test]
    fn fundamental_domain_membership() {
        let group = fixtures::genus1(0.04).unwrap();
        assert!(group.in_fundamental_domain(ComplexPoint::Infinity));
        let d0 = group.disks()[0].d;
        assert_eq!(
            group.locate(ComplexPoint::Finite(d0.center)),
            DomainLocation::InDisk { pair: 0, primed: false }
        );
        let on_boundary = d0.center + Complex64::new(d0.radius, 0.0);
        assert_eq!(
            group.locate(ComplexPoint::Finite(on_boundary)),
            DomainLocation::OnBoundary
        );
        assert!(group.in_fundamental_domain(ComplexPoint::Finite(on_boundary)));
        assert!(group.in_fundamental_domain(ComplexPoint::finite(0.0, 2.0)));
    }

    #[test]
    fn validation_survives_conjugation() {
        let group = fixtures::genus2().unwrap();
        // Mild Möbius map with pole at −22, far from every disk.
        let t = MoebiusMap::new(
            Complex64::new(1.0, 0.02),
            Complex64::new(0.3, 0.1),
            Complex64::new(0.05, 0.0),
            Complex64::new(1.1, 0.0),
        )
        .unwrap();
        let conj = group.conjugated(&t).unwrap();
        assert!(conj.is_valid(), "{}", conj.validation().summary());

        // An invalid group stays invalid.
        let mut disks = group.disks().to_vec();
        disks[0].d.radius *= 6.0;
        let bad = SchottkyGroup::new(group.generators().to_vec(), disks).unwrap();
        let bad_conj = bad.conjugated(&t).unwrap();
        assert!(!bad_conj.is_valid());
    }
}
