//! Abelian integrals and period matrices: term-wise closed-form primitives
//! with branch tracking along polylines, clockwise trapezoid a-periods, and
//! b-periods along planned disk-avoiding paths.
//!
//! The b-period path from z0 to S_s(z0) is stitched from two planned
//! polylines: one from z0 to an entry point on ∂D_s, and the S_s-image of
//! one from the matching exit point on ∂D'_s back to z0 (subdivided before
//! mapping so the mapped polyline hugs the true curved image). This keeps
//! every path in a fixed homotopy class, so period entries are independent
//! of the base point.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::moebius::{Circle, ComplexPoint};
use crate::quad::{
    circle_quadrature_doubling, CompensatedSum, QuadratureHistory, DEFAULT_NODES, MAX_NODES,
    ORIENTATION,
};
use crate::series::{Differential, HolomorphicBasis, PolePair, POLE_PROXIMITY_TOL};

/// Maximum bisection depth for branch tracking on one segment.
const BRANCH_MAX_DEPTH: u32 = 48;
/// Per-piece budget on the principal argument change of each log factor.
const ARG_BUDGET: f64 = std::f64::consts::FRAC_PI_2;
/// Obstacle inflation used by the path planner.
const PLANNER_INFLATION: f64 = 1.1;
/// Detour waypoints sit at this multiple of the obstacle radius.
const PLANNER_DETOUR: f64 = 1.45;
/// Maximum recursive split depth of the planner.
const PLANNER_MAX_DEPTH: u32 = 16;

/// Branch-tracked increment of log(x − pole) along the segment p → q.
/// A pole at ∞ contributes 0.
fn log_increment(p: Complex64, q: Complex64, pole: &ComplexPoint) -> Result<Complex64> {
    let a = match pole {
        ComplexPoint::Infinity => return Ok(Complex64::new(0.0, 0.0)),
        ComplexPoint::Finite(a) => *a,
    };
    fn rec(p: Complex64, q: Complex64, a: Complex64, depth: u32) -> Result<Complex64> {
        let rp = p - a;
        let rq = q - a;
        let dmin = rp.norm().min(rq.norm());
        if dmin < POLE_PROXIMITY_TOL {
            return Err(Error::PoleProximity {
                u: if rp.norm() < rq.norm() { p } else { q },
                pole: a,
                distance: dmin,
            });
        }
        // Short segments relative to the pole distance cannot wind, so the
        // principal log of the ratio is the true increment.
        if (q - p).norm() < 0.5 * dmin {
            let l = (rq / rp).ln();
            if l.im.abs() < ARG_BUDGET {
                return Ok(l);
            }
        }
        if depth == 0 {
            return Err(Error::BranchTracking {
                start: p,
                end: q,
                pole: a,
            });
        }
        let mid = 0.5 * (p + q);
        Ok(rec(p, mid, a, depth - 1)? + rec(mid, q, a, depth - 1)?)
    }
    rec(p, q, a, BRANCH_MAX_DEPTH)
}

/// Increment of the pair primitive log[(x − a)/(x − b)] along p → q.
fn pair_increment(p: Complex64, q: Complex64, pair: &PolePair) -> Result<Complex64> {
    Ok(log_increment(p, q, &pair.0)? - log_increment(p, q, &pair.1)?)
}

/// Integral of the differential along a polyline, via term-wise primitives.
/// No fundamental-domain restriction: period paths legitimately dip into
/// the disks. Summation order is layers → pairs → segments, compensated.
pub fn integrate_polyline<D: Differential + ?Sized>(
    d: &D,
    waypoints: &[Complex64],
) -> Result<Complex64> {
    if waypoints.len() < 2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut acc = CompensatedSum::new();
    for layer in d.layers() {
        for pair in layer {
            for seg in waypoints.windows(2) {
                acc.add(pair_increment(seg[0], seg[1], pair)?);
            }
        }
    }
    Ok(d.scale() * acc.value())
}

/// A polyline whose waypoints stay in the fundamental domain and whose
/// segments do not cross any disk boundary.
#[derive(Debug, Clone)]
pub struct IntegrationPath {
    waypoints: Vec<Complex64>,
}

impl IntegrationPath {
    pub fn new(group: &SchottkyGroup, waypoints: Vec<Complex64>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::Structural(
                "integration path needs at least two waypoints".into(),
            ));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !group.in_fundamental_domain(ComplexPoint::Finite(*w)) {
                return Err(Error::Structural(format!(
                    "waypoint {i} = {w} lies inside a group disk"
                )));
            }
        }
        let scale = group.geometric_scale();
        for seg in waypoints.windows(2) {
            for circle in group.all_circles() {
                let depth = segment_intrusion(seg[0], seg[1], &circle);
                if depth > 1e-9 * scale {
                    return Err(Error::Structural(format!(
                        "segment {} -> {} crosses circle(center {}, radius {})",
                        seg[0], seg[1], circle.center, circle.radius
                    )));
                }
            }
        }
        Ok(IntegrationPath { waypoints })
    }

    pub fn endpoints(&self) -> (Complex64, Complex64) {
        (self.waypoints[0], *self.waypoints.last().unwrap())
    }

    pub fn waypoints(&self) -> &[Complex64] {
        &self.waypoints
    }

    pub fn reversed(&self) -> IntegrationPath {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        IntegrationPath { waypoints }
    }
}

/// How deep the segment p→q cuts into the open disk (0 when it stays out).
fn segment_intrusion(p: Complex64, q: Complex64, circle: &Circle) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    let t = if len2 == 0.0 {
        0.0
    } else {
        let w = circle.center - p;
        ((w.re * d.re + w.im * d.im) / len2).clamp(0.0, 1.0)
    };
    let closest = p + t * d;
    (circle.radius - (closest - circle.center).norm()).max(0.0)
}

/// Term-by-term integration along a validated path.
pub fn integrate<D: Differential + ?Sized>(d: &D, path: &IntegrationPath) -> Result<Complex64> {
    integrate_polyline(d, path.waypoints())
}

/// Clockwise a-periods of a differential over the circles ∂D_1 … ∂D_g, with
/// automatic node doubling. Circles are independent and run in parallel;
/// each value is computed by the same sequential rule regardless of thread
/// count.
pub fn a_periods<D: Differential + Sync + ?Sized>(
    d: &D,
    start_nodes: usize,
) -> Result<(Vec<Complex64>, Vec<QuadratureHistory>)> {
    let group = d.group();
    let results: Result<Vec<_>> = (0..group.genus())
        .into_par_iter()
        .map(|k| {
            circle_quadrature_doubling(
                &group.disks()[k].d,
                start_nodes,
                MAX_NODES,
                crate::quad::DOUBLING_REL_TOL,
                ORIENTATION,
                |u| d.eval(u),
            )
        })
        .collect();
    let mut values = Vec::new();
    let mut histories = Vec::new();
    for (v, h) in results? {
        values.push(v);
        histories.push(h);
    }
    Ok((values, histories))
}

/// a-period matrix of the holomorphic basis: entry (j, s) is the clockwise
/// period of dζ_j over ∂D_s. Converges to the identity as truncation grows.
pub fn a_period_matrix(basis: &HolomorphicBasis) -> Result<Vec<Vec<Complex64>>> {
    (0..basis.genus())
        .map(|j| Ok(a_periods(&basis.differential(j), DEFAULT_NODES)?.0))
        .collect()
}

/// Plans polylines around the group disks. Detours always go to the same
/// canonical side, so paths between the same region of endpoints share a
/// homotopy class.
pub struct PathPlanner<'g> {
    group: &'g SchottkyGroup,
}

impl<'g> PathPlanner<'g> {
    pub fn new(group: &'g SchottkyGroup) -> Self {
        PathPlanner { group }
    }

    /// Effective obstacle radius for a circle: inflated, but relaxed for
    /// endpoints that legitimately sit near or on that circle's boundary.
    fn obstacle_radius(&self, circle: &Circle, endpoints: (Complex64, Complex64)) -> f64 {
        let r = circle.radius * PLANNER_INFLATION;
        let d0 = (endpoints.0 - circle.center).norm();
        let d1 = (endpoints.1 - circle.center).norm();
        r.min(0.995 * d0).min(0.995 * d1)
    }

    /// First obstacle hit by the segment, as (entry parameter, circle,
    /// effective radius).
    fn first_blocker(
        &self,
        p: Complex64,
        q: Complex64,
        endpoints: (Complex64, Complex64),
    ) -> Option<(f64, Circle, f64)> {
        let d = q - p;
        let len2 = d.norm_sqr();
        if len2 == 0.0 {
            return None;
        }
        let mut best: Option<(f64, Circle, f64)> = None;
        for circle in self.group.all_circles() {
            let r = self.obstacle_radius(&circle, endpoints);
            let w = circle.center - p;
            let t = ((w.re * d.re + w.im * d.im) / len2).clamp(0.0, 1.0);
            let closest = p + t * d;
            if (closest - circle.center).norm() < r {
                match best {
                    Some((tb, _, _)) if tb <= t => {}
                    _ => best = Some((t, circle, r)),
                }
            }
        }
        best
    }

    /// Polyline from `from` to `to` (inclusive) avoiding all inflated disks.
    pub fn plan(&self, from: Complex64, to: Complex64) -> Result<Vec<Complex64>> {
        let mut waypoints = vec![from];
        self.plan_rec(from, to, (from, to), PLANNER_MAX_DEPTH, &mut waypoints)?;
        waypoints.push(to);
        waypoints.dedup_by(|a, b| (*a - *b).norm() < 1e-13);
        Ok(waypoints)
    }

    fn plan_rec(
        &self,
        p: Complex64,
        q: Complex64,
        endpoints: (Complex64, Complex64),
        depth: u32,
        out: &mut Vec<Complex64>,
    ) -> Result<()> {
        let Some((_, circle, r)) = self.first_blocker(p, q, endpoints) else {
            return Ok(());
        };
        if depth == 0 {
            return Err(Error::PathPlanning {
                from: endpoints.0,
                to: endpoints.1,
                geometry: self.geometry_dump(),
            });
        }
        // Detour around the blocker, perpendicular to the segment, always
        // on the canonical side (larger imaginary part, ties broken by the
        // real part) so homotopy classes are reproducible.
        let dir = (q - p) / (q - p).norm();
        let normal = Complex64::new(0.0, 1.0) * dir;
        let radius = PLANNER_DETOUR * r;
        let w1 = circle.center + radius * normal;
        let w2 = circle.center - radius * normal;
        let w = if (w1.im, w1.re) >= (w2.im, w2.re) { w1 } else { w2 };
        self.plan_rec(p, w, endpoints, depth - 1, out)?;
        out.push(w);
        self.plan_rec(w, q, endpoints, depth - 1, out)?;
        Ok(())
    }

    fn geometry_dump(&self) -> String {
        self.group
            .all_circles()
            .iter()
            .map(|c| format!("circle(center {}, radius {:.6})", c.center, c.radius))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Deterministic default base point: centered above the whole disk
/// configuration.
pub fn default_base_point(group: &SchottkyGroup) -> Complex64 {
    let circles = group.all_circles();
    let mean = circles.iter().map(|c| c.center).sum::<Complex64>() / circles.len() as f64;
    let span = circles
        .iter()
        .map(|c| (c.center - mean).norm() + c.radius)
        .fold(0.0, f64::max);
    mean + Complex64::new(0.0, 2.0 * span.max(1.0))
}

/// Subdivides each segment into pieces no longer than `h`.
fn subdivide(points: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    for seg in points.windows(2) {
        let len = (seg[1] - seg[0]).norm();
        let pieces = (len / h).ceil().max(1.0) as usize;
        for i in 0..pieces {
            out.push(seg[0] + (i as f64 / pieces as f64) * (seg[1] - seg[0]));
        }
    }
    if let Some(last) = points.last() {
        out.push(*last);
    }
    out
}

/// Waypoints of the canonical b_s path from z0 to S_s(z0).
pub fn b_period_waypoints(
    group: &SchottkyGroup,
    s: usize,
    z0: Complex64,
) -> Result<Vec<Complex64>> {
    group.require_valid()?;
    let planner = PathPlanner::new(group);
    let disk = group.disks()[s].d;
    let disk_prime = group.disks()[s].d_prime;

    let to_entry = (z0 - disk.center) / (z0 - disk.center).norm();
    let entry = disk.center + disk.radius * to_entry;
    let entry_out = disk.center + PLANNER_DETOUR * PLANNER_INFLATION * disk.radius * to_entry;

    let exit = group
        .generator_inverse(s)
        .apply(ComplexPoint::Finite(entry))
        .expect_finite("preimage of the b-path entry point")?;
    let out_dir = (exit - disk_prime.center) / (exit - disk_prime.center).norm();
    let exit_out =
        disk_prime.center + PLANNER_DETOUR * PLANNER_INFLATION * disk_prime.radius * out_dir;

    // Part A: z0 → just outside D_s → radially to ∂D_s.
    let mut waypoints = planner.plan(z0, entry_out)?;
    waypoints.push(entry);

    // Part B: the S_s-image of (exit → just outside D'_s → z0), subdivided
    // before mapping. S_s(exit) = entry closes the chain.
    let mut source = vec![exit, exit_out];
    source.extend(planner.plan(exit_out, z0)?.into_iter().skip(1));
    let source = subdivide(&source, 0.5 * disk_prime.radius);
    for x in source.iter().skip(1) {
        let mapped = group.generator(s).apply(ComplexPoint::Finite(*x));
        waypoints.push(mapped.expect_finite("b-path image waypoint")?);
    }
    waypoints.dedup_by(|a, b| (*a - *b).norm() < 1e-13);
    Ok(waypoints)
}

/// Period matrix with its construction metadata.
#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    entries: Vec<Vec<Complex64>>,
    base_point: Complex64,
    basis_max_word_len: usize,
}

impl PeriodMatrix {
    pub fn genus(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, j: usize, s: usize) -> Complex64 {
        self.entries[j][s]
    }

    pub fn entries(&self) -> &Vec<Vec<Complex64>> {
        &self.entries
    }

    pub fn base_point(&self) -> Complex64 {
        self.base_point
    }

    pub fn basis_max_word_len(&self) -> usize {
        self.basis_max_word_len
    }

    /// Largest |b_js − b_sj|.
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

    /// Largest eigenvalue of the symmetrized imaginary part. Under the
    /// clockwise conventions of this crate it is negative for honest
    /// configurations (Im B is negative definite).
    pub fn max_imag_eigenvalue(&self) -> f64 {
        let g = self.genus();
        let sym = nalgebra::DMatrix::from_fn(g, g, |j, s| {
            0.5 * (self.entries[j][s].im + self.entries[s][j].im)
        });
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Full period matrix: entry (j, s) integrates dζ_j along the canonical
/// b_s path from `z0` to S_s(z0). Entries are independent and computed in
/// parallel with a deterministic reduction.
pub fn period_matrix(basis: &HolomorphicBasis, z0: Complex64) -> Result<PeriodMatrix> {
    let group = basis.group();
    group.require_valid()?;
    if !group.in_fundamental_domain(ComplexPoint::Finite(z0)) {
        return Err(Error::Structural(format!(
            "base point {z0} lies inside a group disk"
        )));
    }
    let g = basis.genus();
    let paths: Result<Vec<_>> = (0..g).map(|s| b_period_waypoints(group, s, z0)).collect();
    let paths = paths?;
    let flat: Result<Vec<Complex64>> = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let (j, s) = (idx / g, idx % g);
            integrate_polyline(&basis.differential(j), &paths[s])
        })
        .collect();
    let flat = flat?;
    let entries = (0..g)
        .map(|j| flat[j * g..(j + 1) * g].to_vec())
        .collect();
    Ok(PeriodMatrix {
        entries,
        base_point: z0,
        basis_max_word_len: basis.differential(0).max_word_len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::series::{ThirdKindDifferential, Truncation};

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Closed-form genus-1 period under this crate's conventions.
    fn genus1_b11(mu: f64) -> Complex64 {
        z(0.0, mu.ln() / TWO_PI)
    }

    #[test]
    fn closed_trivial_path_integrates_to_zero() {
        let group = fixtures::genus1(0.04).unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(4)).unwrap();
        let d = basis.differential(0);
        let p = z(0.2, 2.0);
        let out_and_back = [p, z(0.9, 2.4), p];
        let v = integrate_polyline(&d, &out_and_back).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn reversed_path_negates_the_integral() {
        let group = fixtures::genus2().unwrap();
        let d = ThirdKindDifferential::new(
            &group,
            ComplexPoint::finite(0.0, 0.9),
            ComplexPoint::finite(0.1, -0.8),
            Truncation::MaxWordLen(6),
        )
        .unwrap();
        let path = IntegrationPath::new(&group, vec![z(-2.6, 0.9), z(-1.0, 1.8), z(2.4, 1.1)])
            .unwrap();
        let v = integrate(&d, &path).unwrap();
        let w = integrate(&d, &path.reversed()).unwrap();
        assert!((v + w).norm() < 1e-13);
        assert!(v.norm() > 1e-3, "integral should be nontrivial");
    }

    #[test]
    fn path_validation_rejects_disk_crossings() {
        let group = fixtures::genus2().unwrap();
        // Straight segment through D'_1 (centered at −0.6).
        let bad = IntegrationPath::new(&group, vec![z(-0.6, 1.0), z(-0.6, -1.0)]);
        assert!(bad.is_err());
        // Waypoint inside a disk.
        let bad2 = IntegrationPath::new(&group, vec![z(-0.6, 0.0), z(0.0, 2.0)]);
        assert!(bad2.is_err());
    }

    #[test]
    fn genus1_period_matches_cross_ratio_oracle() {
        for mu in [0.04, 0.05, 0.09] {
            let group = fixtures::genus1(mu).unwrap();
            let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();

            // Oracle: the cross ratio (Sz, z; A, B) equals the multiplier.
            let s = group.generator(0);
            let z0 = default_base_point(&group);
            let sz0 = s.apply(ComplexPoint::Finite(z0)).as_finite().unwrap();
            let (a, b) = (z(1.0, 0.0), z(-1.0, 0.0));
            let cross = ((sz0 - a) * (z0 - b)) / ((sz0 - b) * (z0 - a));
            assert!(
                (cross - z(mu, 0.0)).norm() < 1e-12,
                "cross ratio {cross} vs multiplier {mu}"
            );

            let pm = period_matrix(&basis, z0).unwrap();
            let expected = genus1_b11(mu);
            assert!(
                (pm.entry(0, 0) - expected).norm() < 1e-9,
                "mu = {mu}: b11 = {} vs closed form {expected}",
                pm.entry(0, 0)
            );
        }
    }

    #[test]
    fn holomorphic_a_periods_are_kronecker_delta() {
        let group = fixtures::genus2().unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
        let matrix = a_period_matrix(&basis).unwrap();
        for j in 0..2 {
            for s in 0..2 {
                let expected = if j == s { 1.0 } else { 0.0 };
                assert!(
                    (matrix[j][s] - z(expected, 0.0)).norm() < 1e-8,
                    "a-period ({j},{s}) = {}",
                    matrix[j][s]
                );
            }
        }
    }

    #[test]
    fn third_kind_a_periods_vanish() {
        let group = fixtures::genus2().unwrap();
        let d = ThirdKindDifferential::new(
            &group,
            ComplexPoint::finite(0.0, 0.9),
            ComplexPoint::finite(0.1, -0.8),
            Truncation::MaxWordLen(8),
        )
        .unwrap();
        let (values, histories) = a_periods(&d, DEFAULT_NODES).unwrap();
        let sum: Complex64 = values.iter().sum();
        for (k, v) in values.iter().enumerate() {
            assert!(v.norm() < 1e-10, "a-period {k} = {v}");
            assert!(histories[k].converged);
        }
        assert!(sum.norm() < 1e-10);
    }

    #[test]
    fn closed_polyline_contour_matches_quadrature_a_period() {
        let group = fixtures::genus2().unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
        let d = basis.differential(0);
        let circle = group.disks()[0].d;

        // Clockwise octagon around D_1, strictly outside the other disks.
        let r = 1.35 * circle.radius;
        let mut pts: Vec<Complex64> = (0..=8)
            .map(|i| {
                let theta = -TWO_PI * (i as f64) / 8.0;
                circle.center + r * z(theta.cos(), theta.sin())
            })
            .collect();
        pts[8] = pts[0];
        let contour = integrate_polyline(&d, &pts).unwrap();
        let (aperiods, _) = a_periods(&d, DEFAULT_NODES).unwrap();
        assert!(
            (contour - aperiods[0]).norm() < 1e-8,
            "contour {contour} vs quadrature {}",
            aperiods[0]
        );
    }

    #[test]
    fn period_matrix_symmetry_and_base_point_independence() {
        let group = fixtures::genus2().unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
        let z0 = default_base_point(&group);
        let pm = period_matrix(&basis, z0).unwrap();
        assert!(
            pm.symmetry_residual() < 1e-7,
            "symmetry residual {}",
            pm.symmetry_residual()
        );

        let z1 = z0 + z(0.7, -0.9);
        let pm2 = period_matrix(&basis, z1).unwrap();
        for j in 0..2 {
            for s in 0..2 {
                assert!(
                    (pm.entry(j, s) - pm2.entry(j, s)).norm() < 1e-8,
                    "entry ({j},{s}) moved with the base point: {} vs {}",
                    pm.entry(j, s),
                    pm2.entry(j, s)
                );
            }
        }

        // Realized definiteness convention: Im B negative definite.
        assert!(pm.max_imag_eigenvalue() < 0.0);
    }

    #[test]
    fn genus1_imag_part_is_negative() {
        let group = fixtures::genus1(0.04).unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(6)).unwrap();
        let pm = period_matrix(&basis, default_base_point(&group)).unwrap();
        assert!(pm.entry(0, 0).im < 0.0);
        assert!(pm.max_imag_eigenvalue() < 0.0);
    }

    #[test]
    fn planner_goes_straight_when_clear_and_detours_above() {
        let group = fixtures::genus2().unwrap();
        let planner = PathPlanner::new(&group);
        let clear = planner.plan(z(-3.0, 2.0), z(3.0, 2.0)).unwrap();
        assert_eq!(clear.len(), 2);

        // Segment along the real axis is blocked by all four disks; every
        // detour waypoint must sit on the canonical (upper) side.
        let detoured = planner.plan(z(-3.5, 0.0), z(3.5, 0.0)).unwrap();
        assert!(detoured.len() > 2);
        for w in &detoured[1..detoured.len() - 1] {
            assert!(w.im > 0.0, "detour below the axis: {w}");
        }
        for seg in detoured.windows(2) {
            for c in group.all_circles() {
                assert!(
                    segment_intrusion(seg[0], seg[1], &c) < 1e-12,
                    "planned segment cuts a disk"
                );
            }
        }
    }

    #[test]
    fn planner_reports_blocked_geometry_with_dump() {
        // A tall wall of disks: every canonical (upward) detour lands inside
        // the next disk, so the recursion depth runs out. The group is
        // geometrically invalid, which the planner does not care about.
        let gen = fixtures::genus1(0.04).unwrap().generators()[0];
        let disks: Vec<crate::group::DiskPair> = (0..4)
            .map(|i| {
                let y = 4.4 * i as f64;
                crate::group::DiskPair::new(
                    Circle::new(z(0.0, y), 1.0),
                    Circle::new(z(0.0, y + 2.2), 1.0),
                )
                .unwrap()
            })
            .collect();
        let wall = crate::group::SchottkyGroup::new(vec![gen; 4], disks).unwrap();
        let planner = PathPlanner::new(&wall);
        let err = planner.plan(z(-4.0, 0.0), z(4.0, 0.0)).unwrap_err();
        match err {
            Error::PathPlanning { geometry, .. } => {
                assert!(geometry.contains("circle"), "geometry dump missing");
            }
            other => panic!("expected PathPlanning, got {other}"),
        }
    }

    #[test]
    fn b_path_starts_and_ends_correctly() {
        let group = fixtures::genus2().unwrap();
        let z0 = default_base_point(&group);
        for s in 0..2 {
            let path = b_period_waypoints(&group, s, z0).unwrap();
            assert!((path[0] - z0).norm() < 1e-12);
            let target = group
                .generator(s)
                .apply(ComplexPoint::Finite(z0))
                .as_finite()
                .unwrap();
            assert!(
                (path.last().unwrap() - target).norm() < 1e-12,
                "s = {s}: path ends at {} instead of {target}",
                path.last().unwrap()
            );
        }
    }
}
