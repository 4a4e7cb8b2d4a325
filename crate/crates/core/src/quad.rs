//! Contour quadrature on circles: spectrally accurate trapezoid rule with
//! node doubling, plus the single orientation constant every boundary
//! integral in the crate obeys.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moebius::Circle;

/// Traversal direction for boundary-circle integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    Counterclockwise,
}

impl Orientation {
    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Clockwise => Orientation::Counterclockwise,
            Orientation::Counterclockwise => Orientation::Clockwise,
        }
    }
}

/// Global orientation convention: every boundary-circle integral in this
/// crate is taken clockwise. Tests may thread the flipped value through the
/// lower-level entry points; production code always uses this constant.
pub const ORIENTATION: Orientation = Orientation::Clockwise;

/// Default node count for circle quadrature.
pub const DEFAULT_NODES: usize = 256;
/// Hard cap for automatic node doubling.
pub const MAX_NODES: usize = 4096;
/// Default relative tolerance for node-doubling convergence.
pub const DOUBLING_REL_TOL: f64 = 1e-10;

/// Neumaier-compensated complex accumulator; summation order is the
/// caller's contract, this only removes rounding drift.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: Complex64) {
        let t = self.sum + term;
        let comp_re = if self.sum.re.abs() >= term.re.abs() {
            (self.sum.re - t.re) + term.re
        } else {
            (term.re - t.re) + self.sum.re
        };
        let comp_im = if self.sum.im.abs() >= term.im.abs() {
            (self.sum.im - t.im) + term.im
        } else {
            (term.im - t.im) + self.sum.im
        };
        self.comp += Complex64::new(comp_re, comp_im);
        self.sum = t;
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Equispaced quadrature nodes on a circle with the du/dθ factors for the
/// given orientation. Node j sits at angle ∓2πj/n.
pub fn circle_nodes(circle: &Circle, n: usize, orientation: Orientation) -> Vec<(Complex64, Complex64)> {
    let sign = match orientation {
        Orientation::Clockwise => -1.0,
        Orientation::Counterclockwise => 1.0,
    };
    (0..n)
        .map(|j| {
            let theta = sign * 2.0 * std::f64::consts::PI * (j as f64) / (n as f64);
            let e = Complex64::new(theta.cos(), theta.sin());
            let u = circle.center + circle.radius * e;
            let du = Complex64::new(0.0, sign) * circle.radius * e;
            (u, du)
        })
        .collect()
}

/// N-node trapezoid approximation of ∮ f(u) du over the circle. For
/// integrands analytic in an annulus around the circle the error decays
/// geometrically in N.
pub fn circle_quadrature<F>(
    circle: &Circle,
    n: usize,
    orientation: Orientation,
    mut f: F,
) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut acc = CompensatedSum::new();
    for (u, du) in circle_nodes(circle, n, orientation) {
        acc.add(f(u)? * du);
    }
    let h = 2.0 * std::f64::consts::PI / (n as f64);
    Ok(acc.value() * h)
}

/// Record of a node-doubling run.
#[derive(Debug, Clone)]
pub struct QuadratureHistory {
    pub nodes: Vec<usize>,
    pub values: Vec<Complex64>,
    /// |P(2N) − P(N)| for consecutive levels.
    pub changes: Vec<f64>,
    pub converged: bool,
}

impl QuadratureHistory {
    pub fn final_nodes(&self) -> usize {
        *self.nodes.last().unwrap()
    }
}

/// Trapezoid quadrature with automatic node doubling until the value moves
/// by less than `rel_tol` relatively (with an absolute floor scaled from
/// the integrand magnitude, so exact zeros converge), or `max_nodes` is hit.
pub fn circle_quadrature_doubling<F>(
    circle: &Circle,
    start_nodes: usize,
    max_nodes: usize,
    rel_tol: f64,
    orientation: Orientation,
    mut f: F,
) -> Result<(Complex64, QuadratureHistory)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut n = start_nodes.max(4);
    let mut magnitude: f64 = 0.0;
    let mut eval = |u: Complex64, du: Complex64, mag: &mut f64| -> Result<Complex64> {
        let v = f(u)?;
        *mag = mag.max(v.norm() * du.norm());
        Ok(v * du)
    };

    let mut samples: Vec<Complex64> = Vec::with_capacity(n);
    for (u, du) in circle_nodes(circle, n, orientation) {
        samples.push(eval(u, du, &mut magnitude)?);
    }
    let trapezoid = |vals: &[Complex64]| -> Complex64 {
        let mut acc = CompensatedSum::new();
        for v in vals {
            acc.add(*v);
        }
        acc.value() * (2.0 * std::f64::consts::PI / vals.len() as f64)
    };

    let mut history = QuadratureHistory {
        nodes: vec![n],
        values: vec![trapezoid(&samples)],
        changes: Vec::new(),
        converged: false,
    };

    while n < max_nodes {
        // Interleave: new nodes are the midpoints of the old grid.
        let doubled = circle_nodes(circle, 2 * n, orientation);
        let mut merged = Vec::with_capacity(2 * n);
        for (j, node) in doubled.into_iter().enumerate() {
            if j % 2 == 0 {
                merged.push(samples[j / 2]);
            } else {
                merged.push(eval(node.0, node.1, &mut magnitude)?);
            }
        }
        samples = merged;
        n *= 2;
        let value = trapezoid(&samples);
        let prev = *history.values.last().unwrap();
        let change = (value - prev).norm();
        history.nodes.push(n);
        history.values.push(value);
        history.changes.push(change);
        let circumference = 2.0 * std::f64::consts::PI * circle.radius;
        let floor = 1e-13 * magnitude * circumference + 1e-300;
        if change <= rel_tol * value.norm() + floor {
            history.converged = true;
            return Ok((value, history));
        }
    }

    let last_change = history.changes.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::QuadratureNonConvergence {
        center: circle.center,
        radius: circle.radius,
        relative_change: last_change
            / history.values.last().map(|v| v.norm().max(1e-300)).unwrap(),
        nodes: n,
    })
}

/// Vector-valued variant of [`circle_quadrature_doubling`]: integrates all
/// components of `f` simultaneously, doubling until every component has
/// settled. Used where several integrands share expensive evaluations
/// (e.g. all period-variation entries on one circle).
pub fn circle_quadrature_doubling_vec<F>(
    circle: &Circle,
    start_nodes: usize,
    max_nodes: usize,
    rel_tol: f64,
    orientation: Orientation,
    mut f: F,
) -> Result<(Vec<Complex64>, QuadratureHistory)>
where
    F: FnMut(Complex64) -> Result<Vec<Complex64>>,
{
    let mut n = start_nodes.max(4);
    let mut magnitude: f64 = 0.0;
    let mut eval = |u: Complex64, du: Complex64, mag: &mut f64| -> Result<Vec<Complex64>> {
        let vs = f(u)?;
        for v in &vs {
            *mag = mag.max(v.norm() * du.norm());
        }
        Ok(vs.into_iter().map(|v| v * du).collect())
    };

    let mut samples: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (u, du) in circle_nodes(circle, n, orientation) {
        samples.push(eval(u, du, &mut magnitude)?);
    }
    let dim = samples.first().map_or(0, |s| s.len());
    let trapezoid = |rows: &[Vec<Complex64>]| -> Vec<Complex64> {
        let h = 2.0 * std::f64::consts::PI / rows.len() as f64;
        (0..dim)
            .map(|c| {
                let mut acc = CompensatedSum::new();
                for row in rows {
                    acc.add(row[c]);
                }
                acc.value() * h
            })
            .collect()
    };

    let mut value = trapezoid(&samples);
    let mut history = QuadratureHistory {
        nodes: vec![n],
        values: vec![value.iter().sum()],
        changes: Vec::new(),
        converged: false,
    };

    while n < max_nodes {
        let doubled = circle_nodes(circle, 2 * n, orientation);
        let mut merged = Vec::with_capacity(2 * n);
        for (j, node) in doubled.into_iter().enumerate() {
            if j % 2 == 0 {
                merged.push(std::mem::take(&mut samples[j / 2]));
            } else {
                merged.push(eval(node.0, node.1, &mut magnitude)?);
            }
        }
        samples = merged;
        n *= 2;
        let next = trapezoid(&samples);
        let change = next
            .iter()
            .zip(&value)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        let worst = next.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
        value = next;
        history.nodes.push(n);
        history.values.push(value.iter().sum());
        history.changes.push(change);
        let circumference = 2.0 * std::f64::consts::PI * circle.radius;
        let floor = 1e-13 * magnitude * circumference + 1e-300;
        if change <= rel_tol * worst + floor {
            history.converged = true;
            return Ok((value, history));
        }
    }

    let last_change = history.changes.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::QuadratureNonConvergence {
        center: circle.center,
        radius: circle.radius,
        relative_change: last_change,
        nodes: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clockwise_residue_of_simple_pole() {
        // ∮ du/(u − p) clockwise is −2πi when p is enclosed.
        let circle = Circle::new(Complex64::new(0.5, 0.2), 1.0);
        let p = Complex64::new(0.3, 0.1);
        let v = circle_quadrature(&circle, 64, Orientation::Clockwise, |u| Ok(1.0 / (u - p)))
            .unwrap();
        let expected = Complex64::new(0.0, -2.0 * std::f64::consts::PI);
        assert!((v - expected).norm() < 1e-12);

        // Flipping the orientation flips the sign.
        let w = circle_quadrature(&circle, 64, Orientation::Counterclockwise, |u| {
            Ok(1.0 / (u - p))
        })
        .unwrap();
        assert!((w + expected).norm() < 1e-12);
    }

    #[test]
    fn pole_outside_integrates_to_zero() {
        let circle = Circle::new(Complex64::new(0.0, 0.0), 1.0);
        let p = Complex64::new(3.0, 0.5);
        let v = circle_quadrature(&circle, 64, ORIENTATION, |u| Ok(1.0 / (u - p))).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn doubling_converges_and_records_history() {
        let circle = Circle::new(Complex64::new(0.0, 0.0), 1.0);
        let p = Complex64::new(0.65, 0.0); // pole fairly close to the contour
        let (v, hist) = circle_quadrature_doubling(
            &circle,
            8,
            MAX_NODES,
            1e-12,
            Orientation::Clockwise,
            |u| Ok(1.0 / (u - p)),
        )
        .unwrap();
        assert!(hist.converged);
        assert!(hist.nodes.len() > 1);
        let expected = Complex64::new(0.0, -2.0 * std::f64::consts::PI);
        assert!((v - expected).norm() < 1e-10);
    }

    #[test]
    fn doubling_accepts_identically_zero_integrands() {
        let circle = Circle::new(Complex64::new(0.0, 0.0), 2.0);
        let (v, hist) = circle_quadrature_doubling(
            &circle,
            8,
            64,
            1e-12,
            ORIENTATION,
            |_| Ok(Complex64::new(0.0, 0.0)),
        )
        .unwrap();
        assert!(hist.converged);
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }
}
