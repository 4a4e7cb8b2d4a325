//! Newton's method on Schottky moduli: recover generator parameters from
//! target function-theoretic values (period entries, Abelian integrals),
//! with the analytic variational formula supplying the Jacobian columns.
//!
//! The solver works over the reals: complex parameters split into real
//! pairs and complex residuals into real/imaginary components. Gauge fixing
//! is the problem author's job (pin enough coordinates); the solver detects
//! rank deficiency and reports it instead of silently diverging.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd::{fd_directional, FdConfig};
use crate::group::SchottkyGroup;
use crate::integrals::{integrate_polyline, period_matrix, PathPlanner};
use crate::moebius::{Circle, Mat2, MoebiusMap};
use crate::series::{HolomorphicBasis, Truncation};
use crate::variational::{
    fixed_point_parameter_directions, gauge_conjugation_direction, vary_integral,
    vary_period_matrix, PerturbationDirection,
};

/// Condition-number threshold above which the Jacobian counts as rank
/// deficient.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Real or imaginary component selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    fn unit(self) -> Complex64 {
        match self {
            Part::Re => Complex64::new(1.0, 0.0),
            Part::Im => Complex64::new(0.0, 1.0),
        }
    }

    fn of(self, v: Complex64) -> f64 {
        match self {
            Part::Re => v.re,
            Part::Im => v.im,
        }
    }
}

/// Fixed-point/multiplier coordinate selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpCoord {
    Attracting,
    Repelling,
    Multiplier,
}

/// A parameterization of generator space by a real vector, with analytic
/// tangent directions for the Jacobian.
pub trait Parameterization: Sync {
    fn dim(&self) -> usize;
    /// Parameter vector describing the base configuration.
    fn initial(&self) -> Vec<f64>;
    /// The group realized at `p` (validated; failures are step rejections).
    fn group(&self, p: &[f64]) -> Result<SchottkyGroup>;
    /// Tangent direction ∂(generators)/∂p_i at `p`.
    fn direction(&self, p: &[f64], i: usize) -> Result<PerturbationDirection>;
    fn describe(&self, i: usize) -> String;
}

/// Parameters are selected real components of per-generator
/// (attracting, repelling, multiplier) coordinates; the stored generator
/// representative is the fixed-point constructor's matrix, so the analytic
/// parameter directions apply verbatim.
#[derive(Debug, Clone)]
pub struct FixedPointMultiplierParams {
    base: Vec<(Complex64, Complex64, Complex64)>,
    d_primes: Vec<Circle>,
    free: Vec<(usize, FpCoord, Part)>,
}

impl FixedPointMultiplierParams {
    pub fn new(
        base: Vec<(Complex64, Complex64, Complex64)>,
        d_primes: Vec<Circle>,
        free: Vec<(usize, FpCoord, Part)>,
    ) -> Result<Self> {
        if base.len() != d_primes.len() {
            return Err(Error::Structural(
                "triples and disks must have equal length".into(),
            ));
        }
        for (g, _, _) in &free {
            if *g >= base.len() {
                return Err(Error::Structural(format!(
                    "free coordinate refers to generator {g} of {}",
                    base.len()
                )));
            }
        }
        Ok(FixedPointMultiplierParams {
            base,
            d_primes,
            free,
        })
    }

    fn triples_at(&self, p: &[f64]) -> Vec<(Complex64, Complex64, Complex64)> {
        let mut triples = self.base.clone();
        for (value, (g, coord, part)) in p.iter().zip(&self.free) {
            let slot = match coord {
                FpCoord::Attracting => &mut triples[*g].0,
                FpCoord::Repelling => &mut triples[*g].1,
                FpCoord::Multiplier => &mut triples[*g].2,
            };
            match part {
                Part::Re => slot.re = *value,
                Part::Im => slot.im = *value,
            }
        }
        triples
    }
}

impl Parameterization for FixedPointMultiplierParams {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn initial(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|(g, coord, part)| {
                let t = self.base[*g];
                let v = match coord {
                    FpCoord::Attracting => t.0,
                    FpCoord::Repelling => t.1,
                    FpCoord::Multiplier => t.2,
                };
                part.of(v)
            })
            .collect()
    }

    fn group(&self, p: &[f64]) -> Result<SchottkyGroup> {
        SchottkyGroup::from_fixed_point_data(&self.triples_at(p), &self.d_primes)
    }

    fn direction(&self, p: &[f64], i: usize) -> Result<PerturbationDirection> {
        let (g, coord, part) = self.free[i];
        let (att, rep, mu) = self.triples_at(p)[g];
        let (d_att, d_rep, d_mu) = fixed_point_parameter_directions(att, rep, mu);
        let d = match coord {
            FpCoord::Attracting => d_att,
            FpCoord::Repelling => d_rep,
            FpCoord::Multiplier => d_mu,
        };
        let mut deltas = vec![Mat2::zero(); self.base.len()];
        deltas[g] = d.scale(part.unit());
        PerturbationDirection::new(deltas)
    }

    fn describe(&self, i: usize) -> String {
        let (g, coord, part) = self.free[i];
        format!("gen{}.{:?}.{:?}", g + 1, coord, part)
    }
}

/// Parameters are selected real components of raw generator matrix entries.
#[derive(Debug, Clone)]
pub struct MatrixEntryParams {
    base: Vec<Mat2>,
    d_primes: Vec<Circle>,
    free: Vec<(usize, usize, usize, Part)>,
}

impl MatrixEntryParams {
    pub fn new(
        base: Vec<Mat2>,
        d_primes: Vec<Circle>,
        free: Vec<(usize, usize, usize, Part)>,
    ) -> Result<Self> {
        if base.len() != d_primes.len() {
            return Err(Error::Structural(
                "matrices and disks must have equal length".into(),
            ));
        }
        Ok(MatrixEntryParams {
            base,
            d_primes,
            free,
        })
    }

    pub fn all_entries_of(group: &SchottkyGroup) -> Vec<(usize, usize, usize, Part)> {
        let mut free = Vec::new();
        for g in 0..group.genus() {
            for row in 0..2 {
                for col in 0..2 {
                    free.push((g, row, col, Part::Re));
                    free.push((g, row, col, Part::Im));
                }
            }
        }
        free
    }

    fn matrices_at(&self, p: &[f64]) -> Vec<Mat2> {
        let mut ms = self.base.clone();
        for (value, (g, row, col, part)) in p.iter().zip(&self.free) {
            match part {
                Part::Re => ms[*g].e[*row][*col].re = *value,
                Part::Im => ms[*g].e[*row][*col].im = *value,
            }
        }
        ms
    }
}

impl Parameterization for MatrixEntryParams {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn initial(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|(g, row, col, part)| part.of(self.base[*g].e[*row][*col]))
            .collect()
    }

    fn group(&self, p: &[f64]) -> Result<SchottkyGroup> {
        let generators = self
            .matrices_at(p)
            .into_iter()
            .map(MoebiusMap::from_matrix)
            .collect::<Result<Vec<_>>>()?;
        SchottkyGroup::from_generators_and_d_primes(generators, &self.d_primes)
    }

    fn direction(&self, _p: &[f64], i: usize) -> Result<PerturbationDirection> {
        let (g, row, col, part) = self.free[i];
        Ok(PerturbationDirection::single_entry(
            self.base.len(),
            g,
            row,
            col,
            part.unit(),
        ))
    }

    fn describe(&self, i: usize) -> String {
        let (g, row, col, part) = self.free[i];
        format!("gen{}.c{}{}.{:?}", g + 1, row + 1, col + 1, part)
    }
}

/// Wraps a parameterization with extra pure-gauge coordinates that
/// conjugate the whole group by I + t·X. Periods do not move along them,
/// so problems over this parameterization are rank deficient by
/// construction — used to test the solver's deficiency reporting.
pub struct ConjugationAugmented<P: Parameterization> {
    pub inner: P,
    pub gauge_matrices: Vec<Mat2>,
}

impl<P: Parameterization> Parameterization for ConjugationAugmented<P> {
    fn dim(&self) -> usize {
        self.inner.dim() + self.gauge_matrices.len()
    }

    fn initial(&self) -> Vec<f64> {
        let mut p = self.inner.initial();
        p.extend(std::iter::repeat(0.0).take(self.gauge_matrices.len()));
        p
    }

    fn group(&self, p: &[f64]) -> Result<SchottkyGroup> {
        let (inner_p, gauge_p) = p.split_at(self.inner.dim());
        let mut group = self.inner.group(inner_p)?;
        for (t, x) in gauge_p.iter().zip(&self.gauge_matrices) {
            if *t != 0.0 {
                let conj = MoebiusMap::from_matrix(
                    Mat2::identity().add(&x.scale(Complex64::new(*t, 0.0))),
                )?;
                group = group.conjugated(&conj)?;
            }
        }
        Ok(group)
    }

    fn direction(&self, p: &[f64], i: usize) -> Result<PerturbationDirection> {
        if i < self.inner.dim() {
            self.inner.direction(&p[..self.inner.dim()], i)
        } else {
            let group = self.group(p)?;
            Ok(gauge_conjugation_direction(
                &group,
                &self.gauge_matrices[i - self.inner.dim()],
            ))
        }
    }

    fn describe(&self, i: usize) -> String {
        if i < self.inner.dim() {
            self.inner.describe(i)
        } else {
            format!("gauge{}", i - self.inner.dim() + 1)
        }
    }
}

/// A single target quantity.
#[derive(Debug, Clone, Copy)]
pub enum TargetValue {
    /// Entry (j, s) of the period matrix.
    PeriodEntry { j: usize, s: usize },
    /// ∫ from `from` to `to` of the holomorphic basis element `eta_index`,
    /// along the planner's canonical path.
    AbelianIntegral {
        eta_index: usize,
        from: Complex64,
        to: Complex64,
    },
}

/// Which real components of the complex residuals enter the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parts {
    Both,
    ImagOnly,
}

/// The residual map: computed target values minus prescribed ones,
/// realified. Truncation and quadrature settings are fixed here so every
/// Newton evaluation sees the same discretization.
#[derive(Debug, Clone)]
pub struct ResidualSpec {
    pub targets: Vec<(TargetValue, Complex64)>,
    pub parts: Parts,
    pub truncation: Truncation,
    pub nodes: usize,
}

impl ResidualSpec {
    pub fn real_dim(&self) -> usize {
        match self.parts {
            Parts::Both => 2 * self.targets.len(),
            Parts::ImagOnly => self.targets.len(),
        }
    }

    fn needs_period_matrix(&self) -> bool {
        self.targets
            .iter()
            .any(|(t, _)| matches!(t, TargetValue::PeriodEntry { .. }))
    }

    /// Complex values of all targets at `group`.
    pub fn computed(&self, group: &SchottkyGroup) -> Result<Vec<Complex64>> {
        let basis = HolomorphicBasis::new(group, self.truncation)?;
        let pm = if self.needs_period_matrix() {
            Some(period_matrix(
                &basis,
                crate::integrals::default_base_point(group),
            )?)
        } else {
            None
        };
        self.targets
            .iter()
            .map(|(t, _)| match t {
                TargetValue::PeriodEntry { j, s } => Ok(pm.as_ref().unwrap().entry(*j, *s)),
                TargetValue::AbelianIntegral {
                    eta_index,
                    from,
                    to,
                } => {
                    let planner = PathPlanner::new(group);
                    let path = planner.plan(*from, *to)?;
                    integrate_polyline(&basis.differential(*eta_index), &path)
                }
            })
            .collect()
    }

    fn realify(&self, values: &[Complex64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.real_dim());
        for ((_, target), v) in self.targets.iter().zip(values) {
            let r = target - v;
            match self.parts {
                Parts::Both => {
                    out.push(r.re);
                    out.push(r.im);
                }
                Parts::ImagOnly => out.push(r.im),
            }
        }
        out
    }

    /// Realified residual vector target − computed.
    pub fn residual(&self, group: &SchottkyGroup) -> Result<Vec<f64>> {
        Ok(self.realify(&self.computed(group)?))
    }

    /// Complex variations of all targets along `dir` (the Jacobian column
    /// before realification and sign).
    fn variations(
        &self,
        group: &SchottkyGroup,
        dir: &PerturbationDirection,
    ) -> Result<Vec<Complex64>> {
        let basis = HolomorphicBasis::new(group, self.truncation)?;
        let pv = if self.needs_period_matrix() {
            Some(vary_period_matrix(&basis, dir, self.nodes)?)
        } else {
            None
        };
        self.targets
            .iter()
            .map(|(t, _)| match t {
                TargetValue::PeriodEntry { j, s } => Ok(pv.as_ref().unwrap().entry(*j, *s)),
                TargetValue::AbelianIntegral {
                    eta_index,
                    from,
                    to,
                } => Ok(vary_integral(
                    &basis.differential(*eta_index),
                    crate::moebius::ComplexPoint::Finite(*from),
                    crate::moebius::ComplexPoint::Finite(*to),
                    dir,
                    self.truncation,
                    self.nodes,
                )?
                .value),
            })
            .collect()
    }
}

/// A moduli inversion problem: parameterization plus residual map.
pub struct ModuliProblem<P: Parameterization> {
    pub parameterization: P,
    pub residual: ResidualSpec,
}

/// Jacobian of the residual (rows: realified residual components, columns:
/// parameters) with a condition estimate from its singular values.
pub fn jacobian<P: Parameterization>(
    problem: &ModuliProblem<P>,
    p: &[f64],
) -> Result<(nalgebra::DMatrix<f64>, f64)> {
    let group = problem.parameterization.group(p)?;
    group.require_valid()?;
    let n = problem.parameterization.dim();
    let m = problem.residual.real_dim();

    let columns: Result<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dir = problem.parameterization.direction(p, i)?;
            let deltas = problem.residual.variations(&group, &dir)?;
            // residual = target − computed ⇒ ∂residual/∂p = −δ(computed).
            let mut col = Vec::with_capacity(m);
            for d in deltas {
                match problem.residual.parts {
                    Parts::Both => {
                        col.push(-d.re);
                        col.push(-d.im);
                    }
                    Parts::ImagOnly => col.push(-d.im),
                }
            }
            Ok(col)
        })
        .collect();
    let columns = columns?;
    let j = nalgebra::DMatrix::from_fn(m, n, |r, c| columns[c][r]);

    let svd = j.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok((j, condition))
}

/// Max discrepancy between the analytic Jacobian and a finite-difference
/// one, relative to the largest Jacobian entry.
pub fn jacobian_fd_discrepancy<P: Parameterization>(
    problem: &ModuliProblem<P>,
    p: &[f64],
    cfg: &FdConfig,
) -> Result<f64> {
    let group = problem.parameterization.group(p)?;
    let (j, _) = jacobian(problem, p)?;
    let scale = j.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);

    let mut worst = 0.0_f64;
    for i in 0..problem.parameterization.dim() {
        let dir = problem.parameterization.direction(p, i)?;
        for (t_idx, (target, _)) in problem.residual.targets.iter().enumerate() {
            let target = *target;
            let spec = problem.residual.clone();
            let f = move |g: &SchottkyGroup| -> Result<Complex64> {
                let values = ResidualSpec {
                    targets: vec![(target, Complex64::new(0.0, 0.0))],
                    ..spec.clone()
                }
                .computed(g)?;
                Ok(values[0])
            };
            let fd = fd_directional(f, &group, &dir, cfg)?;
            let (rows, parts): (Vec<usize>, Vec<Part>) = match problem.residual.parts {
                Parts::Both => (vec![2 * t_idx, 2 * t_idx + 1], vec![Part::Re, Part::Im]),
                Parts::ImagOnly => (vec![t_idx], vec![Part::Im]),
            };
            for (row, part) in rows.into_iter().zip(parts) {
                let analytic = j[(row, i)];
                let from_fd = -part.of(fd.value);
                worst = worst.max((analytic - from_fd).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// One accepted Newton iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub step_norm: f64,
    pub condition: f64,
    pub halvings: usize,
}

/// Full solve trace: residual norms are recorded for every accepted step.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl SolveTrace {
    pub fn residual_norms(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.residual_norm).collect()
    }
}

/// Successful solve: final group, parameters, and the trace.
#[derive(Debug)]
pub struct SolveSuccess {
    pub group: SchottkyGroup,
    pub params: Vec<f64>,
    pub trace: SolveTrace,
}

/// Failed solve, with the trace preserved for diagnosis.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub trace: SolveTrace,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} accepted iterations)",
            self.error,
            self.trace.iterations.len().saturating_sub(1)
        )
    }
}

impl std::error::Error for SolveFailure {}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration on the moduli problem. Backtracking halves the
/// step until the residual norm decreases (at most 20 halvings); every
/// trial group is re-validated and invalid ones reject the step.
pub fn newton_solve<P: Parameterization>(
    problem: &ModuliProblem<P>,
    max_iter: usize,
    tol: f64,
) -> std::result::Result<SolveSuccess, Box<SolveFailure>> {
    let mut trace = SolveTrace::default();
    let fail = |error: Error, trace: SolveTrace| {
        Err(Box::new(SolveFailure { error, trace }))
    };

    let mut p = problem.parameterization.initial();
    let initial_group = match problem.parameterization.group(&p) {
        Ok(g) => g,
        Err(e) => return fail(e, trace),
    };
    if let Err(e) = initial_group.require_valid() {
        return fail(e, trace);
    }
    let mut r = match problem.residual.residual(&initial_group) {
        Ok(r) => r,
        Err(e) => return fail(e, trace),
    };
    let mut group = initial_group;
    let mut r_norm = norm(&r);
    trace.iterations.push(IterationRecord {
        params: p.clone(),
        residual_norm: r_norm,
        step_norm: 0.0,
        condition: f64::NAN,
        halvings: 0,
    });

    for iter in 0..max_iter {
        if r_norm < tol {
            trace.converged = true;
            return Ok(SolveSuccess {
                group,
                params: p,
                trace,
            });
        }

        let (j, condition) = match jacobian(problem, &p) {
            Ok(jc) => jc,
            Err(e) => return fail(e, trace),
        };
        if condition > CONDITION_LIMIT {
            return fail(Error::RankDeficient { condition }, trace);
        }

        // Solve J·Δ = −r (least squares when non-square).
        let rhs = nalgebra::DVector::from_iterator(r.len(), r.iter().map(|x| -x));
        let delta = match j.clone().svd(true, true).solve(&rhs, 1e-14) {
            Ok(d) => d,
            Err(msg) => return fail(Error::Structural(msg.to_string()), trace),
        };

        // Backtracking line search.
        let mut accepted = false;
        let mut alpha = 1.0_f64;
        for halving in 0..=20 {
            let candidate: Vec<f64> = p
                .iter()
                .zip(delta.iter())
                .map(|(x, d)| x + alpha * d)
                .collect();
            let trial = problem
                .parameterization
                .group(&candidate)
                .ok()
                .filter(|g| g.is_valid());
            if let Some(trial_group) = trial {
                if let Ok(trial_r) = problem.residual.residual(&trial_group) {
                    let trial_norm = norm(&trial_r);
                    if trial_norm < r_norm {
                        let step_norm = alpha * delta.norm();
                        p = candidate;
                        group = trial_group;
                        r = trial_r;
                        r_norm = trial_norm;
                        trace.iterations.push(IterationRecord {
                            params: p.clone(),
                            residual_norm: r_norm,
                            step_norm,
                            condition,
                            halvings: halving,
                        });
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return fail(
                Error::StepBlocked {
                    iteration: iter,
                    detail: "no residual decrease after 20 halvings (or all trial groups invalid)"
                        .into(),
                },
                trace,
            );
        }
    }

    if r_norm < tol {
        trace.converged = true;
        return Ok(SolveSuccess {
            group,
            params: p,
            trace,
        });
    }
    let final_norm = r_norm;
    fail(
        Error::NoConvergence {
            iterations: max_iter,
            residual_norm: final_norm,
        },
        trace,
    )
}

/// Least-squares slope q of log r_{k+1} against log r_k over the pairs with
/// r_k below `threshold` and r_{k+1} above the noise floor; ≈ 2 for a
/// quadratically convergent iteration.
pub fn convergence_exponent(norms: &[f64], threshold: f64) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = norms
        .windows(2)
        .filter(|w| w[0] < threshold && w[0] > 0.0 && w[1] > 1e-14)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    if pairs.len() == 1 {
        return Some(pairs[0].1 / pairs[0].0);
    }
    let n = pairs.len() as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::integrals::default_base_point;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const LEN: usize = 8;

    fn residual_spec(targets: Vec<(TargetValue, Complex64)>, parts: Parts) -> ResidualSpec {
        ResidualSpec {
            targets,
            parts,
            truncation: Truncation::MaxWordLen(LEN),
            nodes: 256,
        }
    }

    /// Period targets of the unperturbed genus-2 fixture, computed with the
    /// same settings the solver will use.
    fn genus2_targets() -> Vec<(TargetValue, Complex64)> {
        let group = fixtures::genus2().unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(LEN)).unwrap();
        let pm = period_matrix(&basis, default_base_point(&group)).unwrap();
        [(0, 0), (0, 1), (1, 1)]
            .into_iter()
            .map(|(j, s)| (TargetValue::PeriodEntry { j, s }, pm.entry(j, s)))
            .collect()
    }

    fn genus2_params(
        perturb: f64,
    ) -> FixedPointMultiplierParams {
        let mut triples = fixtures::genus2_triples();
        // 1% perturbation of the free coordinates (μ1, B2, μ2).
        triples[0].2 *= 1.0 + perturb;
        triples[1].1 *= 1.0 - perturb;
        triples[1].2 *= 1.0 + perturb;
        FixedPointMultiplierParams::new(
            triples,
            fixtures::genus2_d_primes(),
            vec![
                (0, FpCoord::Multiplier, Part::Re),
                (1, FpCoord::Repelling, Part::Re),
                (1, FpCoord::Multiplier, Part::Re),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fixture_periods_are_purely_imaginary() {
        // Justifies the ImagOnly residual formulation for the real-symmetric
        // fixtures.
        for (_, target) in genus2_targets() {
            assert!(
                target.re.abs() < 1e-9,
                "period entry {target} has a real part"
            );
            assert!(target.im.abs() > 1e-3);
        }
    }

    #[test]
    fn zero_perturbation_converges_immediately() {
        let problem = ModuliProblem {
            parameterization: genus2_params(0.0),
            residual: residual_spec(genus2_targets(), Parts::ImagOnly),
        };
        let out = newton_solve(&problem, 10, 1e-8).unwrap();
        assert!(out.trace.converged);
        assert_eq!(out.trace.iterations.len(), 1, "no Newton steps needed");
    }

    #[test]
    fn one_percent_round_trip_recovers_parameters() {
        let problem = ModuliProblem {
            parameterization: genus2_params(0.01),
            residual: residual_spec(genus2_targets(), Parts::ImagOnly),
        };
        let out = newton_solve(&problem, 8, 1e-8).unwrap();
        assert!(out.trace.converged);
        let steps = out.trace.iterations.len() - 1;
        assert!(steps <= 8, "took {steps} iterations");

        // Recovered parameters match the fixture.
        let truth = [0.06, 0.6, 0.08];
        for (got, want) in out.params.iter().zip(truth) {
            assert!(
                (got - want).abs() < 1e-6,
                "parameter {got} vs fixture {want}"
            );
        }

        // Quadratic convergence on the trace.
        let norms = out.trace.residual_norms();
        let q = convergence_exponent(&norms, 1e-2).expect("enough points to fit");
        assert!(q >= 1.8, "convergence exponent {q} below quadratic range");
    }

    #[test]
    fn genus1_multiplier_from_period_target() {
        // Target b11 for μ = 0.04 under this crate's conventions, from the
        // closed form b11 = i·ln μ/(2π); start the solver at μ = 0.05.
        let target = z(0.0, (0.04_f64).ln() / (2.0 * std::f64::consts::PI));
        let start = fixtures::genus1(0.05).unwrap();
        let fp = start.generator(0).fixed_points().unwrap();
        let params = FixedPointMultiplierParams::new(
            vec![(
                fp.attracting.as_finite().unwrap(),
                fp.repelling.as_finite().unwrap(),
                fp.multiplier,
            )],
            start.d_primes(),
            vec![(0, FpCoord::Multiplier, Part::Re)],
        )
        .unwrap();
        let problem = ModuliProblem {
            parameterization: params,
            residual: residual_spec(
                vec![(TargetValue::PeriodEntry { j: 0, s: 0 }, target)],
                Parts::ImagOnly,
            ),
        };
        let out = newton_solve(&problem, 10, 1e-10).unwrap();
        assert!(
            (out.params[0] - 0.04).abs() < 1e-7,
            "recovered multiplier {}",
            out.params[0]
        );
    }

    #[test]
    fn jacobian_equals_minus_realified_variation() {
        let params = genus2_params(0.0);
        let problem = ModuliProblem {
            parameterization: params,
            residual: residual_spec(genus2_targets(), Parts::Both),
        };
        let p = problem.parameterization.initial();
        let (j, condition) = jacobian(&problem, &p).unwrap();
        assert!(condition.is_finite());

        let group = problem.parameterization.group(&p).unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(LEN)).unwrap();
        for col in 0..problem.parameterization.dim() {
            let dir = problem.parameterization.direction(&p, col).unwrap();
            let pv = vary_period_matrix(&basis, &dir, 256).unwrap();
            for (row, (j_idx, s_idx)) in [(0usize, (0, 0)), (1, (0, 1)), (2, (1, 1))] {
                let d = pv.entry(j_idx, s_idx);
                assert!((j[(2 * row, col)] - (-d.re)).abs() < 1e-12);
                assert!((j[(2 * row + 1, col)] - (-d.im)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_parameters_give_identical_columns() {
        let group = fixtures::genus2().unwrap();
        let base: Vec<Mat2> = group.generators().iter().map(|g| *g.matrix()).collect();
        let params = MatrixEntryParams::new(
            base,
            group.d_primes(),
            vec![
                (0, 0, 0, Part::Re),
                (0, 0, 0, Part::Re),
            ],
        )
        .unwrap();
        let problem = ModuliProblem {
            parameterization: params,
            residual: residual_spec(genus2_targets(), Parts::Both),
        };
        let p = problem.parameterization.initial();
        let (j, condition) = jacobian(&problem, &p).unwrap();
        for row in 0..j.nrows() {
            assert_eq!(j[(row, 0)], j[(row, 1)]);
        }
        // Identical columns are themselves a rank deficiency.
        assert!(condition > CONDITION_LIMIT);
    }

    #[test]
    fn conjugation_gauge_parameters_are_reported_as_rank_deficient() {
        let gauges = vec![
            Mat2::new(z(0.0, 0.0), z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0)),
            Mat2::new(z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0), z(0.0, 0.0)),
            Mat2::new(z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(-1.0, 0.0)),
        ];
        let problem = ModuliProblem {
            parameterization: ConjugationAugmented {
                inner: genus2_params(0.01),
                gauge_matrices: gauges,
            },
            residual: residual_spec(genus2_targets(), Parts::Both),
        };
        let failure = newton_solve(&problem, 8, 1e-8).unwrap_err();
        match failure.error {
            Error::RankDeficient { condition } => {
                assert!(condition > CONDITION_LIMIT);
            }
            other => panic!("expected RankDeficient, got {other}"),
        }
    }

    #[test]
    fn jacobian_cross_check_against_fd() {
        let problem = ModuliProblem {
            parameterization: genus2_params(0.0),
            residual: residual_spec(genus2_targets(), Parts::Both),
        };
        let p = problem.parameterization.initial();
        let worst = jacobian_fd_discrepancy(&problem, &p, &FdConfig::default()).unwrap();
        assert!(worst < 1e-5, "max Jacobian discrepancy {worst:.3e}");
    }

    #[test]
    fn convergence_exponent_of_synthetic_quadratic_sequence() {
        // r_{k+1} = 0.8·r_k²
        let mut norms = vec![5e-3_f64];
        for _ in 0..3 {
            let last = *norms.last().unwrap();
            norms.push(0.8 * last * last);
        }
        let q = convergence_exponent(&norms, 1e-2).unwrap();
        assert!((q - 2.0).abs() < 0.05, "fitted exponent {q}");
    }
}
