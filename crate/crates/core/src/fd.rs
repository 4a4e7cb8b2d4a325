//! Finite-difference oracle: Richardson-extrapolated central differences of
//! arbitrary functions of the group generators, used as ground truth for
//! the analytic variational formulas.
//!
//! The step is scaled per direction so the perturbation is uniform relative
//! to the generator norms, and the truncation/quadrature settings of the
//! evaluated function are the caller's responsibility — keeping them fixed
//! across the ± evaluations cancels the series-truncation bias.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::variational::PerturbationDirection;

/// Configuration for one directional derivative.
#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    /// Relative base step (fraction of the generator scale). Values below
    /// 1e-9 are rejected: cancellation dominates there at double precision.
    pub base_step: f64,
    /// Richardson extrapolation levels (0 = plain central difference).
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            base_step: 1e-4,
            richardson_levels: 2,
        }
    }
}

/// A directional derivative with its error diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct FdResult {
    pub value: Complex64,
    /// Change at the last Richardson level; the practical error estimate.
    pub error_estimate: f64,
    /// False when the Richardson corrections did not shrink monotonically
    /// (result still returned; treat as a warning).
    pub monotone: bool,
    /// The absolute parameter step actually used.
    pub step: f64,
}

/// Richardson-extrapolated central difference of `f` along `dir` at `group`.
///
/// `f` must be pure. Perturbed groups are re-paired (D_k re-derived from
/// the fixed D'_k) and must validate; the step shrinks automatically until
/// they do.
pub fn fd_directional<F>(
    f: F,
    group: &SchottkyGroup,
    dir: &PerturbationDirection,
    cfg: &FdConfig,
) -> Result<FdResult>
where
    F: Fn(&SchottkyGroup) -> Result<Complex64>,
{
    if cfg.base_step <= 1e-9 {
        return Err(Error::FiniteDifferenceStep(format!(
            "base step {:.3e} is below the double-precision floor 1e-9",
            cfg.base_step
        )));
    }
    let dir_norm = dir.frobenius_norm();
    if dir_norm == 0.0 {
        return Ok(FdResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: f64::EPSILON,
            monotone: true,
            step: 0.0,
        });
    }
    let gen_norm = group
        .generators()
        .iter()
        .map(|g| g.matrix().frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt();
    let mut h = cfg.base_step * gen_norm / dir_norm;

    // Shrink until every evaluation point validates; the smallest step any
    // level will use is h / 2^levels.
    let mut shrink = 0;
    loop {
        let smallest = h / (1 << cfg.richardson_levels) as f64;
        let ok = [h, -h, smallest, -smallest].iter().all(|&t| {
            dir.applied_to(group, t)
                .map(|g| g.is_valid())
                .unwrap_or(false)
        });
        if ok {
            break;
        }
        shrink += 1;
        h *= 0.5;
        if shrink > 24 {
            return Err(Error::FiniteDifferenceStep(
                "perturbed group fails validation even at the smallest step".into(),
            ));
        }
    }

    let central = |t: f64| -> Result<Complex64> {
        let plus = f(&dir.applied_to(group, t)?)?;
        let minus = f(&dir.applied_to(group, -t)?)?;
        Ok((plus - minus) / (2.0 * t))
    };

    // Richardson tableau on step halvings: T[j] removes the h^(2j) term.
    let levels = cfg.richardson_levels;
    let mut row: Vec<Complex64> = (0..=levels)
        .map(|i| central(h / (1 << i) as f64))
        .collect::<Result<_>>()?;
    let mut diagonal = vec![row[0]];
    for j in 1..=levels {
        let factor = (4.0_f64).powi(j as i32);
        let mut next = Vec::with_capacity(row.len() - 1);
        for i in 0..row.len() - 1 {
            next.push((factor * row[i + 1] - row[i]) / (factor - 1.0));
        }
        row = next;
        diagonal.push(row[0]);
    }

    let value = *diagonal.last().unwrap();
    let changes: Vec<f64> = diagonal.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    // Non-monotone only when a later correction genuinely grows; changes at
    // the rounding floor (exactly-differentiated polynomials) do not count.
    let noise = 1e-12 * value.norm().max(1e-300);
    let monotone = changes
        .windows(2)
        .all(|c| c[1] <= c[0] || c[1] <= noise);
    Ok(FdResult {
        value,
        error_estimate: changes.last().copied().unwrap_or(f64::EPSILON),
        monotone,
        step: h,
    })
}
