//! Implementations of the CLI subcommands. Each returns a full report plus
//! a success flag; the binary decides exit codes and where to write.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schottky::error::Error as CoreError;
use schottky::fd::FdConfig;
use schottky::group::SchottkyGroup;
use schottky::integrals::{
    a_periods, integrate, integrate_polyline, period_matrix, IntegrationPath, PathPlanner,
};
use schottky::moebius::ComplexPoint;
use schottky::series::{
    default_probes, geometric_tail_estimate, layer_norms, Differential, HolomorphicBasis,
    ThirdKindDifferential,
};
use schottky::solver::{
    convergence_exponent, newton_solve, FixedPointMultiplierParams, FpCoord, ModuliProblem, Part,
    Parameterization, Parts, ResidualSpec, TargetValue,
};
use schottky::variational::{
    variation_integrand_samples, vary_integral, vary_period_matrix, PerturbationDirection,
};
use schottky::{fd::fd_directional, Mat2};

use crate::config::{
    CoordSpec, Cx, PartSpec, PartsSpec, ResolvedConfig, TargetsFile,
};
use crate::report::{
    CommandResults, ConvergeOut, IntegrateOut, LayerNormsOut, PeriodsOut, QuadOut, Report,
    SolveIterationOut, SolveOut, ValidationOut, VaryDirectionOut, VaryOut,
};
use crate::{CliError, CliResult};

fn domain(e: CoreError) -> CliError {
    CliError::Domain(e.to_string())
}

fn require_valid(resolved: &ResolvedConfig) -> CliResult<()> {
    resolved.group.require_valid().map_err(domain)
}

fn base_report(command: &str, resolved: &ResolvedConfig, results: CommandResults) -> Report {
    Report::new(
        command,
        resolved.echo.clone(),
        ValidationOut::from(resolved.group.validation()),
        results,
    )
}

/// `validate`: run the group checks; success iff everything passed.
pub fn cmd_validate(resolved: &ResolvedConfig) -> (Report, bool) {
    let passed = resolved.group.is_valid();
    (
        base_report("validate", resolved, CommandResults::Validate {}),
        passed,
    )
}

/// `periods`: period matrix, a-period check matrix, symmetry residual.
pub fn cmd_periods(resolved: &ResolvedConfig) -> CliResult<Report> {
    require_valid(resolved)?;
    let basis = HolomorphicBasis::new(&resolved.group, resolved.truncation).map_err(domain)?;
    let pm = period_matrix(&basis, resolved.base_point).map_err(domain)?;

    let g = basis.genus();
    let mut a_matrix = Vec::with_capacity(g);
    let mut quad = Vec::new();
    for j in 0..g {
        let (values, histories) =
            a_periods(&basis.differential(j), resolved.nodes).map_err(domain)?;
        a_matrix.push(values.into_iter().map(Cx::from).collect::<Vec<_>>());
        quad.extend(histories.iter().map(QuadOut::from));
    }

    let out = PeriodsOut {
        period_matrix: pm
            .entries()
            .iter()
            .map(|row| row.iter().copied().map(Cx::from).collect())
            .collect(),
        a_period_matrix: a_matrix,
        symmetry_residual: pm.symmetry_residual(),
        max_imag_eigenvalue: pm.max_imag_eigenvalue(),
        base_point: resolved.base_point.into(),
        quadrature: quad,
    };
    Ok(base_report("periods", resolved, CommandResults::Periods(out)))
}

pub enum DifferentialChoice {
    ThirdKind { z: Complex64, zprime: Complex64 },
    Holomorphic { index: usize },
}

/// `integrate`: Abelian integral between endpoints along a validated or
/// planned path.
pub fn cmd_integrate(
    resolved: &ResolvedConfig,
    choice: DifferentialChoice,
    from: Complex64,
    to: Complex64,
    waypoints: Option<Vec<Complex64>>,
) -> CliResult<Report> {
    require_valid(resolved)?;
    let group = &resolved.group;

    let path_points = match waypoints {
        Some(mut pts) => {
            pts.insert(0, from);
            pts.push(to);
            pts
        }
        None => PathPlanner::new(group).plan(from, to).map_err(domain)?,
    };
    let path = IntegrationPath::new(group, path_points).map_err(domain)?;

    let (label, value) = match choice {
        DifferentialChoice::ThirdKind { z, zprime } => {
            let d = ThirdKindDifferential::new(
                group,
                ComplexPoint::Finite(z),
                ComplexPoint::Finite(zprime),
                resolved.truncation,
            )
            .map_err(domain)?;
            (
                format!("third-kind(z = {z}, z' = {zprime})"),
                integrate(&d, &path).map_err(domain)?,
            )
        }
        DifferentialChoice::Holomorphic { index } => {
            let basis =
                HolomorphicBasis::new(group, resolved.truncation).map_err(domain)?;
            if index == 0 || index > basis.genus() {
                return Err(CliError::Usage(format!(
                    "basis index {index} out of range 1..={}",
                    basis.genus()
                )));
            }
            (
                format!("holomorphic dzeta_{index}"),
                integrate(&basis.differential(index - 1), &path).map_err(domain)?,
            )
        }
    };

    let out = IntegrateOut {
        differential: label,
        value: value.into(),
        waypoints: path.waypoints().iter().copied().map(|w| w.into()).collect(),
    };
    Ok(base_report(
        "integrate",
        resolved,
        CommandResults::Integrate(out),
    ))
}

pub enum VaryTarget {
    PeriodMatrix,
    Integral {
        eta: usize,
        from: Complex64,
        to: Complex64,
    },
}

pub enum DirectionSource {
    File(Vec<Mat2>),
    Random { count: usize, seed: u64 },
}

fn random_direction(rng: &mut ChaCha8Rng, genus: usize) -> Vec<Mat2> {
    (0..genus)
        .map(|_| {
            let mut e = [[Complex64::new(0.0, 0.0); 2]; 2];
            for row in &mut e {
                for v in row.iter_mut() {
                    *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            Mat2 { e }
        })
        .collect()
}

/// `vary`: analytic first-order variation for one or more directions, with
/// optional finite-difference cross-checks.
pub fn cmd_vary(
    resolved: &ResolvedConfig,
    target: VaryTarget,
    source: DirectionSource,
    check_fd: bool,
) -> CliResult<Report> {
    require_valid(resolved)?;
    let group = &resolved.group;
    let basis = HolomorphicBasis::new(group, resolved.truncation).map_err(domain)?;
    let genus = group.genus();

    let directions: Vec<(String, Vec<Mat2>)> = match source {
        DirectionSource::File(deltas) => vec![("file".to_string(), deltas)],
        DirectionSource::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|i| (format!("random-{i}"), random_direction(&mut rng, genus)))
                .collect()
        }
    };

    let target_label = match &target {
        VaryTarget::PeriodMatrix => "period-matrix".to_string(),
        VaryTarget::Integral { eta, from, to } => {
            format!("integral(dzeta_{eta}, {from} -> {to})")
        }
    };

    let mut outputs = Vec::new();
    for (label, deltas) in directions {
        let dir = PerturbationDirection::new(deltas).map_err(domain)?;

        // Max |integrand| over all boundary circles for the leading pairing;
        // gauge directions should drive this to rounding level.
        let mut integrand_max = 0.0_f64;
        {
            let weight: Box<dyn Differential> = match &target {
                VaryTarget::PeriodMatrix => Box::new(basis.differential(0)),
                VaryTarget::Integral { from, to, .. } => Box::new(
                    ThirdKindDifferential::new(
                        group,
                        ComplexPoint::Finite(*from),
                        ComplexPoint::Finite(*to),
                        resolved.truncation,
                    )
                    .map_err(domain)?,
                ),
            };
            for l in 0..genus {
                let samples = variation_integrand_samples(
                    &basis.differential(0),
                    weight.as_ref(),
                    &dir,
                    l,
                    64,
                )
                .map_err(domain)?;
                for s in samples {
                    integrand_max = integrand_max.max(s.norm());
                }
            }
        }

        let mut direction_out = VaryDirectionOut {
            label,
            period_variation: None,
            symmetry_residual: None,
            integral_variation: None,
            integrand_max,
            fd_discrepancy: None,
        };

        match &target {
            VaryTarget::PeriodMatrix => {
                let pv = vary_period_matrix(&basis, &dir, resolved.nodes).map_err(domain)?;
                direction_out.period_variation = Some(
                    pv.entries
                        .iter()
                        .map(|row| row.iter().copied().map(Cx::from).collect())
                        .collect(),
                );
                direction_out.symmetry_residual = Some(pv.symmetry_residual());

                if check_fd {
                    let truncation = resolved.truncation;
                    let mut worst = 0.0_f64;
                    let mut scale = 0.0_f64;
                    let mut discrepancies = Vec::new();
                    for j in 0..genus {
                        for s in 0..genus {
                            let f = |g: &SchottkyGroup| -> schottky::Result<Complex64> {
                                let b = HolomorphicBasis::new(g, truncation)?;
                                let z0 = schottky::integrals::default_base_point(g);
                                Ok(period_matrix(&b, z0)?.entry(j, s))
                            };
                            let fd = fd_directional(f, group, &dir, &FdConfig::default())
                                .map_err(domain)?;
                            scale = scale.max(fd.value.norm());
                            discrepancies.push((pv.entry(j, s) - fd.value).norm());
                        }
                    }
                    for d in discrepancies {
                        worst = worst.max(d / scale.max(1e-300));
                    }
                    direction_out.fd_discrepancy = Some(worst);
                }
            }
            VaryTarget::Integral { eta, from, to } => {
                if *eta == 0 || *eta > genus {
                    return Err(CliError::Usage(format!(
                        "basis index {eta} out of range 1..={genus}"
                    )));
                }
                let v = vary_integral(
                    &basis.differential(eta - 1),
                    ComplexPoint::Finite(*from),
                    ComplexPoint::Finite(*to),
                    &dir,
                    resolved.truncation,
                    resolved.nodes,
                )
                .map_err(domain)?;
                direction_out.integral_variation = Some(v.value.into());

                if check_fd {
                    let truncation = resolved.truncation;
                    let (eta, from, to) = (*eta, *from, *to);
                    let f = move |g: &SchottkyGroup| -> schottky::Result<Complex64> {
                        let b = HolomorphicBasis::new(g, truncation)?;
                        let path = PathPlanner::new(g).plan(from, to)?;
                        integrate_polyline(&b.differential(eta - 1), &path)
                    };
                    let fd =
                        fd_directional(f, group, &dir, &FdConfig::default()).map_err(domain)?;
                    direction_out.fd_discrepancy =
                        Some((v.value - fd.value).norm() / fd.value.norm().max(1e-300));
                }
            }
        }
        outputs.push(direction_out);
    }

    let out = VaryOut {
        target: target_label,
        directions: outputs,
    };
    Ok(base_report("vary", resolved, CommandResults::Vary(out)))
}

/// `solve`: Newton on the moduli problem described by the targets file.
pub fn cmd_solve(resolved: &ResolvedConfig, targets: &TargetsFile) -> CliResult<(Report, bool)> {
    require_valid(resolved)?;
    let group = &resolved.group;
    let genus = group.genus();

    // Base triples: taken from the validated group's fixed-point analysis
    // (exact for fixed-point configs, canonical for matrix configs).
    let mut triples = Vec::with_capacity(genus);
    for k in 0..genus {
        let fp = group.generator(k).fixed_points().map_err(domain)?;
        triples.push((
            fp.attracting
                .as_finite()
                .ok_or_else(|| CliError::Domain("fixed point at infinity".into()))?,
            fp.repelling
                .as_finite()
                .ok_or_else(|| CliError::Domain("fixed point at infinity".into()))?,
            fp.multiplier,
        ));
    }

    let free: Vec<(usize, FpCoord, Part)> = targets
        .free
        .iter()
        .map(|f| {
            if f.generator == 0 || f.generator > genus {
                return Err(CliError::Usage(format!(
                    "free parameter generator {} out of range 1..={genus}",
                    f.generator
                )));
            }
            let coord = match f.coordinate {
                CoordSpec::Attracting => FpCoord::Attracting,
                CoordSpec::Repelling => FpCoord::Repelling,
                CoordSpec::Multiplier => FpCoord::Multiplier,
            };
            let part = match f.part {
                PartSpec::Re => Part::Re,
                PartSpec::Im => Part::Im,
            };
            Ok((f.generator - 1, coord, part))
        })
        .collect::<CliResult<_>>()?;
    if free.is_empty() {
        return Err(CliError::Usage("targets file lists no free parameters".into()));
    }

    let spec_targets: Vec<(TargetValue, Complex64)> = targets
        .targets
        .iter()
        .map(|t| {
            let value = t.value.to_complex();
            match (&t.period, &t.integral) {
                (Some([j, s]), None) => {
                    if *j == 0 || *j > genus || *s == 0 || *s > genus {
                        return Err(CliError::Usage(format!(
                            "period target ({j},{s}) out of range for genus {genus}"
                        )));
                    }
                    Ok((TargetValue::PeriodEntry { j: j - 1, s: s - 1 }, value))
                }
                (None, Some(int)) => {
                    if int.eta == 0 || int.eta > genus {
                        return Err(CliError::Usage(format!(
                            "integral target eta {} out of range 1..={genus}",
                            int.eta
                        )));
                    }
                    Ok((
                        TargetValue::AbelianIntegral {
                            eta_index: int.eta - 1,
                            from: int.from.to_complex(),
                            to: int.to.to_complex(),
                        },
                        value,
                    ))
                }
                _ => Err(CliError::Usage(
                    "each target needs exactly one of period or integral".into(),
                )),
            }
        })
        .collect::<CliResult<_>>()?;
    if spec_targets.is_empty() {
        return Err(CliError::Usage("targets file lists no targets".into()));
    }

    let parameterization =
        FixedPointMultiplierParams::new(triples, group.d_primes(), free).map_err(domain)?;
    let param_labels: Vec<String> = (0..parameterization.dim())
        .map(|i| parameterization.describe(i))
        .collect();
    let problem = ModuliProblem {
        parameterization,
        residual: ResidualSpec {
            targets: spec_targets,
            parts: match targets.parts {
                PartsSpec::Both => Parts::Both,
                PartsSpec::ImagOnly => Parts::ImagOnly,
            },
            truncation: resolved.truncation,
            nodes: resolved.nodes,
        },
    };

    let iteration_out = |trace: &schottky::solver::SolveTrace| -> Vec<SolveIterationOut> {
        trace
            .iterations
            .iter()
            .map(|r| SolveIterationOut {
                params: r.params.clone(),
                residual_norm: r.residual_norm,
                step_norm: r.step_norm,
                condition: if r.condition.is_nan() {
                    None
                } else {
                    Some(r.condition)
                },
                halvings: r.halvings,
            })
            .collect()
    };

    match newton_solve(&problem, targets.max_iterations, targets.tolerance) {
        Ok(success) => {
            let norms = success.trace.residual_norms();
            let _ = convergence_exponent(&norms, 1e-2);
            let out = SolveOut {
                converged: true,
                iterations: iteration_out(&success.trace),
                final_params: success.params.clone(),
                param_labels,
                error: None,
            };
            Ok((
                base_report("solve", resolved, CommandResults::Solve(out)),
                true,
            ))
        }
        Err(failure) => {
            let out = SolveOut {
                converged: false,
                iterations: iteration_out(&failure.trace),
                final_params: failure
                    .trace
                    .iterations
                    .last()
                    .map(|r| r.params.clone())
                    .unwrap_or_default(),
                param_labels,
                error: Some(failure.error.to_string()),
            };
            Ok((
                base_report("solve", resolved, CommandResults::Solve(out)),
                false,
            ))
        }
    }
}

/// `converge`: layer-norm diagnostics for the holomorphic basis (and an
/// optional third-kind differential) plus a-period doubling histories.
pub fn cmd_converge(
    resolved: &ResolvedConfig,
    third_kind_poles: Option<(Complex64, Complex64)>,
) -> CliResult<Report> {
    require_valid(resolved)?;
    let group = &resolved.group;
    let probes = default_probes(group);
    let basis = HolomorphicBasis::new(group, resolved.truncation).map_err(domain)?;

    let mut layer_outputs = Vec::new();
    let mut quad = Vec::new();
    for k in 0..basis.genus() {
        let d = basis.differential(k);
        let norms = layer_norms(&d, &probes).map_err(domain)?;
        let ratios = norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        layer_outputs.push(LayerNormsOut {
            differential: format!("dzeta_{}", k + 1),
            tail_estimate: geometric_tail_estimate(&norms),
            norms,
            ratios,
        });
        let (_, histories) = a_periods(&d, resolved.nodes).map_err(domain)?;
        quad.extend(histories.iter().map(QuadOut::from));
    }

    if let Some((z, zprime)) = third_kind_poles {
        let d = ThirdKindDifferential::new(
            group,
            ComplexPoint::Finite(z),
            ComplexPoint::Finite(zprime),
            resolved.truncation,
        )
        .map_err(domain)?;
        let norms = layer_norms(&d, &probes).map_err(domain)?;
        let ratios = norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        layer_outputs.push(LayerNormsOut {
            differential: format!("third-kind(z = {z}, z' = {zprime})"),
            tail_estimate: geometric_tail_estimate(&norms),
            norms,
            ratios,
        });
    }

    let out = ConvergeOut {
        layer_norms: layer_outputs,
        a_period_quadrature: quad,
    };
    Ok(base_report(
        "converge",
        resolved,
        CommandResults::Converge(out),
    ))
}
