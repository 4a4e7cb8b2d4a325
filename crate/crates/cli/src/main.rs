//! `schottky` — numerical Schottky uniformization from the command line:
//! validate group configurations, compute periods and Abelian integrals,
//! differentiate them under generator perturbations, and solve moduli
//! problems with Newton's method. All outputs are versioned JSON reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use schottky_cli::commands::{self, DifferentialChoice, DirectionSource, VaryTarget};
use schottky_cli::config::{load_config, load_directions, load_targets, parse_complex_flag, resolve};
use schottky_cli::report::Report;
use schottky_cli::{exit_codes, CliError, CliResult};

#[derive(Parser)]
#[command(name = "schottky", version, about = "Schottky groups, Abelian differentials, periods and their variations")]
struct Cli {
    /// Worker threads (results are byte-identical for any value; 1 forces
    /// fully sequential execution)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomly generated perturbation directions
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Include wall-clock timings in the report (breaks byte-for-byte
    /// reproducibility)
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Group configuration file (JSON)
    config: PathBuf,

    /// Override settings.max_word_len
    #[arg(long)]
    len: Option<usize>,

    /// Override settings.tail_tolerance
    #[arg(long)]
    tol: Option<f64>,

    /// Override settings.quadrature_nodes
    #[arg(long)]
    nodes: Option<usize>,

    /// Override settings.base_point (as re,im)
    #[arg(long, value_name = "RE,IM")]
    base_point: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a group configuration
    Validate(ConfigArg),
    /// Period matrix and a-period checks
    Periods(ConfigArg),
    /// Abelian integral between two points
    Integrate {
        #[command(flatten)]
        config: ConfigArg,
        /// Differential: "third-kind" or "holomorphic"
        #[arg(long, value_name = "KIND")]
        differential: String,
        /// Third-kind pole z (as re,im)
        #[arg(long, value_name = "RE,IM")]
        pole_z: Option<String>,
        /// Third-kind pole z' (as re,im)
        #[arg(long, value_name = "RE,IM")]
        pole_zprime: Option<String>,
        /// Holomorphic basis index (1-based)
        #[arg(long)]
        index: Option<usize>,
        /// Integration start point (as re,im)
        #[arg(long, value_name = "RE,IM")]
        from: String,
        /// Integration end point (as re,im)
        #[arg(long, value_name = "RE,IM")]
        to: String,
        /// Explicit waypoints "re,im;re,im;..." (else the planner routes)
        #[arg(long)]
        waypoints: Option<String>,
    },
    /// First-order variation under generator perturbations
    Vary {
        #[command(flatten)]
        config: ConfigArg,
        /// Target: "period" or "integral"
        #[arg(long, default_value = "period")]
        target: String,
        /// Basis index for integral targets (1-based)
        #[arg(long)]
        eta: Option<usize>,
        /// Integral start point (as re,im)
        #[arg(long, value_name = "RE,IM")]
        from: Option<String>,
        /// Integral end point (as re,im)
        #[arg(long, value_name = "RE,IM")]
        to: Option<String>,
        /// Direction file (JSON)
        #[arg(long)]
        direction: Option<PathBuf>,
        /// Generate this many random directions instead (uses --seed)
        #[arg(long)]
        random: Option<usize>,
        /// Append a finite-difference cross-check per direction
        #[arg(long)]
        check_fd: bool,
    },
    /// Newton solve for generator parameters hitting target values
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        /// Targets file (JSON)
        #[arg(long)]
        targets: PathBuf,
    },
    /// Series and quadrature convergence diagnostics
    Converge {
        #[command(flatten)]
        config: ConfigArg,
        /// Also report a third-kind differential with this pole (as re,im)
        #[arg(long, value_name = "RE,IM")]
        pole_z: Option<String>,
        /// Second third-kind pole (as re,im)
        #[arg(long, value_name = "RE,IM")]
        pole_zprime: Option<String>,
    },
}

fn resolve_with_overrides(arg: &ConfigArg) -> CliResult<schottky_cli::config::ResolvedConfig> {
    let mut config = load_config(&arg.config)?;
    if let Some(len) = arg.len {
        config.settings.max_word_len = Some(len);
        config.settings.tail_tolerance = None;
    }
    if let Some(tol) = arg.tol {
        config.settings.tail_tolerance = Some(tol);
        config.settings.max_word_len = None;
    }
    if let Some(nodes) = arg.nodes {
        config.settings.quadrature_nodes = Some(nodes);
    }
    if let Some(bp) = &arg.base_point {
        config.settings.base_point = Some(parse_complex_flag(bp)?.into());
    }
    resolve(&config)
}

fn parse_optional_complex(s: &Option<String>, flag: &str) -> CliResult<Option<Complex64>> {
    match s {
        Some(v) => Ok(Some(parse_complex_flag(v).map_err(|e| {
            CliError::Usage(format!("--{flag}: {}", e.message()))
        })?)),
        None => Ok(None),
    }
}

fn required_complex(s: &Option<String>, flag: &str) -> CliResult<Complex64> {
    parse_optional_complex(s, flag)?
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required here")))
}

fn run(cli: &Cli) -> CliResult<(Report, bool)> {
    match &cli.command {
        Command::Validate(arg) => {
            let resolved = resolve_with_overrides(arg)?;
            Ok(commands::cmd_validate(&resolved))
        }
        Command::Periods(arg) => {
            let resolved = resolve_with_overrides(arg)?;
            Ok((commands::cmd_periods(&resolved)?, true))
        }
        Command::Integrate {
            config,
            differential,
            pole_z,
            pole_zprime,
            index,
            from,
            to,
            waypoints,
        } => {
            let resolved = resolve_with_overrides(config)?;
            let choice = match differential.as_str() {
                "third-kind" => DifferentialChoice::ThirdKind {
                    z: required_complex(pole_z, "pole-z")?,
                    zprime: required_complex(pole_zprime, "pole-zprime")?,
                },
                "holomorphic" => DifferentialChoice::Holomorphic {
                    index: index.ok_or_else(|| {
                        CliError::Usage("--index is required for holomorphic".into())
                    })?,
                },
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown differential {other:?} (expected third-kind or holomorphic)"
                    )))
                }
            };
            let from = parse_complex_flag(from)?;
            let to = parse_complex_flag(to)?;
            let waypoints = waypoints
                .as_ref()
                .map(|w| {
                    w.split(';')
                        .map(|p| parse_complex_flag(p.trim()))
                        .collect::<CliResult<Vec<_>>>()
                })
                .transpose()?;
            Ok((
                commands::cmd_integrate(&resolved, choice, from, to, waypoints)?,
                true,
            ))
        }
        Command::Vary {
            config,
            target,
            eta,
            from,
            to,
            direction,
            random,
            check_fd,
        } => {
            let resolved = resolve_with_overrides(config)?;
            let target = match target.as_str() {
                "period" => VaryTarget::PeriodMatrix,
                "integral" => VaryTarget::Integral {
                    eta: eta.ok_or_else(|| {
                        CliError::Usage("--eta is required for integral targets".into())
                    })?,
                    from: required_complex(from, "from")?,
                    to: required_complex(to, "to")?,
                },
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown target {other:?} (expected period or integral)"
                    )))
                }
            };
            let source = match (direction, random) {
                (Some(path), None) => DirectionSource::File(load_directions(
                    path,
                    resolved.group.genus(),
                )?),
                (None, Some(n)) => DirectionSource::Random {
                    count: *n,
                    seed: cli.seed,
                },
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --direction or --random".into(),
                    ))
                }
            };
            Ok((commands::cmd_vary(&resolved, target, source, *check_fd)?, true))
        }
        Command::Solve { config, targets } => {
            let resolved = resolve_with_overrides(config)?;
            let targets = load_targets(targets)?;
            commands::cmd_solve(&resolved, &targets)
        }
        Command::Converge {
            config,
            pole_z,
            pole_zprime,
        } => {
            let resolved = resolve_with_overrides(config)?;
            let poles = match (
                parse_optional_complex(pole_z, "pole-z")?,
                parse_optional_complex(pole_zprime, "pole-zprime")?,
            ) {
                (Some(z), Some(zp)) => Some((z, zp)),
                (None, None) => None,
                _ => {
                    return Err(CliError::Usage(
                        "--pole-z and --pole-zprime must be given together".into(),
                    ))
                }
            };
            Ok((commands::cmd_converge(&resolved, poles)?, true))
        }
    }
}

fn emit(report: &Report, out: &Option<PathBuf>) -> CliResult<()> {
    let text = report.to_json();
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }

    let started = std::time::Instant::now();
    match run(&cli) {
        Ok((mut report, ok)) => {
            if cli.timings {
                report.timings_ms = Some(started.elapsed().as_secs_f64() * 1e3);
            }
            if let Err(e) = emit(&report, &cli.out) {
                eprintln!("{e}");
                return ExitCode::from(e.exit_code() as u8);
            }
            if ok {
                ExitCode::from(exit_codes::OK as u8)
            } else {
                ExitCode::from(exit_codes::DOMAIN as u8)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
