//! Group configuration files: JSON documents describing genus, generators
//! (matrix entries or fixed points + multiplier), disks, and numeric
//! settings. Complex numbers are two-element [re, im] arrays. Defaults are
//! never hidden in files: the resolved configuration is echoed in every
//! report and re-parses to the same in-memory value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use schottky::group::{DiskPair, SchottkyGroup};
use schottky::moebius::{Circle, MoebiusMap};
use schottky::series::{Truncation, TRUNCATION_CAP};
use schottky::{Error as CoreError, Mat2};

use crate::{CliError, CliResult};

pub const CONFIG_SCHEMA: &str = "schottky-config/1";

/// Complex number serialized as [re, im].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub [f64; 2]);

impl Cx {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.0[0], self.0[1])
    }
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx([z.re, z.im])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointsSpec {
    pub attracting: Cx,
    pub repelling: Cx,
    pub multiplier: Cx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub c11: Cx,
    pub c12: Cx,
    pub c21: Cx,
    pub c22: Cx,
}

/// One generator, in either authoring form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_points: Option<FixedPointsSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
}

/// One disk pair. D may be omitted, in which case it is derived as the
/// exact image of ∂D' under the generator (and echoed back resolved).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_d: Option<Cx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_d: Option<f64>,
    pub center_d_prime: Cx,
    pub radius_d_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_word_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Cx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfigFile {
    pub schema: String,
    pub genus: usize,
    pub generators: Vec<GeneratorSpec>,
    pub disks: Vec<DiskSpec>,
    #[serde(default)]
    pub settings: Settings,
}

/// A parsed configuration together with the constructed group and the
/// resolved settings.
pub struct ResolvedConfig {
    /// Config with every default filled in; echoed in reports.
    pub echo: GroupConfigFile,
    pub group: SchottkyGroup,
    pub truncation: Truncation,
    pub nodes: usize,
    pub base_point: Complex64,
}

pub fn load_config(path: &std::path::Path) -> CliResult<GroupConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let config: GroupConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if config.schema != CONFIG_SCHEMA {
        return Err(CliError::Usage(format!(
            "unsupported config schema {:?} (expected {CONFIG_SCHEMA:?})",
            config.schema
        )));
    }
    Ok(config)
}

fn generator_from_spec(spec: &GeneratorSpec, index: usize) -> CliResult<MoebiusMap> {
    match (&spec.fixed_points, &spec.matrix) {
        (Some(fp), None) => MoebiusMap::from_fixed_points(
            fp.attracting.to_complex(),
            fp.repelling.to_complex(),
            fp.multiplier.to_complex(),
        )
        .map_err(|e| CliError::Usage(format!("generator {}: {e}", index + 1))),
        (None, Some(m)) => MoebiusMap::from_matrix(Mat2::new(
            m.c11.to_complex(),
            m.c12.to_complex(),
            m.c21.to_complex(),
            m.c22.to_complex(),
        ))
        .map_err(|e| CliError::Usage(format!("generator {}: {e}", index + 1))),
        (Some(_), Some(_)) => Err(CliError::Usage(format!(
            "generator {}: give either fixed_points or matrix, not both",
            index + 1
        ))),
        (None, None) => Err(CliError::Usage(format!(
            "generator {}: missing fixed_points or matrix",
            index + 1
        ))),
    }
}

/// Builds the group and resolves every defaulted setting.
pub fn resolve(config: &GroupConfigFile) -> CliResult<ResolvedConfig> {
    if config.genus == 0 {
        return Err(CliError::Usage("genus must be at least 1".into()));
    }
    if config.generators.len() != config.genus || config.disks.len() != config.genus {
        return Err(CliError::Usage(format!(
            "genus {} but {} generators and {} disk pairs",
            config.genus,
            config.generators.len(),
            config.disks.len()
        )));
    }
    if config.settings.max_word_len.is_some() && config.settings.tail_tolerance.is_some() {
        return Err(CliError::Usage(
            "settings.max_word_len and settings.tail_tolerance are mutually exclusive".into(),
        ));
    }

    let generators: Vec<MoebiusMap> = config
        .generators
        .iter()
        .enumerate()
        .map(|(i, spec)| generator_from_spec(spec, i))
        .collect::<CliResult<_>>()?;

    let structural = |e: CoreError| CliError::Usage(e.to_string());
    let mut disks = Vec::with_capacity(config.genus);
    for (i, (spec, gen)) in config.disks.iter().zip(&generators).enumerate() {
        let d_prime = Circle::new(spec.center_d_prime.to_complex(), spec.radius_d_prime);
        let pair = match (spec.center_d, spec.radius_d) {
            (Some(c), Some(r)) => {
                DiskPair::new(Circle::new(c.to_complex(), r), d_prime).map_err(structural)?
            }
            (None, None) => {
                // Derive D as the exact image of ∂D'.
                let probe = SchottkyGroup::from_generators_and_d_primes(
                    vec![*gen],
                    std::slice::from_ref(&d_prime),
                )
                .map_err(structural)?;
                probe.disks()[0]
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "disk pair {}: center_d and radius_d must be given together",
                    i + 1
                )))
            }
        };
        disks.push(pair);
    }

    let group = SchottkyGroup::new(generators, disks).map_err(structural)?;

    let truncation = match config.settings.tail_tolerance {
        Some(tol) => Truncation::TailTolerance {
            tol,
            cap: TRUNCATION_CAP,
        },
        None => Truncation::MaxWordLen(config.settings.max_word_len.unwrap_or(8)),
    };
    let nodes = config.settings.quadrature_nodes.unwrap_or(256);
    let base_point = config
        .settings
        .base_point
        .map(Cx::to_complex)
        .unwrap_or_else(|| schottky::integrals::default_base_point(&group));

    // Echo with everything explicit.
    let mut echo = config.clone();
    for (spec, pair) in echo.disks.iter_mut().zip(group.disks()) {
        spec.center_d = Some(pair.d.center.into());
        spec.radius_d = Some(pair.d.radius);
        spec.center_d_prime = pair.d_prime.center.into();
        spec.radius_d_prime = pair.d_prime.radius;
    }
    echo.settings.quadrature_nodes = Some(nodes);
    echo.settings.base_point = Some(base_point.into());
    if echo.settings.tail_tolerance.is_none() {
        echo.settings.max_word_len =
            Some(config.settings.max_word_len.unwrap_or(8));
    }

    Ok(ResolvedConfig {
        echo,
        group,
        truncation,
        nodes,
        base_point,
    })
}

/// Direction file: one δŜ per generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionFile {
    pub schema: String,
    pub deltas: Vec<MatrixSpec>,
}

pub const DIRECTION_SCHEMA: &str = "schottky-direction/1";

pub fn load_directions(path: &std::path::Path, genus: usize) -> CliResult<Vec<Mat2>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: DirectionFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if file.schema != DIRECTION_SCHEMA {
        return Err(CliError::Usage(format!(
            "unsupported direction schema {:?} (expected {DIRECTION_SCHEMA:?})",
            file.schema
        )));
    }
    if file.deltas.len() != genus {
        return Err(CliError::Usage(format!(
            "direction file has {} deltas for a genus-{genus} group",
            file.deltas.len()
        )));
    }
    Ok(file
        .deltas
        .iter()
        .map(|m| {
            Mat2::new(
                m.c11.to_complex(),
                m.c12.to_complex(),
                m.c21.to_complex(),
                m.c22.to_complex(),
            )
        })
        .collect())
}

/// Targets file for `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsFile {
    pub schema: String,
    /// Free parameters: 1-based generator index, coordinate, component.
    pub free: Vec<FreeParamSpec>,
    /// Which residual components enter the system.
    pub parts: PartsSpec,
    pub targets: Vec<TargetSpec>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

pub const TARGETS_SCHEMA: &str = "schottky-targets/1";

fn default_max_iterations() -> usize {
    20
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParamSpec {
    pub generator: usize,
    pub coordinate: CoordSpec,
    pub part: PartSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordSpec {
    Attracting,
    Repelling,
    Multiplier,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartSpec {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartsSpec {
    Both,
    ImagOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Period entry as 1-based [j, s].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<[usize; 2]>,
    /// Abelian integral of basis element `eta` (1-based) between two points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integral: Option<IntegralTargetSpec>,
    pub value: Cx,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralTargetSpec {
    pub eta: usize,
    pub from: Cx,
    pub to: Cx,
}

pub fn load_targets(path: &std::path::Path) -> CliResult<TargetsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: TargetsFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if file.schema != TARGETS_SCHEMA {
        return Err(CliError::Usage(format!(
            "unsupported targets schema {:?} (expected {TARGETS_SCHEMA:?})",
            file.schema
        )));
    }
    Ok(file)
}

/// Parses an "re,im" flag value.
pub fn parse_complex_flag(s: &str) -> CliResult<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "expected complex number as re,im, got {s:?}"
        )));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("bad real part in {s:?}: {e}")))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("bad imaginary part in {s:?}: {e}")))?;
    Ok(Complex64::new(re, im))
}
