//! Report documents: versioned JSON with the resolved config echoed, the
//! validation report, command results and convergence diagnostics. Reports
//! are deterministic for a given config; wall-clock timings are only
//! included behind the --timings flag so default outputs stay
//! byte-reproducible.

use serde::{Deserialize, Serialize};

use schottky::group::ValidationReport;
use schottky::quad::QuadratureHistory;

use crate::config::{Cx, GroupConfigFile};

pub const REPORT_SCHEMA: &str = "schottky-report/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOut {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationOut {
    pub passed: bool,
    pub checks: Vec<CheckOut>,
}

impl From<&ValidationReport> for ValidationOut {
    fn from(r: &ValidationReport) -> Self {
        ValidationOut {
            passed: r.passed(),
            checks: r
                .checks
                .iter()
                .map(|c| CheckOut {
                    name: c.name.clone(),
                    passed: c.passed,
                    margin: c.margin,
                    detail: c.detail.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadOut {
    /// Node counts visited by the doubling loop.
    pub nodes: Vec<usize>,
    /// |P(2N) − P(N)| per doubling.
    pub changes: Vec<f64>,
    pub converged: bool,
}

impl From<&QuadratureHistory> for QuadOut {
    fn from(h: &QuadratureHistory) -> Self {
        QuadOut {
            nodes: h.nodes.clone(),
            changes: h.changes.clone(),
            converged: h.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodsOut {
    pub period_matrix: Vec<Vec<Cx>>,
    pub a_period_matrix: Vec<Vec<Cx>>,
    pub symmetry_residual: f64,
    /// Largest eigenvalue of Im B (negative for honest configurations
    /// under the clockwise conventions).
    pub max_imag_eigenvalue: f64,
    pub base_point: Cx,
    pub quadrature: Vec<QuadOut>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrateOut {
    pub differential: String,
    pub value: Cx,
    pub waypoints: Vec<Cx>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaryDirectionOut {
    pub label: String,
    /// δ(period matrix) for period targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_variation: Option<Vec<Vec<Cx>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry_residual: Option<f64>,
    /// δ∫ for integral targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integral_variation: Option<Cx>,
    /// Largest |integrand| sample over the boundary circles.
    pub integrand_max: f64,
    /// Max |analytic − FD| over entries, relative to the FD scale
    /// (present with --check-fd).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_discrepancy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaryOut {
    pub target: String,
    pub directions: Vec<VaryDirectionOut>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveIterationOut {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub step_norm: f64,
    /// NaN on the initial record (no Jacobian yet); serialized as null.
    pub condition: Option<f64>,
    pub halvings: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOut {
    pub converged: bool,
    pub iterations: Vec<SolveIterationOut>,
    pub final_params: Vec<f64>,
    pub param_labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerNormsOut {
    pub differential: String,
    pub norms: Vec<f64>,
    /// norms[l] / norms[l−1].
    pub ratios: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_estimate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergeOut {
    pub layer_norms: Vec<LayerNormsOut>,
    /// a-period doubling history of each basis element over each circle.
    pub a_period_quadrature: Vec<QuadOut>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandResults {
    Validate {},
    Periods(PeriodsOut),
    Integrate(IntegrateOut),
    Vary(VaryOut),
    Solve(SolveOut),
    Converge(ConvergeOut),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub config: GroupConfigFile,
    pub validation: ValidationOut,
    pub results: CommandResults,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<f64>,
}

impl Report {
    pub fn new(
        command: &str,
        config: GroupConfigFile,
        validation: ValidationOut,
        results: CommandResults,
    ) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            command: command.to_string(),
            config,
            validation,
            results,
            timings_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}
