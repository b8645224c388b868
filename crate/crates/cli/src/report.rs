//! Machine-readable run report, validated by `schema/report.schema.json`.

use debond::energy_audit::EnergyLedger;
use debond::griffith::{CoupledDiagnostics, StopReason};
use debond::prescribed::FieldPatch;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub name: Option<String>,
    pub dt: f64,
    pub horizon: f64,
    pub t_end: f64,
    pub stop_reason: StopReason,
    pub windows: Vec<WindowReport>,
    pub seam_jumps: Vec<f64>,
    pub coupled: Option<CoupledDiagnostics>,
    pub energy: EnergySummary,
    pub verification: Option<Verification>,
    pub convergence: Option<Convergence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub rho_at_start: f64,
    pub contraction_bound: f64,
    pub certified: bool,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub final_change: f64,
    pub error_bound: f64,
}

impl From<&FieldPatch> for WindowReport {
    fn from(p: &FieldPatch) -> Self {
        let d = &p.diagnostics;
        WindowReport {
            index: p.plan.index,
            t_start: p.plan.t_start,
            t_end: p.plan.t_end,
            rho_at_start: p.plan.rho_at_start,
            contraction_bound: p.plan.contraction_bound,
            certified: p.plan.certified,
            iterations: d.iterations,
            iteration_bound: d.iteration_bound,
            final_change: d.final_change,
            error_bound: d.error_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub samples: usize,
    pub max_relative_edp: f64,
    /// `None` without a toughness.
    pub max_kkt_residual: Option<f64>,
    pub mdp_violations: usize,
    /// Samples where the closed-form energy rate and the differenced energy disagree by more than 5%.
    pub rate_flags: usize,
}

impl From<&EnergyLedger> for EnergySummary {
    fn from(l: &EnergyLedger) -> Self {
        let has_kappa = l.kappa.iter().any(|k| k.is_finite());
        EnergySummary {
            samples: l.len(),
            max_relative_edp: l.max_relative_edp(),
            max_kkt_residual: has_kappa.then(|| l.max_kkt_residual()),
            mdp_violations: l.mdp_flags.iter().filter(|f| !**f).count(),
            rate_flags: l.rate_flags.iter().filter(|f| **f).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    /// Skipped checks have nothing to measure and count as passed.
    pub skipped: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Bound::AtMost, threshold, value <= threshold)
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Bound::AtLeast, threshold, value >= threshold)
    }

    pub fn skipped(name: &str, bound: Bound, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            bound,
            threshold,
            skipped: true,
            passed: true,
        }
    }

    fn new(name: &str, value: f64, bound: Bound, threshold: f64, passed: bool) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            threshold,
            skipped: false,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub checks: Vec<Check>,
    /// Minimum principal coefficient of the oracle's fixed-domain equation.
    pub min_principal: f64,
    /// The front never moves, so the domain map is the identity.
    pub identity_map: bool,
    pub passed: bool,
}

impl Verification {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: usize,
    pub dt: f64,
    pub oracle_l2: f64,
    pub rate_l1: f64,
    pub edp_relative: f64,
    pub kkt_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orders {
    pub oracle_l2: Option<f64>,
    pub rate_l1: Option<f64>,
    pub edp_relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub levels: Vec<LevelRow>,
    pub orders: Orders,
    pub edp_decreasing: bool,
    pub warning: Option<String>,
}
