//! JSON run configuration.
//!
//! One document describes both the design and the simulated truth:
//!
//! ```json
//! {
//!   "design": "C",
//!   "doses": [{"p_e": 0.4, "p_t": 0.1}, {"p_e": 0.3, "p_t": 0.35}],
//!   "control": {"p_c": 0.2},
//!   "n1": 50, "n2": 80, "alpha": 0.05
//! }
//! ```
//!
//! Recognised keys: `design`, `doses`, `control`, `historical`, `n1`, `n2`,
//! `alpha`, `gates`, `utility` or `tradeoff`, `rho` (latent toxicity-efficacy
//! correlation), `accrual_rate`, `assess_time`, `followup_min`, plus the
//! bookkeeping keys `scenario`, `description`, `optimal` and
//! `stage1_endpoint`. Any other key is rejected.
//!
//! `optimal` names the true optimal dose (1-based) or `"none"`. When it is
//! omitted, the optimal dose is the one with the best true benefit-risk score
//! among doses with `p_t < φ_T` and `p_e > φ_E`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dose_select::{best_dose, BenefitRisk, GateSpec, Orientation, TradeoffSpec, UtilitySpec};
use crate::error::{config, Error, Result};
use crate::outcome_sim::{cell_probabilities, ControlTruth, CopulaSpec, DoseTruth, HistoricalBenchmark, ScenarioSpec};
use crate::stat_kernel::BetaPrior;
use crate::trial_engine::{Design, DesignConfig, Stage1Endpoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub design: Design,
    pub doses: Vec<DoseTruth>,
    #[serde(default)]
    pub control: ControlTruth,
    #[serde(default)]
    pub historical: HistoricalBenchmark,
    pub n1: u32,
    pub n2: u32,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub gates: GatesFile,
    #[serde(default)]
    pub utility: Option<UtilityFile>,
    #[serde(default)]
    pub tradeoff: Option<TradeoffSpec>,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_accrual")]
    pub accrual_rate: f64,
    #[serde(default)]
    pub assess_time: f64,
    #[serde(default = "default_followup")]
    pub followup_min: f64,
    #[serde(default)]
    pub optimal: Option<OptimalDose>,
    #[serde(default)]
    pub stage1_endpoint: Stage1Endpoint,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_accrual() -> f64 {
    2.0
}

fn default_followup() -> f64 {
    12.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatesFile {
    pub phi_t: f64,
    pub phi_e: f64,
    pub c_t: f64,
    pub c_e: f64,
    pub prior_a: f64,
    pub prior_b: f64,
}

impl Default for GatesFile {
    fn default() -> Self {
        let g = GateSpec::default();
        Self { phi_t: g.phi_t, phi_e: g.phi_e, c_t: g.c_t, c_e: g.c_e, prior_a: g.prior.a, prior_b: g.prior.b }
    }
}

impl From<GatesFile> for GateSpec {
    fn from(g: GatesFile) -> Self {
        Self { phi_t: g.phi_t, phi_e: g.phi_e, c_t: g.c_t, c_e: g.c_e, prior: BetaPrior { a: g.prior_a, b: g.prior_b } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityFile {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    #[serde(default = "default_orientation")]
    pub orientation: Orientation,
}

fn default_orientation() -> Orientation {
    Orientation::Minimize
}

impl From<UtilityFile> for UtilitySpec {
    fn from(u: UtilityFile) -> Self {
        Self { scores: [u.u1, u.u2, u.u3, u.u4], orientation: u.orientation }
    }
}

/// The `optimal` key: a 1-based dose number or the string `"none"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptimalDose {
    Index(usize),
    Label(String),
}

/// A parsed and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub design: DesignConfig,
    pub scenario: ScenarioSpec,
    pub description: Option<String>,
}

impl ConfigFile {
    pub fn scoring(&self) -> Result<BenefitRisk> {
        match (self.utility, self.tradeoff) {
            (Some(_), Some(_)) => config("specify either `utility` or `tradeoff`, not both"),
            (Some(u), None) => Ok(BenefitRisk::Utility(u.into())),
            (None, Some(t)) => Ok(BenefitRisk::Tradeoff(t)),
            (None, None) => Ok(BenefitRisk::default()),
        }
    }

    pub fn into_run_config(self, fallback_name: &str) -> Result<RunConfig> {
        let scoring = self.scoring()?;
        let design = DesignConfig {
            design: self.design,
            n1: self.n1,
            n2: self.n2,
            alpha: self.alpha,
            gates: self.gates.into(),
            scoring,
            accrual_rate: self.accrual_rate,
            assess_time: self.assess_time,
            followup_min: self.followup_min,
            stage1_endpoint: self.stage1_endpoint,
        };
        let copula = CopulaSpec { rho: self.rho };
        for dose in &self.doses {
            dose.validate().map_err(as_config)?;
        }
        copula.validate().map_err(as_config)?;
        let optimal = match self.optimal {
            Some(OptimalDose::Index(0)) => return config("`optimal` is 1-based; use \"none\" for no optimal dose"),
            Some(OptimalDose::Index(k)) => Some(k - 1),
            Some(OptimalDose::Label(s)) if s.eq_ignore_ascii_case("none") => None,
            Some(OptimalDose::Label(s)) => return config(format!("`optimal` must be a dose number or \"none\", got {s:?}")),
            None => true_optimal(&self.doses, copula, &scoring, &design.gates),
        };
        let scenario = ScenarioSpec {
            name: self.scenario.unwrap_or_else(|| fallback_name.to_owned()),
            doses: self.doses,
            control: self.control,
            historical: self.historical,
            copula,
            optimal,
        };
        design.validate_for(&scenario).map_err(as_config)?;
        Ok(RunConfig { design, scenario, description: self.description })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    }
}

/// Dose with the best true benefit-risk score among doses whose true rates
/// clear both gate thresholds, or `None` if no dose does.
pub fn true_optimal(doses: &[DoseTruth], copula: CopulaSpec, scoring: &BenefitRisk, gates: &GateSpec) -> Option<usize> {
    let scores: Vec<f64> = doses
        .iter()
        .map(|d| match scoring {
            BenefitRisk::Utility(u) => {
                cell_probabilities(d, copula).iter().zip(u.scores).map(|(p, s)| p * s).sum()
            }
            BenefitRisk::Tradeoff(t) => d.p_e - t.w * d.p_t,
        })
        .collect();
    best_dose(&scores, scoring.orientation(), |j| doses[j].p_t < gates.phi_t && doses[j].p_e > gates.phi_e)
}

pub fn from_str(text: &str, fallback_name: &str) -> Result<RunConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    file.into_run_config(fallback_name)
}

/// Reads a configuration file; the scenario name defaults to the file stem.
pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    from_str(&text, stem).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
