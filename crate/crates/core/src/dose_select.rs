//! Interim dose selection at the end of stage 1.
//!
//! Each dose is scored for benefit-risk, either by expected utility over the
//! four (efficacy, toxicity) outcome cells or by the linear tradeoff
//! `p_E − w·p_T`. A dose is admissible only if it passes both Bayesian gates:
//! `Pr(p_T < φ_T | data) > C_T` and `Pr(p_E > φ_E | data) > C_E`. The best
//! admissible dose is selected; with no admissible dose the trial stops.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::stat_kernel::{beta_tail_below, BetaPrior};

/// Outcome-cell counts for one dose.
///
/// Cells: 1 = (efficacy, no toxicity), 2 = (efficacy, toxicity),
/// 3 = (no efficacy, no toxicity), 4 = (no efficacy, toxicity).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub cells: [u32; 4],
}

impl CellCounts {
    pub fn new(c1: u32, c2: u32, c3: u32, c4: u32) -> Self {
        Self { cells: [c1, c2, c3, c4] }
    }

    pub fn from_outcomes<I: IntoIterator<Item = (bool, bool)>>(outcomes: I) -> Self {
        let mut counts = Self::default();
        for (y_t, y_e) in outcomes {
            counts.record(y_t, y_e);
        }
        counts
    }

    pub fn record(&mut self, y_t: bool, y_e: bool) {
        let cell = match (y_e, y_t) {
            (true, false) => 0,
            (true, true) => 1,
            (false, false) => 2,
            (false, true) => 3,
        };
        self.cells[cell] += 1;
    }

    pub fn n(&self) -> u32 {
        self.cells.iter().sum()
    }

    pub fn responders(&self) -> u32 {
        self.cells[0] + self.cells[1]
    }

    pub fn toxicities(&self) -> u32 {
        self.cells[1] + self.cells[3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Maximize,
    Minimize,
}

/// Scores for the four outcome cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub scores: [f64; 4],
    pub orientation: Orientation,
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        if self.scores.iter().any(|u| !(0.0..=100.0).contains(u)) {
            return config(format!("utility scores must lie in [0, 100], got {:?}", self.scores));
        }
        let [u1, u2, u3, u4] = self.scores;
        let consistent = match self.orientation {
            Orientation::Minimize => u1 <= u2.min(u3) && u4 >= u2.max(u3) && u1 < u4,
            Orientation::Maximize => u1 >= u2.max(u3) && u4 <= u2.min(u3) && u1 > u4,
        };
        if !consistent {
            return config(format!(
                "utility scores {:?} do not rank (efficacy, no toxicity) best and (no efficacy, toxicity) worst under {:?}",
                self.scores, self.orientation
            ));
        }
        Ok(())
    }
}

impl Default for UtilitySpec {
    fn default() -> Self {
        Self { scores: [0.0, 40.0, 60.0, 100.0], orientation: Orientation::Minimize }
    }
}

/// Weight of the linear tradeoff `p_E − w·p_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSpec {
    pub w: f64,
}

/// How doses are scored at interim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BenefitRisk {
    Utility(UtilitySpec),
    Tradeoff(TradeoffSpec),
}

impl BenefitRisk {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Utility(u) => u.validate(),
            Self::Tradeoff(t) if t.w >= 0.0 && t.w.is_finite() => Ok(()),
            Self::Tradeoff(t) => config(format!("tradeoff weight must be nonnegative, got {}", t.w)),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Self::Utility(u) => u.orientation,
            Self::Tradeoff(_) => Orientation::Maximize,
        }
    }

    pub fn score(&self, cells: &CellCounts) -> Result<f64> {
        match self {
            Self::Utility(u) => expected_score(cells, u),
            Self::Tradeoff(t) => {
                let n = cells.n();
                if n == 0 {
                    return domain("cannot score a dose with no patients");
                }
                let n = f64::from(n);
                Ok(tradeoff_score(f64::from(cells.responders()) / n, f64::from(cells.toxicities()) / n, t))
            }
        }
    }
}

impl Default for BenefitRisk {
    fn default() -> Self {
        Self::Utility(UtilitySpec::default())
    }
}

/// Safety and efficacy admissibility thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub phi_t: f64,
    pub phi_e: f64,
    pub c_t: f64,
    pub c_e: f64,
    pub prior: BetaPrior,
}

impl GateSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("phi_t", self.phi_t), ("phi_e", self.phi_e), ("c_t", self.c_t), ("c_e", self.c_e)] {
            if !(v > 0.0 && v < 1.0) {
                return config(format!("gate {name} must lie in (0, 1), got {v}"));
            }
        }
        self.prior.validate()
    }
}

impl Default for GateSpec {
    fn default() -> Self {
        Self { phi_t: 0.3, phi_e: 0.3, c_t: 0.1, c_e: 0.1, prior: BetaPrior::uniform() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Zero-based index of the selected dose.
    Selected(usize),
    EarlyStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimDecision {
    pub verdict: Verdict,
    pub scores: Vec<f64>,
    pub safety: Vec<bool>,
    pub efficacy: Vec<bool>,
}

impl InterimDecision {
    pub fn selected(&self) -> Option<usize> {
        match self.verdict {
            Verdict::Selected(j) => Some(j),
            Verdict::EarlyStop => None,
        }
    }

    pub fn admissible(&self, j: usize) -> bool {
        self.safety[j] && self.efficacy[j]
    }
}

/// Expected cell score `Σ (c_k / n) · u_k` with plug-in cell frequencies.
pub fn expected_score(cells: &CellCounts, spec: &UtilitySpec) -> Result<f64> {
    let n = cells.n();
    if n == 0 {
        return domain("cannot score a dose with no patients");
    }
    let n = f64::from(n);
    Ok(cells.cells.iter().zip(spec.scores.iter()).map(|(&c, &u)| f64::from(c) / n * u).sum())
}

/// Linear efficacy-toxicity tradeoff `p_E − w·p_T`.
pub fn tradeoff_score(p_e_hat: f64, p_t_hat: f64, spec: &TradeoffSpec) -> f64 {
    p_e_hat - spec.w * p_t_hat
}

/// `Pr(p_T < φ_T | data) > C_T`.
pub fn gate_safety(tox_count: u32, n: u32, gate: &GateSpec) -> Result<bool> {
    if n == 0 {
        return domain("safety gate needs at least one patient");
    }
    Ok(beta_tail_below(gate.prior, tox_count, n, gate.phi_t)? > gate.c_t)
}

/// `Pr(p_E > φ_E | data) > C_E`.
pub fn gate_efficacy(resp_count: u32, n: u32, gate: &GateSpec) -> Result<bool> {
    if n == 0 {
        return domain("efficacy gate needs at least one patient");
    }
    Ok(1.0 - beta_tail_below(gate.prior, resp_count, n, gate.phi_e)? > gate.c_e)
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Index of the best score among `eligible` doses; near-exact ties go to the
/// lowest index.
///
/// Ties are detected with a 1e-9 relative tolerance so that algebraically
/// equal scores computed along different floating-point paths (utility vs
/// tradeoff) still tie.
pub fn best_dose(scores: &[f64], orientation: Orientation, eligible: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &s) in scores.iter().enumerate() {
        if !eligible(j) {
            continue;
        }
        best = match best {
            None => Some(j),
            Some(b) => {
                let incumbent = scores[b];
                let better = match orientation {
                    Orientation::Maximize => s > incumbent,
                    Orientation::Minimize => s < incumbent,
                };
                if better && !ties(s, incumbent) {
                    Some(j)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Applies both gates to every dose and picks the best admissible one.
pub fn select_optimal(per_dose: &[CellCounts], scoring: &BenefitRisk, gates: &GateSpec) -> Result<InterimDecision> {
    if per_dose.len() < 2 {
        return domain(format!("interim selection needs at least two doses, got {}", per_dose.len()));
    }
    let mut scores = Vec::with_capacity(per_dose.len());
    let mut safety = Vec::with_capacity(per_dose.len());
    let mut efficacy = Vec::with_capacity(per_dose.len());
    for cells in per_dose {
        scores.push(scoring.score(cells)?);
        safety.push(gate_safety(cells.toxicities(), cells.n(), gates)?);
        efficacy.push(gate_efficacy(cells.responders(), cells.n(), gates)?);
    }
    let verdict = match best_dose(&scores, scoring.orientation(), |j| safety[j] && efficacy[j]) {
        Some(j) => Verdict::Selected(j),
        None => Verdict::EarlyStop,
    };
    Ok(InterimDecision { verdict, scores, safety, efficacy })
}
