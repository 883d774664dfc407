//! One simulated seamless phase 2-3 trial, from first enrollment to final
//! analysis, for Designs A–D and their conventional counterparts.
//!
//! Calendar: patients are enrolled one at a time at the accrual rate,
//! round-robin over the open arms. The interim happens when the last stage-1
//! response is assessable; stage 2 opens immediately afterwards on the
//! selected dose (plus control where the design has one). Survival designs
//! analyse once the last stage-2 patient has `followup_min` months of
//! potential follow-up; response designs once the last stage-2 response is
//! assessable.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ctct::{closed_test, CombinationSpec, FinalVerdict, IntersectionMethod};
use crate::dose_select::{select_optimal, BenefitRisk, CellCounts, GateSpec, InterimDecision};
use crate::error::{config, Result};
use crate::outcome_sim::{
    censor_at, draw_control_response, draw_survival_time, enroll_times, Arm, DoseSampler, PatientRecord,
    ScenarioSpec, Stage,
};
use crate::stat_kernel::{
    exact_binom_pvalue, logrank_one_sample, logrank_two_sample, one_sided_prop_test, quantile_unchecked,
    TestOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    A,
    B,
    C,
    D,
}

impl Design {
    pub fn stage1_control(self) -> bool {
        matches!(self, Self::A | Self::C)
    }

    pub fn stage2_control(self) -> bool {
        !matches!(self, Self::D)
    }

    /// Whether the final analysis is on the time-to-event endpoint.
    pub fn survival_endpoint(self) -> bool {
        matches!(self, Self::A | Self::B)
    }

    pub fn stage1_arms(self, dose_count: usize) -> usize {
        dose_count + usize::from(self.stage1_control())
    }

    pub fn stage2_arms(self) -> usize {
        1 + usize::from(self.stage2_control())
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
            Self::D => "D",
        };
        f.write_str(s)
    }
}

/// Data that feed the stage-1 p-values of survival designs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage1Endpoint {
    /// Stage-1 cohort survival, censored at the final analysis.
    #[default]
    Survival,
    /// Stage-1 responses as observed at interim.
    Response,
}

/// Whether stage-1 data enter the final inference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialMode {
    /// Closed combination test over both stages.
    #[default]
    Seamless,
    /// Separate phase 2 and phase 3: only stage-2 data are tested, at level α.
    Conventional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub design: Design,
    /// Per-arm stage-1 sample size.
    pub n1: u32,
    /// Per-arm stage-2 sample size.
    pub n2: u32,
    /// One-sided significance level.
    pub alpha: f64,
    pub gates: GateSpec,
    pub scoring: BenefitRisk,
    /// Patients per month across all open arms.
    pub accrual_rate: f64,
    /// Months from enrollment until response is assessable.
    pub assess_time: f64,
    /// Minimum potential follow-up (months) of the last stage-2 patient in
    /// survival designs.
    pub followup_min: f64,
    pub stage1_endpoint: Stage1Endpoint,
}

impl DesignConfig {
    pub fn new(design: Design, n1: u32, n2: u32) -> Self {
        Self {
            design,
            n1,
            n2,
            alpha: 0.05,
            gates: GateSpec::default(),
            scoring: BenefitRisk::default(),
            accrual_rate: 2.0,
            assess_time: 0.0,
            followup_min: 12.0,
            stage1_endpoint: Stage1Endpoint::Survival,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.combination_spec().validate()?;
        self.gates.validate()?;
        self.scoring.validate()?;
        if !(self.accrual_rate > 0.0 && self.accrual_rate.is_finite()) {
            return config(format!("accrual rate must be positive, got {}", self.accrual_rate));
        }
        if !(self.assess_time >= 0.0 && self.assess_time.is_finite()) {
            return config(format!("assessment time must be nonnegative, got {}", self.assess_time));
        }
        if !(self.followup_min >= 0.0 && self.followup_min.is_finite()) {
            return config(format!("minimum follow-up must be nonnegative, got {}", self.followup_min));
        }
        if self.design.survival_endpoint() && self.followup_min == 0.0 && self.assess_time == 0.0 {
            return config("survival designs need positive follow-up after the last enrollment");
        }
        Ok(())
    }

    pub fn validate_for(&self, scenario: &ScenarioSpec) -> Result<()> {
        self.validate()?;
        scenario.validate()?;
        if scenario.dose_count() > crate::ctct::MAX_DOSES {
            return config(format!("at most {} doses are supported", crate::ctct::MAX_DOSES));
        }
        Ok(())
    }

    pub fn combination_spec(&self) -> CombinationSpec {
        CombinationSpec { n1: self.n1, n2: self.n2, alpha: self.alpha, epsilon: CombinationSpec::DEFAULT_EPSILON }
    }

    /// Correlation between two dose-vs-shared-control statistics,
    /// `n_d / (n_d + n_c)`; equal allocation gives 0.5.
    pub fn dunnett_rho(&self) -> f64 {
        let (nd, nc) = (f64::from(self.n1), f64::from(self.n1));
        nd / (nd + nc)
    }

    pub fn intersection_method(&self) -> IntersectionMethod {
        if self.design.stage1_control() {
            IntersectionMethod::Dunnett { rho: self.dunnett_rho() }
        } else {
            IntersectionMethod::Sidak
        }
    }

    pub fn stage1_total(&self, dose_count: usize) -> u32 {
        self.design.stage1_arms(dose_count) as u32 * self.n1
    }

    pub fn stage2_total(&self) -> u32 {
        self.design.stage2_arms() as u32 * self.n2
    }

    /// Enrollment of a trial that runs to completion.
    pub fn planned_total(&self, dose_count: usize) -> u32 {
        self.stage1_total(dose_count) + self.stage2_total()
    }

    /// Whether a rejection for dose `j` would be a false discovery.
    pub fn is_null_dose(&self, scenario: &ScenarioSpec, j: usize) -> bool {
        if self.design.survival_endpoint() {
            scenario.survival_null(j)
        } else {
            scenario.response_null(j)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FinalOutcome {
    StoppedEarly,
    ClosedTest(FinalVerdict),
    StageTwoOnly { p: f64, rejected: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub interim: InterimDecision,
    pub outcome: FinalOutcome,
    pub total_enrolled: u32,
    /// Calendar month of the interim analysis.
    pub interim_time: f64,
    /// Calendar month of the last analysis performed.
    pub duration: f64,
    /// Stage-2 p-value of the selected dose, if stage 2 ran.
    pub stage2_p: Option<f64>,
}

impl TrialResult {
    pub fn selected(&self) -> Option<usize> {
        self.interim.selected()
    }

    pub fn rejected(&self) -> bool {
        match &self.outcome {
            FinalOutcome::StoppedEarly => false,
            FinalOutcome::ClosedTest(v) => v.rejected,
            FinalOutcome::StageTwoOnly { rejected, .. } => *rejected,
        }
    }

    pub fn stopped_early(&self) -> bool {
        matches!(self.outcome, FinalOutcome::StoppedEarly)
    }
}

/// Simulates one seamless trial.
pub fn run_trial<R: Rng + ?Sized>(config: &DesignConfig, scenario: &ScenarioSpec, rng: &mut R) -> Result<TrialResult> {
    simulate(config, scenario, TrialMode::Seamless, rng)
}

/// Simulates the conventional counterpart: identical stage 1 and selection,
/// but the final decision uses stage-2 data alone.
pub fn run_conventional<R: Rng + ?Sized>(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    rng: &mut R,
) -> Result<TrialResult> {
    simulate(config, scenario, TrialMode::Conventional, rng)
}

pub fn simulate<R: Rng + ?Sized>(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    mode: TrialMode,
    rng: &mut R,
) -> Result<TrialResult> {
    config.validate_for(scenario)?;
    let doses = scenario.dose_count();
    let design = config.design;
    let samplers: Vec<DoseSampler> = scenario.doses.iter().map(|d| DoseSampler::new(d, scenario.copula)).collect();
    let patient = |arm: Arm, stage: Stage, enroll_time: f64, rng: &mut R| -> PatientRecord {
        let (y_t, y_e, hr) = match arm {
            Arm::Dose(j) => {
                let (y_t, y_e) = samplers[j].draw(rng);
                (y_t, y_e, scenario.doses[j].hr)
            }
            Arm::Control => (false, draw_control_response(&scenario.control, rng), 1.0),
        };
        let raw_event_time = draw_survival_time(y_e, &scenario.control, hr, rng);
        PatientRecord { arm, stage, enroll_time, y_t, y_e, raw_event_time }
    };

    // Stage 1: slot j holds dose j, slot `doses` the control.
    let mut stage1_arms: Vec<Arm> = (0..doses).map(Arm::Dose).collect();
    if design.stage1_control() {
        stage1_arms.push(Arm::Control);
    }
    let n1 = config.n1 as usize;
    let times1 = enroll_times(stage1_arms.len() * n1, config.accrual_rate, 0.0);
    let mut stage1: Vec<Vec<PatientRecord>> = vec![Vec::with_capacity(n1); doses + 1];
    for (k, &t) in times1.iter().enumerate() {
        let arm = stage1_arms[k % stage1_arms.len()];
        stage1[slot(arm, doses)].push(patient(arm, Stage::One, t, rng));
    }
    let interim_time = times1.last().copied().unwrap_or(0.0) + config.assess_time;

    let cells: Vec<CellCounts> = stage1[..doses]
        .iter()
        .map(|arm| CellCounts::from_outcomes(arm.iter().map(|r| (r.y_t, r.y_e))))
        .collect();
    let interim = select_optimal(&cells, &config.scoring, &config.gates)?;
    let stage1_total = times1.len() as u32;
    let Some(selected) = interim.selected() else {
        return Ok(TrialResult {
            interim,
            outcome: FinalOutcome::StoppedEarly,
            total_enrolled: stage1_total,
            interim_time,
            duration: interim_time,
            stage2_p: None,
        });
    };

    // Stage 2.
    let mut stage2_arms = vec![Arm::Dose(selected)];
    if design.stage2_control() {
        stage2_arms.push(Arm::Control);
    }
    let n2 = config.n2 as usize;
    let times2 = enroll_times(stage2_arms.len() * n2, config.accrual_rate, interim_time);
    let mut stage2_dose = Vec::with_capacity(n2);
    let mut stage2_control = Vec::with_capacity(n2);
    for (k, &t) in times2.iter().enumerate() {
        let arm = stage2_arms[k % stage2_arms.len()];
        let rec = patient(arm, Stage::Two, t, rng);
        match arm {
            Arm::Dose(_) => stage2_dose.push(rec),
            Arm::Control => stage2_control.push(rec),
        }
    }
    let last_enrollment = times2.last().copied().unwrap_or(interim_time);
    let final_time = last_enrollment
        + if design.survival_endpoint() {
            config.followup_min.max(config.assess_time)
        } else {
            config.assess_time
        };

    let stage2 = match design {
        Design::A | Design::B => {
            logrank_two_sample(&censor_at(&stage2_dose, final_time), &censor_at(&stage2_control, final_time))?
        }
        Design::C => response_vs_control(&stage2_dose, &stage2_control)?,
        Design::D => response_vs_benchmark(&stage2_dose, scenario.historical.p_c)?,
    };

    let outcome = match mode {
        TrialMode::Conventional => FinalOutcome::StageTwoOnly { p: stage2.p, rejected: stage2.p < config.alpha },
        TrialMode::Seamless => {
            let evidence = stage1_evidence(config, scenario, &stage1, final_time)?;
            let verdict = closed_test(
                selected,
                &evidence,
                stage2.p,
                config.intersection_method(),
                &config.combination_spec(),
            )?;
            FinalOutcome::ClosedTest(verdict)
        }
    };

    Ok(TrialResult {
        interim,
        outcome,
        total_enrolled: stage1_total + times2.len() as u32,
        interim_time,
        duration: final_time,
        stage2_p: Some(stage2.p),
    })
}

fn slot(arm: Arm, doses: usize) -> usize {
    match arm {
        Arm::Dose(j) => j,
        Arm::Control => doses,
    }
}

fn responders(records: &[PatientRecord]) -> u32 {
    records.iter().filter(|r| r.y_e).count() as u32
}

fn response_vs_control(trt: &[PatientRecord], ctl: &[PatientRecord]) -> Result<TestOutcome> {
    one_sided_prop_test(responders(trt), trt.len() as u32, responders(ctl), ctl.len() as u32)
}

fn response_vs_benchmark(trt: &[PatientRecord], p0: f64) -> Result<TestOutcome> {
    let p = exact_binom_pvalue(responders(trt), trt.len() as u32, p0)?;
    let eps = CombinationSpec::DEFAULT_EPSILON;
    Ok(TestOutcome { z: -quantile_unchecked(p.clamp(eps, 1.0 - eps)), p })
}

/// Per-dose stage-1 statistics against the design's comparator.
fn stage1_evidence(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    stage1: &[Vec<PatientRecord>],
    final_time: f64,
) -> Result<Vec<TestOutcome>> {
    let doses = scenario.dose_count();
    let control = &stage1[doses];
    let use_survival = config.stage1_endpoint == Stage1Endpoint::Survival;
    (0..doses)
        .map(|j| {
            let arm = &stage1[j];
            match config.design {
                Design::A if use_survival => {
                    logrank_two_sample(&censor_at(arm, final_time), &censor_at(control, final_time))
                }
                Design::B if use_survival => logrank_one_sample(&censor_at(arm, final_time), scenario.historical.hazard),
                Design::A | Design::C => response_vs_control(arm, control),
                Design::B | Design::D => response_vs_benchmark(arm, scenario.historical.p_c),
            }
        })
        .collect()
}
