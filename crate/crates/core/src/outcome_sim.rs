//! Patient-level outcome generation.
//!
//! Toxicity and efficacy on a dose arm are dichotomised from a bivariate
//! normal latent pair, `Y_T = 1{z_T ≤ Φ⁻¹(p_T)}` and `Y_E = 1{z_E ≤ Φ⁻¹(p_E)}`.
//! Survival is exponential given response: control responders have hazard
//! `λ₁`, non-responders `λ₀`, and a dose arm multiplies both by its hazard
//! ratio. Enrollment is evenly spaced at the accrual rate and follow-up is
//! administratively censored at the analysis time.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::stat_kernel::quadrature::integrate;
use crate::stat_kernel::{quantile_unchecked, std_normal_cdf, std_normal_pdf, Observation, SurvivalSample};

/// True operating values of one dose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoseTruth {
    pub p_e: f64,
    pub p_t: f64,
    /// Hazard ratio against control; applies to responders and non-responders alike.
    #[serde(default = "no_effect")]
    pub hr: f64,
}

fn no_effect() -> f64 {
    1.0
}

impl DoseTruth {
    pub fn validate(&self) -> Result<()> {
        if !unit(self.p_e) || !unit(self.p_t) {
            return domain(format!("dose rates must lie in [0, 1]: p_e = {}, p_t = {}", self.p_e, self.p_t));
        }
        if !(self.hr > 0.0 && self.hr.is_finite()) {
            return domain(format!("hazard ratio must be positive, got {}", self.hr));
        }
        Ok(())
    }
}

/// Concurrent-control truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlTruth {
    pub p_c: f64,
    /// Hazard of control responders (events per month).
    pub lambda_resp: f64,
    /// Hazard of control non-responders (events per month).
    pub lambda_nonresp: f64,
}

impl ControlTruth {
    pub fn validate(&self) -> Result<()> {
        if !unit(self.p_c) {
            return domain(format!("control response rate must lie in [0, 1], got {}", self.p_c));
        }
        if !(self.lambda_resp > 0.0 && self.lambda_nonresp > 0.0) {
            return domain("control hazards must be positive");
        }
        Ok(())
    }

    pub fn hazard(&self, responder: bool) -> f64 {
        if responder {
            self.lambda_resp
        } else {
            self.lambda_nonresp
        }
    }
}

impl Default for ControlTruth {
    fn default() -> Self {
        Self { p_c: 0.2, lambda_resp: 0.26, lambda_nonresp: 0.26 }
    }
}

/// Historical benchmark used by single-arm comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistoricalBenchmark {
    pub p_c: f64,
    /// Exponential hazard (events per month).
    pub hazard: f64,
}

impl HistoricalBenchmark {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_c > 0.0 && self.p_c < 1.0) {
            return domain(format!("historical response rate must lie in (0, 1), got {}", self.p_c));
        }
        if !(self.hazard > 0.0 && self.hazard.is_finite()) {
            return domain(format!("historical hazard must be positive, got {}", self.hazard));
        }
        Ok(())
    }
}

impl Default for HistoricalBenchmark {
    fn default() -> Self {
        Self { p_c: 0.2, hazard: 0.26 }
    }
}

/// Latent correlation between toxicity and efficacy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub rho: f64,
}

impl CopulaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return domain(format!("copula correlation must lie in (-1, 1), got {}", self.rho));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Control,
    /// Zero-based dose index.
    Dose(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    One,
    Two,
}

/// One simulated subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub arm: Arm,
    pub stage: Stage,
    /// Months from trial start.
    pub enroll_time: f64,
    pub y_t: bool,
    pub y_e: bool,
    /// Months from enrollment to the event, before censoring.
    pub raw_event_time: f64,
}

/// Ground truth for one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub doses: Vec<DoseTruth>,
    pub control: ControlTruth,
    pub historical: HistoricalBenchmark,
    pub copula: CopulaSpec,
    /// Zero-based index of the truly optimal dose, `None` in null scenarios.
    pub optimal: Option<usize>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.doses.len() < 2 {
            return config(format!("a scenario needs at least two doses, got {}", self.doses.len()));
        }
        for d in &self.doses {
            d.validate()?;
        }
        self.control.validate()?;
        self.historical.validate()?;
        self.copula.validate()?;
        if let Some(k) = self.optimal {
            if k >= self.doses.len() {
                return config(format!("optimal dose {} is out of range", k + 1));
            }
        }
        Ok(())
    }

    pub fn dose_count(&self) -> usize {
        self.doses.len()
    }

    /// Whether dose `j` has no response-rate benefit over the true control.
    pub fn response_null(&self, j: usize) -> bool {
        self.doses[j].p_e <= self.control.p_c
    }

    /// Whether dose `j` has no survival benefit over the true control: its
    /// hazard ratio is at least one and any response shift does not move
    /// patients toward the lower-hazard group.
    pub fn survival_null(&self, j: usize) -> bool {
        let d = &self.doses[j];
        let shift = (d.p_e - self.control.p_c) * (self.control.lambda_nonresp - self.control.lambda_resp);
        d.hr >= 1.0 && shift <= 0.0
    }
}

fn unit(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn latent_threshold(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        quantile_unchecked(p)
    }
}

/// Precomputed latent thresholds for repeated draws on one dose.
#[derive(Debug, Clone, Copy)]
pub struct DoseSampler {
    tox_threshold: f64,
    eff_threshold: f64,
    rho: f64,
    rho_complement: f64,
}

impl DoseSampler {
    pub fn new(dose: &DoseTruth, copula: CopulaSpec) -> Self {
        Self {
            tox_threshold: latent_threshold(dose.p_t),
            eff_threshold: latent_threshold(dose.p_e),
            rho: copula.rho,
            rho_complement: (1.0 - copula.rho * copula.rho).sqrt(),
        }
    }

    /// Draws `(y_T, y_E)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, bool) {
        let z_t: f64 = StandardNormal.sample(rng);
        let e: f64 = StandardNormal.sample(rng);
        let z_e = self.rho * z_t + self.rho_complement * e;
        (z_t <= self.tox_threshold, z_e <= self.eff_threshold)
    }
}

/// True outcome-cell probabilities of a dose under the copula, in the cell
/// order of [`crate::dose_select::CellCounts`].
pub fn cell_probabilities(dose: &DoseTruth, copula: CopulaSpec) -> [f64; 4] {
    let both = joint_lower(dose.p_t, dose.p_e, copula.rho);
    let eff_only = dose.p_e - both;
    let tox_only = dose.p_t - both;
    let neither = 1.0 - dose.p_e - dose.p_t + both;
    [eff_only, both, neither, tox_only].map(|p| p.clamp(0.0, 1.0))
}

/// `Pr(z_T ≤ Φ⁻¹(p_t), z_E ≤ Φ⁻¹(p_e))` for a standard bivariate normal
/// with correlation `rho`.
fn joint_lower(p_t: f64, p_e: f64, rho: f64) -> f64 {
    if rho == 0.0 || p_t <= 0.0 || p_e <= 0.0 || p_t >= 1.0 || p_e >= 1.0 {
        return p_t * p_e;
    }
    let a = quantile_unchecked(p_t);
    let b = quantile_unchecked(p_e);
    let s = (1.0 - rho * rho).sqrt();
    let integrand = |u: f64| std_normal_pdf(u) * std_normal_cdf((b - rho * u) / s);
    let lower = (-12.0_f64).min(a - 1.0);
    integrate(integrand, lower, a, 1e-13).clamp(0.0, p_t.min(p_e))
}

/// Draws `(y_T, y_E)` for one patient on `dose`.
pub fn draw_dose_outcome<R: Rng + ?Sized>(dose: &DoseTruth, copula: CopulaSpec, rng: &mut R) -> (bool, bool) {
    DoseSampler::new(dose, copula).draw(rng)
}

/// Draws the response of one control patient.
pub fn draw_control_response<R: Rng + ?Sized>(control: &ControlTruth, rng: &mut R) -> bool {
    rng.random::<f64>() < control.p_c
}

/// Exponential event time with rate `λ(y_E) · hr`; pass `hr = 1` for control.
pub fn draw_survival_time<R: Rng + ?Sized>(y_e: bool, control: &ControlTruth, hr: f64, rng: &mut R) -> f64 {
    let rate = control.hazard(y_e) * hr;
    let e: f64 = Exp1.sample(rng);
    (e / rate).max(f64::MIN_POSITIVE)
}

/// Evenly spaced enrollment: `start + k / accrual_rate` for `k = 1..=n`.
pub fn enroll_times(n: usize, accrual_rate: f64, start: f64) -> Vec<f64> {
    (1..=n).map(|k| start + k as f64 / accrual_rate).collect()
}

/// Administrative censoring at calendar time `analysis_time`.
///
/// Subjects with no follow-up by then (enrolled at or after the analysis) are
/// dropped.
pub fn censor_at<'a, I>(records: I, analysis_time: f64) -> SurvivalSample
where
    I: IntoIterator<Item = &'a PatientRecord>,
{
    let obs = records
        .into_iter()
        .filter_map(|r| {
            let window = analysis_time - r.enroll_time;
            (window > 0.0).then(|| Observation {
                time: r.raw_event_time.min(window),
                event: r.raw_event_time <= window,
            })
        })
        .collect();
    SurvivalSample::new(obs).expect("censored times are positive by construction")
}
