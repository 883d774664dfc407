use serde::{Deserialize, Serialize};

use super::normal::std_normal_sf;
use super::TestOutcome;
use crate::error::{domain, Result};

/// A right-censored observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Follow-up time in months.
    pub time: f64,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
}

/// Right-censored time-to-event data for one arm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    obs: Vec<Observation>,
}

impl SurvivalSample {
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if let Some(bad) = obs.iter().find(|o| !(o.time > 0.0 && o.time.is_finite())) {
            return domain(format!("survival times must be positive and finite, got {}", bad.time));
        }
        Ok(Self { obs })
    }

    pub fn from_pairs(pairs: &[(f64, bool)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(time, event)| Observation { time, event }).collect())
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn events(&self) -> usize {
        self.obs.iter().filter(|o| o.event).count()
    }

    pub fn total_time(&self) -> f64 {
        self.obs.iter().map(|o| o.time).sum()
    }
}

/// Unweighted two-sample log-rank test.
///
/// `z = (E − O) / √V` for the treatment arm, so longer survival on treatment
/// gives `z > 0`; `p = 1 − Φ(z)`. With no events at all the result is
/// `z = 0`, `p = 0.5`.
pub fn logrank_two_sample(trt: &SurvivalSample, ctl: &SurvivalSample) -> Result<TestOutcome> {
    if trt.is_empty() || ctl.is_empty() {
        return domain("log-rank test needs non-empty arms");
    }
    // (time, is_trt, event); events sort before censorings at equal times so
    // that a subject censored at t still counts as at risk at t.
    let mut pooled: Vec<(f64, bool, bool)> = trt
        .obs
        .iter()
        .map(|o| (o.time, true, o.event))
        .chain(ctl.obs.iter().map(|o| (o.time, false, o.event)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut at_risk = pooled.len() as f64;
    let mut at_risk_trt = trt.len() as f64;
    let mut observed_minus_expected = 0.0;
    let mut variance = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        let (mut d, mut d_trt, mut leaving, mut leaving_trt) = (0.0, 0.0, 0.0, 0.0);
        while i < pooled.len() && pooled[i].0 == t {
            let (_, is_trt, event) = pooled[i];
            leaving += 1.0;
            if is_trt {
                leaving_trt += 1.0;
            }
            if event {
                d += 1.0;
                if is_trt {
                    d_trt += 1.0;
                }
            }
            i += 1;
        }
        if d > 0.0 {
            let share = at_risk_trt / at_risk;
            observed_minus_expected += d_trt - d * share;
            if at_risk > 1.0 {
                variance += d * share * (1.0 - share) * (at_risk - d) / (at_risk - 1.0);
            }
        }
        at_risk -= leaving;
        at_risk_trt -= leaving_trt;
    }
    if variance <= 0.0 {
        return Ok(TestOutcome::null());
    }
    let z = -observed_minus_expected / variance.sqrt();
    Ok(TestOutcome { z, p: std_normal_sf(z) })
}

/// One-sample log-rank test against a known exponential hazard.
///
/// `E = hazard · Σ follow-up`, `O` = observed events, `z = (E − O)/√E`, so
/// fewer deaths than expected gives `z > 0`.
pub fn logrank_one_sample(sample: &SurvivalSample, hazard: f64) -> Result<TestOutcome> {
    if !(hazard > 0.0 && hazard.is_finite()) {
        return domain(format!("reference hazard must be positive, got {hazard}"));
    }
    if sample.is_empty() {
        return domain("one-sample log-rank test needs a non-empty sample");
    }
    let expected = hazard * sample.total_time();
    if expected <= 0.0 {
        return domain("one-sample log-rank test needs positive follow-up");
    }
    let observed = sample.events() as f64;
    let z = (expected - observed) / expected.sqrt();
    Ok(TestOutcome { z, p: std_normal_sf(z) })
}
