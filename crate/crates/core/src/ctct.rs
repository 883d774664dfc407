//! Combination test with closed testing for the dose selected at interim.
//!
//! For a selected dose `s` among `J`, every intersection hypothesis `H_I` with
//! `s ∈ I` is tested. Its stage-1 p-value comes from a multiplicity-adjusted
//! test over `I` (Dunnett when the doses share a concurrent control, Šidák
//! when they are compared to a fixed benchmark independently); its stage-2
//! p-value is the selected dose's stage-2 p-value. The two are combined with
//! the weighted inverse-normal rule
//!
//! ```text
//! Z_I = √(n₁/(n₁+n₂))·Φ⁻¹(1 − P₁,I) + √(n₂/(n₁+n₂))·Φ⁻¹(1 − P₂,I)
//! ```
//!
//! and `H_s` is rejected only if every `Z_I > Φ⁻¹(1 − α)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::rng::substream;
use crate::stat_kernel::{
    dunnett_maxz_pvalue, quantile_unchecked, sidak_min_p, std_normal_sf, TestOutcome,
};

/// Largest dose count for which intersections are enumerated.
pub const MAX_DOSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationSpec {
    /// Per-arm stage-1 sample size.
    pub n1: u32,
    /// Per-arm stage-2 sample size.
    pub n2: u32,
    /// One-sided significance level.
    pub alpha: f64,
    /// p-values are clamped to `[ε, 1 − ε]` before the normal quantile.
    pub epsilon: f64,
}

impl CombinationSpec {
    pub const DEFAULT_EPSILON: f64 = 1e-10;

    pub fn new(n1: u32, n2: u32, alpha: f64) -> Result<Self> {
        let spec = Self { n1, n2, alpha, epsilon: Self::DEFAULT_EPSILON };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return config(format!("stage sizes must be at least 1, got ({}, {})", self.n1, self.n2));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return config(format!("alpha must lie in (0, 0.5), got {}", self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1e-6) {
            return config(format!("clamp epsilon must lie in (0, 1e-6), got {}", self.epsilon));
        }
        Ok(())
    }

    /// Inverse-normal weights `(w1, w2)` with `w1² + w2² = 1`.
    pub fn weights(&self) -> (f64, f64) {
        let (n1, n2) = (f64::from(self.n1), f64::from(self.n2));
        ((n1 / (n1 + n2)).sqrt(), (n2 / (n1 + n2)).sqrt())
    }

    pub fn critical_value(&self) -> f64 {
        -quantile_unchecked(self.alpha)
    }
}

/// Multiplicity adjustment used for stage-1 intersection p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntersectionMethod {
    /// Equicorrelated max-z test; `rho` is the correlation between dose statistics.
    Dunnett { rho: f64 },
    /// Šidák-adjusted minimum p-value for independent comparisons.
    Sidak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionResult {
    /// Zero-based dose indices in the intersection.
    pub subset: Vec<usize>,
    pub p1: f64,
    pub p2: f64,
    pub z: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalVerdict {
    pub rejected: bool,
    pub intersections: Vec<IntersectionResult>,
}

/// All subsets of `{0, …, dose_count−1}` that contain `selected`, ordered by
/// size and then lexicographically.
pub fn intersections_containing(selected: usize, dose_count: usize) -> Result<Vec<Vec<usize>>> {
    if selected >= dose_count || dose_count > MAX_DOSES {
        return domain(format!("cannot enumerate intersections for dose {selected} of {dose_count}"));
    }
    let others: Vec<usize> = (0..dose_count).filter(|&j| j != selected).collect();
    let mut subsets: Vec<Vec<usize>> = (0..1_usize << others.len())
        .map(|mask| {
            let mut s: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            s.push(selected);
            s.sort_unstable();
            s
        })
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(subsets)
}

/// Stage-1 p-value of the intersection hypothesis over `subset`.
pub fn stage1_intersection_pvalue(subset: &[usize], per_dose: &[TestOutcome], method: IntersectionMethod) -> Result<f64> {
    if subset.is_empty() {
        return domain("empty intersection");
    }
    if let Some(&j) = subset.iter().find(|&&j| j >= per_dose.len()) {
        return domain(format!("no stage-1 statistic for dose {}", j + 1));
    }
    match method {
        IntersectionMethod::Dunnett { rho } => {
            let z_max = subset.iter().map(|&j| per_dose[j].z).fold(f64::NEG_INFINITY, f64::max);
            if subset.len() == 1 {
                return Ok(std_normal_sf(z_max));
            }
            dunnett_maxz_pvalue(z_max, subset.len(), rho)
        }
        IntersectionMethod::Sidak => {
            let p_min = subset.iter().map(|&j| per_dose[j].p).fold(f64::INFINITY, f64::min);
            sidak_min_p(p_min, subset.len())
        }
    }
}

/// Weighted inverse-normal combination of two stage-wise p-values.
pub fn combine(p1: f64, p2: f64, spec: &CombinationSpec) -> f64 {
    let (w1, w2) = spec.weights();
    let clamp = |p: f64| p.clamp(spec.epsilon, 1.0 - spec.epsilon);
    w1 * -quantile_unchecked(clamp(p1)) + w2 * -quantile_unchecked(clamp(p2))
}

/// Closed combination test of the selected dose.
pub fn closed_test(
    selected: usize,
    per_dose: &[TestOutcome],
    stage2_p: f64,
    method: IntersectionMethod,
    spec: &CombinationSpec,
) -> Result<FinalVerdict> {
    if !(0.0..=1.0).contains(&stage2_p) {
        return domain(format!("stage-2 p-value must lie in [0, 1], got {stage2_p}"));
    }
    let critical = spec.critical_value();
    let mut intersections = Vec::new();
    for subset in intersections_containing(selected, per_dose.len())? {
        let p1 = stage1_intersection_pvalue(&subset, per_dose, method)?;
        let z = combine(p1, stage2_p, spec);
        intersections.push(IntersectionResult { subset, p1, p2: stage2_p, z, rejected: z > critical });
    }
    let rejected = intersections.iter().all(|r| r.rejected);
    Ok(FinalVerdict { rejected, intersections })
}

/// Interim rule used by [`global_null_rejection_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionRule {
    /// The dose with the largest stage-1 statistic (the adversarial choice).
    LargestZ,
    /// The dose with the smallest stage-1 statistic.
    SmallestZ,
    /// A dose drawn uniformly at random.
    Random,
    /// The largest statistic if it exceeds 1, otherwise the first dose.
    Threshold,
}

impl SelectionRule {
    fn pick<R: Rng + ?Sized>(self, z: &[f64], rng: &mut R) -> usize {
        let argmax = |key: &dyn Fn(f64) -> f64| {
            (0..z.len()).fold(0, |best, j| if key(z[j]) > key(z[best]) { j } else { best })
        };
        match self {
            Self::LargestZ => argmax(&|v| v),
            Self::SmallestZ => argmax(&|v| -v),
            Self::Random => rng.random_range(0..z.len()),
            Self::Threshold => {
                let j = argmax(&|v| v);
                if z[j] > 1.0 {
                    j
                } else {
                    0
                }
            }
        }
    }
}

/// Monte Carlo rejection rate of the closed combination test under the global
/// null.
///
/// Stage-1 statistics are equicorrelated normals (correlation `rho` for the
/// Dunnett method, independent for Šidák) and the stage-2 p-value is uniform.
/// Replication `r` uses substream `(seed, r)`.
pub fn global_null_rejection_rate(
    dose_count: usize,
    method: IntersectionMethod,
    spec: &CombinationSpec,
    rule: SelectionRule,
    reps: u64,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    let rho = match method {
        IntersectionMethod::Dunnett { rho } => rho,
        IntersectionMethod::Sidak => 0.0,
    };
    let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
    let rejections: Result<Vec<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let u: f64 = StandardNormal.sample(&mut rng);
            let z: Vec<f64> = (0..dose_count)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    shared * u + own * e
                })
                .collect();
            let stage1: Vec<TestOutcome> = z.iter().map(|&z| TestOutcome { z, p: std_normal_sf(z) }).collect();
            let p2: f64 = rng.random();
            let selected = rule.pick(&z, &mut rng);
            Ok(closed_test(selected, &stage1, p2, method, spec)?.rejected)
        })
        .collect();
    let count = rejections?.into_iter().filter(|&r| r).count();
    Ok(count as f64 / reps as f64)
}
