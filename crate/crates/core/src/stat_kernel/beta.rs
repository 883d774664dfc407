use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{domain, Result};

/// Beta prior on a binomial probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl BetaPrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let prior = Self { a, b };
        prior.validate()?;
        Ok(prior)
    }

    /// The flat Beta(1, 1) prior.
    pub const fn uniform() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return domain(format!(
                "beta prior parameters must be positive, got ({}, {})",
                self.a, self.b
            ));
        }
        Ok(())
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Posterior probability `Pr(p < threshold | successes of n)` under a Beta prior,
/// i.e. `I_threshold(a + successes, b + n − successes)`.
pub fn beta_tail_below(prior: BetaPrior, successes: u32, n: u32, threshold: f64) -> Result<f64> {
    prior.validate()?;
    if successes > n {
        return domain(format!("{successes} successes out of {n} trials"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return domain(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    let a = prior.a + f64::from(successes);
    let b = prior.b + f64::from(n - successes);
    Ok(beta_reg(a, b, threshold).clamp(0.0, 1.0))
}
