//! Numerical and statistical primitives: normal distribution functions, Beta
//! posterior tails, one-sided tests for proportions and survival, and
//! multiplicity-adjusted p-values for intersection hypotheses.
//!
//! Every function here is pure; p-values are one-sided with the alternative
//! "treatment better than comparator".

mod beta;
mod dunnett;
mod logrank;
mod normal;
mod proportions;
pub mod quadrature;

pub use beta::{beta_tail_below, BetaPrior};
pub use dunnett::{dunnett_maxz_pvalue, sidak_min_p};
pub use logrank::{logrank_one_sample, logrank_two_sample, Observation, SurvivalSample};
pub use normal::{
    std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf, std_normal_upper_quantile,
};
pub use proportions::{exact_binom_pvalue, one_sided_prop_pvalue, one_sided_prop_test};

pub(crate) use normal::quantile_unchecked;

/// A one-sided test result: signed statistic and its upper-tail p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub z: f64,
    pub p: f64,
}

impl TestOutcome {
    /// "No evidence": `z = 0`, `p = 0.5`.
    pub const fn null() -> Self {
        Self { z: 0.0, p: 0.5 }
    }
}
