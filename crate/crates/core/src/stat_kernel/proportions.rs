use statrs::function::factorial::ln_binomial;

use super::normal::std_normal_sf;
use super::TestOutcome;
use crate::error::{domain, Result};

/// One-sided pooled-variance z-test of `H0: p_trt ≤ p_ctl`.
///
/// Returns the statistic together with `1 − Φ(z)`. When the pooled variance
/// is zero (both arms all failures or all successes) the result is `z = 0`,
/// `p = 0.5`.
pub fn one_sided_prop_test(x_trt: u32, n_trt: u32, x_ctl: u32, n_ctl: u32) -> Result<TestOutcome> {
    if n_trt == 0 || n_ctl == 0 {
        return domain("two-sample proportion test needs non-empty arms");
    }
    if x_trt > n_trt || x_ctl > n_ctl {
        return domain(format!(
            "counts exceed sample sizes: {x_trt}/{n_trt} vs {x_ctl}/{n_ctl}"
        ));
    }
    let (nt, nc) = (f64::from(n_trt), f64::from(n_ctl));
    let pooled = f64::from(x_trt + x_ctl) / (nt + nc);
    let var = pooled * (1.0 - pooled) * (1.0 / nt + 1.0 / nc);
    if var <= 0.0 {
        return Ok(TestOutcome::null());
    }
    let z = (f64::from(x_trt) / nt - f64::from(x_ctl) / nc) / var.sqrt();
    Ok(TestOutcome { z, p: std_normal_sf(z) })
}

/// p-value of [`one_sided_prop_test`].
pub fn one_sided_prop_pvalue(x_trt: u32, n_trt: u32, x_ctl: u32, n_ctl: u32) -> Result<f64> {
    one_sided_prop_test(x_trt, n_trt, x_ctl, n_ctl).map(|t| t.p)
}

/// Exact upper tail `P(X ≥ x)` for `X ~ Binomial(n, p0)`.
pub fn exact_binom_pvalue(x: u32, n: u32, p0: f64) -> Result<f64> {
    if x > n {
        return domain(format!("{x} successes out of {n} trials"));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return domain(format!("null rate must lie in (0, 1), got {p0}"));
    }
    if x == 0 {
        return Ok(1.0);
    }
    let (ln_p, ln_q) = (p0.ln(), (-p0).ln_1p());
    let n64 = u64::from(n);
    let tail: f64 = (x..=n)
        .map(|k| {
            let k64 = u64::from(k);
            (ln_binomial(n64, k64) + f64::from(k) * ln_p + f64::from(n - k) * ln_q).exp()
        })
        .sum();
    Ok(tail.min(1.0))
}
