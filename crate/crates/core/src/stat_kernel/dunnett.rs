use super::normal::{std_normal_cdf, std_normal_pdf, std_normal_sf};
use super::quadrature::integrate;
use crate::error::{domain, Result};

const LATENT_RANGE: f64 = 8.0;
const QUAD_TOL: f64 = 1e-10;

/// Upper-tail probability of the maximum of `m` equicorrelated standard
/// normals: `1 − P(max_j Z_j ≤ z_obs)` with `corr(Z_i, Z_j) = rho`.
///
/// Uses the latent-factor representation `Z_j = √ρ·U + √(1−ρ)·E_j`, which
/// reduces the m-variate probability to a one-dimensional integral over `U`.
/// The complement `1 − Φ(x)^m` is integrated directly so that small p-values
/// keep their relative precision.
pub fn dunnett_maxz_pvalue(z_obs: f64, m: usize, rho: f64) -> Result<f64> {
    if m == 0 {
        return domain("Dunnett p-value needs at least one comparison");
    }
    if !(0.0..1.0).contains(&rho) {
        return domain(format!("Dunnett correlation must lie in [0, 1), got {rho}"));
    }
    if z_obs.is_nan() {
        return domain("Dunnett statistic is NaN");
    }
    if z_obs == f64::INFINITY {
        return Ok(0.0);
    }
    if z_obs == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    let mf = m as f64;
    let all_below_complement = |x: f64| -(mf * (-std_normal_sf(x)).ln_1p()).exp_m1();
    if m == 1 {
        return Ok(std_normal_sf(z_obs));
    }
    if rho == 0.0 {
        return Ok(all_below_complement(z_obs));
    }
    let loading = rho.sqrt();
    let scale = (1.0 - rho).sqrt();
    let p = integrate(
        |u| std_normal_pdf(u) * all_below_complement((z_obs - loading * u) / scale),
        -LATENT_RANGE,
        LATENT_RANGE,
        QUAD_TOL,
    );
    // Latent mass outside ±8 (≈1.2e-15) is attributed to the complement.
    let outside = 2.0 * std_normal_cdf(-LATENT_RANGE);
    Ok((p + 0.5 * outside).clamp(0.0, 1.0))
}

/// Šidák-adjusted minimum p-value over `m` independent tests, `1 − (1 − p)^m`.
pub fn sidak_min_p(p_min: f64, m: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_min) {
        return domain(format!("p-value must lie in [0, 1], got {p_min}"));
    }
    if m == 0 {
        return domain("Šidák adjustment needs at least one test");
    }
    Ok((-((m as f64) * (-p_min).ln_1p()).exp_m1()).clamp(0.0, 1.0))
}
