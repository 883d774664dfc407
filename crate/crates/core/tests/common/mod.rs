//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerical code: the beta tail is a
//! direct quadrature of the density, the many-to-one normal probability is a
//! plain Monte Carlo estimate, and binomial tails are summed term by term.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Shipped scenario file by stem.
pub fn scenario_path(stem: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{stem}.json"))
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Simpson quadrature to a tolerance relative to a coarse first estimate.
fn simpson_relative<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = 4096;
    let h = (b - a) / f64::from(panels);
    let coarse: f64 = (0..panels)
        .map(|i| {
            let lo = a + f64::from(i) * h;
            h / 6.0 * (f(lo) + 4.0 * f(lo + 0.5 * h) + f(lo + h))
        })
        .sum();
    simpson(f, a, b, rel * coarse.abs().max(f64::MIN_POSITIVE))
}

/// `e^(−shift) ∫₀^x t^(a−1) (1−t)^(b−1) dt` for `x ≤ 1/2`. A shape below one
/// puts an integrable singularity at zero, removed by `t = s^(1/a)`.
fn lower_piece(a: f64, b: f64, x: f64, shift: f64) -> f64 {
    if a < 1.0 {
        let f = |s: f64| ((b - 1.0) * (1.0 - s.powf(1.0 / a)).ln() - shift).exp();
        simpson_relative(f, 0.0, x.powf(a), 1e-13) / a
    } else {
        let f = |t: f64| {
            if t <= 0.0 {
                return if a == 1.0 { (-shift).exp() } else { 0.0 };
            }
            ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - shift).exp()
        };
        simpson_relative(f, 0.0, x, 1e-13)
    }
}

/// Regularised incomplete beta `I_x(a, b)` by normalised quadrature.
pub fn beta_cdf_quadrature(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Rescale by the density's peak so large shapes do not underflow.
    let shift = if a > 1.0 && b > 1.0 {
        let mode = (a - 1.0) / (a + b - 2.0);
        (a - 1.0) * mode.ln() + (b - 1.0) * (1.0 - mode).ln()
    } else {
        0.0
    };
    let left = |upper: f64| lower_piece(a, b, upper, shift);
    let right = |upper: f64| lower_piece(b, a, upper, shift);
    let total = left(0.5) + right(0.5);
    let below = if x <= 0.5 { left(x) } else { total - right(1.0 - x) };
    (below / total).clamp(0.0, 1.0)
}

/// `Pr(Bin(n, p) ≥ k)` by direct summation of the probability mass function.
pub fn binomial_upper_tail(k: u32, n: u32, p: f64) -> f64 {
    let mut total = 0.0;
    for j in k..=n {
        let mut log_choose = 0.0;
        for i in 0..j {
            log_choose += f64::from(n - i).ln() - f64::from(i + 1).ln();
        }
        total += (log_choose + f64::from(j) * p.ln() + f64::from(n - j) * (1.0 - p).ln()).exp();
    }
    total
}

/// Monte Carlo estimate of `Pr(max_i Z_i > z)` for `m` standard normals with
/// common correlation `rho ≥ 0`, and its standard error.
pub fn equicorrelated_max_exceedance(z: f64, m: usize, rho: f64, draws: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut hits = 0_u64;
    for _ in 0..draws {
        let u: f64 = StandardNormal.sample(&mut rng);
        let mut exceeded = false;
        for _ in 0..m {
            let e: f64 = StandardNormal.sample(&mut rng);
            exceeded |= shared * u + own * e > z;
        }
        hits += u64::from(exceeded);
    }
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}
