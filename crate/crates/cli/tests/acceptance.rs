//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seamless::config::{self, RunConfig};
use seamless::ctct::{global_null_rejection_rate, CombinationSpec, IntersectionMethod, SelectionRule};
use seamless::dose_select::{
    select_optimal, BenefitRisk, CellCounts, GateSpec, Orientation, TradeoffSpec, UtilitySpec,
};
use seamless::oc_runner::{
    allocation_sweep, calibrate_n, compare_with_conventional, run_oc, OperatingCharacteristics, RunOptions,
};
use seamless::stat_kernel::{beta_tail_below, dunnett_maxz_pvalue, BetaPrior};

use common::{beta_cdf_quadrature, equicorrelated_max_exceedance, scenario_path};

const REPS: u64 = 10_000;
const SEED: u64 = 20_240_501;
/// FWER ceiling: nominal 5% plus three Monte Carlo standard errors at 10⁴ reps.
const FWER_LIMIT: f64 = 0.057;
const POWER_TARGET: f64 = 0.80;
const POWER_TOLERANCE: f64 = 0.05;
const SURVIVAL_POWER_RANGE: (f64, f64) = (0.65, 0.90);
const SAVINGS_RANGE: (f64, f64) = (0.15, 0.30);
const DRIFT_POWER_DROP: f64 = 0.03;
const SWEEP_TOTAL: u32 = 580;
const SWEEP_N1: [u32; 5] = [30, 50, 80, 110, 140];
const SWEEP_MARGIN: f64 = 0.03;
const CTCT_REPS: u64 = 100_000;
const DUNNETT_DRAWS: u64 = 10_000_000;
const DUNNETT_POINTS: usize = 10;
const BETA_CASES: usize = 100;
const BETA_TOLERANCE: f64 = 1e-8;
const ARGMAX_TABLES: usize = 10_000;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("criterion {id:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn load(stem: &str) -> RunConfig {
    config::load(scenario_path(stem)).unwrap_or_else(|e| panic!("{stem}: {e}"))
}

fn oc(stem: &str) -> OperatingCharacteristics {
    let run = load(stem);
    run_oc(&run.design, &run.scenario, REPS, SEED).expect("simulation")
}

fn pct(p: f64) -> String {
    format!("{:.2}%", 100.0 * p)
}

fn power(oc: &OperatingCharacteristics) -> f64 {
    oc.generalized_power.expect("scenario has an optimal dose").estimate
}

fn fwer_control(report: &mut Report) {
    let start = Instant::now();
    let c = oc("c_2dose_s0");
    let c_time = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let d = oc("d_2dose_s0");
    let d_time = start.elapsed().as_secs_f64();
    report.line(
        "1",
        c.fwer.estimate <= FWER_LIMIT && d.fwer.estimate <= FWER_LIMIT,
        format!(
            "null FWER, C (50, 80) {} in {c_time:.1}s, D (45, 30) {} in {d_time:.1}s; limit {}",
            pct(c.fwer.estimate),
            pct(d.fwer.estimate),
            pct(FWER_LIMIT)
        ),
    );
}

fn power_near_target(report: &mut Report, id: &str, stem: &str, label: &str) {
    let p = power(&oc(stem));
    report.line(
        id,
        (p - POWER_TARGET).abs() <= POWER_TOLERANCE,
        format!("{label} generalized power {} (target {} ± {})", pct(p), pct(POWER_TARGET), pct(POWER_TOLERANCE)),
    );
}

fn survival_designs(report: &mut Report) {
    let (lo, hi) = SURVIVAL_POWER_RANGE;
    let mut pass = true;
    let mut parts = Vec::new();
    for (design, sizes) in [("a", "(50, 100)"), ("b", "(50, 115)")] {
        let null = oc(&format!("{design}_2dose_s0"));
        let alt = oc(&format!("{design}_2dose_s1"));
        let gp = power(&alt);
        pass &= null.fwer.estimate <= FWER_LIMIT && (lo..=hi).contains(&gp);
        parts.push(format!(
            "{} {sizes}: FWER {}, generalized power {}",
            design.to_uppercase(),
            pct(null.fwer.estimate),
            pct(gp)
        ));
    }
    report.line(
        "4",
        pass,
        format!("{}; FWER limit {}, power range [{}, {}]", parts.join("; "), pct(FWER_LIMIT), pct(lo), pct(hi)),
    );
}

fn savings(report: &mut Report) {
    let (lo, hi) = SAVINGS_RANGE;
    let mut pass = true;
    let mut parts = Vec::new();
    let n2_grid: Vec<u32> = (2..=80).map(|k| 5 * k).collect();
    for stem in ["d_2dose_s1", "c_2dose_s1"] {
        let run = load(stem);
        // The conventional program keeps the phase 2 size and is calibrated
        // on the phase 3 size.
        let cal = calibrate_n(
            &run.design,
            &run.scenario,
            POWER_TARGET,
            &[run.design.n1],
            &n2_grid,
            REPS,
            SEED,
            RunOptions::conventional(),
        )
        .expect("calibration");
        let cc = seamless::trial_engine::DesignConfig { n2: cal.point().n2, ..run.design.clone() };
        let r = compare_with_conventional(&run.design, &cc, &run.scenario, REPS, SEED, None).expect("comparison");
        pass &= cal.is_reached() && (lo..=hi).contains(&r.savings);
        parts.push(format!(
            "{}: seamless N {:.1} vs conventional ({}, {}) N {:.1} → savings {}",
            run.design.design,
            r.seamless.avg_sample_size,
            cc.n1,
            cc.n2,
            r.conventional.avg_sample_size,
            pct(r.savings)
        ));
    }
    report.line("5", pass, format!("{}; required [{}, {}]", parts.join("; "), pct(lo), pct(hi)));
}

fn drift(report: &mut Report) {
    let inflated = oc("d_2dose_s0_drift_pos");
    let bound = 0.05 + 3.0 * inflated.fwer.se;
    let baseline = power(&oc("d_2dose_s1"));
    let drifted = power(&oc("d_2dose_s1_drift_neg"));
    report.line(
        "6",
        inflated.fwer.estimate > bound && baseline - drifted >= DRIFT_POWER_DROP,
        format!(
            "D benchmark 0.17: FWER {} (must exceed {}); benchmark 0.23: power {} vs {} without drift (drop ≥ {})",
            pct(inflated.fwer.estimate),
            pct(bound),
            pct(drifted),
            pct(baseline),
            pct(DRIFT_POWER_DROP)
        ),
    );
}

fn allocation(report: &mut Report) {
    let run = load("c_3dose_s2");
    let rows = allocation_sweep(&run.design, &run.scenario, SWEEP_TOTAL, &SWEEP_N1, REPS, SEED, RunOptions::default())
        .expect("sweep");
    let at = |n1: u32| rows.iter().find(|r| r.n1 == n1).and_then(|r| r.generalized_power);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}/{}: {}", r.n1, r.n2, pct(r.generalized_power.unwrap_or(f64::NAN))))
        .collect();
    let pass = match (at(30), at(80), at(140)) {
        (Some(p30), Some(p80), Some(p140)) => p80 - p30 >= SWEEP_MARGIN && p80 - p140 >= SWEEP_MARGIN,
        _ => false,
    };
    report.line(
        "7",
        pass,
        format!("C three-dose, total {SWEEP_TOTAL}, n1/n2 → power: {}; n1 = 80 must lead both ends by {}", table.join(", "), pct(SWEEP_MARGIN)),
    );
}

fn ctct_validity(report: &mut Report) {
    let mut pass = true;
    let mut worst = (f64::NEG_INFINITY, String::new());
    for alpha in [0.025, 0.05] {
        let limit = alpha + 3.0 * (alpha * (1.0 - alpha) / CTCT_REPS as f64).sqrt();
        for doses in [2, 3] {
            for (name, method) in [("dunnett", IntersectionMethod::Dunnett { rho: 0.5 }), ("sidak", IntersectionMethod::Sidak)] {
                let spec = CombinationSpec::new(50, 80, alpha).expect("spec");
                let rate = global_null_rejection_rate(doses, method, &spec, SelectionRule::LargestZ, CTCT_REPS, SEED)
                    .expect("simulation");
                pass &= rate <= limit;
                let slack = rate - limit;
                if slack > worst.0 {
                    worst = (slack, format!("α {alpha}, J {doses}, {name}: {} vs limit {}", pct(rate), pct(limit)));
                }
            }
        }
    }
    report.line("8", pass, format!("adversarial selection, 8 settings at {CTCT_REPS} reps; closest: {}", worst.1));
}

fn numerical_oracles(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut dunnett_ok = 0;
    let mut worst_se = 0.0_f64;
    for k in 0..DUNNETT_POINTS {
        let z = rng.random_range(0.5..3.0);
        let m = rng.random_range(2..=5);
        let rho = rng.random_range(0.05..0.8);
        let exact = dunnett_maxz_pvalue(z, m, rho).expect("dunnett");
        let (mc, se) = equicorrelated_max_exceedance(z, m, rho, DUNNETT_DRAWS, SEED + k as u64);
        let dev = (exact - mc).abs() / se;
        worst_se = worst_se.max(dev);
        dunnett_ok += usize::from(dev <= 3.0);
    }

    let mut beta_ok = 0;
    let mut worst_beta = 0.0_f64;
    for _ in 0..BETA_CASES {
        let prior = BetaPrior { a: rng.random_range(0.5..3.0), b: rng.random_range(0.5..3.0) };
        let n = rng.random_range(1..=80_u32);
        let s = rng.random_range(0..=n);
        let x = rng.random_range(0.01..0.99);
        let got = beta_tail_below(prior, s, n, x).expect("beta");
        let want = beta_cdf_quadrature(prior.a + f64::from(s), prior.b + f64::from(n - s), x);
        let err = (got - want).abs();
        worst_beta = worst_beta.max(err);
        beta_ok += usize::from(err <= BETA_TOLERANCE);
    }

    let gates = GateSpec::default();
    let mut agree = 0;
    for _ in 0..ARGMAX_TABLES {
        let u2 = f64::from(rng.random_range(1..=99_u32));
        let utility =
            BenefitRisk::Utility(UtilitySpec { scores: [0.0, u2, 100.0 - u2, 100.0], orientation: Orientation::Minimize });
        let tradeoff = BenefitRisk::Tradeoff(TradeoffSpec { w: u2 / (100.0 - u2) });
        let doses = rng.random_range(2..=4);
        let n = rng.random_range(5..=60_u32);
        let tables: Vec<CellCounts> = (0..doses)
            .map(|_| {
                let mut cells = CellCounts::default();
                for _ in 0..n {
                    cells.cells[rng.random_range(0..4)] += 1;
                }
                cells
            })
            .collect();
        let a = select_optimal(&tables, &utility, &gates).expect("utility").verdict;
        let b = select_optimal(&tables, &tradeoff, &gates).expect("tradeoff").verdict;
        agree += usize::from(a == b);
    }

    report.line(
        "9",
        dunnett_ok == DUNNETT_POINTS && beta_ok == BETA_CASES && agree == ARGMAX_TABLES,
        format!(
            "Dunnett {dunnett_ok}/{DUNNETT_POINTS} within 3 SE of {DUNNETT_DRAWS}-draw Monte Carlo (worst {worst_se:.2} SE); \
             beta {beta_ok}/{BETA_CASES} within {BETA_TOLERANCE:e} (worst {worst_beta:.1e}); \
             utility/tradeoff selections agree on {agree}/{ARGMAX_TABLES} tables"
        ),
    );
}

fn reproducibility(report: &mut Report) {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = scenario_path("c_2dose_s1");
    let run = |workers: &str, name: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_seamless"))
            .args(["simulate", "--reps", "2000", "--seed", "11", "--workers", workers, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .expect("run simulate");
        assert!(status.success(), "simulate failed with {workers} workers");
        std::fs::read(out).expect("read csv")
    };
    let one = run("1", "one.csv");
    let four = run("4", "four.csv");
    let sixteen = run("16", "sixteen.csv");
    report.line(
        "10",
        !one.is_empty() && one == four && one == sixteen,
        format!("simulate CSV with 1, 4 and 16 workers: {} bytes, identical = {}", one.len(), one == four && one == sixteen),
    );
}

fn main() -> ExitCode {
    // Behave like an ordinary test binary when only listing tests.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut report = Report { failures: 0 };
    let start = Instant::now();
    fwer_control(&mut report);
    power_near_target(&mut report, "2", "c_2dose_s1", "C two-dose (50, 80)");
    power_near_target(&mut report, "3", "d_2dose_s1", "D two-dose (45, 30)");
    survival_designs(&mut report);
    savings(&mut report);
    drift(&mut report);
    allocation(&mut report);
    ctct_validity(&mut report);
    numerical_oracles(&mut report);
    reproducibility(&mut report);
    println!(
        "acceptance: {} of 10 criteria passed in {:.1}s",
        10 - report.failures,
        start.elapsed().as_secs_f64()
    );
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
