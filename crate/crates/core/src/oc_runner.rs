//! Monte Carlo operating characteristics.
//!
//! Replication `r` of a run with seed `s` draws from substream `(s, r)`, and
//! per-replication summaries are reduced in replication order, so results are
//! bit-identical for any number of worker threads. Calibration grids and
//! allocation sweeps reuse the same substreams at every grid point.

use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{self, Result};
use crate::outcome_sim::ScenarioSpec;
use crate::rng::substream;
use crate::trial_engine::{simulate, Design, DesignConfig, TrialMode, TrialResult};

/// Output header of the `simulate` CSV.
pub const OC_CSV_HEADER: [&str; 12] = [
    "design",
    "scenario",
    "reps",
    "seed",
    "fwer",
    "fwer_se",
    "pcs",
    "pcs_se",
    "gen_power",
    "gen_power_se",
    "avg_n",
    "avg_duration",
];

/// Condensed record of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub rep: u64,
    pub selected: Option<usize>,
    pub rejected: bool,
    pub false_rejection: bool,
    pub correct_selection: bool,
    pub enrolled: u32,
    pub duration: f64,
}

impl TrialSummary {
    fn from_result(rep: u64, result: &TrialResult, config: &DesignConfig, scenario: &ScenarioSpec) -> Self {
        let selected = result.selected();
        let rejected = result.rejected();
        Self {
            rep,
            selected,
            rejected,
            false_rejection: rejected && selected.is_some_and(|j| config.is_null_dose(scenario, j)),
            correct_selection: scenario.optimal.is_some() && selected == scenario.optimal,
            enrolled: result.total_enrolled,
            duration: result.duration,
        }
    }
}

/// A Monte Carlo proportion with its standard error `√(p(1−p)/reps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub estimate: f64,
    pub se: f64,
}

impl Proportion {
    pub fn from_count(count: u64, reps: u64) -> Self {
        let p = count as f64 / reps as f64;
        Self { estimate: p, se: (p * (1.0 - p) / reps as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub design: Design,
    pub mode: TrialMode,
    pub scenario: String,
    pub reps: u64,
    pub seed: u64,
    /// Rate of rejecting a selected dose that is truly null.
    pub fwer: Proportion,
    /// Rate of selecting the optimal dose; absent when no dose is optimal.
    pub pcs: Option<Proportion>,
    /// Rate of selecting the optimal dose and rejecting its null; absent when
    /// no dose is optimal.
    pub generalized_power: Option<Proportion>,
    pub early_stop: Proportion,
    pub avg_sample_size: f64,
    pub avg_duration: f64,
}

impl OperatingCharacteristics {
    pub fn from_summaries(
        config: &DesignConfig,
        scenario: &ScenarioSpec,
        mode: TrialMode,
        seed: u64,
        summaries: &[TrialSummary],
    ) -> Self {
        let reps = summaries.len() as u64;
        let count = |f: fn(&TrialSummary) -> bool| summaries.iter().filter(|s| f(s)).count() as u64;
        let has_optimal = scenario.optimal.is_some();
        let mut enrolled = 0.0;
        let mut duration = 0.0;
        for s in summaries {
            enrolled += f64::from(s.enrolled);
            duration += s.duration;
        }
        Self {
            design: config.design,
            mode,
            scenario: scenario.name.clone(),
            reps,
            seed,
            fwer: Proportion::from_count(count(|s| s.false_rejection), reps),
            pcs: has_optimal.then(|| Proportion::from_count(count(|s| s.correct_selection), reps)),
            generalized_power: has_optimal
                .then(|| Proportion::from_count(count(|s| s.correct_selection && s.rejected), reps)),
            early_stop: Proportion::from_count(count(|s| s.selected.is_none()), reps),
            avg_sample_size: enrolled / reps as f64,
            avg_duration: duration / reps as f64,
        }
    }

    /// Generalized power, or zero in null scenarios.
    pub fn power(&self) -> f64 {
        self.generalized_power.map_or(0.0, |p| p.estimate)
    }
}

/// Execution options for Monte Carlo runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: TrialMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl RunOptions {
    pub fn conventional() -> Self {
        Self { mode: TrialMode::Conventional, workers: None }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers: Some(workers), ..self }
    }
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| crate::Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs `reps` replications and returns their summaries in replication order.
pub fn run_replications(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    reps: u64,
    seed: u64,
    options: RunOptions,
) -> Result<Vec<TrialSummary>> {
    if reps == 0 {
        return error::config("at least one replication is required");
    }
    config.validate_for(scenario)?;
    in_pool(options.workers, || {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = substream(seed, r);
                let result = simulate(config, scenario, options.mode, &mut rng)?;
                Ok(TrialSummary::from_result(r, &result, config, scenario))
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Operating characteristics of the seamless design.
pub fn run_oc(config: &DesignConfig, scenario: &ScenarioSpec, reps: u64, seed: u64) -> Result<OperatingCharacteristics> {
    run_oc_with(config, scenario, reps, seed, RunOptions::default())
}

pub fn run_oc_with(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    reps: u64,
    seed: u64,
    options: RunOptions,
) -> Result<OperatingCharacteristics> {
    let summaries = run_replications(config, scenario, reps, seed, options)?;
    Ok(OperatingCharacteristics::from_summaries(config, scenario, options.mode, seed, &summaries))
}

/// A candidate `(n1, n2)` with its estimated characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n1: u32,
    pub n2: u32,
    pub planned_total: u32,
    pub oc: OperatingCharacteristics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Calibration {
    /// Smallest planned sample size reaching the target power.
    Reached(GridPoint),
    /// No grid point reached the target; the most powerful one is attached.
    Unreachable(GridPoint),
}

impl Calibration {
    pub fn point(&self) -> &GridPoint {
        match self {
            Self::Reached(p) | Self::Unreachable(p) => p,
        }
    }

    pub fn is_reached(&self) -> bool {
        matches!(self, Self::Reached(_))
    }
}

/// Smallest grid point (by planned enrollment, then `n2`) whose generalized
/// power reaches `target_power`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_n(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    target_power: f64,
    n1_grid: &[u32],
    n2_grid: &[u32],
    reps: u64,
    seed: u64,
    options: RunOptions,
) -> Result<Calibration> {
    if n1_grid.is_empty() || n2_grid.is_empty() {
        return error::config("calibration grids must be non-empty");
    }
    if scenario.optimal.is_none() {
        return error::config(format!("scenario '{}' has no optimal dose to calibrate power on", scenario.name));
    }
    let doses = scenario.dose_count();
    let mut grid: Vec<DesignConfig> = n1_grid
        .iter()
        .flat_map(|&n1| n2_grid.iter().map(move |&n2| DesignConfig { n1, n2, ..config.clone() }))
        .collect();
    grid.sort_by_key(|c| (c.planned_total(doses), c.n2, c.n1));
    grid.dedup_by_key(|c| (c.n1, c.n2));

    let mut best: Option<GridPoint> = None;
    for candidate in grid {
        let oc = run_oc_with(&candidate, scenario, reps, seed, options)?;
        let point = GridPoint { n1: candidate.n1, n2: candidate.n2, planned_total: candidate.planned_total(doses), oc };
        if point.oc.power() >= target_power {
            return Ok(Calibration::Reached(point));
        }
        if best.as_ref().is_none_or(|b| point.oc.power() > b.oc.power()) {
            best = Some(point);
        }
    }
    Ok(Calibration::Unreachable(best.expect("grid is non-empty")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n1: u32,
    pub n2: u32,
    pub total: u32,
    pub pcs: Option<f64>,
    pub generalized_power: Option<f64>,
    pub avg_sample_size: f64,
}

/// Varies the stage-1 size at fixed planned total enrollment.
///
/// For each `n1` the stage-2 size is `(total − stage-1 arms · n1) / stage-2
/// arms`, rounded down. Values of `n1` that leave no room for stage 2 are
/// skipped with a warning.
pub fn allocation_sweep(
    config: &DesignConfig,
    scenario: &ScenarioSpec,
    total: u32,
    n1_values: &[u32],
    reps: u64,
    seed: u64,
    options: RunOptions,
) -> Result<Vec<SweepRow>> {
    let doses = scenario.dose_count();
    let arms1 = config.design.stage1_arms(doses) as u32;
    let arms2 = config.design.stage2_arms() as u32;
    let mut n1_sorted = n1_values.to_vec();
    n1_sorted.sort_unstable();
    n1_sorted.dedup();
    let mut rows = Vec::new();
    for n1 in n1_sorted {
        let stage1 = arms1 * n1;
        let n2 = total.saturating_sub(stage1) / arms2;
        if n1 == 0 || n2 == 0 {
            warn!("n1 = {n1} leaves no stage-2 patients within a total of {total}; skipped");
            continue;
        }
        if stage1 + arms2 * n2 != total {
            warn!("n1 = {n1}: total {total} is not divisible across stage-2 arms; using n2 = {n2}");
        }
        let cfg = DesignConfig { n1, n2, ..config.clone() };
        let oc = run_oc_with(&cfg, scenario, reps, seed, options)?;
        rows.push(SweepRow {
            n1,
            n2,
            total: cfg.planned_total(doses),
            pcs: oc.pcs.map(|p| p.estimate),
            generalized_power: oc.generalized_power.map(|p| p.estimate),
            avg_sample_size: oc.avg_sample_size,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub seamless: OperatingCharacteristics,
    pub conventional: OperatingCharacteristics,
    /// `1 − seamless avg N / conventional avg N`; negative when the seamless
    /// design enrolls more.
    pub savings: f64,
}

/// Average sample size of the seamless design against its conventional
/// counterpart, each with its own stage sizes.
pub fn compare_with_conventional(
    config: &DesignConfig,
    cc_config: &DesignConfig,
    scenario: &ScenarioSpec,
    reps: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<SavingsReport> {
    if config.design != cc_config.design {
        return error::config(format!(
            "conventional counterpart must use the same design letter ({} vs {})",
            config.design, cc_config.design
        ));
    }
    let seamless = run_oc_with(config, scenario, reps, seed, RunOptions { mode: TrialMode::Seamless, workers })?;
    let conventional =
        run_oc_with(cc_config, scenario, reps, seed, RunOptions { mode: TrialMode::Conventional, workers })?;
    let savings = 1.0 - seamless.avg_sample_size / conventional.avg_sample_size;
    Ok(SavingsReport { seamless, conventional, savings })
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes operating characteristics as CSV with [`OC_CSV_HEADER`].
pub fn write_oc_csv<W: Write>(out: W, rows: &[OperatingCharacteristics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OC_CSV_HEADER)?;
    for oc in rows {
        w.write_record([
            oc.design.to_string(),
            oc.scenario.clone(),
            oc.reps.to_string(),
            oc.seed.to_string(),
            oc.fwer.estimate.to_string(),
            oc.fwer.se.to_string(),
            fmt_opt(oc.pcs.map(|p| p.estimate)),
            fmt_opt(oc.pcs.map(|p| p.se)),
            fmt_opt(oc.generalized_power.map(|p| p.estimate)),
            fmt_opt(oc.generalized_power.map(|p| p.se)),
            oc.avg_sample_size.to_string(),
            oc.avg_duration.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per replication.
pub fn write_trace_csv<W: Write>(out: W, rows: &[TrialSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rep", "selected", "rejected", "false_rejection", "enrolled", "duration"])?;
    for s in rows {
        w.write_record([
            s.rep.to_string(),
            s.selected.map(|j| (j + 1).to_string()).unwrap_or_else(|| "stop".into()),
            u8::from(s.rejected).to_string(),
            u8::from(s.false_rejection).to_string(),
            s.enrolled.to_string(),
            s.duration.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n1", "n2", "total", "pcs", "gen_power", "avg_n"])?;
    for r in rows {
        w.write_record([
            r.n1.to_string(),
            r.n2.to_string(),
            r.total.to_string(),
            fmt_opt(r.pcs),
            fmt_opt(r.generalized_power),
            r.avg_sample_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
