//! Parameter grids run over many seeds, cell by cell.
//!
//! Every (cell, seed) pair is an independent engine run, so the pairs are
//! spread over a rayon pool when the `parallel` feature is on. Results come
//! back in input order either way, which keeps sweep output byte-identical
//! between sequential and parallel execution.

use std::fmt::Write as _;

use crate::engine::{run_scenario, EngineError, ScenarioConfig, SimulationReport};
use crate::scenario::set_param;
use crate::stats::wilson_interval;

/// How independent runs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `jobs = 0` uses every available core.
    Parallel { jobs: usize },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { jobs: 0 }
    }
}

impl Execution {
    /// `--jobs 1` means sequential; anything else (or nothing) parallel.
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            Some(j) => Execution::Parallel { jobs: j },
            None => Execution::Parallel { jobs: 0 },
        }
    }

    /// Applies `f` to `0..count`, returning results in index order.
    pub fn map<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(f).collect(),
            Execution::Parallel { jobs } => parallel_map(jobs, count, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(jobs: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 0 {
        return (0..count).into_par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("cannot build a {jobs}-thread pool ({e}); running sequentially");
            (0..count).map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(_jobs: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// One run per seed of `config`.
pub fn run_seeds(config: &ScenarioConfig, seeds: &[u64], exec: Execution) -> Vec<Result<SimulationReport, EngineError>> {
    exec.map(seeds.len(), |i| run_scenario(&ScenarioConfig { seed: seeds[i], ..config.clone() }))
}

/// One swept parameter and its values, keyed as in scenario files.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl ParamAxis {
    pub fn new<V: ToString>(key: &str, values: impl IntoIterator<Item = V>) -> Self {
        Self { key: key.to_string(), values: values.into_iter().map(|v| v.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub params: Vec<(String, String)>,
    pub config: ScenarioConfig,
}

/// Cartesian product of the axes over `base`; the first axis varies
/// slowest. Fails on an unknown key or unparsable value.
pub fn expand_grid(base: &ScenarioConfig, axes: &[ParamAxis]) -> Result<Vec<Cell>, String> {
    let mut cells = vec![Cell { params: Vec::new(), config: base.clone() }];
    for axis in axes {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for cell in &cells {
            for value in &axis.values {
                let mut c = cell.clone();
                set_param(&mut c.config, &axis.key, value).map_err(|e| format!("{}: {e}", axis.key))?;
                c.params.push((axis.key.clone(), value.clone()));
                next.push(c);
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// Aggregate of one cell over its seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub params: Vec<(String, String)>,
    /// Successful runs.
    pub runs: usize,
    /// Seed and message of each failed run.
    pub errors: Vec<(u64, String)>,
    pub data: usize,
    pub compromised: usize,
    pub seizure_pct: f64,
    /// 95% Wilson interval of the seizure percentage.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Rounds to compromise of every compromised datum, in seed order.
    pub rounds_to_compromise: Vec<u64>,
    pub mean_dfk_hops: f64,
    pub mean_e_k: f64,
    pub hole_fallbacks: u64,
}

impl CellSummary {
    pub fn mean_rounds_to_compromise(&self) -> Option<f64> {
        mean(self.rounds_to_compromise.iter().map(|&r| r as f64))
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Folds the runs of one cell, in seed order.
pub fn summarize(params: Vec<(String, String)>, seeds: &[u64], results: &[Result<SimulationReport, EngineError>]) -> CellSummary {
    let mut errors = Vec::new();
    let mut data = Vec::new();
    let mut runs = 0;
    let mut hole_fallbacks = 0;
    for (seed, result) in seeds.iter().zip(results) {
        match result {
            Ok(report) => {
                runs += 1;
                hole_fallbacks += report.hole_fallbacks();
                data.extend(report.data.iter());
            }
            Err(e) => errors.push((*seed, e.to_string())),
        }
    }
    let compromised = data.iter().filter(|d| d.compromised_round.is_some()).count();
    let (lo, hi) = wilson_interval(compromised as u64, data.len() as u64, 0.95);
    CellSummary {
        params,
        runs,
        errors,
        data: data.len(),
        compromised,
        seizure_pct: if data.is_empty() { 0.0 } else { 100.0 * compromised as f64 / data.len() as f64 },
        ci_low: 100.0 * lo,
        ci_high: 100.0 * hi,
        rounds_to_compromise: data
            .iter()
            .filter_map(|d| d.compromised_round.map(|r| r - d.created_round + 1))
            .collect(),
        mean_dfk_hops: mean(data.iter().map(|d| d.dfk_hops)).unwrap_or(0.0),
        mean_e_k: mean(data.iter().map(|d| d.e_k)).unwrap_or(0.0),
        hole_fallbacks,
    }
}

/// Runs every cell over every seed. A failing run is recorded in its
/// cell's summary and the sweep carries on.
pub fn sweep(cells: &[Cell], seeds: &[u64], exec: Execution) -> Vec<CellSummary> {
    let per_cell = seeds.len();
    let mut results = exec.map(cells.len() * per_cell, |i| {
        let cell = &cells[i / per_cell];
        run_scenario(&ScenarioConfig { seed: seeds[i % per_cell], ..cell.config.clone() })
    });
    let mut out = Vec::with_capacity(cells.len());
    for cell in cells.iter().rev() {
        let chunk = results.split_off(results.len() - per_cell);
        out.push(summarize(cell.params.clone(), seeds, &chunk));
    }
    out.reverse();
    out
}

/// Columns after the swept keys in [`summary_csv`].
pub const SUMMARY_COLUMNS: &str =
    "runs,errors,data,compromised,seizure_pct,ci_low,ci_high,mean_rounds_to_compromise,mean_dfk_hops,mean_e_k,hole_fallbacks";

/// One row per cell keyed by the swept parameters. `keys` names the
/// parameter columns so an empty sweep still gets its header.
pub fn summary_csv(keys: &[String], summaries: &[CellSummary]) -> String {
    let mut s = String::new();
    for k in keys {
        s.push_str(k);
        s.push(',');
    }
    s.push_str(SUMMARY_COLUMNS);
    s.push('\n');
    for c in summaries {
        for k in keys {
            s.push_str(c.param(k).unwrap_or(""));
            s.push(',');
        }
        let rtc = c.mean_rounds_to_compromise().map(|m| format!("{m:.4}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{:.4},{:.4},{:.4},{},{:.4},{:.6},{}",
            c.runs,
            c.errors.len(),
            c.data,
            c.compromised,
            c.seizure_pct,
            c.ci_low,
            c.ci_high,
            rtc,
            c.mean_dfk_hops,
            c.mean_e_k,
            c.hole_fallbacks
        );
    }
    s
}
