//! Figure presets and report emission.
//!
//! Each preset binds a parameter grid, runs it over the given seeds and
//! returns one or more [`Table`]s with a fixed header. [`emit_report`]
//! writes a table as CSV plus an aligned text summary; the CSV's first line
//! is a `# config_hash=... version=...` comment, followed by the header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{energy_vs_dfk_sweep, EnergyError};
use crate::engine::{prepare, AttackerStart, EngineError, Objective, ScenarioConfig, TopologySpec};
use crate::mobility::AttackerModel;
use crate::placement::{place, DataId, DataItem, PlacementError};
use crate::routing::{distributed_overhead_model, network_ledger, Flow, NetworkLedgerInput, Protocol, RoutingError, LEDGER_CSV_HEADER};
use crate::scenario::{sha256_hex, to_scenario_text};
use crate::sweep::{sweep, Cell, CellSummary, Execution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const PRESETS: &[&str] = &[
    "fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1f", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig5a",
    "fig5b", "fig5c",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown preset `{0}` (known: {list})", list = PRESETS.join(", "))]
    UnknownPreset(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Rows of strings under a fixed header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self { header: header.split(',').map(str::to_string).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Space-aligned columns for reading in a terminal.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut s = line(&self.header);
        s.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }
}

/// Result of one preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutput {
    pub name: String,
    /// File stem and table; the first is the preset's main output.
    pub tables: Vec<(String, Table)>,
    /// Stand-ins and deviations from the stated setup.
    pub notes: Vec<String>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Runs that failed; their cells are summarized from the rest.
    pub run_errors: usize,
}

/// Writes `body` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| HarnessError::Io { path, source })
}

/// Writes a CSV body under the hash comment line.
pub fn write_csv(dir: &Path, name: &str, config_hash: &str, csv: &str) -> Result<(), HarnessError> {
    write_file(dir, name, &format!("# config_hash={config_hash} version={VERSION}\n{csv}"))
}

/// Writes `<stem>.csv` and `<stem>.txt` into `dir`.
pub fn emit_report(dir: &Path, stem: &str, table: &Table, config_hash: &str) -> Result<(), HarnessError> {
    write_csv(dir, &format!("{stem}.csv"), config_hash, &table.to_csv())?;
    write_file(dir, &format!("{stem}.txt"), &table.to_text())
}

/// Seeds `0..count`.
pub fn seed_range(count: u64) -> Vec<u64> {
    (0..count).collect()
}

/// Compact seed list: `a..b` for contiguous runs.
pub fn format_seeds(seeds: &[u64]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < seeds.len() {
        let mut j = i;
        while j + 1 < seeds.len() && seeds[j + 1] == seeds[j] + 1 {
            j += 1;
        }
        parts.push(if j > i { format!("{}..{}", seeds[i], seeds[j] + 1) } else { seeds[i].to_string() });
        i = j + 1;
    }
    parts.join(" ")
}

/// `key = value` metadata lines for an output directory.
pub fn metadata_text(output: &PresetOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "preset = {}", output.name);
    let _ = writeln!(s, "config_hash = {}", output.config_hash);
    let _ = writeln!(s, "version = {VERSION}");
    let _ = writeln!(s, "seeds = {}", format_seeds(&output.seeds));
    let _ = writeln!(s, "run_errors = {}", output.run_errors);
    for (stem, _) in &output.tables {
        let _ = writeln!(s, "output = {stem}.csv");
    }
    for n in &output.notes {
        let _ = writeln!(s, "note = {n}");
    }
    s
}

/// Writes every table and `metadata.txt`.
pub fn write_preset(dir: &Path, output: &PresetOutput) -> Result<(), HarnessError> {
    for (stem, table) in &output.tables {
        emit_report(dir, stem, table, &output.config_hash)?;
    }
    write_file(dir, "metadata.txt", &metadata_text(output))
}

/// 50-node line with a sweeping attacker, the corridor-style deployment.
pub fn line_standin() -> ScenarioConfig {
    ScenarioConfig {
        topology: TopologySpec::Line { n: 50, spacing: 100.0, tx_range: 120.0 },
        attacker_model: AttackerModel::LineSweep,
        attacker_start: AttackerStart::Spread,
        sink_enabled: false,
        max_rounds: 100,
        ..Default::default()
    }
}

/// 10 x 5 grid with a circling attacker, the uniform-grid deployment.
pub fn grid_standin() -> ScenarioConfig {
    ScenarioConfig {
        topology: TopologySpec::RectGrid { cols: 10, rows: 5, spacing: 100.0, tx_range: 120.0 },
        attacker_model: AttackerModel::CircularSweep,
        ..line_standin()
    }
}

/// Rounds plotted on the round curves.
pub const CURVE_ROUNDS: u64 = 50;

/// Percentage of data compromised within `r` rounds, for `r = 1..=max_round`.
pub fn round_curve(summary: &CellSummary, max_round: u64) -> Vec<f64> {
    (1..=max_round)
        .map(|r| {
            if summary.data == 0 {
                return 0.0;
            }
            let hit = summary.rounds_to_compromise.iter().filter(|&&x| x <= r).count();
            100.0 * hit as f64 / summary.data as f64
        })
        .collect()
}

/// First round whose curve value exceeds 0%, if any.
pub fn first_nonzero_round(summary: &CellSummary) -> Option<u64> {
    summary.rounds_to_compromise.iter().copied().min()
}

fn cell(base: &ScenarioConfig, params: &[(&str, String)]) -> Cell {
    let mut config = base.clone();
    for (k, v) in params {
        crate::scenario::set_param(&mut config, k, v).unwrap_or_else(|e| panic!("preset parameter {k}={v}: {e}"));
    }
    Cell { params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(), config }
}

pub fn grid_hash(name: &str, cells: &[Cell], seeds: &[u64]) -> String {
    let mut text = format!("preset = {name}\nseeds = {}\n", format_seeds(seeds));
    for c in cells {
        text.push_str(&to_scenario_text(&ScenarioConfig { seed: 0, ..c.config.clone() }));
    }
    sha256_hex(&text)
}

const FIG1_STRATEGIES: [&str; 4] = ["near_first", "random", "fixed_6", "fixed_8"];
const ROUND_STRATEGIES: [&str; 3] = ["near_first", "random", "clustered"];

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

struct Ran {
    summaries: Vec<CellSummary>,
    hash: String,
    errors: usize,
}

fn run_cells(name: &str, cells: &[Cell], seeds: &[u64], exec: Execution) -> Ran {
    let summaries = sweep(cells, seeds, exec);
    let errors = summaries.iter().map(|s| s.errors.len()).sum();
    for s in &summaries {
        if let Some((seed, msg)) = s.errors.first() {
            log::warn!("{name} {:?}: {} failed runs, first at seed {seed}: {msg}", s.params, s.errors.len());
        }
    }
    Ran { hash: grid_hash(name, cells, seeds), summaries, errors }
}

/// Seizure percentage per cell keyed by the named parameter columns.
fn seizure_table(header: &str, columns: &[&str], ran: &Ran) -> Table {
    let mut t = Table::new(header);
    for s in &ran.summaries {
        let mut row: Vec<String> = columns.iter().map(|k| s.param(k).unwrap_or("").to_string()).collect();
        row.push(pct(s.seizure_pct));
        t.push(row);
    }
    t
}

fn round_table(header: &str, columns: &[&str], ran: &Ran) -> Table {
    let mut t = Table::new(header);
    for r in 1..=CURVE_ROUNDS {
        for s in &ran.summaries {
            let mut row = vec![r.to_string()];
            row.extend(columns.iter().map(|k| s.param(k).unwrap_or("").to_string()));
            row.push(pct(round_curve(s, CURVE_ROUNDS)[(r - 1) as usize]));
            t.push(row);
        }
    }
    t
}

fn output(name: &str, tables: Vec<(String, Table)>, notes: Vec<String>, ran_hash: String, seeds: &[u64], errors: usize) -> PresetOutput {
    PresetOutput { name: name.to_string(), tables, notes, config_hash: ran_hash, seeds: seeds.to_vec(), run_errors: errors }
}

/// One datum per node, placed with the config's strategy: the workload the
/// overhead comparisons assume.
pub fn per_node_flows(config: &ScenarioConfig) -> Result<(crate::engine::Prepared, Vec<Flow>), HarnessError> {
    let prep = prepare(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut flows = Vec::with_capacity(prep.graph.len());
    for (i, origin) in prep.graph.node_ids().enumerate() {
        let item = DataItem::new(DataId(i as u32), origin, config.f_k, config.f_d)?;
        let plan = place(
            config.strategy,
            &item,
            &prep.graph,
            prep.clustering.as_ref(),
            config.cluster_mode,
            config.cap,
            &mut rng,
        )?;
        flows.push(Flow { origin, destinations: plan.assignments });
    }
    Ok((prep, flows))
}

/// Sink instruction counts for every protocol over grids of `sides^2` nodes.
pub fn complexity_table(sides: &[usize], seed: u64) -> Result<Table, HarnessError> {
    let mut t = Table::new("n,protocol,instructions");
    for &side in sides {
        let config = ScenarioConfig { topology: TopologySpec::Grid { side, spacing: 100.0, tx_range: 120.0 }, seed, ..Default::default() };
        let (prep, flows) = per_node_flows(&config)?;
        let input = NetworkLedgerInput { graph: &prep.graph, flows: &flows, sizes: config.sizes, trips: 1 };
        for p in Protocol::ALL {
            let ledger = network_ledger(p, &input)?;
            t.push(vec![(side * side).to_string(), p.to_string(), ledger.instruction_count.to_string()]);
        }
    }
    Ok(t)
}

/// Ledger rows for the centralized protocols and the distributed AODV
/// baseline, plus the control-message comparison.
pub fn communication_tables(config: &ScenarioConfig) -> Result<(Table, Table), HarnessError> {
    let (prep, flows) = per_node_flows(config)?;
    let input = NetworkLedgerInput { graph: &prep.graph, flows: &flows, sizes: config.sizes, trips: 1 };
    let mut ledger = Table::new(LEDGER_CSV_HEADER);
    let mut centralized_control = 0;
    for p in Protocol::ALL {
        let l = network_ledger(p, &input)?;
        centralized_control = centralized_control.max(l.control_messages);
        ledger.push(l.csv_row(&p.to_string()).split(',').map(str::to_string).collect());
    }
    let model = distributed_overhead_model(&prep.graph, &flows, 1, u64::from(config.hello_rounds))?;
    let distributed = model.distributed_total();
    ledger.push(vec!["aodv_distributed".into(), "0".into(), distributed.to_string(), "0".into(), "0".into()]);

    let mut ratio = Table::new(
        "n,data,distributed_control_msgs,distributed_per_datum,centralized_control_msgs,centralized_distribution_msgs,reduction_ratio",
    );
    let n = prep.graph.len() as u64;
    // The centralized scheme's only per-trip messages are the sink's table pushes.
    let centralized_total = centralized_control + n;
    ratio.push(vec![
        n.to_string(),
        flows.len().to_string(),
        distributed.to_string(),
        format!("{:.2}", distributed as f64 / flows.len().max(1) as f64),
        centralized_control.to_string(),
        n.to_string(),
        format!("{:.2}", distributed as f64 / centralized_total as f64),
    ]);
    Ok((ledger, ratio))
}

/// Runs a named preset over `seeds`.
pub fn run_preset(name: &str, seeds: &[u64], exec: Execution) -> Result<PresetOutput, HarnessError> {
    let defaults = ScenarioConfig::default();
    let fig1_notes = || vec!["10x10 grid, default timing: 100 m spacing, t_s 600 s, 10 m/s, 20 s per seizure".to_string()];
    let line_note = "topology: synthetic 50-node line stand-in (100 m spacing); testbed coordinates are not available";
    let grid_note = "topology: synthetic 10x5 grid stand-in (100 m spacing); testbed coordinates are not available";
    let curve_note = "sink disabled: curves give the share of data compromised within each round";

    match name {
        "fig1a" => {
            let cells: Vec<Cell> = [2, 4, 6, 8, 10]
                .iter()
                .flat_map(|d| (1..=4).map(move |a| (d, a)))
                .map(|(d, a)| cell(&defaults, &[("data.strategy", format!("fixed_{d}")), ("attacker.count", a.to_string())]))
                .collect();
            let ran = run_cells(name, &cells, seeds, exec);
            let mut t = Table::new("dfk,attackers,seizure_pct");
            for s in &ran.summaries {
                let d = s.param("data.strategy").unwrap_or("").trim_start_matches("fixed_").to_string();
                t.push(vec![d, s.param("attacker.count").unwrap_or("").into(), pct(s.seizure_pct)]);
            }
            let mut notes = fig1_notes();
            notes.push("dfk: fixed-distance placement target in hops, accepted within +-0.5".into());
            Ok(output(name, vec![(name.into(), t)], notes, ran.hash, seeds, ran.errors))
        }
        "fig1b" | "fig1d" | "fig1e" => {
            let (key, column, values, base): (&str, &str, Vec<String>, ScenarioConfig) = match name {
                "fig1b" => ("sink.trip_duration", "t_s", [300, 600, 900, 1200].map(|v| v.to_string()).to_vec(), defaults.clone()),
                "fig1d" => ("data.f_d", "f_d", (2..=6).map(|v| v.to_string()).collect(), ScenarioConfig { f_k: 8, ..defaults.clone() }),
                _ => ("attacker.count", "attackers", (1..=4).map(|v| v.to_string()).collect(), defaults.clone()),
            };
            let cells: Vec<Cell> = values
                .iter()
                .flat_map(|v| FIG1_STRATEGIES.iter().map(move |s| (v, s)))
                .map(|(v, s)| cell(&base, &[(key, v.clone()), ("data.strategy", s.to_string())]))
                .collect();
            let ran = run_cells(name, &cells, seeds, exec);
            let t = seizure_table(&format!("{column},strategy,seizure_pct"), &[key, "data.strategy"], &ran);
            let mut notes = fig1_notes();
            if name == "fig1d" {
                notes.push("f_k = 8".into());
            }
            Ok(output(name, vec![(name.into(), t)], notes, ran.hash, seeds, ran.errors))
        }
        "fig1c" => {
            let cells: Vec<Cell> = [4, 6, 8]
                .iter()
                .flat_map(|fk| FIG1_STRATEGIES.iter().map(move |s| (fk, s)))
                .map(|(fk, s)| {
                    cell(
                        &defaults,
                        &[("data.f_k", fk.to_string()), ("data.f_d", (fk / 2).to_string()), ("data.strategy", s.to_string())],
                    )
                })
                .collect();
            let ran = run_cells(name, &cells, seeds, exec);
            let t = seizure_table("f_k,f_d,strategy,seizure_pct", &["data.f_k", "data.f_d", "data.strategy"], &ran);
            Ok(output(name, vec![(name.into(), t)], fig1_notes(), ran.hash, seeds, ran.errors))
        }
        "fig1f" => {
            let prep = prepare(&defaults)?;
            let targets = [2.0, 4.0, 6.0, 8.0, 10.0];
            let rows = energy_vs_dfk_sweep(&prep.graph, &targets, defaults.f_k, 0.5, &defaults.radio, seeds)?;
            let mut t = Table::new("target_dfk,mean_ek,stddev");
            for r in rows {
                t.push(vec![r.target_dfk.to_string(), format!("{:.6}", r.mean_ek), format!("{:.6}", r.stddev)]);
            }
            let hash = sha256_hex(&format!("preset = {name}\nseeds = {}\n{}", format_seeds(seeds), to_scenario_text(&defaults)));
            let mut notes = fig1_notes();
            notes.push("e_k in joules over minimum-ETX routes, e_tx 0.0016 J, e_rx 0.0012 J, full power".into());
            Ok(output(name, vec![(name.into(), t)], notes, hash, seeds, 0))
        }
        "fig3a" | "fig3b" | "fig4a" | "fig4b" => {
            let (base, topo_note) = if name.starts_with("fig3") { (line_standin(), line_note) } else { (grid_standin(), grid_note) };
            let attackers = if name.ends_with('b') { 2 } else { 1 };
            let cells: Vec<Cell> = ROUND_STRATEGIES
                .iter()
                .map(|s| cell(&base, &[("data.strategy", s.to_string()), ("attacker.count", attackers.to_string())]))
                .collect();
            let ran = run_cells(name, &cells, seeds, exec);
            let t = round_table("round,strategy,seizure_pct", &["data.strategy"], &ran);
            let mut notes = vec![topo_note.to_string(), curve_note.to_string(), "f_k = 6, f_d = 3".to_string()];
            if attackers == 2 {
                notes.push("second attacker starts across the network and moves the opposite way".into());
            }
            Ok(output(name, vec![(name.into(), t)], notes, ran.hash, seeds, ran.errors))
        }
        "fig3c" | "fig4c" => {
            let (base, topo_note) = if name == "fig3c" { (line_standin(), line_note) } else { (grid_standin(), grid_note) };
            let cells: Vec<Cell> = [Objective::Seizure, Objective::Deletion]
                .iter()
                .flat_map(|o| (2..=5).map(move |fd| (o, fd)))
                .map(|(o, fd)| {
                    cell(
                        &base,
                        &[("data.strategy", "clustered".into()), ("attacker.objective", o.to_string()), ("data.f_d", fd.to_string())],
                    )
                })
                .collect();
            let ran = run_cells(name, &cells, seeds, exec);
            let t = round_table("round,objective,f_d,seizure_pct", &["attacker.objective", "data.f_d"], &ran);
            let notes = vec![topo_note.to_string(), curve_note.to_string(), "clustered placement, f_k = 6".to_string()];
            Ok(output(name, vec![(name.into(), t)], notes, ran.hash, seeds, ran.errors))
        }
        "fig5a" => {
            let mut cells = Vec::new();
            for (label, base) in [("line", line_standin()), ("grid", grid_standin())] {
                for s in ROUND_STRATEGIES {
                    let mut c = cell(&ScenarioConfig { max_rounds: 1, ..base.clone() }, &[("data.strategy", s.to_string())]);
                    c.params.insert(0, ("topology".into(), label.into()));
                    cells.push(c);
                }
            }
            let ran = run_cells(name, &cells, seeds, exec);
            let mut t = Table::new("topology,strategy,mean_dfk_hops,normalized");
            for s in &ran.summaries {
                let topo = s.param("topology").unwrap_or("");
                let near = ran
                    .summaries
                    .iter()
                    .find(|o| o.param("topology") == Some(topo) && o.param("data.strategy") == Some("near_first"))
                    .map_or(f64::NAN, |o| o.mean_dfk_hops);
                t.push(vec![
                    topo.into(),
                    s.param("data.strategy").unwrap_or("").into(),
                    format!("{:.4}", s.mean_dfk_hops),
                    format!("{:.4}", s.mean_dfk_hops / near),
                ]);
            }
            let notes = vec![line_note.to_string(), grid_note.to_string(), "normalized to the near-first mean".to_string()];
            Ok(output(name, vec![(name.into(), t)], notes, ran.hash, seeds, ran.errors))
        }
        "fig5b" => {
            let seed = seeds.first().copied().unwrap_or(0);
            let t = complexity_table(&[5, 7, 10, 15], seed)?;
            let hash = sha256_hex(&format!("preset = {name}\nseeds = {seed}\nsides = 5 7 10 15\n{}", to_scenario_text(&defaults)));
            let notes = vec![
                "one datum per node per trip, clustered placement, f_k = 6".to_string(),
                "deterministic: only the first seed is used".to_string(),
            ];
            Ok(output(name, vec![(name.into(), t)], notes, hash, &[seed], 0))
        }
        "fig5c" => {
            let seed = seeds.first().copied().unwrap_or(0);
            let config = ScenarioConfig { seed, ..defaults.clone() };
            let (ledger, ratio) = communication_tables(&config)?;
            let hash = sha256_hex(&format!("preset = {name}\n{}", to_scenario_text(&config)));
            let notes = vec![
                "one datum per node per trip; route tables expire within a trip".to_string(),
                "aodv_distributed: every node rebroadcasts each request once, replies unicast back".to_string(),
                "deterministic: only the first seed is used".to_string(),
            ];
            Ok(output(name, vec![(name.into(), ledger), ("fig5c_ratio".into(), ratio)], notes, hash, &[seed], 0))
        }
        other => Err(HarnessError::UnknownPreset(other.to_string())),
    }
}
