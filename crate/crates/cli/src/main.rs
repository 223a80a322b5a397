//! `uwsn`: run scenarios, sweeps and figure presets, and dump topology and
//! routing artifacts.
//!
//! Exit status: 0 on success, 1 on a runtime failure, 2 on an invalid
//! configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use uwsn_core::engine::{prepare, run_scenario, EngineError, ScenarioConfig};
use uwsn_core::harness::{
    format_seeds, grid_hash, per_node_flows, run_preset, seed_range, write_csv, write_file, write_preset,
    HarnessError, VERSION,
};
use uwsn_core::placement::PLAN_CSV_HEADER;
use uwsn_core::routing::{
    coords_csv, network_ledger, route_fragments, routes_csv, tables_csv, NetworkLedgerInput, Protocol, LEDGER_CSV_HEADER,
};
use uwsn_core::scenario::{config_hash, load_scenario, to_scenario_text, ScenarioError};
use uwsn_core::sweep::{expand_grid, summary_csv, sweep, Execution, ParamAxis};

#[derive(Parser)]
#[command(name = "uwsn", version, about = "Fragment dispersal simulator for unattended sensor networks")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "UWSN_OUT", default_value = "results")]
    out: PathBuf,
    /// Worker threads for sweeps and presets; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        /// Overrides the file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a scenario over a parameter grid and many seeds.
    Sweep {
        scenario: PathBuf,
        /// `section.key=v1,v2,...`; repeat for more axes.
        #[arg(long = "param", value_name = "KEY=VALUES")]
        params: Vec<String>,
        /// Seeds 0..N.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Run a figure preset (fig1a..fig1f, fig3a..c, fig4a..c, fig5a..c).
    Preset {
        name: String,
        /// Seeds 0..N.
        #[arg(long, default_value_t = 200)]
        seeds: u64,
    },
    /// Dump the topology, the sink's estimated graph and its tour.
    Topo { scenario: PathBuf },
    /// Dump placements, routes, tables and ledgers for one datum per node.
    Routes { scenario: PathBuf },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

/// Marks an error as a configuration problem (exit 2).
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<ScenarioError>() {
            return if matches!(e, ScenarioError::Io { .. }) { 1 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<EngineError>() {
            return if e.is_config() { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<HarnessError>() {
            match e {
                HarnessError::UnknownPreset(_) => return 2,
                HarnessError::Engine(inner) if inner.is_config() => return 2,
                _ => {}
            }
        }
    }
    1
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let config = load_scenario(path)?;
    config.validate()?;
    Ok(config)
}

fn metadata(command: &str, hash: &str, seeds: &[u64], extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "config_hash = {hash}");
    let _ = writeln!(s, "version = {VERSION}");
    let _ = writeln!(s, "seeds = {}", format_seeds(seeds));
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn cmd_run(out: &Path, scenario: &Path, seed: Option<u64>) -> Result<()> {
    let mut config = load(scenario)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let hash = config_hash(&config);
    let report = run_scenario(&config)?;
    write_csv(out, "events.csv", &hash, &report.events_csv())?;
    write_csv(out, "data.csv", &hash, &report.data_csv())?;
    write_csv(out, "energy_nodes.csv", &hash, &report.energy.nodes_csv())?;
    write_csv(out, "energy_data.csv", &hash, &report.energy.data_csv())?;
    let ledger = format!("{LEDGER_CSV_HEADER}\n{}\n", report.overhead.csv_row(&config.protocol.to_string()));
    write_csv(out, "ledger.csv", &hash, &ledger)?;
    write_file(out, "scenario.scn", &to_scenario_text(&config))?;
    let extra = [("scenario", scenario.display().to_string()), ("rounds_run", report.rounds_run.to_string())];
    write_file(out, "metadata.txt", &metadata("run", &hash, &[config.seed], &extra))?;
    println!(
        "data {}  compromised {}  seizure {:.2}%  rounds {}  hole fallbacks {}",
        report.data.len(),
        report.compromised(),
        report.seizure_percentage(),
        report.rounds_run,
        report.hole_fallbacks()
    );
    Ok(())
}

fn parse_axis(spec: &str) -> Result<ParamAxis> {
    let (key, values) =
        spec.split_once('=').ok_or_else(|| ConfigError(format!("--param expects KEY=V1,V2, got `{spec}`")))?;
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(ConfigError(format!("--param {key} has no values")).into());
    }
    Ok(ParamAxis::new(key.trim(), values))
}

fn cmd_sweep(out: &Path, scenario: &Path, params: &[String], seeds: u64, exec: Execution) -> Result<()> {
    let base = load(scenario)?;
    let axes = params.iter().map(|p| parse_axis(p)).collect::<Result<Vec<_>>>()?;
    let cells = expand_grid(&base, &axes).map_err(ConfigError)?;
    for c in &cells {
        c.config.validate().map_err(|e| ConfigError(format!("{:?}: {e}", c.params)))?;
    }
    let seeds = seed_range(seeds);
    let summaries = sweep(&cells, &seeds, exec);
    let keys: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    let hash = grid_hash("sweep", &cells, &seeds);
    let csv = summary_csv(&keys, &summaries);
    write_csv(out, "sweep.csv", &hash, &csv)?;
    let errors: usize = summaries.iter().map(|s| s.errors.len()).sum();
    let extra = [("scenario", scenario.display().to_string()), ("run_errors", errors.to_string())];
    write_file(out, "metadata.txt", &metadata("sweep", &hash, &seeds, &extra))?;
    print!("{csv}");
    if errors > 0 {
        eprintln!("warning: {errors} runs failed; see the errors column");
    }
    Ok(())
}

fn cmd_preset(out: &Path, name: &str, seeds: u64, exec: Execution) -> Result<()> {
    let output = run_preset(name, &seed_range(seeds), exec)?;
    write_preset(out, &output)?;
    for (stem, table) in &output.tables {
        println!("{stem}:\n{}", table.to_text());
    }
    if output.run_errors > 0 {
        eprintln!("warning: {} runs failed", output.run_errors);
    }
    Ok(())
}

fn cmd_topo(out: &Path, scenario: &Path) -> Result<()> {
    let config = load(scenario)?;
    let hash = config_hash(&config);
    let prep = prepare(&config)?;
    write_file(out, "topology.txt", &prep.topology.to_text())?;
    write_csv(out, "nodes.csv", &hash, &prep.graph.nodes_csv())?;
    write_csv(out, "links.csv", &hash, &prep.graph.links_csv())?;
    let mut tour = String::from("visit,node_id\n");
    for (i, n) in prep.tour.iter().enumerate() {
        let _ = writeln!(tour, "{i},{n}");
    }
    write_csv(out, "tour.csv", &hash, &tour)?;
    if let Some(c) = &prep.clustering {
        write_csv(out, "clusters.csv", &hash, &c.to_csv())?;
    }
    write_file(out, "metadata.txt", &metadata("topo", &hash, &[config.seed], &[]))?;
    println!("nodes {}  links {}  connected {}", prep.graph.len(), prep.graph.edge_count(), prep.graph.is_connected());
    Ok(())
}

fn strip_header(csv: &str) -> &str {
    csv.split_once('\n').map_or("", |(_, rest)| rest)
}

fn cmd_routes(out: &Path, scenario: &Path) -> Result<()> {
    let config = load(scenario)?;
    let hash = config_hash(&config);
    let (prep, flows) = per_node_flows(&config)?;
    let mut plans = format!("{PLAN_CSV_HEADER}\n");
    let mut routes = String::from("origin,destination,hops,total_etx,path\n");
    let mut tables = String::from("owner,origin,destination,next_hop\n");
    let mut coords = String::from("owner,destination,x,y\n");
    for (i, flow) in flows.iter().enumerate() {
        for (f, holder) in flow.destinations.iter().enumerate() {
            let _ = writeln!(plans, "{i},{f},{holder}");
        }
        let dsr = route_fragments(Protocol::Dsr, &prep.graph, flow.origin, &flow.destinations, config.sizes)?;
        routes.push_str(strip_header(&routes_csv(&dsr.source_routes)));
        let aodv = route_fragments(Protocol::Aodv, &prep.graph, flow.origin, &flow.destinations, config.sizes)?;
        tables.push_str(strip_header(&tables_csv(&aodv.tables)));
        let gpsr = route_fragments(Protocol::Gpsr, &prep.graph, flow.origin, &flow.destinations, config.sizes)?;
        if let Some(t) = &gpsr.coord_table {
            coords.push_str(strip_header(&coords_csv(t)));
        }
    }
    let input = NetworkLedgerInput { graph: &prep.graph, flows: &flows, sizes: config.sizes, trips: 1 };
    let mut ledger = format!("{LEDGER_CSV_HEADER}\n");
    for p in Protocol::ALL {
        let _ = writeln!(ledger, "{}", network_ledger(p, &input)?.csv_row(&p.to_string()));
    }
    write_csv(out, "plans.csv", &hash, &plans)?;
    write_csv(out, "routes_dsr.csv", &hash, &routes)?;
    write_csv(out, "tables_aodv.csv", &hash, &tables)?;
    write_csv(out, "coords_gpsr.csv", &hash, &coords)?;
    write_csv(out, "ledger.csv", &hash, &ledger)?;
    write_file(out, "metadata.txt", &metadata("routes", &hash, &[config.seed], &[]))?;
    print!("{ledger}");
    Ok(())
}

fn cmd_validate(scenario: &Path) -> Result<()> {
    let config = load(scenario)?;
    config.topology.build().map_err(|e| ConfigError(format!("topology: {e}")))?;
    println!("ok config_hash={}", config_hash(&config));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = Execution::from_jobs(cli.jobs);
    let result = match &cli.command {
        Command::Run { scenario, seed } => cmd_run(&cli.out, scenario, *seed),
        Command::Sweep { scenario, params, seeds } => cmd_sweep(&cli.out, scenario, params, *seeds, exec),
        Command::Preset { name, seeds } => cmd_preset(&cli.out, name, *seeds, exec),
        Command::Topo { scenario } => cmd_topo(&cli.out, scenario),
        Command::Routes { scenario } => cmd_routes(&cli.out, scenario),
        Command::Validate { scenario } => cmd_validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn config_errors_exit_two() {
        let e: anyhow::Error = EngineError::InvalidConfig("x".into()).into();
        assert_eq!(exit_code(&e), 2);
        let e = anyhow!(ConfigError("bad".into())).context("while sweeping");
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow!("disk full")), 1);
        let e: anyhow::Error = HarnessError::UnknownPreset("x".into()).into();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn axis_parsing() {
        let a = parse_axis("data.f_d=2, 3,4").unwrap();
        assert_eq!(a.key, "data.f_d");
        assert_eq!(a.values, ["2", "3", "4"]);
        assert!(parse_axis("data.f_d").is_err());
        assert!(parse_axis("data.f_d=").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
