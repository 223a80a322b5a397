//! Scenario files: `key = value` lines grouped in `[section]`s, with `#`
//! comments.
//!
//! ```text
//! [topology]
//! kind = grid
//! side = 10
//! spacing = 100
//! tx_range = 120
//!
//! [data]
//! f_k = 6
//! f_d = 3
//! strategy = fixed_6
//! ```
//!
//! Every key is also addressable as `section.key` through [`set_param`],
//! which is how sweeps vary parameters. [`to_scenario_text`] writes the
//! canonical form that [`config_hash`] digests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{AttackerStart, ScenarioConfig, TopologySpec};
use crate::placement::Strategy;
use crate::topology::NodeId;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: `{key}`: {msg}")]
    Key { line: usize, key: String, msg: String },
}

/// Every settable key, in canonical order.
pub const PARAM_KEYS: &[&str] = &[
    "topology.kind",
    "topology.side",
    "topology.cols",
    "topology.rows",
    "topology.n",
    "topology.spacing",
    "topology.tx_range",
    "topology.path",
    "topology.default_range",
    "topology.delivery_prob",
    "topology.hello_rounds",
    "topology.etx_threshold",
    "sink.enabled",
    "sink.trip_duration",
    "attacker.count",
    "attacker.model",
    "attacker.start",
    "attacker.speed",
    "attacker.seizure_time",
    "attacker.pooling",
    "attacker.objective",
    "data.f_k",
    "data.f_d",
    "data.strategy",
    "data.tolerance",
    "data.cluster_mode",
    "data.cap",
    "data.generation",
    "data.trips",
    "routing.protocol",
    "routing.s_a",
    "routing.s_c",
    "energy.e_tx",
    "energy.e_rx",
    "energy.default_power",
    "energy.power",
    "energy.charge_retransmissions",
    "run.seed",
    "run.max_rounds",
];

fn parse<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

fn parse_kind(value: &str) -> Result<String, String> {
    match value {
        "grid" | "rect" | "line" | "file" => Ok(value.to_string()),
        other => Err(format!("unknown topology kind `{other}` (grid, rect, line, file)")),
    }
}

fn topology_param(spec: &mut TopologySpec, name: &str, value: &str) -> Result<(), String> {
    let (spacing, tx_range) = match spec {
        TopologySpec::Grid { spacing, tx_range, .. }
        | TopologySpec::RectGrid { spacing, tx_range, .. }
        | TopologySpec::Line { spacing, tx_range, .. } => (*spacing, *tx_range),
        TopologySpec::File { default_range, .. } => (100.0, *default_range),
    };
    let mismatch = || "does not apply to this topology kind; set `kind` first".to_string();
    match name {
        "kind" => {
            // Keeps spacing and range across kinds; sizes fall back to 50 nodes.
            *spec = match parse_kind(value)?.as_str() {
                "grid" => TopologySpec::Grid { side: 10, spacing, tx_range },
                "rect" => TopologySpec::RectGrid { cols: 10, rows: 5, spacing, tx_range },
                "line" => TopologySpec::Line { n: 50, spacing, tx_range },
                _ => TopologySpec::File { path: PathBuf::new(), default_range: tx_range },
            };
        }
        "side" => match spec {
            TopologySpec::Grid { side, .. } => *side = parse(value)?,
            _ => return Err(mismatch()),
        },
        "cols" => match spec {
            TopologySpec::RectGrid { cols, .. } => *cols = parse(value)?,
            _ => return Err(mismatch()),
        },
        "rows" => match spec {
            TopologySpec::RectGrid { rows, .. } => *rows = parse(value)?,
            _ => return Err(mismatch()),
        },
        "n" => match spec {
            TopologySpec::Line { n, .. } => *n = parse(value)?,
            _ => return Err(mismatch()),
        },
        "spacing" => match spec {
            TopologySpec::Grid { spacing, .. }
            | TopologySpec::RectGrid { spacing, .. }
            | TopologySpec::Line { spacing, .. } => *spacing = parse(value)?,
            TopologySpec::File { .. } => return Err(mismatch()),
        },
        "tx_range" => match spec {
            TopologySpec::Grid { tx_range, .. }
            | TopologySpec::RectGrid { tx_range, .. }
            | TopologySpec::Line { tx_range, .. } => *tx_range = parse(value)?,
            TopologySpec::File { .. } => return Err(mismatch()),
        },
        "path" => match spec {
            TopologySpec::File { path, .. } => *path = PathBuf::from(value),
            _ => return Err(mismatch()),
        },
        "default_range" => match spec {
            TopologySpec::File { default_range, .. } => *default_range = parse(value)?,
            _ => return Err(mismatch()),
        },
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

/// Sets one parameter addressed as `section.key`.
pub fn set_param(config: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), String> {
    let value = value.trim();
    let (section, name) = key.split_once('.').ok_or_else(|| format!("expected `section.key`, got `{key}`"))?;
    match (section, name) {
        ("topology", "delivery_prob") => config.delivery_prob = parse(value)?,
        ("topology", "hello_rounds") => config.hello_rounds = parse(value)?,
        ("topology", "etx_threshold") => config.etx_threshold = parse(value)?,
        ("topology", other) => topology_param(&mut config.topology, other, value)?,
        ("sink", "enabled") => config.sink_enabled = parse_bool(value)?,
        ("sink", "trip_duration") => config.trip_duration = parse(value)?,
        ("attacker", "count") => config.attackers = parse(value)?,
        ("attacker", "model") => config.attacker_model = parse(value)?,
        ("attacker", "start") => {
            config.attacker_start = match value {
                "random" => AttackerStart::Random,
                "spread" => AttackerStart::Spread,
                list => AttackerStart::Nodes(
                    list.split_whitespace().map(|t| parse::<u32>(t).map(NodeId)).collect::<Result<_, _>>()?,
                ),
            }
        }
        ("attacker", "speed") => config.speed = parse(value)?,
        ("attacker", "seizure_time") => config.seizure_time = parse(value)?,
        ("attacker", "pooling") => config.pooling = parse(value)?,
        ("attacker", "objective") => config.objective = parse(value)?,
        ("data", "f_k") => config.f_k = parse(value)?,
        ("data", "f_d") => config.f_d = parse(value)?,
        ("data", "strategy") => config.strategy = parse(value)?,
        ("data", "tolerance") => match &mut config.strategy {
            Strategy::FixedDistance { tolerance, .. } => *tolerance = parse(value)?,
            _ => return Err("applies only to fixed_<d> strategies; set `strategy` first".into()),
        },
        ("data", "cluster_mode") => {
            config.cluster_mode = match value {
                "origin" => crate::placement::ClusterMode::OriginRepresentsCluster,
                "exclude_origin" => crate::placement::ClusterMode::ExcludeOrigin,
                other => return Err(format!("unknown cluster mode `{other}` (origin, exclude_origin)")),
            }
        }
        ("data", "cap") => config.cap = if value == "none" { None } else { Some(parse(value)?) },
        ("data", "generation") => config.generation = parse(value)?,
        ("data", "trips") => config.trips = parse(value)?,
        ("routing", "protocol") => config.protocol = parse(value)?,
        ("routing", "s_a") => config.sizes.s_a = parse(value)?,
        ("routing", "s_c") => config.sizes.s_c = parse(value)?,
        ("energy", "e_tx") => config.radio.e_tx = parse(value)?,
        ("energy", "e_rx") => config.radio.e_rx = parse(value)?,
        ("energy", "default_power") => config.radio.default_power = parse(value)?,
        ("energy", "power") => {
            config.radio.power = value
                .split_whitespace()
                .map(|pair| {
                    let (id, p) = pair.split_once(':').ok_or_else(|| format!("expected id:power, got `{pair}`"))?;
                    Ok((NodeId(parse(id)?), parse(p)?))
                })
                .collect::<Result<_, String>>()?
        }
        ("energy", "charge_retransmissions") => config.radio.charge_retransmissions = parse_bool(value)?,
        ("run", "seed") => config.seed = parse(value)?,
        ("run", "max_rounds") => config.max_rounds = parse(value)?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

/// Parses scenario text on top of the defaults. Relative topology paths
/// are kept as written.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut config = ScenarioConfig::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ScenarioError::Syntax { line: line_no, msg: format!("unterminated section header `{line}`") })?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ScenarioError::Syntax { line: line_no, msg: format!("expected `key = value`, got `{line}`") })?;
        let sec = section
            .as_deref()
            .ok_or_else(|| ScenarioError::Syntax { line: line_no, msg: "key outside any [section]".into() })?;
        let full = format!("{sec}.{}", key.trim());
        set_param(&mut config, &full, value).map_err(|msg| ScenarioError::Key { line: line_no, key: full, msg })?;
    }
    Ok(config)
}

/// Reads a scenario file; a relative topology path resolves against the
/// file's directory.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let mut config = parse_scenario(&text)?;
    if let TopologySpec::File { path: topo, .. } = &mut config.topology {
        if topo.is_relative() {
            if let Some(dir) = path.parent() {
                *topo = dir.join(&*topo);
            }
        }
    }
    Ok(config)
}

/// Canonical text: every key in [`PARAM_KEYS`] order that applies to the
/// config, so parsing it back yields an equal config.
pub fn to_scenario_text(config: &ScenarioConfig) -> String {
    let mut s = String::new();
    let section = |s: &mut String, name: &str| {
        if !s.is_empty() {
            s.push('\n');
        }
        let _ = writeln!(s, "[{name}]");
    };
    let kv = |s: &mut String, k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(s, "{k} = {v}");
    };

    section(&mut s, "topology");
    match &config.topology {
        TopologySpec::Grid { side, spacing, tx_range } => {
            kv(&mut s, "kind", &"grid");
            kv(&mut s, "side", side);
            kv(&mut s, "spacing", spacing);
            kv(&mut s, "tx_range", tx_range);
        }
        TopologySpec::RectGrid { cols, rows, spacing, tx_range } => {
            kv(&mut s, "kind", &"rect");
            kv(&mut s, "cols", cols);
            kv(&mut s, "rows", rows);
            kv(&mut s, "spacing", spacing);
            kv(&mut s, "tx_range", tx_range);
        }
        TopologySpec::Line { n, spacing, tx_range } => {
            kv(&mut s, "kind", &"line");
            kv(&mut s, "n", n);
            kv(&mut s, "spacing", spacing);
            kv(&mut s, "tx_range", tx_range);
        }
        TopologySpec::File { path, default_range } => {
            kv(&mut s, "kind", &"file");
            kv(&mut s, "path", &path.display());
            kv(&mut s, "default_range", default_range);
        }
    }
    kv(&mut s, "delivery_prob", &config.delivery_prob);
    kv(&mut s, "hello_rounds", &config.hello_rounds);
    kv(&mut s, "etx_threshold", &config.etx_threshold);

    section(&mut s, "sink");
    kv(&mut s, "enabled", &config.sink_enabled);
    kv(&mut s, "trip_duration", &config.trip_duration);

    section(&mut s, "attacker");
    kv(&mut s, "count", &config.attackers);
    kv(&mut s, "model", &config.attacker_model);
    let start = match &config.attacker_start {
        AttackerStart::Random => "random".to_string(),
        AttackerStart::Spread => "spread".to_string(),
        AttackerStart::Nodes(ns) => ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "),
    };
    kv(&mut s, "start", &start);
    kv(&mut s, "speed", &config.speed);
    kv(&mut s, "seizure_time", &config.seizure_time);
    kv(&mut s, "pooling", &config.pooling);
    kv(&mut s, "objective", &config.objective);

    section(&mut s, "data");
    kv(&mut s, "f_k", &config.f_k);
    kv(&mut s, "f_d", &config.f_d);
    kv(&mut s, "strategy", &config.strategy);
    if let Strategy::FixedDistance { tolerance, .. } = config.strategy {
        kv(&mut s, "tolerance", &tolerance);
    }
    let mode = match config.cluster_mode {
        crate::placement::ClusterMode::OriginRepresentsCluster => "origin",
        crate::placement::ClusterMode::ExcludeOrigin => "exclude_origin",
    };
    kv(&mut s, "cluster_mode", &mode);
    kv(&mut s, "cap", &config.cap.map_or("none".to_string(), |c| c.to_string()));
    kv(&mut s, "generation", &config.generation);
    kv(&mut s, "trips", &config.trips);

    section(&mut s, "routing");
    kv(&mut s, "protocol", &config.protocol);
    kv(&mut s, "s_a", &config.sizes.s_a);
    kv(&mut s, "s_c", &config.sizes.s_c);

    section(&mut s, "energy");
    kv(&mut s, "e_tx", &config.radio.e_tx);
    kv(&mut s, "e_rx", &config.radio.e_rx);
    kv(&mut s, "default_power", &config.radio.default_power);
    let power: Vec<String> = config.radio.power.iter().map(|(id, p)| format!("{id}:{p}")).collect();
    kv(&mut s, "power", &power.join(" "));
    kv(&mut s, "charge_retransmissions", &config.radio.charge_retransmissions);

    section(&mut s, "run");
    kv(&mut s, "seed", &config.seed);
    kv(&mut s, "max_rounds", &config.max_rounds);
    s
}

/// Hex SHA-256 of arbitrary text.
pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical scenario text.
pub fn config_hash(config: &ScenarioConfig) -> String {
    sha256_hex(&to_scenario_text(config))
}
