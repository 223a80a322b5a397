//! Round-based simulation of one scenario.
//!
//! One round is one node-attack step per attacker. The sink advances through
//! its tour at the rate implied by the trip duration: after round `R` it has
//! made `floor(R * round_cost * n / t_s)` visits in total, where `round_cost`
//! is the attacker's per-node cost `d/v + r`. Within a round, attackers act
//! before the sink.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{EnergyError, EnergyLedger, RadioProfile};
use crate::mobility::{circular_order, line_order, nearest_spacing, plan_sink_trip, AttackerModel, AttackerState};
use crate::placement::{
    kmeans_best_of, place, ClusterMode, Clustering, DataId, DataItem, PlacementError, Strategy, KMEANS_MAX_ITERS,
    KMEANS_RESTARTS,
};
use crate::routing::{route_fragments, FieldSizes, OverheadLedger, Protocol, RoutingError};
use crate::topology::{
    build_sink_graph, generate_grid, generate_line, generate_rect_grid, load_topology, simulate_hello_round,
    with_delivery_prob, NetworkGraph, NodeId, Topology, TopologyError,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

impl EngineError {
    pub fn is_config(&self) -> bool {
        matches!(self, EngineError::InvalidConfig(_))
    }
}

fn invalid(msg: impl Into<String>) -> EngineError {
    EngineError::InvalidConfig(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Grid { side: usize, spacing: f64, tx_range: f64 },
    RectGrid { cols: usize, rows: usize, spacing: f64, tx_range: f64 },
    Line { n: usize, spacing: f64, tx_range: f64 },
    File { path: PathBuf, default_range: f64 },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology, TopologyError> {
        match self {
            TopologySpec::Grid { side, spacing, tx_range } => generate_grid(*side, *spacing, *tx_range),
            TopologySpec::RectGrid { cols, rows, spacing, tx_range } => generate_rect_grid(*cols, *rows, *spacing, *tx_range),
            TopologySpec::Line { n, spacing, tx_range } => generate_line(*n, *spacing, *tx_range),
            TopologySpec::File { path, default_range } => {
                let loaded = load_topology(path, *default_range)?;
                for w in &loaded.warnings {
                    log::warn!("{}: {w}", path.display());
                }
                Ok(loaded.topology)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    #[default]
    Seizure,
    Deletion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    /// Attackers share what they seize.
    #[default]
    Union,
    /// One attacker must hold `f_d` fragments on its own.
    Individual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Generation {
    /// One datum at a random originator at each trip start.
    #[default]
    Single,
    /// Every node creates one datum at each trip start.
    PerNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AttackerStart {
    /// Uniform node per attacker.
    #[default]
    Random,
    /// Evenly spaced along the sweep order; odd attackers of a line sweep
    /// start at the far end and walk back.
    Spread,
    Nodes(Vec<NodeId>),
}

macro_rules! keyword_enum {
    ($ty:ty { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value `{other}`")),
                }
            }
        }
    };
}

keyword_enum!(Objective { "seizure" => Objective::Seizure, "deletion" => Objective::Deletion });
keyword_enum!(Pooling { "union" => Pooling::Union, "individual" => Pooling::Individual });
keyword_enum!(Generation { "single" => Generation::Single, "per_node" => Generation::PerNode });

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub topology: TopologySpec,
    pub delivery_prob: f64,
    pub hello_rounds: u32,
    pub etx_threshold: f64,
    /// Seconds per sink trip.
    pub trip_duration: f64,
    pub sink_enabled: bool,
    pub attackers: usize,
    pub attacker_model: AttackerModel,
    pub attacker_start: AttackerStart,
    /// Attacker speed, m/s.
    pub speed: f64,
    /// Seconds to seize one node.
    pub seizure_time: f64,
    pub pooling: Pooling,
    pub f_k: usize,
    pub f_d: usize,
    pub strategy: Strategy,
    pub cluster_mode: ClusterMode,
    /// Fragments of one datum a node may hold; `None` disables the cap.
    pub cap: Option<usize>,
    pub generation: Generation,
    /// Trips that generate data.
    pub trips: u64,
    pub protocol: Protocol,
    pub sizes: FieldSizes,
    pub radio: RadioProfile,
    pub objective: Objective,
    pub max_rounds: u64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::Grid { side: 10, spacing: 100.0, tx_range: 120.0 },
            delivery_prob: 1.0,
            hello_rounds: 10,
            etx_threshold: crate::topology::DEFAULT_ETX_THRESHOLD,
            trip_duration: 600.0,
            sink_enabled: true,
            attackers: 1,
            attacker_model: AttackerModel::Manhattan,
            attacker_start: AttackerStart::Random,
            speed: 10.0,
            seizure_time: 20.0,
            pooling: Pooling::Union,
            f_k: 6,
            f_d: 3,
            strategy: Strategy::Clustered,
            cluster_mode: ClusterMode::OriginRepresentsCluster,
            cap: Some(1),
            generation: Generation::Single,
            trips: 1,
            protocol: Protocol::Dsr,
            sizes: FieldSizes::default(),
            radio: RadioProfile::default(),
            objective: Objective::Seizure,
            max_rounds: 1000,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Checks everything that does not need the topology built.
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.f_d == 0 {
            return Err(invalid("f_d must be at least 1"));
        }
        if self.f_d > self.f_k {
            return Err(invalid(format!("f_d ({}) must not exceed f_k ({})", self.f_d, self.f_k)));
        }
        if let Some(cap) = self.cap {
            let limit = self.f_d.saturating_sub(1).max(1);
            if cap == 0 || cap > limit {
                return Err(invalid(format!("per-node cap ({cap}) must be between 1 and f_d - 1 ({limit})")));
            }
        }
        let positive = [
            ("trip_duration", self.trip_duration),
            ("speed", self.speed),
            ("etx_threshold", self.etx_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.seizure_time.is_finite() && self.seizure_time >= 0.0) {
            return Err(invalid(format!("seizure_time must be non-negative, got {}", self.seizure_time)));
        }
        if !(self.delivery_prob > 0.0 && self.delivery_prob <= 1.0) {
            return Err(invalid(format!("delivery_prob must be in (0, 1], got {}", self.delivery_prob)));
        }
        if self.hello_rounds == 0 || self.max_rounds == 0 || self.trips == 0 {
            return Err(invalid("hello_rounds, max_rounds and trips must be at least 1"));
        }
        if let Strategy::FixedDistance { target, tolerance } = self.strategy {
            if !(target >= 0.0 && tolerance >= 0.0) {
                return Err(invalid("fixed-distance target and tolerance must be non-negative"));
            }
        }
        if let AttackerStart::Nodes(nodes) = &self.attacker_start {
            if nodes.len() != self.attackers {
                return Err(invalid(format!("{} start nodes given for {} attackers", nodes.len(), self.attackers)));
            }
        }
        self.radio.validate()?;
        Ok(())
    }
}

/// Independent generator for one purpose, so adding an attacker or a datum
/// never shifts the draws of another stream.
pub fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | index);
    rng
}

const STREAM_HELLO: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_ATTACKER: u64 = 3;
const STREAM_CLUSTER: u64 = 4;

/// A fragment: datum and fragment index.
pub type FragmentRef = (DataId, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    DataCreated,
    FragmentPlaced,
    Attack,
    Seized,
    Erased,
    Collected,
    Compromised,
    Secured,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::DataCreated => "data_created",
            EventKind::FragmentPlaced => "fragment_placed",
            EventKind::Attack => "attack",
            EventKind::Seized => "seized",
            EventKind::Erased => "erased",
            EventKind::Collected => "collected",
            EventKind::Compromised => "compromised",
            EventKind::Secured => "secured",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Node,
    Sink,
    Attacker(usize),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Node => f.write_str("node"),
            Actor::Sink => f.write_str("sink"),
            Actor::Attacker(i) => write!(f, "attacker{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub round: u64,
    pub kind: EventKind,
    pub actor: Actor,
    pub node: NodeId,
    pub data_id: Option<DataId>,
    pub fragment_index: Option<usize>,
}

pub const EVENT_CSV_HEADER: &str = "round,event_type,actor,node,data_id,fragment_index";

#[derive(Debug, Clone, PartialEq)]
pub struct DatumOutcome {
    pub data_id: DataId,
    pub origin: NodeId,
    pub trip: u64,
    pub created_round: u64,
    pub dfk_hops: f64,
    pub dfk_meters: f64,
    pub e_k: f64,
    pub neighbor_violation: bool,
    pub compromised_round: Option<u64>,
    pub secured_round: Option<u64>,
    /// Distinct holders hit by attackers while they still held a fragment.
    pub holders_hit: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub seed: u64,
    pub rounds_run: u64,
    pub data: Vec<DatumOutcome>,
    pub events: Vec<Event>,
    pub energy: EnergyLedger,
    pub overhead: OverheadLedger,
}

impl SimulationReport {
    pub fn compromised(&self) -> usize {
        self.data.iter().filter(|d| d.compromised_round.is_some()).count()
    }

    /// Share of data the attackers decoded or destroyed, in percent.
    pub fn seizure_percentage(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        100.0 * self.compromised() as f64 / self.data.len() as f64
    }

    /// Rounds from creation to compromise, for compromised data.
    pub fn rounds_to_compromise(&self) -> Vec<u64> {
        self.data
            .iter()
            .filter_map(|d| d.compromised_round.map(|r| r - d.created_round + 1))
            .collect()
    }

    pub fn hole_fallbacks(&self) -> u64 {
        self.overhead.hole_fallbacks
    }

    pub fn events_csv(&self) -> String {
        let mut s = String::from(EVENT_CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<String>| v.unwrap_or_default();
        for e in &self.events {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                e.round,
                e.kind,
                e.actor,
                e.node,
                opt(e.data_id.map(|d| d.to_string())),
                opt(e.fragment_index.map(|i| i.to_string()))
            );
        }
        s
    }

    /// One row per datum.
    pub fn data_csv(&self) -> String {
        let mut s = String::from(DATA_CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<u64>| v.map(|r| r.to_string()).unwrap_or_default();
        for d in &self.data {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{},{},{}",
                d.data_id,
                d.origin,
                d.trip,
                d.dfk_hops,
                d.dfk_meters,
                d.e_k,
                opt(d.compromised_round),
                opt(d.secured_round),
                d.holders_hit
            );
        }
        s
    }
}

pub const DATA_CSV_HEADER: &str =
    "data_id,origin,trip,dfk_hops,dfk_meters,e_k,compromised_round,secured_round,holders_hit";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatumStatus {
    Active,
    Compromised(u64),
    Secured(u64),
}

/// What the engine tracks per datum.
#[derive(Debug, Clone, PartialEq)]
pub struct DatumState {
    pub item: DataItem,
    /// Fragment indices still stored somewhere in the network.
    pub remaining: BTreeSet<usize>,
    /// Fragment indices the sink holds.
    pub collected: BTreeSet<usize>,
    pub status: DatumStatus,
}

/// Active data the attackers have now beaten.
///
/// Seizure: the attackers' pools (united, or one pool alone under
/// [`Pooling::Individual`]) hold `f_d` distinct fragments of the datum.
/// Deletion: fewer than `f_d` fragments are left for the sink to gather.
pub fn attacker_success_check(
    pools: &[BTreeSet<FragmentRef>],
    registry: &BTreeMap<DataId, DatumState>,
    objective: Objective,
    pooling: Pooling,
) -> Vec<DataId> {
    let mut beaten = Vec::new();
    for (id, st) in registry {
        if st.status != DatumStatus::Active {
            continue;
        }
        let hit = match objective {
            Objective::Seizure => {
                let count = |pool: &BTreeSet<FragmentRef>| pool.range((*id, 0)..=(*id, usize::MAX)).count();
                match pooling {
                    Pooling::Union => {
                        let all: BTreeSet<usize> = pools
                            .iter()
                            .flat_map(|p| p.range((*id, 0)..=(*id, usize::MAX)).map(|f| f.1))
                            .collect();
                        all.len() >= st.item.f_d
                    }
                    Pooling::Individual => pools.iter().any(|p| count(p) >= st.item.f_d),
                }
            }
            Objective::Deletion => st.remaining.union(&st.collected).count() < st.item.f_d,
        };
        if hit {
            beaten.push(*id);
        }
    }
    beaten
}

/// Topology-derived state shared by every round of a run.
pub struct Prepared {
    pub topology: Topology,
    pub graph: NetworkGraph,
    pub tour: Vec<NodeId>,
    pub clustering: Option<Clustering>,
    pub round_cost: f64,
}

/// Builds the topology, runs HELLO exchange and one observation trip, and
/// clusters the sink's graph if the strategy needs it.
pub fn prepare(config: &ScenarioConfig) -> Result<Prepared, EngineError> {
    config.validate()?;
    let base = config.topology.build()?;
    let topology = if config.delivery_prob < 1.0 { with_delivery_prob(&base, config.delivery_prob)? } else { base };
    if topology.len() < config.f_k && config.cap == Some(1) {
        return Err(invalid(format!("f_k ({}) exceeds node count ({})", config.f_k, topology.len())));
    }
    let hello_seed = stream_rng(config.seed, STREAM_HELLO, 0).gen::<u64>();
    let hello = simulate_hello_round(&topology, hello_seed, config.hello_rounds);
    let trip = plan_sink_trip(&topology, config.trip_duration);
    let observations = trip.observations(&topology);
    let graph = build_sink_graph(&topology, &hello, &observations, config.etx_threshold)?;
    let clustering = if config.strategy == Strategy::Clustered {
        let k = config.cluster_mode.cluster_count(config.f_k);
        let mut rng = stream_rng(config.seed, STREAM_CLUSTER, 0);
        Some(kmeans_best_of(&graph, k, &mut rng, KMEANS_MAX_ITERS, KMEANS_RESTARTS)?)
    } else {
        None
    };
    let round_cost = nearest_spacing(&topology) / config.speed + config.seizure_time;
    if round_cost <= 0.0 {
        return Err(invalid("attacker round cost d/v + r must be positive"));
    }
    Ok(Prepared { tour: trip.visit_order().to_vec(), topology, graph, clustering, round_cost })
}

fn attacker_starts(config: &ScenarioConfig, topology: &Topology) -> Result<Vec<(NodeId, bool)>, EngineError> {
    let ids: Vec<NodeId> = topology.nodes().iter().map(|n| n.id).collect();
    let count = config.attackers;
    Ok(match &config.attacker_start {
        AttackerStart::Random => (0..count)
            .map(|i| {
                let mut rng = stream_rng(config.seed, STREAM_ATTACKER, 2 * i as u64 + 1);
                (ids[rng.gen_range(0..ids.len())], false)
            })
            .collect(),
        AttackerStart::Spread => match config.attacker_model {
            AttackerModel::LineSweep => {
                let order = line_order(topology);
                (0..count)
                    .map(|i| {
                        let pair = i / 2;
                        let offset = pair * order.len() / count.max(1);
                        if i % 2 == 0 {
                            (order[offset], false)
                        } else {
                            (order[order.len() - 1 - offset], true)
                        }
                    })
                    .collect()
            }
            _ => {
                let order = if config.attacker_model == AttackerModel::CircularSweep { circular_order(topology) } else { ids };
                (0..count).map(|i| (order[i * order.len() / count.max(1)], false)).collect()
            }
        },
        AttackerStart::Nodes(nodes) => {
            for n in nodes {
                if topology.node(*n).is_none() {
                    return Err(invalid(format!("attacker start node {n} is not in the topology")));
                }
            }
            nodes.iter().map(|&n| (n, false)).collect()
        }
    })
}

/// Runs one scenario to completion with `config.seed`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimulationReport, EngineError> {
    let prepared = prepare(config)?;
    run_prepared(config, &prepared)
}

struct Sim<'a> {
    config: &'a ScenarioConfig,
    prep: &'a Prepared,
    stores: BTreeMap<NodeId, BTreeSet<FragmentRef>>,
    registry: BTreeMap<DataId, DatumState>,
    outcomes: BTreeMap<DataId, DatumOutcome>,
    holders_hit: BTreeMap<DataId, BTreeSet<NodeId>>,
    pools: Vec<BTreeSet<FragmentRef>>,
    events: Vec<Event>,
    energy: EnergyLedger,
    overhead: OverheadLedger,
    data_rng: ChaCha8Rng,
    next_data: u32,
}

impl Sim<'_> {
    fn log(&mut self, round: u64, kind: EventKind, actor: Actor, node: NodeId, frag: Option<FragmentRef>) {
        self.events.push(Event { round, kind, actor, node, data_id: frag.map(|f| f.0), fragment_index: frag.map(|f| f.1) });
    }

    fn log_datum(&mut self, round: u64, kind: EventKind, actor: Actor, node: NodeId, id: DataId) {
        self.events.push(Event { round, kind, actor, node, data_id: Some(id), fragment_index: None });
    }

    fn start_trip(&mut self, trip: u64, round: u64) -> Result<(), EngineError> {
        let ids: Vec<NodeId> = self.prep.graph.node_ids().collect();
        let origins: Vec<NodeId> = match self.config.generation {
            Generation::Single => vec![ids[self.data_rng.gen_range(0..ids.len())]],
            Generation::PerNode => ids.clone(),
        };
        for origin in origins {
            self.create_datum(origin, trip, round)?;
        }
        self.energy.charge_distribution(ids.iter().copied(), &self.config.radio);
        self.overhead.distribution_messages += ids.len() as u64;
        Ok(())
    }

    fn create_datum(&mut self, origin: NodeId, trip: u64, round: u64) -> Result<(), EngineError> {
        let c = self.config;
        let data_id = DataId(self.next_data);
        self.next_data += 1;
        let item = DataItem::new(data_id, origin, c.f_k, c.f_d)?;
        let plan = place(
            c.strategy,
            &item,
            &self.prep.graph,
            self.prep.clustering.as_ref(),
            c.cluster_mode,
            c.cap,
            &mut self.data_rng,
        )?;
        plan.check_cap(c.cap)?;
        let routes = route_fragments(c.protocol, &self.prep.graph, origin, &plan.assignments, c.sizes)?;
        self.overhead.merge(&routes.ledger);
        self.log_datum(round, EventKind::DataCreated, Actor::Node, origin, data_id);
        self.energy.per_datum.entry(data_id).or_insert(0.0);
        let mut e_k = 0.0;
        for (i, &holder) in plan.assignments.iter().enumerate() {
            if holder != origin {
                let path = routes.path_to(holder).ok_or(RoutingError::Unreachable { from: origin, to: holder })?;
                e_k += self.energy.charge_fragment(data_id, path, &c.radio, Some(&self.prep.graph));
            }
            self.stores.entry(holder).or_default().insert((data_id, i));
            self.log(round, EventKind::FragmentPlaced, Actor::Node, holder, Some((data_id, i)));
        }
        self.registry.insert(
            data_id,
            DatumState { item, remaining: (0..c.f_k).collect(), collected: BTreeSet::new(), status: DatumStatus::Active },
        );
        self.outcomes.insert(
            data_id,
            DatumOutcome {
                data_id,
                origin,
                trip,
                created_round: round,
                dfk_hops: plan.dfk_hops,
                dfk_meters: plan.dfk_meters,
                e_k,
                neighbor_violation: plan.neighbor_violation,
                compromised_round: None,
                secured_round: None,
                holders_hit: 0,
            },
        );
        Ok(())
    }

    fn attack(&mut self, round: u64, attacker: usize, node: NodeId) {
        self.log(round, EventKind::Attack, Actor::Attacker(attacker), node, None);
        let stored: Vec<FragmentRef> = self.stores.get(&node).map(|s| s.iter().copied().collect()).unwrap_or_default();
        for frag in stored {
            if self.registry[&frag.0].status != DatumStatus::Active {
                continue;
            }
            self.holders_hit.entry(frag.0).or_default().insert(node);
            match self.config.objective {
                Objective::Seizure => {
                    if self.pools[attacker].insert(frag) {
                        self.log(round, EventKind::Seized, Actor::Attacker(attacker), node, Some(frag));
                    }
                }
                Objective::Deletion => {
                    self.stores.get_mut(&node).expect("store exists").remove(&frag);
                    self.registry.get_mut(&frag.0).expect("registered").remaining.remove(&frag.1);
                    self.log(round, EventKind::Erased, Actor::Attacker(attacker), node, Some(frag));
                }
            }
        }
    }

    fn collect(&mut self, round: u64, node: NodeId) {
        let Some(store) = self.stores.remove(&node) else { return };
        for frag in store {
            let st = self.registry.get_mut(&frag.0).expect("registered");
            st.remaining.remove(&frag.1);
            st.collected.insert(frag.1);
            self.log(round, EventKind::Collected, Actor::Sink, node, Some(frag));
        }
    }

    /// Drops every stored fragment of a resolved datum.
    fn purge(&mut self, id: DataId) {
        for store in self.stores.values_mut() {
            store.retain(|frag| frag.0 != id);
        }
    }

    fn settle(&mut self, round: u64) {
        for id in attacker_success_check(&self.pools, &self.registry, self.config.objective, self.config.pooling) {
            self.purge(id);
            self.registry.get_mut(&id).expect("registered").status = DatumStatus::Compromised(round);
            self.outcomes.get_mut(&id).expect("outcome").compromised_round = Some(round);
            let origin = self.outcomes[&id].origin;
            self.log_datum(round, EventKind::Compromised, Actor::Node, origin, id);
        }
        let secured: Vec<DataId> = self
            .registry
            .iter()
            .filter(|(_, st)| {
                st.status == DatumStatus::Active
                    && match self.config.objective {
                        Objective::Seizure => st.remaining.is_empty(),
                        Objective::Deletion => st.collected.len() >= st.item.f_d,
                    }
            })
            .map(|(id, _)| *id)
            .collect();
        for id in secured {
            self.purge(id);
            self.registry.get_mut(&id).expect("registered").status = DatumStatus::Secured(round);
            self.outcomes.get_mut(&id).expect("outcome").secured_round = Some(round);
            let origin = self.outcomes[&id].origin;
            self.log_datum(round, EventKind::Secured, Actor::Sink, origin, id);
        }
    }
}

/// Runs the round loop on an already prepared topology.
pub fn run_prepared(config: &ScenarioConfig, prep: &Prepared) -> Result<SimulationReport, EngineError> {
    let n = prep.tour.len() as u64;
    let starts = attacker_starts(config, &prep.topology)?;
    let mut attackers: Vec<(AttackerState, ChaCha8Rng)> = starts
        .iter()
        .enumerate()
        .map(|(i, &(start, reverse))| {
            let state = AttackerState::new(&prep.topology, config.attacker_model, start, config.speed, config.seizure_time, reverse);
            (state, stream_rng(config.seed, STREAM_ATTACKER, 2 * i as u64))
        })
        .collect();

    let mut sim = Sim {
        config,
        prep,
        stores: BTreeMap::new(),
        registry: BTreeMap::new(),
        outcomes: BTreeMap::new(),
        holders_hit: BTreeMap::new(),
        pools: vec![BTreeSet::new(); attackers.len()],
        events: Vec::new(),
        energy: EnergyLedger::default(),
        overhead: OverheadLedger::default(),
        data_rng: stream_rng(config.seed, STREAM_DATA, 0),
        next_data: 0,
    };
    for _ in 0..config.hello_rounds {
        sim.energy.charge_hello(&prep.topology, &config.radio);
    }

    let visits_per_round = prep.round_cost * n as f64 / config.trip_duration;
    let mut visits_done: u64 = 0;
    let mut next_trip: u64 = 0;
    let mut rounds_run = 0;
    for round in 1..=config.max_rounds {
        rounds_run = round;
        let visits_due = if config.sink_enabled { (round as f64 * visits_per_round + 1e-9).floor() as u64 } else { 0 };
        while next_trip < config.trips && (next_trip == 0 || next_trip * n < visits_due) {
            sim.start_trip(next_trip, round)?;
            next_trip += 1;
        }
        for (i, (state, rng)) in attackers.iter_mut().enumerate() {
            let node = state.step(&prep.topology, rng);
            sim.attack(round, i, node);
        }
        sim.settle(round);
        while visits_done < visits_due {
            let node = prep.tour[(visits_done % n) as usize];
            sim.collect(round, node);
            visits_done += 1;
        }
        sim.settle(round);
        let all_resolved = sim.registry.values().all(|st| st.status != DatumStatus::Active);
        if next_trip >= config.trips && all_resolved {
            break;
        }
    }

    let mut data: Vec<DatumOutcome> = sim.outcomes.into_values().collect();
    for d in &mut data {
        d.holders_hit = sim.holders_hit.get(&d.data_id).map_or(0, BTreeSet::len);
    }
    Ok(SimulationReport {
        seed: config.seed,
        rounds_run,
        data,
        events: sim.events,
        energy: sim.energy,
        overhead: sim.overhead,
    })
}
