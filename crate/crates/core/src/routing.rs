//! Sink-side route computation for fragment dispersal.
//!
//! The sink holds the whole ETX graph, so route discovery happens on the
//! sink instead of over the air. DSR and AODV share one label-correcting
//! flood from the originator: each node keeps the best `(metric, hop
//! sequence)` seen so far and a request is dropped unless it improves on it.
//! A single flood serves every destination. GPSR only needs destination
//! coordinates; greedy holes fall back to a sink-side shortest path.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::topology::{NetworkGraph, NodeId, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("no route from {from} to {to}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("no coordinate estimate for node {0}")]
    MissingCoordinate(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Dsr,
    Aodv,
    Gpsr,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Dsr, Protocol::Aodv, Protocol::Gpsr];
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Dsr => "dsr",
            Protocol::Aodv => "aodv",
            Protocol::Gpsr => "gpsr",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dsr" => Ok(Protocol::Dsr),
            "aodv" => Ok(Protocol::Aodv),
            "gpsr" => Ok(Protocol::Gpsr),
            other => Err(format!("unknown routing protocol `{other}`")),
        }
    }
}

/// Address and coordinate sizes in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSizes {
    pub s_a: u64,
    pub s_c: u64,
}

impl Default for FieldSizes {
    fn default() -> Self {
        Self { s_a: 2, s_c: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRoute {
    pub origin: NodeId,
    pub destination: NodeId,
    /// Origin first, destination last.
    pub hop_sequence: Vec<NodeId>,
    pub total_etx: f64,
}

impl SourceRoute {
    pub fn hops(&self) -> usize {
        self.hop_sequence.len().saturating_sub(1)
    }

    /// Source-route header carried by each packet: one address per hop.
    pub fn header_bytes(&self, sizes: FieldSizes) -> u64 {
        sizes.s_a * self.hops() as u64
    }

    fn trivial(node: NodeId) -> Self {
        Self { origin: node, destination: node, hop_sequence: vec![node], total_etx: 0.0 }
    }
}

/// Per-node AODV state installed by the reply phase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NextHopTable {
    pub owner: NodeId,
    /// Destination -> next hop for flows this node originates.
    pub entries: BTreeMap<NodeId, NodeId>,
    /// `(origin, destination)` -> next hop for flows relayed for others.
    pub forwarding: BTreeMap<(NodeId, NodeId), NodeId>,
}

impl NextHopTable {
    pub fn new(owner: NodeId) -> Self {
        Self { owner, ..Self::default() }
    }

    /// N_i: entries installed for other nodes' flows.
    pub fn forwarding_entries(&self) -> usize {
        self.forwarding.len()
    }

    /// Two addresses per entry.
    pub fn bytes(&self, sizes: FieldSizes) -> u64 {
        2 * sizes.s_a * (self.entries.len() + self.forwarding.len()) as u64
    }

    fn next_for(&self, origin: NodeId, dest: NodeId) -> Option<NodeId> {
        if origin == self.owner {
            self.entries.get(&dest).copied()
        } else {
            self.forwarding.get(&(origin, dest)).copied()
        }
    }
}

/// GPSR table held by an originator: destination coordinate estimates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoordTable {
    pub owner: NodeId,
    pub entries: BTreeMap<NodeId, Point>,
}

impl CoordTable {
    pub fn bytes(&self, sizes: FieldSizes) -> u64 {
        2 * sizes.s_c * self.entries.len() as u64
    }
}

/// Sink-side and network-side cost of one routing computation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OverheadLedger {
    /// Sink-side operations.
    pub instruction_count: u64,
    /// Route discovery messages sent by sensors.
    pub control_messages: u64,
    /// Table pushes from the sink, one per node per trip.
    pub distribution_messages: u64,
    /// Sum over dispatched packets of their source-route header size.
    pub header_bytes_total: u64,
    pub per_node_table_bytes: BTreeMap<NodeId, u64>,
    /// GPSR greedy holes resolved by the sink.
    pub hole_fallbacks: u64,
}

impl OverheadLedger {
    pub fn merge(&mut self, other: &OverheadLedger) {
        self.instruction_count += other.instruction_count;
        self.control_messages += other.control_messages;
        self.distribution_messages += other.distribution_messages;
        self.header_bytes_total += other.header_bytes_total;
        self.hole_fallbacks += other.hole_fallbacks;
        for (n, b) in &other.per_node_table_bytes {
            *self.per_node_table_bytes.entry(*n).or_default() += b;
        }
    }

    pub fn table_bytes_max(&self) -> u64 {
        self.per_node_table_bytes.values().copied().max().unwrap_or(0)
    }

    /// One row of `protocol,instructions,control_msgs,header_bytes_total,table_bytes_max`.
    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{},{},{},{}",
            self.instruction_count,
            self.control_messages,
            self.header_bytes_total,
            self.table_bytes_max()
        )
    }
}

pub const LEDGER_CSV_HEADER: &str = "protocol,instructions,control_msgs,header_bytes_total,table_bytes_max";

#[derive(Debug, Clone, PartialEq)]
struct Label {
    metric: f64,
    seq: Vec<usize>,
}

impl Label {
    fn better_than(&self, other: &Label) -> bool {
        match self.metric.total_cmp(&other.metric) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.seq < other.seq,
        }
    }
}

struct Flood {
    best: Vec<Option<Label>>,
    requests: u64,
}

/// Label-correcting flood from `src`. Every neighbor forward is one
/// RouteRequest invocation whether or not it survives pruning. Destinations
/// keep forwarding so routes through them are still found.
fn flood(graph: &NetworkGraph, src: usize) -> Flood {
    let mut best: Vec<Option<Label>> = vec![None; graph.len()];
    best[src] = Some(Label { metric: 0.0, seq: vec![src] });
    let mut requests = 1;
    let mut queue = VecDeque::from([src]);
    let mut queued = vec![false; graph.len()];
    queued[src] = true;
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        let here = best[u].clone().expect("queued nodes have labels");
        for &(v, etx) in graph.neighbors_at(u) {
            requests += 1;
            let mut seq = here.seq.clone();
            seq.push(v);
            let cand = Label { metric: here.metric + etx, seq };
            if best[v].as_ref().is_none_or(|b| cand.better_than(b)) {
                best[v] = Some(cand);
                if !queued[v] {
                    queued[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    Flood { best, requests }
}

fn label_route(graph: &NetworkGraph, label: &Label) -> SourceRoute {
    let hop_sequence: Vec<NodeId> = label.seq.iter().map(|&i| graph.id_of(i)).collect();
    SourceRoute {
        origin: hop_sequence[0],
        destination: *hop_sequence.last().expect("non-empty"),
        hop_sequence,
        total_etx: label.metric,
    }
}

fn index(graph: &NetworkGraph, id: NodeId) -> Result<usize, RoutingError> {
    graph.index_of(id).ok_or(RoutingError::UnknownNode(id))
}

/// Routes found by a flood, plus destinations that could not be reached.
#[derive(Debug, Clone, PartialEq)]
pub struct DsrOutput {
    pub routes: Vec<SourceRoute>,
    pub unreachable: Vec<NodeId>,
    pub ledger: OverheadLedger,
}

/// Minimum-ETX source routes from `origin` to each destination.
pub fn dsr_routes(
    graph: &NetworkGraph,
    origin: NodeId,
    destinations: &[NodeId],
    sizes: FieldSizes,
) -> Result<DsrOutput, RoutingError> {
    let src = index(graph, origin)?;
    let mut ledger = OverheadLedger::default();
    let mut routes = Vec::new();
    let mut unreachable = Vec::new();
    let remote: Vec<NodeId> = destinations.iter().copied().filter(|&d| d != origin).collect();
    for &d in destinations.iter().filter(|&&d| d == origin) {
        routes.push(SourceRoute::trivial(d));
    }
    if !remote.is_empty() {
        let f = flood(graph, src);
        ledger.instruction_count += f.requests;
        for d in remote {
            match f.best[index(graph, d)?].as_ref() {
                Some(label) => {
                    let r = label_route(graph, label);
                    ledger.header_bytes_total += r.header_bytes(sizes);
                    routes.push(r);
                }
                None => unreachable.push(d),
            }
        }
    }
    Ok(DsrOutput { routes, unreachable, ledger })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AodvOutput {
    /// Only nodes that received at least one entry.
    pub tables: BTreeMap<NodeId, NextHopTable>,
    pub unreachable: Vec<NodeId>,
    pub ledger: OverheadLedger,
}

/// Floods like DSR, then walks each destination's stored path back to the
/// originator installing next-hop entries. Each reply step is one
/// RouteReply invocation.
pub fn aodv_tables(
    graph: &NetworkGraph,
    origin: NodeId,
    destinations: &[NodeId],
    sizes: FieldSizes,
) -> Result<AodvOutput, RoutingError> {
    let mut tables = BTreeMap::new();
    aodv_into(graph, origin, destinations, sizes, &mut tables).map(|(unreachable, ledger)| AodvOutput {
        tables,
        unreachable,
        ledger,
    })
}

fn aodv_into(
    graph: &NetworkGraph,
    origin: NodeId,
    destinations: &[NodeId],
    sizes: FieldSizes,
    tables: &mut BTreeMap<NodeId, NextHopTable>,
) -> Result<(Vec<NodeId>, OverheadLedger), RoutingError> {
    let src = index(graph, origin)?;
    let mut ledger = OverheadLedger::default();
    let mut unreachable = Vec::new();
    let remote: Vec<NodeId> = destinations.iter().copied().filter(|&d| d != origin).collect();
    if remote.is_empty() {
        return Ok((unreachable, ledger));
    }
    let f = flood(graph, src);
    ledger.instruction_count += f.requests;
    for d in remote {
        let Some(label) = f.best[index(graph, d)?].as_ref() else {
            unreachable.push(d);
            continue;
        };
        let path: Vec<NodeId> = label.seq.iter().map(|&i| graph.id_of(i)).collect();
        for w in path.windows(2).rev() {
            ledger.instruction_count += 1;
            let table = tables.entry(w[0]).or_insert_with(|| NextHopTable::new(w[0]));
            if w[0] == origin {
                table.entries.insert(d, w[1]);
            } else {
                table.forwarding.insert((origin, d), w[1]);
            }
        }
    }
    for (n, t) in tables.iter() {
        ledger.per_node_table_bytes.insert(*n, t.bytes(sizes));
    }
    Ok((unreachable, ledger))
}

/// Follows installed entries from `origin` toward `dest`. `None` if an entry
/// is missing or the chain exceeds the node count.
pub fn follow_tables(
    tables: &BTreeMap<NodeId, NextHopTable>,
    origin: NodeId,
    dest: NodeId,
    limit: usize,
) -> Option<Vec<NodeId>> {
    let mut path = vec![origin];
    let mut cur = origin;
    while cur != dest {
        if path.len() > limit {
            return None;
        }
        cur = tables.get(&cur)?.next_for(origin, dest)?;
        path.push(cur);
    }
    Some(path)
}

/// Coordinate table for `origin`: one lookup per destination, no messages.
pub fn gpsr_tables(
    graph: &NetworkGraph,
    origin: NodeId,
    destinations: &[NodeId],
    sizes: FieldSizes,
) -> Result<(CoordTable, OverheadLedger), RoutingError> {
    index(graph, origin)?;
    let mut table = CoordTable { owner: origin, entries: BTreeMap::new() };
    let mut ledger = OverheadLedger::default();
    for &d in destinations {
        ledger.instruction_count += 1;
        let p = graph.position(d).ok_or(RoutingError::MissingCoordinate(d))?;
        table.entries.insert(d, p);
    }
    ledger.per_node_table_bytes.insert(origin, table.bytes(sizes));
    Ok((table, ledger))
}

/// Greedy step: the neighbor closest to `dest`, if strictly closer than
/// `current`. `None` means a greedy hole. Ties go to the lower node id.
pub fn gpsr_forward(graph: &NetworkGraph, current: NodeId, dest: Point) -> Option<NodeId> {
    let i = graph.index_of(current)?;
    let mut best = graph.position_at(i).distance(&dest);
    let mut pick = None;
    for &(j, _) in graph.neighbors_at(i) {
        let d = graph.position_at(j).distance(&dest);
        if d < best {
            best = d;
            pick = Some(graph.id_of(j));
        }
    }
    pick
}

/// Path taken by a GPSR packet.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsrPath {
    pub hops: Vec<NodeId>,
    /// Node where greedy forwarding got stuck, if any.
    pub hole_at: Option<NodeId>,
}

/// Greedy forwarding toward `dest`'s coordinate estimate; a hole is resolved
/// with [`resolve_gpsr_hole`].
pub fn gpsr_walk(graph: &NetworkGraph, origin: NodeId, dest: NodeId) -> Result<GpsrPath, RoutingError> {
    index(graph, origin)?;
    let target = graph.position(dest).ok_or(RoutingError::MissingCoordinate(dest))?;
    let mut hops = vec![origin];
    let mut cur = origin;
    while cur != dest {
        match gpsr_forward(graph, cur, target) {
            Some(next) => {
                cur = next;
                hops.push(cur);
            }
            None => {
                let detour = resolve_gpsr_hole(graph, cur, dest)?;
                hops.extend_from_slice(&detour.hop_sequence[1..]);
                return Ok(GpsrPath { hops, hole_at: Some(cur) });
            }
        }
    }
    Ok(GpsrPath { hops, hole_at: None })
}

/// Sink-side minimum-ETX detour from a stuck node.
pub fn resolve_gpsr_hole(graph: &NetworkGraph, stuck: NodeId, dest: NodeId) -> Result<SourceRoute, RoutingError> {
    shortest_etx_oracle(graph, stuck, dest)
}

#[derive(PartialEq)]
struct HeapItem(Label, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .0
            .metric
            .total_cmp(&self.0.metric)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over ETX weights with ties broken by the lexicographically
/// smallest hop sequence.
pub fn shortest_etx_oracle(graph: &NetworkGraph, a: NodeId, b: NodeId) -> Result<SourceRoute, RoutingError> {
    let src = index(graph, a)?;
    let dst = index(graph, b)?;
    let mut done = vec![false; graph.len()];
    let mut heap = BinaryHeap::from([HeapItem(Label { metric: 0.0, seq: vec![src] }, src)]);
    while let Some(HeapItem(label, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            return Ok(label_route(graph, &label));
        }
        for &(v, etx) in graph.neighbors_at(u) {
            if !done[v] {
                let mut seq = label.seq.clone();
                seq.push(v);
                heap.push(HeapItem(Label { metric: label.metric + etx, seq }, v));
            }
        }
    }
    Err(RoutingError::Unreachable { from: a, to: b })
}

/// Route-discovery message counts: a distributed AODV baseline against the
/// centralized scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ControlComparison {
    /// Network-wide flood per datum: every node rebroadcasts once.
    pub distributed_requests: u64,
    /// Unicast replies along each destination's path.
    pub distributed_replies: u64,
    pub centralized_requests: u64,
    pub centralized_replies: u64,
    /// One broadcast per node per HELLO round.
    pub hello_messages: u64,
    /// One table push per node per trip.
    pub distribution_messages: u64,
}

impl ControlComparison {
    pub fn distributed_total(&self) -> u64 {
        self.distributed_requests + self.distributed_replies
    }

    pub fn centralized_total(&self) -> u64 {
        self.centralized_requests + self.centralized_replies
    }
}

/// A datum's originator and its fragment destinations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub origin: NodeId,
    pub destinations: Vec<NodeId>,
}

/// Message counts for `flows`, one route request per datum per trip.
pub fn distributed_overhead_model(
    graph: &NetworkGraph,
    flows: &[Flow],
    trips: u64,
    hello_rounds: u64,
) -> Result<ControlComparison, RoutingError> {
    let n = graph.len() as u64;
    let mut out = ControlComparison {
        hello_messages: if flows.is_empty() { 0 } else { n * hello_rounds },
        distribution_messages: if flows.is_empty() { 0 } else { n * trips },
        ..Default::default()
    };
    for flow in flows {
        out.distributed_requests += n;
        for &d in flow.destinations.iter().filter(|&&d| d != flow.origin) {
            out.distributed_replies += shortest_etx_oracle(graph, flow.origin, d)?.hops() as u64;
        }
    }
    Ok(out)
}

/// Routes for every fragment of one datum under a given protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingArtifact {
    pub protocol: Protocol,
    pub origin: NodeId,
    /// Destination -> node sequence the fragment actually travels.
    pub paths: BTreeMap<NodeId, Vec<NodeId>>,
    pub source_routes: Vec<SourceRoute>,
    pub tables: BTreeMap<NodeId, NextHopTable>,
    pub coord_table: Option<CoordTable>,
    pub ledger: OverheadLedger,
}

impl RoutingArtifact {
    pub fn path_to(&self, dest: NodeId) -> Option<&[NodeId]> {
        self.paths.get(&dest).map(Vec::as_slice)
    }
}

/// Computes routes from `origin` to every destination with `protocol`.
/// Fails on the first unreachable destination.
pub fn route_fragments(
    protocol: Protocol,
    graph: &NetworkGraph,
    origin: NodeId,
    destinations: &[NodeId],
    sizes: FieldSizes,
) -> Result<RoutingArtifact, RoutingError> {
    let mut dests: Vec<NodeId> = destinations.iter().copied().filter(|&d| d != origin).collect();
    dests.sort();
    dests.dedup();
    let mut art = RoutingArtifact {
        protocol,
        origin,
        paths: BTreeMap::new(),
        source_routes: Vec::new(),
        tables: BTreeMap::new(),
        coord_table: None,
        ledger: OverheadLedger::default(),
    };
    match protocol {
        Protocol::Dsr => {
            let out = dsr_routes(graph, origin, &dests, sizes)?;
            if let Some(&to) = out.unreachable.first() {
                return Err(RoutingError::Unreachable { from: origin, to });
            }
            for r in &out.routes {
                art.paths.insert(r.destination, r.hop_sequence.clone());
            }
            art.source_routes = out.routes;
            art.ledger = out.ledger;
        }
        Protocol::Aodv => {
            let out = aodv_tables(graph, origin, &dests, sizes)?;
            if let Some(&to) = out.unreachable.first() {
                return Err(RoutingError::Unreachable { from: origin, to });
            }
            for &d in &dests {
                let p = follow_tables(&out.tables, origin, d, graph.len())
                    .ok_or(RoutingError::Unreachable { from: origin, to: d })?;
                art.paths.insert(d, p);
            }
            art.tables = out.tables;
            art.ledger = out.ledger;
        }
        Protocol::Gpsr => {
            let (table, mut ledger) = gpsr_tables(graph, origin, &dests, sizes)?;
            for &d in &dests {
                let walk = gpsr_walk(graph, origin, d)?;
                if walk.hole_at.is_some() {
                    ledger.hole_fallbacks += 1;
                }
                art.paths.insert(d, walk.hops);
            }
            art.coord_table = Some(table);
            art.ledger = ledger;
        }
    }
    Ok(art)
}

/// Per-flow inputs to [`network_ledger`].
pub struct NetworkLedgerInput<'a> {
    pub graph: &'a NetworkGraph,
    pub flows: &'a [Flow],
    pub sizes: FieldSizes,
    pub trips: u64,
}

/// Ledger for `protocol` over all flows at once. AODV tables are accumulated
/// across flows so N_i counts relayed entries from every originator.
pub fn network_ledger(protocol: Protocol, input: &NetworkLedgerInput<'_>) -> Result<OverheadLedger, RoutingError> {
    let mut total = OverheadLedger::default();
    match protocol {
        Protocol::Aodv => {
            let mut tables = BTreeMap::new();
            for flow in input.flows {
                let (_, l) = aodv_into(input.graph, flow.origin, &flow.destinations, input.sizes, &mut tables)?;
                total.instruction_count += l.instruction_count;
            }
            for (n, t) in &tables {
                total.per_node_table_bytes.insert(*n, t.bytes(input.sizes));
            }
        }
        _ => {
            for flow in input.flows {
                let art = route_fragments(protocol, input.graph, flow.origin, &flow.destinations, input.sizes)?;
                total.merge(&art.ledger);
            }
        }
    }
    total.distribution_messages = input.graph.len() as u64 * input.trips;
    Ok(total)
}

/// `origin,destination,hops,total_etx,path` with the path space-separated.
pub fn routes_csv(routes: &[SourceRoute]) -> String {
    let mut s = String::from("origin,destination,hops,total_etx,path\n");
    for r in routes {
        let path: Vec<String> = r.hop_sequence.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "{},{},{},{:.6},{}", r.origin, r.destination, r.hops(), r.total_etx, path.join(" "));
    }
    s
}

/// `owner,origin,destination,next_hop`
pub fn tables_csv(tables: &BTreeMap<NodeId, NextHopTable>) -> String {
    let mut s = String::from("owner,origin,destination,next_hop\n");
    for t in tables.values() {
        for (d, n) in &t.entries {
            let _ = writeln!(s, "{},{},{},{}", t.owner, t.owner, d, n);
        }
        for ((o, d), n) in &t.forwarding {
            let _ = writeln!(s, "{},{},{},{}", t.owner, o, d, n);
        }
    }
    s
}

/// `owner,destination,x,y`
pub fn coords_csv(table: &CoordTable) -> String {
    let mut s = String::from("owner,destination,x,y\n");
    for (d, p) in &table.entries {
        let _ = writeln!(s, "{},{},{:.6},{:.6}", table.owner, d, p.x, p.y);
    }
    s
}
