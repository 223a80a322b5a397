//! Sensor deployment, HELLO/ETX link estimation and the sink's world model.
//!
//! A [`Topology`] is the ground truth: node positions, radio ranges and the
//! directed links implied by them. The sink never sees it directly. It hears
//! HELLO beacons during its trip ([`simulate_hello_round`] and
//! [`SinkObservations`]) and assembles a [`NetworkGraph`] from what it heard
//! ([`build_sink_graph`]). Routing and placement only ever work on that graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Slack used for "within range" comparisons so that exact lattice distances
/// are not lost to rounding.
const RANGE_EPS: f64 = 1e-9;

/// Default ETX above which a link is considered unusable.
pub const DEFAULT_ETX_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Arithmetic mean of a set of points, `None` when empty.
    pub fn mean<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Point> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: NodeId,
    pub position: Point,
    pub tx_range: f64,
}

/// A directed radio link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub delivery_prob: f64,
}

/// How the nodes were laid out, used by mobility models that need the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    Grid { cols: usize, rows: usize, spacing: f64 },
    Line { spacing: f64 },
    Irregular,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid topology parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: duplicate node id {id}")]
    DuplicateId { id: NodeId, line: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: link references unknown node {id}")]
    UnknownNode { id: NodeId, line: usize },
    #[error("topology has no nodes")]
    Empty,
    #[error("sink never observed nodes {}", fmt_ids(.missing))]
    IncompleteGraph { missing: Vec<NodeId> },
    #[error("reading topology: {0}")]
    Io(String),
}

fn fmt_ids(ids: &[NodeId]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyWarning {
    Disconnected { components: usize },
}

impl fmt::Display for TopologyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyWarning::Disconnected { components } => {
                write!(f, "topology is disconnected ({components} components)")
            }
        }
    }
}

/// Ground-truth deployment. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<SensorNode>,
    index: BTreeMap<NodeId, usize>,
    links: Vec<Link>,
    out: Vec<Vec<usize>>,
    layout: Layout,
}

impl Topology {
    /// Builds a topology from nodes, deriving links from radio range unless
    /// `explicit_links` is given.
    pub fn new(
        mut nodes: Vec<SensorNode>,
        explicit_links: Option<Vec<Link>>,
        delivery_prob: f64,
        layout: Layout,
    ) -> Result<Self, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        if !(delivery_prob > 0.0 && delivery_prob <= 1.0) {
            return Err(TopologyError::InvalidParameter(format!(
                "delivery probability {delivery_prob} outside (0,1]"
            )));
        }
        nodes.sort_by_key(|n| n.id);
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if !(n.tx_range > 0.0) {
                return Err(TopologyError::InvalidParameter(format!(
                    "node {} has non-positive tx_range",
                    n.id
                )));
            }
            if index.insert(n.id, i).is_some() {
                return Err(TopologyError::DuplicateId { id: n.id, line: 0 });
            }
        }
        let mut links = match explicit_links {
            Some(links) => links,
            None => {
                let mut links = Vec::new();
                for a in &nodes {
                    for b in &nodes {
                        if a.id != b.id && a.position.distance(&b.position) <= a.tx_range + RANGE_EPS {
                            links.push(Link { from: a.id, to: b.id, delivery_prob });
                        }
                    }
                }
                links
            }
        };
        links.sort_by_key(|l| (l.from, l.to));
        links.dedup_by_key(|l| (l.from, l.to));
        let mut out = vec![Vec::new(); nodes.len()];
        for l in &links {
            out[index[&l.from]].push(index[&l.to]);
        }
        Ok(Self { nodes, index, links, out, layout })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn node(&self, id: NodeId) -> Option<&SensorNode> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn position(&self, id: NodeId) -> Option<Point> {
        self.node(id).map(|n| n.position)
    }

    /// Nodes reachable over a direct link from `id`, in id order.
    pub fn out_neighbors(&self, id: NodeId) -> Vec<NodeId> {
        self.index
            .get(&id)
            .map(|&i| self.out[i].iter().map(|&j| self.nodes[j].id).collect())
            .unwrap_or_default()
    }

    /// Unordered pairs with a link in both directions.
    pub fn bidirectional_pairs(&self) -> BTreeSet<(NodeId, NodeId)> {
        let directed: BTreeSet<(NodeId, NodeId)> = self.links.iter().map(|l| (l.from, l.to)).collect();
        directed
            .iter()
            .filter(|(a, b)| a < b && directed.contains(&(*b, *a)))
            .copied()
            .collect()
    }

    /// Number of connected components over bidirectional pairs.
    pub fn component_count(&self) -> usize {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in self.bidirectional_pairs() {
            let (ia, ib) = (self.index[&a], self.index[&b]);
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }

    /// Serializes to the line-oriented topology format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in &self.nodes {
            let _ = writeln!(s, "node {} {} {}", n.id, n.position.x, n.position.y);
        }
        s
    }
}

fn check_lattice(spacing: f64, tx_range: f64) -> Result<(), TopologyError> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(TopologyError::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    if !(tx_range > 0.0) || !tx_range.is_finite() {
        return Err(TopologyError::InvalidParameter(format!("tx_range must be positive, got {tx_range}")));
    }
    Ok(())
}

/// A `side` x `side` lattice; node `j*side + i` sits at `(i*spacing, j*spacing)`.
pub fn generate_grid(side: usize, spacing: f64, tx_range: f64) -> Result<Topology, TopologyError> {
    if side < 2 {
        return Err(TopologyError::InvalidParameter(format!("grid side must be >= 2, got {side}")));
    }
    generate_rect_grid(side, side, spacing, tx_range)
}

/// A `cols` x `rows` lattice with row-major ids.
pub fn generate_rect_grid(cols: usize, rows: usize, spacing: f64, tx_range: f64) -> Result<Topology, TopologyError> {
    check_lattice(spacing, tx_range)?;
    if cols == 0 || rows == 0 {
        return Err(TopologyError::Empty);
    }
    let nodes = (0..rows)
        .flat_map(|j| (0..cols).map(move |i| (i, j)))
        .map(|(i, j)| SensorNode {
            id: NodeId((j * cols + i) as u32),
            position: Point::new(i as f64 * spacing, j as f64 * spacing),
            tx_range,
        })
        .collect();
    Topology::new(nodes, None, 1.0, Layout::Grid { cols, rows, spacing })
}

/// `n` nodes on the x axis, `spacing` apart. Stands in for corridor deployments.
pub fn generate_line(n: usize, spacing: f64, tx_range: f64) -> Result<Topology, TopologyError> {
    check_lattice(spacing, tx_range)?;
    if n == 0 {
        return Err(TopologyError::Empty);
    }
    let nodes = (0..n)
        .map(|i| SensorNode {
            id: NodeId(i as u32),
            position: Point::new(i as f64 * spacing, 0.0),
            tx_range,
        })
        .collect();
    Topology::new(nodes, None, 1.0, Layout::Line { spacing })
}

/// Same topology with every link's delivery probability replaced.
pub fn with_delivery_prob(topology: &Topology, delivery_prob: f64) -> Result<Topology, TopologyError> {
    let links = topology
        .links
        .iter()
        .map(|l| Link { delivery_prob, ..*l })
        .collect();
    if !(delivery_prob > 0.0 && delivery_prob <= 1.0) {
        return Err(TopologyError::InvalidParameter(format!(
            "delivery probability {delivery_prob} outside (0,1]"
        )));
    }
    Topology::new(topology.nodes.clone(), Some(links), 1.0, topology.layout)
}

#[derive(Debug, Clone)]
pub struct LoadedTopology {
    pub topology: Topology,
    pub warnings: Vec<TopologyWarning>,
}

/// Parses the topology text format.
///
/// ```text
/// # comment
/// range 120            # optional, overrides `default_range`
/// node <id> <x> <y>
/// link <a> <b> <delivery_prob>
/// ```
///
/// When any `link` record is present the link set is exactly the listed
/// links, each usable in both directions.
pub fn parse_topology(text: &str, default_range: f64) -> Result<LoadedTopology, TopologyError> {
    let mut range = default_range;
    let mut nodes: Vec<SensorNode> = Vec::new();
    let mut seen: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut raw_links: Vec<(usize, NodeId, NodeId, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let malformed = |message: String| TopologyError::Malformed { line, message };
        let num = |s: &str| -> Result<f64, TopologyError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("expected a number, got `{s}`")))
        };
        let id = |s: &str| -> Result<NodeId, TopologyError> {
            s.parse::<u32>()
                .map(NodeId)
                .map_err(|_| malformed(format!("expected a node id, got `{s}`")))
        };
        match fields.as_slice() {
            ["range", r] => range = num(r)?,
            ["node", i, x, y] => {
                let nid = id(i)?;
                if seen.insert(nid, line).is_some() {
                    return Err(TopologyError::DuplicateId { id: nid, line });
                }
                nodes.push(SensorNode { id: nid, position: Point::new(num(x)?, num(y)?), tx_range: 0.0 });
            }
            ["link", a, b, p] => {
                let p = num(p)?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(malformed(format!("delivery probability {p} outside (0,1]")));
                }
                raw_links.push((line, id(a)?, id(b)?, p));
            }
            [kind, ..] => return Err(malformed(format!("unrecognized record `{kind}` or wrong field count"))),
            [] => unreachable!(),
        }
    }
    if nodes.is_empty() {
        return Err(TopologyError::Empty);
    }
    if !(range > 0.0) {
        return Err(TopologyError::InvalidParameter(format!("tx_range must be positive, got {range}")));
    }
    for n in &mut nodes {
        n.tx_range = range;
    }
    let explicit = if raw_links.is_empty() {
        None
    } else {
        let mut links = Vec::new();
        for (line, a, b, p) in raw_links {
            for unknown in [a, b].into_iter().filter(|x| !seen.contains_key(x)) {
                return Err(TopologyError::UnknownNode { id: unknown, line });
            }
            links.push(Link { from: a, to: b, delivery_prob: p });
            links.push(Link { from: b, to: a, delivery_prob: p });
        }
        Some(links)
    };
    let topology = Topology::new(nodes, explicit, 1.0, Layout::Irregular)?;
    let components = topology.component_count();
    let warnings = if components > 1 {
        vec![TopologyWarning::Disconnected { components }]
    } else {
        Vec::new()
    };
    Ok(LoadedTopology { topology, warnings })
}

pub fn load_topology(path: &Path, default_range: f64) -> Result<LoadedTopology, TopologyError> {
    let text = std::fs::read_to_string(path).map_err(|e| TopologyError::Io(format!("{}: {e}", path.display())))?;
    parse_topology(&text, default_range)
}

/// HELLO reception statistics for one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEstimate {
    pub received: u32,
    pub rounds: u32,
    pub etx: f64,
}

impl LinkEstimate {
    pub fn usable(&self, threshold: f64) -> bool {
        self.received > 0 && self.etx <= threshold
    }
}

/// Per directed link ETX estimates, keyed by `(from, to)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EtxTable {
    pub entries: BTreeMap<(NodeId, NodeId), LinkEstimate>,
}

impl EtxTable {
    pub fn get(&self, from: NodeId, to: NodeId) -> Option<&LinkEstimate> {
        self.entries.get(&(from, to))
    }
}

/// Simulates `rounds` HELLO beacons per node. Each directed link receives a
/// beacon with its delivery probability; `etx = rounds / max(1, received)`.
pub fn simulate_hello_round(topology: &Topology, seed: u64, rounds: u32) -> EtxTable {
    let rounds = rounds.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = BTreeMap::new();
    for link in &topology.links {
        let received = if link.delivery_prob >= 1.0 {
            rounds
        } else {
            (0..rounds).filter(|_| rng.gen_bool(link.delivery_prob)).count() as u32
        };
        let etx = rounds as f64 / received.max(1) as f64;
        entries.insert((link.from, link.to), LinkEstimate { received, rounds, etx });
    }
    EtxTable { entries }
}

/// Sink coordinates recorded each time a node's HELLO was heard.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SinkObservations {
    pub heard_at: BTreeMap<NodeId, Vec<Point>>,
}

impl SinkObservations {
    pub fn record(&mut self, node: NodeId, sink_position: Point) {
        self.heard_at.entry(node).or_default().push(sink_position);
    }
}

#[derive(Debug, Clone, PartialEq)]
struct GraphNode {
    id: NodeId,
    position: Point,
    /// `(neighbor index, etx self -> neighbor)`, ordered by neighbor id.
    neighbors: Vec<(usize, f64)>,
}

/// The sink's bidirectional, ETX-weighted view of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    nodes: Vec<GraphNode>,
    index: BTreeMap<NodeId, usize>,
}

impl NetworkGraph {
    /// Builds a graph from positions and undirected edges carrying the ETX
    /// of each direction: `(a, b, etx_ab, etx_ba)`.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = (NodeId, Point)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, f64, f64)>,
    ) -> Self {
        let mut list: Vec<GraphNode> = nodes
            .into_iter()
            .map(|(id, position)| GraphNode { id, position, neighbors: Vec::new() })
            .collect();
        list.sort_by_key(|n| n.id);
        list.dedup_by_key(|n| n.id);
        let index: BTreeMap<NodeId, usize> = list.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        for (a, b, ab, ba) in edges {
            let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
                continue;
            };
            if ia == ib || list[ia].neighbors.iter().any(|&(j, _)| j == ib) {
                continue;
            }
            list[ia].neighbors.push((ib, ab));
            list[ib].neighbors.push((ia, ba));
        }
        for n in &mut list {
            n.neighbors.sort_by_key(|&(j, _)| j);
        }
        Self { nodes: list, index }
    }

    /// Graph the sink would build with perfect knowledge: exact positions,
    /// every bidirectional in-range pair with ETX 1.
    pub fn ground_truth(topology: &Topology) -> Self {
        Self::from_parts(
            topology.nodes().iter().map(|n| (n.id, n.position)),
            topology.bidirectional_pairs().into_iter().map(|(a, b)| (a, b, 1.0, 1.0)),
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id_of(&self, idx: usize) -> NodeId {
        self.nodes[idx].id
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn position_at(&self, idx: usize) -> Point {
        self.nodes[idx].position
    }

    pub fn position(&self, id: NodeId) -> Option<Point> {
        self.index_of(id).map(|i| self.nodes[i].position)
    }

    /// `(neighbor index, etx)` pairs ordered by neighbor id.
    pub fn neighbors_at(&self, idx: usize) -> &[(usize, f64)] {
        &self.nodes[idx].neighbors
    }

    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        self.index_of(id)
            .map(|i| self.nodes[i].neighbors.iter().map(|&(j, _)| self.nodes[j].id).collect())
            .unwrap_or_default()
    }

    pub fn etx(&self, from: NodeId, to: NodeId) -> Option<f64> {
        let (a, b) = (self.index_of(from)?, self.index_of(to)?);
        self.nodes[a].neighbors.iter().find(|&&(j, _)| j == b).map(|&(_, w)| w)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.etx(a, b).is_some()
    }

    /// Undirected edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for &(j, _) in &n.neighbors {
                let other = self.nodes[j].id;
                if n.id < other {
                    out.push((n.id, other));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.neighbors.len()).sum::<usize>() / 2
    }

    /// Unweighted hop distances from `src` by index; `None` when unreachable.
    pub fn hop_distances_from(&self, src: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &(v, _) in &self.nodes[u].neighbors {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn hops(&self, a: NodeId, b: NodeId) -> Option<u32> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        self.hop_distances_from(ia)[ib]
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.hop_distances_from(0).iter().all(Option::is_some)
    }

    /// `node_id,x_est,y_est`
    pub fn nodes_csv(&self) -> String {
        let mut s = String::from("node_id,x_est,y_est\n");
        for n in &self.nodes {
            let _ = writeln!(s, "{},{:.6},{:.6}", n.id, n.position.x, n.position.y);
        }
        s
    }

    /// `from,to,etx`, both directions of every edge.
    pub fn links_csv(&self) -> String {
        let mut s = String::from("from,to,etx\n");
        for n in &self.nodes {
            for &(j, w) in &n.neighbors {
                let _ = writeln!(s, "{},{},{:.6}", n.id, self.nodes[j].id, w);
            }
        }
        s
    }
}

/// Assembles the sink's graph. Position estimates are the mean of the sink
/// coordinates at which each node was heard; an edge is kept only when both
/// directions were heard with ETX at or below `etx_threshold`.
pub fn build_sink_graph(
    topology: &Topology,
    hello: &EtxTable,
    observations: &SinkObservations,
    etx_threshold: f64,
) -> Result<NetworkGraph, TopologyError> {
    let missing: Vec<NodeId> = topology
        .nodes()
        .iter()
        .map(|n| n.id)
        .filter(|id| observations.heard_at.get(id).is_none_or(Vec::is_empty))
        .collect();
    if !missing.is_empty() {
        return Err(TopologyError::IncompleteGraph { missing });
    }
    let nodes = topology.nodes().iter().map(|n| {
        let estimate = Point::mean(&observations.heard_at[&n.id]).unwrap_or(n.position);
        (n.id, estimate)
    });
    let edges = topology.bidirectional_pairs().into_iter().filter_map(|(a, b)| {
        let ab = hello.get(a, b)?;
        let ba = hello.get(b, a)?;
        (ab.usable(etx_threshold) && ba.usable(etx_threshold)).then_some((a, b, ab.etx, ba.etx))
    });
    Ok(NetworkGraph::from_parts(nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_range_count(t: &Topology, id: NodeId) -> usize {
        t.out_neighbors(id).len()
    }

    #[test]
    fn table_grid_has_eight_in_range_and_four_orthogonal() {
        let t = generate_grid(10, 100.0, 142.0).unwrap();
        assert_eq!(t.len(), 100);
        let interior = NodeId(5 * 10 + 5);
        assert_eq!(in_range_count(&t, interior), 8);
        let p = t.position(interior).unwrap();
        let orthogonal = t
            .out_neighbors(interior)
            .into_iter()
            .filter(|&n| (t.position(n).unwrap().distance(&p) - 100.0).abs() < 1e-9)
            .count();
        assert_eq!(orthogonal, 4);
    }

    #[test]
    fn two_by_two_with_diagonals() {
        let t = generate_grid(2, 100.0, 150.0).unwrap();
        assert_eq!(t.len(), 4);
        for n in t.nodes() {
            assert_eq!(in_range_count(&t, n.id), 3);
        }
    }

    #[test]
    fn three_by_three_center_has_four() {
        let t = generate_grid(3, 100.0, 100.0).unwrap();
        assert_eq!(in_range_count(&t, NodeId(4)), 4);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(generate_grid(10, 0.0, 100.0), Err(TopologyError::InvalidParameter(_))));
        assert!(matches!(generate_grid(10, 100.0, -1.0), Err(TopologyError::InvalidParameter(_))));
        assert!(matches!(generate_grid(1, 100.0, 120.0), Err(TopologyError::InvalidParameter(_))));
    }

    #[test]
    fn grid_generation_is_deterministic() {
        assert_eq!(generate_grid(7, 50.0, 60.0).unwrap(), generate_grid(7, 50.0, 60.0).unwrap());
    }

    #[test]
    fn line_file_has_49_adjacencies() {
        let mut text = String::from("# corridor\nrange 120\n");
        for i in 0..50 {
            text.push_str(&format!("node {i} {} 0\n", i * 100));
        }
        let loaded = parse_topology(&text, 50.0).unwrap();
        assert_eq!(loaded.topology.len(), 50);
        assert_eq!(loaded.topology.bidirectional_pairs().len(), 49);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn duplicate_and_empty_and_malformed() {
        let dup = "node 7 0 0\nnode 7 1 1\n";
        assert_eq!(
            parse_topology(dup, 10.0).unwrap_err(),
            TopologyError::DuplicateId { id: NodeId(7), line: 2 }
        );
        assert_eq!(parse_topology("# nothing\n", 10.0).unwrap_err(), TopologyError::Empty);
        assert!(matches!(parse_topology("node x 0 0", 10.0), Err(TopologyError::Malformed { line: 1, .. })));
        assert!(matches!(
            parse_topology("node 1 0 0\nlink 1 2 0.5", 10.0),
            Err(TopologyError::UnknownNode { id: NodeId(2), line: 2 })
        ));
    }

    #[test]
    fn disconnected_is_a_warning() {
        let loaded = parse_topology("range 10\nnode 0 0 0\nnode 1 5 0\nnode 2 100 0\n", 1.0).unwrap();
        assert_eq!(loaded.warnings, vec![TopologyWarning::Disconnected { components: 2 }]);
    }

    #[test]
    fn explicit_links_replace_range_links() {
        let loaded = parse_topology("range 1000\nnode 0 0 0\nnode 1 5 0\nnode 2 10 0\nlink 0 1 0.8\n", 1.0).unwrap();
        let t = loaded.topology;
        assert_eq!(t.links().len(), 2);
        assert_eq!(t.out_neighbors(NodeId(2)), vec![]);
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn lossless_hello_gives_unit_etx() {
        let t = generate_grid(4, 100.0, 120.0).unwrap();
        let etx = simulate_hello_round(&t, 3, 10);
        assert!(etx.entries.values().all(|e| e.etx == 1.0 && e.received == 10));
    }

    #[test]
    fn half_loss_hello_converges_to_two() {
        let t = with_delivery_prob(&generate_grid(3, 100.0, 120.0).unwrap(), 0.5).unwrap();
        let etx = simulate_hello_round(&t, 11, 10_000);
        for e in etx.entries.values() {
            assert!((1.9..=2.1).contains(&e.etx), "etx {}", e.etx);
        }
        // Monte-Carlo recount of the first link with the same stream.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let hits = (0..10_000).filter(|_| rng.gen_bool(0.5)).count() as u32;
        let first = etx.entries.values().next().unwrap();
        assert_eq!(first.received, hits);
    }

    #[test]
    fn dead_link_is_clamped_and_dropped() {
        let nodes = vec![
            SensorNode { id: NodeId(0), position: Point::new(0.0, 0.0), tx_range: 10.0 },
            SensorNode { id: NodeId(1), position: Point::new(5.0, 0.0), tx_range: 10.0 },
        ];
        let t = Topology::new(nodes, None, 1e-12, Layout::Irregular).unwrap();
        let etx = simulate_hello_round(&t, 1, 25);
        let e = etx.get(NodeId(0), NodeId(1)).unwrap();
        assert_eq!((e.received, e.etx), (0, 25.0));
        let mut obs = SinkObservations::default();
        obs.record(NodeId(0), Point::new(0.0, 0.0));
        obs.record(NodeId(1), Point::new(5.0, 0.0));
        let g = build_sink_graph(&t, &etx, &obs, DEFAULT_ETX_THRESHOLD).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn hello_is_reproducible() {
        let t = with_delivery_prob(&generate_grid(5, 100.0, 120.0).unwrap(), 0.7).unwrap();
        assert_eq!(simulate_hello_round(&t, 9, 20), simulate_hello_round(&t, 9, 20));
    }

    fn observe_all(t: &Topology) -> SinkObservations {
        let mut obs = SinkObservations::default();
        for n in t.nodes() {
            obs.record(n.id, n.position);
        }
        obs
    }

    #[test]
    fn position_estimate_is_mean() {
        let t = generate_line(2, 100.0, 120.0).unwrap();
        let mut obs = observe_all(&t);
        obs.heard_at.insert(NodeId(0), vec![Point::new(90.0, 100.0), Point::new(110.0, 100.0)]);
        let g = build_sink_graph(&t, &simulate_hello_round(&t, 0, 1), &obs, 3.0).unwrap();
        assert_eq!(g.position(NodeId(0)).unwrap(), Point::new(100.0, 100.0));
    }

    #[test]
    fn lossless_graph_matches_ground_truth() {
        let t = generate_grid(6, 100.0, 120.0).unwrap();
        let g = build_sink_graph(&t, &simulate_hello_round(&t, 0, 5), &observe_all(&t), 3.0).unwrap();
        assert_eq!(g, NetworkGraph::ground_truth(&t));
        assert_eq!(g.edge_count(), 2 * 6 * 5);
    }

    #[test]
    fn unobserved_node_is_reported() {
        let t = generate_grid(3, 100.0, 120.0).unwrap();
        let mut obs = observe_all(&t);
        obs.heard_at.remove(&NodeId(4));
        let err = build_sink_graph(&t, &simulate_hello_round(&t, 0, 1), &obs, 3.0).unwrap_err();
        assert_eq!(err, TopologyError::IncompleteGraph { missing: vec![NodeId(4)] });
        assert!(err.to_string().contains('4'));
    }

    #[test]
    fn csv_dumps_have_headers() {
        let g = NetworkGraph::ground_truth(&generate_line(3, 10.0, 12.0).unwrap());
        assert!(g.nodes_csv().starts_with("node_id,x_est,y_est\n0,0.000000,0.000000\n"));
        assert_eq!(g.links_csv().lines().count(), 1 + 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sink_graph_has_no_phantom_edges(p in 0.05f64..1.0, seed in 0u64..1000, threshold in 1.0f64..10.0) {
                let t = with_delivery_prob(&generate_grid(4, 100.0, 150.0).unwrap(), p).unwrap();
                let etx = simulate_hello_round(&t, seed, 8);
                prop_assert!(etx.entries.values().all(|e| e.etx >= 1.0));
                let g = build_sink_graph(&t, &etx, &observe_all(&t), threshold).unwrap();
                let truth = t.bidirectional_pairs();
                for e in g.edges() {
                    prop_assert!(truth.contains(&e));
                }
            }

            #[test]
            fn mean_of_disc_points_stays_in_disc(
                offsets in proptest::collection::vec((0.0f64..1.0, 0.0f64..std::f64::consts::TAU), 1..12),
                radius in 1.0f64..200.0,
            ) {
                let center = Point::new(300.0, -40.0);
                let pts: Vec<Point> = offsets
                    .iter()
                    .map(|&(r, a)| Point::new(center.x + r * radius * a.cos(), center.y + r * radius * a.sin()))
                    .collect();
                let m = Point::mean(&pts).unwrap();
                prop_assert!(m.distance(&center) <= radius + 1e-9);
            }
        }
    }
}
