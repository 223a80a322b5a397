//! Itinerant sink trips and attacker movement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::topology::{Layout, NodeId, Point, SinkObservations, Topology};

const TIME_EPS: f64 = 1e-9;

/// One sink trip: a tour over node positions with uniformly spread visit times.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkTrajectory {
    pub waypoints: Vec<Point>,
    /// `tour[i]` is the node collected at `waypoints[i]`.
    pub tour: Vec<NodeId>,
    pub trip_duration: f64,
    /// Trip-relative collection times per node.
    pub visit_schedule: BTreeMap<NodeId, Vec<f64>>,
}

impl SinkTrajectory {
    /// Nodes in the order the sink collects them.
    pub fn visit_order(&self) -> &[NodeId] {
        &self.tour
    }

    /// Where the sink hears each node's HELLO: every waypoint within the
    /// node's transmission range.
    pub fn observations(&self, topology: &Topology) -> SinkObservations {
        let mut obs = SinkObservations::default();
        for wp in &self.waypoints {
            for n in topology.nodes() {
                if n.position.distance(wp) <= n.tx_range + 1e-9 {
                    obs.record(n.id, *wp);
                }
            }
        }
        obs
    }
}

/// Row-by-row sweep on lattices, position order on lines, nearest-neighbor
/// tour otherwise.
pub fn plan_sink_trip(topology: &Topology, trip_duration: f64) -> SinkTrajectory {
    let tour = match topology.layout() {
        Layout::Grid { .. } => boustrophedon(topology),
        Layout::Line { .. } => {
            let mut ids: Vec<_> = topology.nodes().iter().collect();
            ids.sort_by(|a, b| a.position.x.total_cmp(&b.position.x).then(a.id.cmp(&b.id)));
            ids.into_iter().map(|n| n.id).collect()
        }
        Layout::Irregular => nearest_neighbor_tour(topology),
    };
    let n = tour.len().max(1) as f64;
    let waypoints = tour.iter().filter_map(|&id| topology.position(id)).collect();
    let visit_schedule = tour
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, vec![i as f64 * trip_duration / n]))
        .collect();
    SinkTrajectory { waypoints, tour, trip_duration, visit_schedule }
}

fn boustrophedon(topology: &Topology) -> Vec<NodeId> {
    let mut rows: BTreeMap<i64, Vec<(f64, NodeId)>> = BTreeMap::new();
    for n in topology.nodes() {
        rows.entry((n.position.y * 1e6).round() as i64).or_default().push((n.position.x, n.id));
    }
    rows.into_values()
        .enumerate()
        .flat_map(|(r, mut row)| {
            row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if r % 2 == 1 {
                row.reverse();
            }
            row.into_iter().map(|(_, id)| id)
        })
        .collect()
}

fn nearest_neighbor_tour(topology: &Topology) -> Vec<NodeId> {
    let nodes = topology.nodes();
    let mut left: Vec<bool> = vec![true; nodes.len()];
    let mut tour = Vec::with_capacity(nodes.len());
    let mut cur = 0;
    for _ in 0..nodes.len() {
        left[cur] = false;
        tour.push(nodes[cur].id);
        let here = nodes[cur].position;
        let next = (0..nodes.len())
            .filter(|&j| left[j])
            .min_by(|&a, &b| nodes[a].position.distance(&here).total_cmp(&nodes[b].position.distance(&here)));
        match next {
            Some(j) => cur = j,
            None => break,
        }
    }
    tour
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackerModel {
    /// Random orthogonal steps, no immediate backtracking unless forced.
    Manhattan,
    /// Walks the line order, bouncing at the ends.
    LineSweep,
    /// Cycles through concentric rings, outermost first.
    CircularSweep,
    /// Never moves; re-attacks its start node every step.
    Stationary,
}

impl fmt::Display for AttackerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackerModel::Manhattan => "manhattan",
            AttackerModel::LineSweep => "line_sweep",
            AttackerModel::CircularSweep => "circular_sweep",
            AttackerModel::Stationary => "stationary",
        })
    }
}

impl FromStr for AttackerModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manhattan" => Ok(Self::Manhattan),
            "line_sweep" => Ok(Self::LineSweep),
            "circular_sweep" => Ok(Self::CircularSweep),
            "stationary" => Ok(Self::Stationary),
            other => Err(format!("unknown attacker model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Heading {
    East,
    West,
    North,
    South,
}

impl Heading {
    fn reverse(self) -> Self {
        match self {
            Heading::East => Heading::West,
            Heading::West => Heading::East,
            Heading::North => Heading::South,
            Heading::South => Heading::North,
        }
    }
}

/// Position order along the dominant axis, used by the line sweep.
pub fn line_order(topology: &Topology) -> Vec<NodeId> {
    let nodes = topology.nodes();
    let (minx, maxx) = nodes.iter().fold((f64::MAX, f64::MIN), |(lo, hi), n| (lo.min(n.position.x), hi.max(n.position.x)));
    let (miny, maxy) = nodes.iter().fold((f64::MAX, f64::MIN), |(lo, hi), n| (lo.min(n.position.y), hi.max(n.position.y)));
    let along_x = maxx - minx >= maxy - miny;
    let mut sorted: Vec<_> = nodes.iter().collect();
    sorted.sort_by(|a, b| {
        let (ka, kb) = if along_x {
            ((a.position.x, a.position.y), (b.position.x, b.position.y))
        } else {
            ((a.position.y, a.position.x), (b.position.y, b.position.x))
        };
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.id.cmp(&b.id))
    });
    sorted.into_iter().map(|n| n.id).collect()
}

/// Ring-by-ring angular order around the centroid, outermost ring first.
///
/// On lattices a ring is a rectangle of nodes at equal distance from the
/// boundary, so consecutive nodes of one ring are lattice neighbors. Other
/// layouts band nodes by radius from the centroid.
pub fn circular_order(topology: &Topology) -> Vec<NodeId> {
    let nodes = topology.nodes();
    let Some(c) = Point::mean(nodes.iter().map(|n| &n.position)) else {
        return Vec::new();
    };
    let ring_of: Box<dyn Fn(Point) -> i64> = match topology.layout() {
        Layout::Grid { cols, rows, spacing } => {
            let minx = nodes.iter().map(|n| n.position.x).fold(f64::MAX, f64::min);
            let miny = nodes.iter().map(|n| n.position.y).fold(f64::MAX, f64::min);
            Box::new(move |p: Point| {
                let i = ((p.x - minx) / spacing).round() as i64;
                let j = ((p.y - miny) / spacing).round() as i64;
                i.min(j).min(cols as i64 - 1 - i).min(rows as i64 - 1 - j)
            })
        }
        _ => {
            let ring_width = nearest_spacing(topology).max(1e-6);
            let outer = nodes.iter().map(|n| n.position.distance(&c)).fold(0.0, f64::max);
            Box::new(move |p: Point| ((outer - p.distance(&c)) / ring_width).round() as i64)
        }
    };
    let mut keyed: Vec<(i64, f64, NodeId)> = nodes
        .iter()
        .map(|n| (ring_of(n.position), (n.position.y - c.y).atan2(n.position.x - c.x), n.id))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|(_, _, id)| id).collect()
}

/// Median nearest-neighbor distance, or 0 for a single node.
pub fn nearest_spacing(topology: &Topology) -> f64 {
    let nodes = topology.nodes();
    let mut nn: Vec<f64> = nodes
        .iter()
        .filter_map(|a| {
            nodes
                .iter()
                .filter(|b| b.id != a.id)
                .map(|b| a.position.distance(&b.position))
                .min_by(f64::total_cmp)
        })
        .collect();
    if nn.is_empty() {
        return 0.0;
    }
    nn.sort_by(f64::total_cmp);
    nn[nn.len() / 2]
}

#[derive(Debug, Clone, PartialEq)]
struct SweepCursor {
    order: Vec<NodeId>,
    pos: usize,
    forward: bool,
}

/// A mobile attacker alternating travel and seizure.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerState {
    pub position: Point,
    pub speed: f64,
    pub seizure_time: f64,
    pub model: AttackerModel,
    pub visited: BTreeSet<NodeId>,
    /// Node being approached; it is attacked when the current leg completes.
    target: NodeId,
    leg_cost: f64,
    leg_elapsed: f64,
    last_heading: Option<Heading>,
    sweep: Option<SweepCursor>,
}

impl AttackerState {
    /// Places an attacker one typical hop away from `start`, heading to it.
    /// `reverse` flips the direction of sweep models.
    pub fn new(
        topology: &Topology,
        model: AttackerModel,
        start: NodeId,
        speed: f64,
        seizure_time: f64,
        reverse: bool,
    ) -> Self {
        assert!(speed > 0.0 && seizure_time >= 0.0, "attacker speed must be positive");
        let start_pos = topology.position(start).unwrap_or_default();
        let approach = topology
            .nodes()
            .iter()
            .filter(|n| n.id != start)
            .map(|n| n.position.distance(&start_pos))
            .min_by(f64::total_cmp)
            .unwrap_or(0.0);
        let sweep = match model {
            AttackerModel::LineSweep | AttackerModel::CircularSweep => {
                let order = if model == AttackerModel::LineSweep {
                    line_order(topology)
                } else {
                    circular_order(topology)
                };
                let pos = order.iter().position(|&id| id == start).unwrap_or(0);
                Some(SweepCursor { order, pos, forward: !reverse })
            }
            _ => None,
        };
        Self {
            position: start_pos,
            speed,
            seizure_time,
            model,
            visited: BTreeSet::new(),
            target: start,
            leg_cost: approach / speed + seizure_time,
            leg_elapsed: 0.0,
            last_heading: None,
            sweep,
        }
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    /// Completes the current leg: attacks the target and picks the next one.
    pub fn step<R: Rng + ?Sized>(&mut self, topology: &Topology, rng: &mut R) -> NodeId {
        let attacked = self.target;
        self.visited.insert(attacked);
        self.position = topology.position(attacked).unwrap_or(self.position);
        let next = self.choose_next(topology, rng);
        let travel = topology
            .position(next)
            .map_or(0.0, |p| p.distance(&self.position));
        self.target = next;
        self.leg_cost = travel / self.speed + self.seizure_time;
        self.leg_elapsed = 0.0;
        attacked
    }

    /// Lets `elapsed` seconds pass and returns the nodes attacked meanwhile.
    pub fn advance<R: Rng + ?Sized>(&mut self, topology: &Topology, elapsed: f64, rng: &mut R) -> Vec<NodeId> {
        let mut attacked = Vec::new();
        let mut budget = elapsed.max(0.0);
        loop {
            let remaining = self.leg_cost - self.leg_elapsed;
            if budget + TIME_EPS < remaining {
                self.leg_elapsed += budget;
                break;
            }
            budget -= remaining.max(0.0);
            attacked.push(self.step(topology, rng));
            if self.leg_cost <= 0.0 {
                // A zero-cost leg would loop forever.
                break;
            }
        }
        attacked
    }

    fn choose_next<R: Rng + ?Sized>(&mut self, topology: &Topology, rng: &mut R) -> NodeId {
        let here = self.target;
        match self.model {
            AttackerModel::Stationary => here,
            AttackerModel::Manhattan => {
                let options = orthogonal_moves(topology, here);
                if options.is_empty() {
                    return here;
                }
                let forward: Vec<&(Heading, NodeId)> = options
                    .iter()
                    .filter(|(h, _)| Some(h.reverse()) != self.last_heading)
                    .collect();
                let &(heading, next) = if forward.is_empty() {
                    &options[0]
                } else {
                    *forward.choose(rng).expect("non-empty")
                };
                self.last_heading = Some(heading);
                next
            }
            AttackerModel::LineSweep => {
                let cursor = self.sweep.as_mut().expect("sweep cursor");
                let n = cursor.order.len();
                if n <= 1 {
                    return here;
                }
                if cursor.forward && cursor.pos + 1 >= n {
                    cursor.forward = false;
                } else if !cursor.forward && cursor.pos == 0 {
                    cursor.forward = true;
                }
                cursor.pos = if cursor.forward { cursor.pos + 1 } else { cursor.pos - 1 };
                cursor.order[cursor.pos]
            }
            AttackerModel::CircularSweep => {
                let cursor = self.sweep.as_mut().expect("sweep cursor");
                let n = cursor.order.len();
                cursor.pos = if cursor.forward { (cursor.pos + 1) % n } else { (cursor.pos + n - 1) % n };
                cursor.order[cursor.pos]
            }
        }
    }
}

/// Free-function form of [`AttackerState::advance`].
pub fn advance_attacker<R: Rng + ?Sized>(
    mut state: AttackerState,
    topology: &Topology,
    elapsed: f64,
    rng: &mut R,
) -> (AttackerState, Vec<NodeId>) {
    let attacked = state.advance(topology, elapsed, rng);
    (state, attacked)
}

/// The nearest in-range node in each axis direction.
fn orthogonal_moves(topology: &Topology, from: NodeId) -> Vec<(Heading, NodeId)> {
    let Some(p) = topology.position(from) else {
        return Vec::new();
    };
    let mut best: [Option<(f64, NodeId)>; 4] = [None; 4];
    for id in topology.out_neighbors(from) {
        let q = topology.position(id).expect("neighbor exists");
        let (dx, dy) = (q.x - p.x, q.y - p.y);
        let heading = if dx.abs() >= dy.abs() {
            if dx > 0.0 { Heading::East } else { Heading::West }
        } else if dy > 0.0 {
            Heading::North
        } else {
            Heading::South
        };
        // Only axis-aligned moves count on lattices; diagonals are skipped.
        if matches!(topology.layout(), Layout::Grid { .. }) && dx.abs() > 1e-6 && dy.abs() > 1e-6 {
            continue;
        }
        let slot = &mut best[heading as usize];
        let d = dx.hypot(dy);
        if slot.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
            *slot = Some((d, id));
        }
    }
    [Heading::East, Heading::West, Heading::North, Heading::South]
        .into_iter()
        .filter_map(|h| best[h as usize].map(|(_, id)| (h, id)))
        .collect()
}
