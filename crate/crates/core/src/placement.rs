//! Fragment placement strategies and the `d(f_k)` dispersion metric.
//!
//! Every strategy keeps fragment 0 at the originator and picks holders for
//! the remaining `f_k - 1` fragments. The clustered strategy is the one the
//! rest of the crate is built around: the sink splits the network into
//! `f_k` areas with k-means over its position estimates and draws one holder
//! per area, re-drawing whenever two holders would be radio neighbors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::topology::{NetworkGraph, NodeId, Point};

/// Re-draw budget per cluster when a candidate neighbors an existing holder.
pub const RESELECT_RETRIES: usize = 32;
pub const KMEANS_MAX_ITERS: usize = 100;
/// Independent k-means initializations; the lowest WCSS wins.
pub const KMEANS_RESTARTS: usize = 8;
/// Local-search restarts for fixed-distance placement.
pub const FIXED_DISTANCE_RESTARTS: usize = 64;
const FIXED_DISTANCE_MOVES: usize = 400;
/// Plain rejection draws before falling back to local search.
pub const REJECTION_ATTEMPTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataId(pub u32);

impl fmt::Display for DataId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataItem {
    pub data_id: DataId,
    pub origin: NodeId,
    /// Fragments per datum.
    pub f_k: usize,
    /// Fragments needed to decode.
    pub f_d: usize,
}

impl DataItem {
    pub fn new(data_id: DataId, origin: NodeId, f_k: usize, f_d: usize) -> Result<Self, PlacementError> {
        if f_d == 0 || f_d > f_k {
            return Err(PlacementError::InvalidData(format!("need 1 <= f_d <= f_k, got f_d={f_d} f_k={f_k}")));
        }
        Ok(Self { data_id, origin, f_k, f_d })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("invalid datum: {0}")]
    InvalidData(String),
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("placement infeasible: need {needed} holders, only {available} reachable")]
    Infeasible { needed: usize, available: usize },
    #[error("fragment holders {0} and {1} are not connected")]
    Unreachable(NodeId, NodeId),
    #[error("d(f_k) target {target} unreachable; best achieved {best:.3}")]
    TargetUnreachable { target: f64, best: f64 },
    #[error("clustering has {k} clusters but datum has f_k={f_k}")]
    ClusterMismatch { k: usize, f_k: usize },
    #[error("cannot form {k} clusters from {n} nodes")]
    InvalidClusterCount { k: usize, n: usize },
    #[error("node {node} would hold {count} fragments, cap is {cap}")]
    CapExceeded { node: NodeId, count: usize, cap: usize },
}

/// Fragment index -> holder for one datum.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementPlan {
    pub data_id: DataId,
    pub origin: NodeId,
    pub assignments: Vec<NodeId>,
    /// Mean pairwise hop distance between holders.
    pub dfk_hops: f64,
    /// Mean pairwise Euclidean distance between holder position estimates.
    pub dfk_meters: f64,
    /// Set when clustered selection could not avoid neighboring holders.
    pub neighbor_violation: bool,
}

impl PlacementPlan {
    pub fn new(data: &DataItem, assignments: Vec<NodeId>, graph: &NetworkGraph) -> Result<Self, PlacementError> {
        let (dfk_hops, dfk_meters) = compute_dfk(&assignments, graph)?;
        Ok(Self {
            data_id: data.data_id,
            origin: data.origin,
            assignments,
            dfk_hops,
            dfk_meters,
            neighbor_violation: false,
        })
    }

    /// Fragments that leave the originator, as `(fragment index, holder)`.
    pub fn remote(&self) -> impl Iterator<Item = (usize, NodeId)> + '_ {
        self.assignments.iter().copied().enumerate().filter(move |&(_, n)| n != self.origin)
    }

    /// Largest number of fragments held by one node.
    pub fn max_per_node(&self) -> usize {
        let mut counts: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &n in &self.assignments {
            *counts.entry(n).or_default() += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    pub fn check_cap(&self, cap: Option<usize>) -> Result<(), PlacementError> {
        let Some(cap) = cap else { return Ok(()) };
        let mut counts: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &n in &self.assignments {
            let c = counts.entry(n).or_default();
            *c += 1;
            if *c > cap {
                return Err(PlacementError::CapExceeded { node: n, count: *c, cap });
            }
        }
        Ok(())
    }

    /// `data_id,fragment_index,node_id` rows without a header.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (i, n) in self.assignments.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", self.data_id, i, n);
        }
        s
    }
}

pub const PLAN_CSV_HEADER: &str = "data_id,fragment_index,node_id";

/// Mean over all unordered holder pairs of the hop distance and of the
/// Euclidean distance. Zero for fewer than two fragments.
pub fn compute_dfk(holders: &[NodeId], graph: &NetworkGraph) -> Result<(f64, f64), PlacementError> {
    let idx: Vec<usize> = holders
        .iter()
        .map(|&id| graph.index_of(id).ok_or(PlacementError::UnknownNode(id)))
        .collect::<Result<_, _>>()?;
    let mut hop_rows: BTreeMap<usize, Vec<Option<u32>>> = BTreeMap::new();
    let (mut hops, mut meters, mut pairs) = (0.0, 0.0, 0usize);
    for i in 0..idx.len() {
        let row = hop_rows.entry(idx[i]).or_insert_with(|| graph.hop_distances_from(idx[i])).clone();
        for j in i + 1..idx.len() {
            let h = row[idx[j]].ok_or(PlacementError::Unreachable(holders[i], holders[j]))?;
            hops += f64::from(h);
            meters += graph.position_at(idx[i]).distance(&graph.position_at(idx[j]));
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Ok((0.0, 0.0));
    }
    Ok((hops / pairs as f64, meters / pairs as f64))
}

fn origin_index(data: &DataItem, graph: &NetworkGraph) -> Result<usize, PlacementError> {
    graph.index_of(data.origin).ok_or(PlacementError::UnknownNode(data.origin))
}

/// Origin plus the nearest hop rings: all of ring 1 if it is not larger than
/// needed, else a uniform subset; further rings fill any shortfall.
pub fn place_near_first<R: Rng + ?Sized>(
    data: &DataItem,
    graph: &NetworkGraph,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    let src = origin_index(data, graph)?;
    let dist = graph.hop_distances_from(src);
    let mut rings: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in dist.iter().enumerate() {
        if let Some(d) = *d {
            if d > 0 {
                rings.entry(d).or_default().push(i);
            }
        }
    }
    let needed = data.f_k - 1;
    let mut chosen = Vec::with_capacity(needed);
    for ring in rings.into_values() {
        let take = (needed - chosen.len()).min(ring.len());
        chosen.extend(ring.choose_multiple(rng, take).copied());
        if chosen.len() == needed {
            break;
        }
    }
    finish(data, graph, chosen, needed)
}

/// Greedy by hop distance from the origin, farthest first; ties broken at random.
pub fn place_far_first<R: Rng + ?Sized>(
    data: &DataItem,
    graph: &NetworkGraph,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    let src = origin_index(data, graph)?;
    let dist = graph.hop_distances_from(src);
    let mut levels: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in dist.iter().enumerate() {
        if let Some(d) = *d {
            if d > 0 {
                levels.entry(d).or_default().push(i);
            }
        }
    }
    let needed = data.f_k - 1;
    let mut chosen = Vec::with_capacity(needed);
    for level in levels.into_values().rev() {
        let take = (needed - chosen.len()).min(level.len());
        chosen.extend(level.choose_multiple(rng, take).copied());
        if chosen.len() == needed {
            break;
        }
    }
    finish(data, graph, chosen, needed)
}

/// Uniform without replacement over all nodes except the origin.
pub fn place_random<R: Rng + ?Sized>(
    data: &DataItem,
    graph: &NetworkGraph,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    let src = origin_index(data, graph)?;
    let others: Vec<usize> = (0..graph.len()).filter(|&i| i != src).collect();
    let needed = data.f_k - 1;
    let chosen = others.choose_multiple(rng, needed.min(others.len())).copied().collect();
    finish(data, graph, chosen, needed)
}

fn finish(data: &DataItem, graph: &NetworkGraph, chosen: Vec<usize>, needed: usize) -> Result<PlacementPlan, PlacementError> {
    if chosen.len() < needed {
        return Err(PlacementError::Infeasible { needed: needed + 1, available: chosen.len() + 1 });
    }
    let mut assignments = vec![data.origin];
    assignments.extend(chosen.into_iter().map(|i| graph.id_of(i)));
    PlacementPlan::new(data, assignments, graph)
}

/// All-pairs hop table for the local searches below.
struct HopTable {
    rows: Vec<Vec<Option<u32>>>,
}

impl HopTable {
    fn new(graph: &NetworkGraph) -> Self {
        Self { rows: (0..graph.len()).map(|i| graph.hop_distances_from(i)).collect() }
    }

    /// Mean pairwise hops, unreachable pairs counted as +inf.
    fn dfk(&self, holders: &[usize]) -> f64 {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..holders.len() {
            for j in i + 1..holders.len() {
                match self.rows[holders[i]][holders[j]] {
                    Some(h) => sum += f64::from(h),
                    None => return f64::INFINITY,
                }
                pairs += 1;
            }
        }
        if pairs == 0 { 0.0 } else { sum / pairs as f64 }
    }
}

/// Proposes a replacement holder for slot `slot`: a neighbor of its current
/// node, a copy of another holder (only useful when the cap allows sharing),
/// or a uniform node.
fn propose<R: Rng + ?Sized>(graph: &NetworkGraph, holders: &[usize], slot: usize, rng: &mut R) -> usize {
    match rng.gen_range(0..3) {
        0 => {
            let nbrs = graph.neighbors_at(holders[slot]);
            if nbrs.is_empty() {
                rng.gen_range(0..graph.len())
            } else {
                nbrs[rng.gen_range(0..nbrs.len())].0
            }
        }
        1 => holders[rng.gen_range(0..holders.len())],
        _ => rng.gen_range(0..graph.len()),
    }
}

fn respects_cap(holders: &[usize], cap: Option<usize>) -> bool {
    let Some(cap) = cap else { return true };
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    holders.iter().all(|&h| {
        let c = counts.entry(h).or_default();
        *c += 1;
        *c <= cap
    })
}

fn random_start<R: Rng + ?Sized>(n: usize, src: usize, f_k: usize, cap: Option<usize>, rng: &mut R) -> Option<Vec<usize>> {
    for _ in 0..1000 {
        let mut holders = vec![src];
        holders.extend((1..f_k).map(|_| rng.gen_range(0..n)));
        if respects_cap(&holders, cap) {
            return Some(holders);
        }
    }
    None
}

/// Random placement conditioned on a target mean pairwise hop distance.
///
/// Plain rejection sampling comes first, so common targets are drawn
/// uniformly from the placements within `tolerance`. Targets that random
/// draws almost never hit fall back to a local search: each restart draws a
/// random placement and applies random single-holder replacements, keeping a
/// move whenever it does not move `d(f_k)` further from the target.
pub fn place_fixed_distance<R: Rng + ?Sized>(
    data: &DataItem,
    graph: &NetworkGraph,
    target: f64,
    tolerance: f64,
    cap: Option<usize>,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    let src = origin_index(data, graph)?;
    if cap == Some(1) && graph.len() < data.f_k {
        return Err(PlacementError::Infeasible { needed: data.f_k, available: graph.len() });
    }
    let table = HopTable::new(graph);
    let mut best = f64::INFINITY;
    let mut best_gap = f64::INFINITY;
    for _ in 0..REJECTION_ATTEMPTS {
        let Some(holders) = random_start(graph.len(), src, data.f_k, cap, rng) else {
            break;
        };
        if (table.dfk(&holders) - target).abs() <= tolerance {
            let assignments = holders.iter().map(|&i| graph.id_of(i)).collect();
            return PlacementPlan::new(data, assignments, graph);
        }
    }
    for _ in 0..FIXED_DISTANCE_RESTARTS {
        let Some(mut holders) = random_start(graph.len(), src, data.f_k, cap, rng) else {
            break;
        };
        let mut cur = table.dfk(&holders);
        for _ in 0..FIXED_DISTANCE_MOVES {
            if (cur - target).abs() <= tolerance {
                let assignments = holders.iter().map(|&i| graph.id_of(i)).collect();
                return PlacementPlan::new(data, assignments, graph);
            }
            if data.f_k < 2 {
                break;
            }
            let slot = rng.gen_range(1..data.f_k);
            let old = holders[slot];
            holders[slot] = propose(graph, &holders, slot, rng);
            let next = table.dfk(&holders);
            if respects_cap(&holders, cap) && (next - target).abs() <= (cur - target).abs() {
                cur = next;
            } else {
                holders[slot] = old;
            }
        }
        if (cur - target).abs() <= tolerance {
            let assignments = holders.iter().map(|&i| graph.id_of(i)).collect();
            return PlacementPlan::new(data, assignments, graph);
        }
        if (cur - target).abs() < best_gap {
            best_gap = (cur - target).abs();
            best = cur;
        }
    }
    Err(PlacementError::TargetUnreachable { target, best })
}

/// Largest `d(f_k)` found for `f_k` distinct holders including `origin`,
/// by hill climbing from random starts.
pub fn estimate_max_dfk<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    origin: NodeId,
    f_k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<f64, PlacementError> {
    let src = graph.index_of(origin).ok_or(PlacementError::UnknownNode(origin))?;
    if f_k < 2 {
        return Ok(0.0);
    }
    if graph.len() < f_k {
        return Err(PlacementError::Infeasible { needed: f_k, available: graph.len() });
    }
    let table = HopTable::new(graph);
    let mut best: f64 = 0.0;
    for _ in 0..restarts.max(1) {
        let mut holders = random_start(graph.len(), src, f_k, Some(1), rng).expect("enough nodes");
        let mut cur = table.dfk(&holders);
        let mut improved = true;
        while improved {
            improved = false;
            for slot in 1..f_k {
                for cand in 0..graph.len() {
                    if holders.contains(&cand) {
                        continue;
                    }
                    let old = holders[slot];
                    holders[slot] = cand;
                    let next = table.dfk(&holders);
                    if next.is_finite() && next > cur + 1e-12 {
                        cur = next;
                        improved = true;
                    } else {
                        holders[slot] = old;
                    }
                }
            }
        }
        if cur.is_finite() {
            best = best.max(cur);
        }
    }
    Ok(best)
}

/// k-means partition of the sink's position estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    pub centroids: Vec<Point>,
    pub membership: BTreeMap<NodeId, usize>,
    /// Within-cluster sum of squares after each iteration.
    pub wcss_history: Vec<f64>,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<NodeId> {
        self.membership.iter().filter(|&(_, &c)| c == cluster).map(|(&n, _)| n).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in self.membership.values() {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn wcss(&self) -> f64 {
        self.wcss_history.last().copied().unwrap_or(0.0)
    }

    /// `node_id,cluster`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_id,cluster\n");
        for (n, c) in &self.membership {
            let _ = writeln!(s, "{n},{c}");
        }
        s
    }
}

fn nearest_centroid(p: &Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, q) in centroids.iter().enumerate() {
        let d = (p.x - q.x).powi(2) + (p.y - q.y).powi(2);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn wcss(points: &[Point], assign: &[usize], centroids: &[Point]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &c)| (p.x - centroids[c].x).powi(2) + (p.y - centroids[c].y).powi(2))
        .sum()
}

/// Lloyd iteration seeded with `k` distinct random nodes. Empty clusters are
/// repaired by moving the point farthest from its centroid out of the
/// largest cluster.
pub fn kmeans_cluster<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    k: usize,
    rng: &mut R,
    max_iters: usize,
) -> Result<Clustering, PlacementError> {
    let n = graph.len();
    if k == 0 || k > n {
        return Err(PlacementError::InvalidClusterCount { k, n });
    }
    let points: Vec<Point> = (0..n).map(|i| graph.position_at(i)).collect();
    let seeds: Vec<usize> = (0..n).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
    let mut centroids: Vec<Point> = seeds.iter().map(|&i| points[i]).collect();
    let mut assign: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids)).collect();
    let mut history = Vec::new();

    for _ in 0..max_iters.max(1) {
        repair_empty(&points, &mut assign, &mut centroids);
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &c) in points.iter().zip(&assign) {
            sums[c].0 += p.x;
            sums[c].1 += p.y;
            sums[c].2 += 1;
        }
        for (c, (sx, sy, cnt)) in sums.into_iter().enumerate() {
            if cnt > 0 {
                centroids[c] = Point::new(sx / cnt as f64, sy / cnt as f64);
            }
        }
        history.push(wcss(&points, &assign, &centroids));
        let next: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    let membership = (0..n).map(|i| (graph.id_of(i), assign[i])).collect();
    Ok(Clustering { k, centroids, membership, wcss_history: history })
}

fn repair_empty(points: &[Point], assign: &mut [usize], centroids: &mut [Point]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assign.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let largest = (0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).expect("k > 0");
        let far = (0..points.len())
            .filter(|&i| assign[i] == largest)
            .max_by(|&a, &b| {
                let da = points[a].distance(&centroids[largest]);
                let db = points[b].distance(&centroids[largest]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("largest cluster is non-empty");
        assign[far] = empty;
        centroids[empty] = points[far];
    }
}

/// Best of `restarts` independent k-means runs by final WCSS.
pub fn kmeans_best_of<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    k: usize,
    rng: &mut R,
    max_iters: usize,
    restarts: usize,
) -> Result<Clustering, PlacementError> {
    let mut best: Option<Clustering> = None;
    for _ in 0..restarts.max(1) {
        let c = kmeans_cluster(graph, k, rng, max_iters)?;
        if best.as_ref().is_none_or(|b| c.wcss() < b.wcss()) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Whether the originator's own area gets an extra random holder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterMode {
    /// `k = f_k`; the originator is its own area's holder.
    #[default]
    OriginRepresentsCluster,
    /// `k = f_k - 1`; every area gets a random holder besides the originator.
    ExcludeOrigin,
}

impl ClusterMode {
    pub fn cluster_count(self, f_k: usize) -> usize {
        match self {
            ClusterMode::OriginRepresentsCluster => f_k,
            ClusterMode::ExcludeOrigin => f_k.saturating_sub(1).max(1),
        }
    }
}

/// One random holder per area other than the originator's, re-drawn (up to
/// [`RESELECT_RETRIES`] times per area) when it neighbors a holder already
/// chosen.
pub fn place_clustered<R: Rng + ?Sized>(
    data: &DataItem,
    graph: &NetworkGraph,
    clustering: &Clustering,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    place_clustered_with(data, graph, clustering, ClusterMode::OriginRepresentsCluster, rng)
}

pub fn place_clustered_with<R: Rng + ?Sized>(
    data: &DataItem,
    graph: &NetworkGraph,
    clustering: &Clustering,
    mode: ClusterMode,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    if clustering.k != mode.cluster_count(data.f_k) {
        return Err(PlacementError::ClusterMismatch { k: clustering.k, f_k: data.f_k });
    }
    let origin_cluster = *clustering
        .membership
        .get(&data.origin)
        .ok_or(PlacementError::UnknownNode(data.origin))?;
    let mut holders = vec![data.origin];
    let mut violation = false;
    for cluster in 0..clustering.k {
        if mode == ClusterMode::OriginRepresentsCluster && cluster == origin_cluster {
            continue;
        }
        let mut members = clustering.members(cluster);
        members.retain(|m| *m != data.origin);
        if members.is_empty() {
            return Err(PlacementError::Infeasible { needed: data.f_k, available: holders.len() });
        }
        members.shuffle(rng);
        let clear = |cand: &NodeId| holders.iter().all(|h| !graph.has_edge(*h, *cand));
        match members.iter().take(RESELECT_RETRIES + 1).find(|c| clear(c)) {
            Some(&pick) => holders.push(pick),
            None => {
                log::warn!("cluster {cluster}: no holder avoids neighboring an existing holder");
                violation = true;
                holders.push(members[0]);
            }
        }
    }
    let mut plan = PlacementPlan::new(data, holders, graph)?;
    plan.neighbor_violation = violation;
    Ok(plan)
}

/// Placement strategy selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    NearFirst,
    FarFirst,
    Random,
    FixedDistance { target: f64, tolerance: f64 },
    Clustered,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::NearFirst => f.write_str("near_first"),
            Strategy::FarFirst => f.write_str("far_first"),
            Strategy::Random => f.write_str("random"),
            Strategy::FixedDistance { target, .. } => write!(f, "fixed_{target}"),
            Strategy::Clustered => f.write_str("clustered"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "near_first" => Ok(Strategy::NearFirst),
            "far_first" => Ok(Strategy::FarFirst),
            "random" => Ok(Strategy::Random),
            "clustered" => Ok(Strategy::Clustered),
            other => match other.strip_prefix("fixed_").map(str::parse::<f64>) {
                Some(Ok(target)) => Ok(Strategy::FixedDistance { target, tolerance: 0.5 }),
                _ => Err(format!("unknown placement strategy `{other}`")),
            },
        }
    }
}

/// Dispatches to the strategy; `clustering` is required for [`Strategy::Clustered`].
pub fn place<R: Rng + ?Sized>(
    strategy: Strategy,
    data: &DataItem,
    graph: &NetworkGraph,
    clustering: Option<&Clustering>,
    mode: ClusterMode,
    cap: Option<usize>,
    rng: &mut R,
) -> Result<PlacementPlan, PlacementError> {
    match strategy {
        Strategy::NearFirst => place_near_first(data, graph, rng),
        Strategy::FarFirst => place_far_first(data, graph, rng),
        Strategy::Random => place_random(data, graph, rng),
        Strategy::FixedDistance { target, tolerance } => place_fixed_distance(data, graph, target, tolerance, cap, rng),
        Strategy::Clustered => {
            let clustering = clustering.ok_or(PlacementError::ClusterMismatch { k: 0, f_k: data.f_k })?;
            place_clustered_with(data, graph, clustering, mode, rng)
        }
    }
}

/// Distinct holders of a plan.
pub fn holder_set(plan: &PlacementPlan) -> BTreeSet<NodeId> {
    plan.assignments.iter().copied().collect()
}
