//! Radio energy accounting.
//!
//! A fragment crossing `h` hops costs `sum(e_tx * p_i + e_rx)` over those
//! hops, the transmit share charged to the sender and the receive share to
//! the receiver. A datum's cost `e_k` is the sum over its fragments. HELLO
//! beacons and table pushes are kept in their own categories and never
//! count toward `e_k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::statistics::Statistics;
use thiserror::Error;

use crate::placement::{place_fixed_distance, DataId, DataItem, PlacementError, PlacementPlan};
use crate::routing::{route_fragments, FieldSizes, Protocol, RoutingArtifact, RoutingError};
use crate::topology::{NetworkGraph, NodeId, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid radio profile: {0}")]
    InvalidProfile(String),
    #[error("no route for fragment {fragment} to node {holder}")]
    MissingRoute { fragment: usize, holder: NodeId },
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioProfile {
    /// Joules per packet sent at full power.
    pub e_tx: f64,
    /// Joules per packet received.
    pub e_rx: f64,
    /// Transmit power fraction for nodes without an override.
    pub default_power: f64,
    pub power: BTreeMap<NodeId, f64>,
    /// Scale each hop by its ETX to charge expected retransmissions.
    pub charge_retransmissions: bool,
}

impl Default for RadioProfile {
    fn default() -> Self {
        Self {
            e_tx: 0.0016,
            e_rx: 0.0012,
            default_power: 1.0,
            power: BTreeMap::new(),
            charge_retransmissions: false,
        }
    }
}

impl RadioProfile {
    pub fn new(e_tx: f64, e_rx: f64) -> Result<Self, EnergyError> {
        let p = Self { e_tx, e_rx, ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.e_tx > 0.0 && self.e_rx >= 0.0) {
            return Err(EnergyError::InvalidProfile(format!("e_tx={} e_rx={}", self.e_tx, self.e_rx)));
        }
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.default_power) || !self.power.values().all(|&p| ok(p)) {
            return Err(EnergyError::InvalidProfile("power fraction outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn power_of(&self, node: NodeId) -> f64 {
        self.power.get(&node).copied().unwrap_or(self.default_power)
    }

    /// `(tx, rx)` cost of one hop from `from`.
    fn hop(&self, from: NodeId, weight: f64) -> (f64, f64) {
        (self.e_tx * self.power_of(from) * weight, self.e_rx * weight)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { e_tx: self.e_tx * factor, e_rx: self.e_rx * factor, ..self.clone() }
    }
}

fn hop_weight(graph: Option<&NetworkGraph>, profile: &RadioProfile, a: NodeId, b: NodeId) -> f64 {
    match (profile.charge_retransmissions, graph) {
        (true, Some(g)) => g.etx(a, b).unwrap_or(1.0),
        _ => 1.0,
    }
}

/// Energy of moving one fragment along `path` (origin first).
pub fn fragment_energy(path: &[NodeId], profile: &RadioProfile) -> f64 {
    fragment_energy_on(path, profile, None)
}

pub fn fragment_energy_on(path: &[NodeId], profile: &RadioProfile, graph: Option<&NetworkGraph>) -> f64 {
    path.windows(2)
        .map(|w| {
            let (tx, rx) = profile.hop(w[0], hop_weight(graph, profile, w[0], w[1]));
            tx + rx
        })
        .sum()
}

/// `e_k` for one placement: every remote fragment pays its route, the
/// originator's own fragment is free.
pub fn datum_energy(plan: &PlacementPlan, routes: &RoutingArtifact, profile: &RadioProfile) -> Result<f64, EnergyError> {
    let mut total = 0.0;
    for (fragment, holder) in plan.remote() {
        let path = routes.path_to(holder).ok_or(EnergyError::MissingRoute { fragment, holder })?;
        total += fragment_energy(path, profile);
    }
    Ok(total)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub per_node: BTreeMap<NodeId, f64>,
    pub per_datum: BTreeMap<DataId, f64>,
    pub hello_total: f64,
    pub distribution_total: f64,
}

impl EnergyLedger {
    fn add(&mut self, node: NodeId, joules: f64) {
        *self.per_node.entry(node).or_default() += joules;
    }

    /// Charges one fragment's transfer and returns its `e_f`.
    pub fn charge_fragment(
        &mut self,
        data_id: DataId,
        path: &[NodeId],
        profile: &RadioProfile,
        graph: Option<&NetworkGraph>,
    ) -> f64 {
        let mut e_f = 0.0;
        for w in path.windows(2) {
            let (tx, rx) = profile.hop(w[0], hop_weight(graph, profile, w[0], w[1]));
            self.add(w[0], tx);
            self.add(w[1], rx);
            e_f += tx + rx;
        }
        *self.per_datum.entry(data_id).or_default() += e_f;
        e_f
    }

    /// One HELLO round: every node broadcasts once and every in-range
    /// listener receives it.
    pub fn charge_hello(&mut self, topology: &Topology, profile: &RadioProfile) {
        for node in topology.nodes() {
            let tx = profile.e_tx * profile.power_of(node.id);
            self.add(node.id, tx);
            self.hello_total += tx;
            for listener in topology.out_neighbors(node.id) {
                self.add(listener, profile.e_rx);
                self.hello_total += profile.e_rx;
            }
        }
    }

    /// The sink pushes routing state to every node once; only reception is
    /// charged since the sink is not energy constrained.
    pub fn charge_distribution<I: IntoIterator<Item = NodeId>>(&mut self, nodes: I, profile: &RadioProfile) {
        for n in nodes {
            self.add(n, profile.e_rx);
            self.distribution_total += profile.e_rx;
        }
    }

    pub fn fragment_total(&self) -> f64 {
        self.per_datum.values().sum()
    }

    pub fn node_total(&self) -> f64 {
        self.per_node.values().sum()
    }

    pub fn merge(&mut self, other: &EnergyLedger) {
        for (n, j) in &other.per_node {
            self.add(*n, *j);
        }
        for (d, j) in &other.per_datum {
            *self.per_datum.entry(*d).or_default() += j;
        }
        self.hello_total += other.hello_total;
        self.distribution_total += other.distribution_total;
    }

    /// `node_id,joules`
    pub fn nodes_csv(&self) -> String {
        let mut s = String::from("node_id,joules\n");
        for (n, j) in &self.per_node {
            let _ = writeln!(s, "{n},{j:.6}");
        }
        s
    }

    /// `data_id,e_k`
    pub fn data_csv(&self) -> String {
        let mut s = String::from("data_id,e_k\n");
        for (d, j) in &self.per_datum {
            let _ = writeln!(s, "{d},{j:.6}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfkEnergyRow {
    pub target_dfk: f64,
    pub mean_ek: f64,
    pub stddev: f64,
    pub samples: usize,
}

/// Mean `e_k` per target dispersion, using fixed-distance placement from a
/// uniformly drawn originator and minimum-ETX routes.
pub fn energy_vs_dfk_sweep(
    graph: &NetworkGraph,
    targets: &[f64],
    f_k: usize,
    tolerance: f64,
    profile: &RadioProfile,
    seeds: &[u64],
) -> Result<Vec<DfkEnergyRow>, EnergyError> {
    let ids: Vec<NodeId> = graph.node_ids().collect();
    let mut rows = Vec::with_capacity(targets.len());
    for &target in targets {
        let mut samples = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let origin = ids[rng.gen_range(0..ids.len())];
            let data = DataItem::new(DataId(0), origin, f_k, 1)?;
            let plan = place_fixed_distance(&data, graph, target, tolerance, None, &mut rng)?;
            let routes = route_fragments(Protocol::Dsr, graph, origin, &plan.assignments, FieldSizes::default())?;
            samples.push(datum_energy(&plan, &routes, profile)?);
        }
        let stddev = if samples.len() > 1 { samples.iter().std_dev() } else { 0.0 };
        rows.push(DfkEnergyRow { target_dfk: target, mean_ek: samples.iter().mean(), stddev, samples: samples.len() });
    }
    Ok(rows)
}

/// `target_dfk,mean_ek,stddev`
pub fn sweep_csv(rows: &[DfkEnergyRow]) -> String {
    let mut s = String::from("target_dfk,mean_ek,stddev\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6},{:.6}", r.target_dfk, r.mean_ek, r.stddev);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::place_near_first;
    use crate::topology::generate_grid;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn unit() -> RadioProfile {
        RadioProfile::new(2.0, 1.0).unwrap()
    }

    fn grid10() -> NetworkGraph {
        NetworkGraph::ground_truth(&generate_grid(10, 100.0, 120.0).unwrap())
    }

    #[test]
    fn fragment_energy_examples() {
        assert_eq!(fragment_energy(&[n(0), n(1)], &unit()), 3.0);
        assert_eq!(fragment_energy(&[n(0), n(1), n(2), n(3)], &unit()), 9.0);
        assert_eq!(fragment_energy(&[n(0)], &unit()), 0.0);
    }

    #[test]
    fn near_first_datum_energy() {
        let g = grid10();
        let data = DataItem::new(DataId(0), n(44), 6, 3).unwrap();
        let plan = place_near_first(&data, &g, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let routes = route_fragments(Protocol::Dsr, &g, n(44), &plan.assignments, FieldSizes::default()).unwrap();
        // four single-hop transfers and one two-hop transfer
        assert_eq!(datum_energy(&plan, &routes, &unit()).unwrap(), 18.0);
        let line = NetworkGraph::ground_truth(&crate::topology::generate_line(3, 100.0, 120.0).unwrap());
        let data = DataItem::new(DataId(0), n(1), 3, 1).unwrap();
        let plan = place_near_first(&data, &line, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let routes = route_fragments(Protocol::Dsr, &line, n(1), &plan.assignments, FieldSizes::default()).unwrap();
        assert_eq!(datum_energy(&plan, &routes, &unit()).unwrap(), 6.0);
    }

    #[test]
    fn colocated_fragments_cost_nothing() {
        let g = grid10();
        let data = DataItem::new(DataId(0), n(3), 4, 2).unwrap();
        let plan = PlacementPlan::new(&data, vec![n(3); 4], &g).unwrap();
        let routes = route_fragments(Protocol::Dsr, &g, n(3), &plan.assignments, FieldSizes::default()).unwrap();
        assert_eq!(datum_energy(&plan, &routes, &unit()).unwrap(), 0.0);
    }

    #[test]
    fn missing_route_errors() {
        let g = grid10();
        let data = DataItem::new(DataId(0), n(0), 2, 1).unwrap();
        let plan = PlacementPlan::new(&data, vec![n(0), n(9)], &g).unwrap();
        let routes = route_fragments(Protocol::Dsr, &g, n(0), &[n(1)], FieldSizes::default()).unwrap();
        assert_eq!(datum_energy(&plan, &routes, &unit()).unwrap_err(), EnergyError::MissingRoute { fragment: 1, holder: n(9) });
    }

    #[test]
    fn per_node_split() {
        let mut l = EnergyLedger::default();
        let e = l.charge_fragment(DataId(7), &[n(0), n(1), n(2)], &unit(), None);
        assert_eq!(e, 6.0);
        assert_eq!(l.per_node, BTreeMap::from([(n(0), 2.0), (n(1), 3.0), (n(2), 1.0)]));
        assert_eq!(l.data_csv(), "data_id,e_k\n7,6.000000\n");
        assert!(l.nodes_csv().starts_with("node_id,joules\n0,2.000000\n"));
    }

    #[test]
    fn hello_and_distribution_are_separate() {
        let t = generate_grid(3, 100.0, 120.0).unwrap();
        let mut l = EnergyLedger::default();
        l.charge_hello(&t, &unit());
        // 9 broadcasts at 2 J, 24 directed receptions at 1 J
        assert_eq!(l.hello_total, 9.0 * 2.0 + 24.0);
        l.charge_distribution(t.nodes().iter().map(|s| s.id), &unit());
        assert_eq!(l.distribution_total, 9.0);
        assert_eq!(l.fragment_total(), 0.0);
        assert!((l.node_total() - l.hello_total - l.distribution_total).abs() < 1e-9);
    }

    #[test]
    fn retransmission_charging() {
        let g = NetworkGraph::from_parts(
            [(n(0), Default::default()), (n(1), Default::default())],
            [(n(0), n(1), 2.5, 1.0)],
        );
        let mut p = unit();
        assert_eq!(fragment_energy_on(&[n(0), n(1)], &p, Some(&g)), 3.0);
        p.charge_retransmissions = true;
        assert_eq!(fragment_energy_on(&[n(0), n(1)], &p, Some(&g)), 7.5);
    }

    #[test]
    fn profile_validation() {
        assert!(RadioProfile::new(0.0, 1.0).is_err());
        let mut p = RadioProfile::default();
        p.power.insert(n(1), 1.5);
        assert!(p.validate().is_err());
    }

    #[test]
    fn sweep_zero_target_is_free() {
        let g = grid10();
        let rows = energy_vs_dfk_sweep(&g, &[0.0], 6, 0.0, &RadioProfile::default(), &[1, 2, 3]).unwrap();
        assert_eq!(rows[0].mean_ek, 0.0);
        assert_eq!(sweep_csv(&rows), "target_dfk,mean_ek,stddev\n0,0.000000,0.000000\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn path_strategy() -> impl Strategy<Value = Vec<u32>> {
            prop::collection::vec(0u32..20, 1..12)
        }

        proptest! {
            #[test]
            fn additive_over_concatenation(a in path_strategy(), b in path_strategy()) {
                let p = unit();
                let pa: Vec<NodeId> = a.iter().copied().map(NodeId).collect();
                let mut pb: Vec<NodeId> = vec![*pa.last().unwrap()];
                pb.extend(b.iter().copied().map(NodeId));
                let joined: Vec<NodeId> = pa.iter().chain(&pb[1..]).copied().collect();
                let lhs = fragment_energy(&joined, &p);
                let rhs = fragment_energy(&pa, &p) + fragment_energy(&pb, &p);
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }

            #[test]
            fn proportional_to_hops_without_rx(path in path_strategy(), e_tx in 0.001f64..5.0) {
                let p = RadioProfile::new(e_tx, 0.0).unwrap();
                let ids: Vec<NodeId> = path.into_iter().map(NodeId).collect();
                let e = fragment_energy(&ids, &p);
                prop_assert!((e - e_tx * (ids.len() - 1) as f64).abs() < 1e-9);
            }

            #[test]
            fn ledger_conserves_and_scales(paths in prop::collection::vec(path_strategy(), 0..10), hello: bool, factor in 0.5f64..4.0) {
                let t = generate_grid(3, 100.0, 120.0).unwrap();
                let run = |p: &RadioProfile| {
                    let mut l = EnergyLedger::default();
                    for (i, path) in paths.iter().enumerate() {
                        let ids: Vec<NodeId> = path.iter().copied().map(NodeId).collect();
                        l.charge_fragment(DataId(i as u32 % 3), &ids, p, None);
                    }
                    if hello {
                        l.charge_hello(&t, p);
                    }
                    l.charge_distribution(t.nodes().iter().map(|s| s.id), p);
                    l
                };
                let base = run(&unit());
                let lhs = base.node_total();
                let rhs = base.fragment_total() + base.hello_total + base.distribution_total;
                prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.max(1.0));
                let doubled = run(&unit().scaled(factor));
                for (n, j) in &base.per_node {
                    prop_assert!((doubled.per_node[n] - factor * j).abs() < 1e-9 * j.max(1.0));
                }
            }
        }
    }
}
