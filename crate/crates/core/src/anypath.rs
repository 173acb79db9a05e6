//! Destination-oriented pruning and shortest-anypath routing.
//!
//! A route toward a destination is a DAG of hyperlinks: each transmitter
//! broadcasts to a priority-ordered forwarding set and the highest-priority
//! receiver that got the packet relays it. Route cost is the expected anypath
//! transmission time (EATT):
//!
//! ```text
//! ρ_Γ = 1 − Π (1 − ρ_m)        d_Γ = max d_m        δ_Γ = d_Γ / ρ_Γ
//! w_m = ρ_m Π_{k<m} (1 − ρ_k) / ρ_Γ
//! ε_n = δ_Γ + Σ w_m ε_m
//! ```

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{LinkIdx, NodeIdx, SubstrateNetwork};

/// Unreachable marker for distances and EATT values.
pub const UNREACHABLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnypathError {
    #[error("node `{0}` cannot reach the destination")]
    Unreachable(String),
}

/// A substrate restricted to a subset of its links. Every node stays present.
#[derive(Debug, Clone)]
pub struct SubgraphView<'a> {
    net: &'a SubstrateNetwork,
    active: Vec<bool>,
}

impl<'a> SubgraphView<'a> {
    pub fn full(net: &'a SubstrateNetwork) -> Self {
        SubgraphView {
            net,
            active: vec![true; net.link_count()],
        }
    }

    pub fn network(&self) -> &'a SubstrateNetwork {
        self.net
    }

    pub fn contains(&self, link: LinkIdx) -> bool {
        self.active[link.0]
    }

    pub fn links(&self) -> impl Iterator<Item = LinkIdx> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(|(i, _)| LinkIdx(i))
    }

    fn neighbours(&self, node: NodeIdx) -> impl Iterator<Item = (LinkIdx, NodeIdx)> + '_ {
        self.net
            .incident_links(node)
            .iter()
            .filter(|l| self.active[l.0])
            .map(move |&l| (l, self.net.link(l).other(node).expect("adjacency out of sync")))
    }
}

/// Keeps only links whose available bandwidth covers `bw`.
pub fn bandwidth_subgraph(net: &SubstrateNetwork, bw: u32) -> SubgraphView<'_> {
    SubgraphView {
        net,
        active: net.links().map(|(_, l)| l.available() >= bw).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Single-destination Dijkstra under the per-link cost `d / ρ`.
pub fn unicast_distances(view: &SubgraphView<'_>, dst: NodeIdx) -> Vec<f64> {
    let net = view.network();
    let mut dist = vec![UNREACHABLE; net.node_count()];
    let mut heap = BinaryHeap::new();
    dist[dst.0] = 0.0;
    heap.push(Reverse(Key(0.0, dst.0)));
    while let Some(Reverse(Key(d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (l, v) in view.neighbours(NodeIdx(u)) {
            let nd = d + net.link(l).cost();
            if nd < dist[v.0] {
                dist[v.0] = nd;
                heap.push(Reverse(Key(nd, v.0)));
            }
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DagEdge {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub link: LinkIdx,
    pub delay: f64,
    pub pdr: f64,
}

/// Directed graph whose edges all point toward the destination.
#[derive(Debug, Clone)]
pub struct PrunedDag {
    dst: NodeIdx,
    node_count: usize,
    edges: Vec<DagEdge>,
    incoming: Vec<Vec<usize>>,
}

impl PrunedDag {
    /// Builds a DAG from raw edges. Callers guarantee acyclicity.
    pub fn from_edges(node_count: usize, dst: NodeIdx, edges: Vec<DagEdge>) -> Self {
        let mut incoming = vec![Vec::new(); node_count];
        for (i, e) in edges.iter().enumerate() {
            incoming[e.to.0].push(i);
        }
        PrunedDag {
            dst,
            node_count,
            edges,
            incoming,
        }
    }

    pub fn destination(&self) -> NodeIdx {
        self.dst
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[DagEdge] {
        &self.edges
    }

    pub fn incoming(&self, node: NodeIdx) -> impl Iterator<Item = &DagEdge> {
        self.incoming[node.0].iter().map(move |&i| &self.edges[i])
    }

    /// Kahn's algorithm; true iff every node can be topologically ordered.
    pub fn is_acyclic(&self) -> bool {
        let mut indegree = vec![0usize; self.node_count];
        let mut outgoing = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            indegree[e.to.0] += 1;
            outgoing[e.from.0].push(e.to.0);
        }
        let mut queue: VecDeque<usize> = (0..self.node_count).filter(|&n| indegree[n] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &v in &outgoing[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        seen == self.node_count
    }
}

/// Orients every link from its farther endpoint to its nearer one (by unicast
/// cost to `dst`). Equidistant endpoints, including two unreachable ones,
/// contribute no edge.
pub fn prune(view: &SubgraphView<'_>, dst: NodeIdx) -> PrunedDag {
    let net = view.network();
    let dist = unicast_distances(view, dst);
    let mut edges = Vec::new();
    for l in view.links() {
        let link = net.link(l);
        let (a, b) = link.endpoints;
        let (from, to) = match dist[a.0].partial_cmp(&dist[b.0]) {
            Some(Ordering::Greater) => (a, b),
            Some(Ordering::Less) => (b, a),
            _ => continue,
        };
        edges.push(DagEdge {
            from,
            to,
            link: l,
            delay: link.delay,
            pdr: link.pdr,
        });
    }
    PrunedDag::from_edges(net.node_count(), dst, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperlinkMetrics {
    pub pdr: f64,
    pub delay: f64,
    pub cost: f64,
}

/// Delivery probability, worst-case delay and cost of one hyperlink, from its
/// members' `(pdr, delay)` pairs. Panics on an empty forwarding set.
pub fn hyperlink_metrics<I>(members: I) -> HyperlinkMetrics
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut fail = 1.0;
    let mut delay = f64::NEG_INFINITY;
    let mut count = 0;
    for (pdr, d) in members {
        fail *= 1.0 - pdr;
        delay = delay.max(d);
        count += 1;
    }
    assert!(count > 0, "hyperlink needs at least one forwarder");
    let pdr = 1.0 - fail;
    HyperlinkMetrics {
        pdr,
        delay,
        cost: delay / pdr,
    }
}

/// Probability that each forwarder, in priority order, is the one that relays,
/// conditioned on at least one receiving.
pub fn forwarder_weights(pdrs: &[f64]) -> Vec<f64> {
    assert!(!pdrs.is_empty(), "hyperlink needs at least one forwarder");
    let mut fail = 1.0;
    let mut raw = Vec::with_capacity(pdrs.len());
    for &p in pdrs {
        raw.push(p * fail);
        fail *= 1.0 - p;
    }
    let total = 1.0 - fail;
    raw.into_iter().map(|w| w / total).collect()
}

/// One receiver in a forwarding set together with the link reaching it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Forwarder {
    pub node: NodeIdx,
    pub link: LinkIdx,
    pub delay: f64,
    pub pdr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperlink {
    pub transmitter: NodeIdx,
    pub forwarders: Vec<Forwarder>,
}

impl Hyperlink {
    pub fn metrics(&self) -> HyperlinkMetrics {
        hyperlink_metrics(self.forwarders.iter().map(|f| (f.pdr, f.delay)))
    }
}

/// Forwarding sets and EATT values toward one destination.
#[derive(Debug, Clone, PartialEq)]
pub struct AnypathRouteTable {
    dst: NodeIdx,
    cost: Vec<f64>,
    forwarding: Vec<Vec<Forwarder>>,
}

/// Nodes and links a channel occupies when routed from a given source.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RouteClosure {
    pub nodes: BTreeSet<NodeIdx>,
    pub links: BTreeSet<LinkIdx>,
    /// Hyperlinks in breadth-first order from the source.
    pub hyperlinks: Vec<Hyperlink>,
}

/// Reusable visited marks for [`AnypathRouteTable::closure_link_count`].
#[derive(Debug, Default)]
pub struct ClosureCounter {
    seen: Vec<u32>,
    epoch: u32,
    stack: Vec<usize>,
}

impl ClosureCounter {
    fn reset(&mut self, nodes: usize) {
        if self.seen.len() != nodes || self.epoch == u32::MAX {
            self.seen = vec![0; nodes];
            self.epoch = 0;
        }
        self.epoch += 1;
        self.stack.clear();
    }

    fn visit(&mut self, n: usize) {
        if self.seen[n] != self.epoch {
            self.seen[n] = self.epoch;
            self.stack.push(n);
        }
    }
}

impl AnypathRouteTable {
    pub fn destination(&self) -> NodeIdx {
        self.dst
    }

    pub fn cost(&self, node: NodeIdx) -> f64 {
        self.cost[node.0]
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn forwarding_set(&self, node: NodeIdx) -> &[Forwarder] {
        &self.forwarding[node.0]
    }

    pub fn is_reachable(&self, node: NodeIdx) -> bool {
        self.cost[node.0].is_finite()
    }

    /// Follows forwarding sets transitively from `src`. The destination itself
    /// yields an empty closure.
    pub fn route_closure(&self, src: NodeIdx, net: &SubstrateNetwork) -> Result<RouteClosure, AnypathError> {
        if !self.is_reachable(src) {
            return Err(AnypathError::Unreachable(net.node_id(src).to_string()));
        }
        let mut closure = RouteClosure::default();
        if src == self.dst {
            return Ok(closure);
        }
        let mut queue = VecDeque::from([src]);
        closure.nodes.insert(src);
        while let Some(n) = queue.pop_front() {
            let set = &self.forwarding[n.0];
            if set.is_empty() {
                continue;
            }
            for f in set {
                closure.links.insert(f.link);
                if closure.nodes.insert(f.node) {
                    queue.push_back(f.node);
                }
            }
            closure.hyperlinks.push(Hyperlink {
                transmitter: n,
                forwarders: set.clone(),
            });
        }
        Ok(closure)
    }

    /// Link count of the closure from `src`, or `None` if `src` is unreachable.
    /// Every DAG edge sits in exactly one hyperlink, so this is the sum of
    /// forwarding-set sizes over the visited nodes.
    pub fn closure_link_count(&self, src: NodeIdx, counter: &mut ClosureCounter) -> Option<usize> {
        if !self.is_reachable(src) {
            return None;
        }
        counter.reset(self.forwarding.len());
        counter.visit(src.0);
        let mut links = 0;
        while let Some(n) = counter.stack.pop() {
            let set = &self.forwarding[n];
            links += set.len();
            for f in set {
                counter.visit(f.node.0);
            }
        }
        Some(links)
    }

    pub fn to_doc(&self, net: &SubstrateNetwork) -> RouteTableDoc {
        RouteTableDoc {
            destination: net.node_id(self.dst).to_string(),
            nodes: net
                .nodes()
                .map(|(i, n)| RouteEntryDoc {
                    node: n.id.clone(),
                    eatt: self.cost[i.0].is_finite().then_some(self.cost[i.0]),
                    forwarders: self.forwarding[i.0]
                        .iter()
                        .map(|f| HopDoc {
                            node: net.node_id(f.node).to_string(),
                            link: net.link_id(f.link).to_string(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteTableDoc {
    pub destination: String,
    pub nodes: Vec<RouteEntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteEntryDoc {
    pub node: String,
    /// `null` when the node cannot reach the destination.
    pub eatt: Option<f64>,
    pub forwarders: Vec<HopDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopDoc {
    pub node: String,
    pub link: String,
}

/// Running hyperlink state so that appending a forwarder is O(1).
#[derive(Debug, Clone, Copy)]
struct Accumulator {
    fail: f64,
    delay: f64,
    weighted: f64,
}

impl Accumulator {
    const EMPTY: Accumulator = Accumulator {
        fail: 1.0,
        delay: 0.0,
        weighted: 0.0,
    };

    fn push(self, pdr: f64, delay: f64, eatt: f64) -> Accumulator {
        Accumulator {
            weighted: self.weighted + pdr * self.fail * eatt,
            fail: self.fail * (1.0 - pdr),
            delay: self.delay.max(delay),
        }
    }

    fn eatt(&self) -> f64 {
        let pdr = 1.0 - self.fail;
        (self.delay + self.weighted) / pdr
    }
}

/// Shortest-anypath sweep over a pruned DAG.
///
/// Nodes are settled in ascending EATT (ties by index). When `n'` is settled,
/// every DAG predecessor `n` with `ε_n > ε_n'` appends `n'` to its forwarding
/// set and takes the resulting EATT, even if that is larger than before. A
/// settled node without incoming edges is skipped rather than ending the sweep.
pub fn anypath_routes(dag: &PrunedDag) -> AnypathRouteTable {
    let n = dag.node_count();
    let mut cost = vec![UNREACHABLE; n];
    let mut forwarding: Vec<Vec<Forwarder>> = vec![Vec::new(); n];
    let mut acc = vec![Accumulator::EMPTY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    cost[dag.dst.0] = 0.0;
    heap.push(Reverse(Key(0.0, dag.dst.0)));
    while let Some(Reverse(Key(eps, u))) = heap.pop() {
        if settled[u] || eps != cost[u] {
            continue;
        }
        settled[u] = true;
        for edge in dag.incoming(NodeIdx(u)) {
            let v = edge.from.0;
            if cost[v] > eps {
                let grown = acc[v].push(edge.pdr, edge.delay, eps);
                acc[v] = grown;
                cost[v] = grown.eatt();
                forwarding[v].push(Forwarder {
                    node: NodeIdx(u),
                    link: edge.link,
                    delay: edge.delay,
                    pdr: edge.pdr,
                });
                heap.push(Reverse(Key(cost[v], v)));
            }
        }
    }
    AnypathRouteTable {
        dst: dag.dst,
        cost,
        forwarding,
    }
}
