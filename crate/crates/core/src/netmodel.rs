//! Substrate and virtual-request models with resource accounting.
//!
//! Capacities and demands are integral units; delays, delivery ratios and
//! costs are `f64`. Nodes, links, services and channels are addressed by dense
//! indices assigned in declaration order, and every tie-break in the crate that
//! speaks of "smallest id" means smallest index.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{LinkDoc, NodeDoc, RequestDoc, ServiceDoc, SubstrateDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServiceIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelIdx(pub usize);

/// Non-functional resource vector (CPU, GPU, MEM).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resources {
    pub cpu: u32,
    pub gpu: u32,
    pub mem: u32,
}

impl Resources {
    pub const ZERO: Resources = Resources { cpu: 0, gpu: 0, mem: 0 };

    pub const fn new(cpu: u32, gpu: u32, mem: u32) -> Self {
        Resources { cpu, gpu, mem }
    }

    /// Component-wise `self <= other`.
    pub fn fits_within(&self, other: &Resources) -> bool {
        self.cpu <= other.cpu && self.gpu <= other.gpu && self.mem <= other.mem
    }

    pub fn checked_sub(&self, other: &Resources) -> Option<Resources> {
        Some(Resources {
            cpu: self.cpu.checked_sub(other.cpu)?,
            gpu: self.gpu.checked_sub(other.gpu)?,
            mem: self.mem.checked_sub(other.mem)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        *self == Resources::ZERO
    }
}

impl Add for Resources {
    type Output = Resources;

    fn add(self, rhs: Resources) -> Resources {
        Resources {
            cpu: self.cpu + rhs.cpu,
            gpu: self.gpu + rhs.gpu,
            mem: self.mem + rhs.mem,
        }
    }
}

impl Sub for Resources {
    type Output = Resources;

    fn sub(self, rhs: Resources) -> Resources {
        self.checked_sub(&rhs).expect("resource subtraction underflow")
    }
}

impl fmt::Display for Resources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.cpu, self.gpu, self.mem)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateNode {
    pub id: String,
    capacity: Resources,
    available: Resources,
    functionals: BTreeSet<String>,
}

impl SubstrateNode {
    pub fn capacity(&self) -> Resources {
        self.capacity
    }

    pub fn available(&self) -> Resources {
        self.available
    }

    pub fn used(&self) -> Resources {
        self.capacity - self.available
    }

    pub fn functionals(&self) -> &BTreeSet<String> {
        &self.functionals
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateLink {
    pub id: String,
    pub endpoints: (NodeIdx, NodeIdx),
    pub delay: f64,
    pub pdr: f64,
    capacity: u32,
    available: u32,
}

impl SubstrateLink {
    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn available(&self) -> u32 {
        self.available
    }

    pub fn used(&self) -> u32 {
        self.capacity - self.available
    }

    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other(&self, node: NodeIdx) -> Option<NodeIdx> {
        match self.endpoints {
            (a, b) if a == node => Some(b),
            (a, b) if b == node => Some(a),
            _ => None,
        }
    }
}

/// Expected cost of one transmission over a lossy link, `d / ρ`.
pub fn link_cost(delay: f64, pdr: f64) -> f64 {
    delay / pdr
}

impl SubstrateLink {
    pub fn cost(&self) -> f64 {
        link_cost(self.delay, self.pdr)
    }
}

/// Undirected substrate graph. The mutable resource pool every embedding draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateNetwork {
    nodes: Vec<SubstrateNode>,
    links: Vec<SubstrateLink>,
    adjacency: Vec<Vec<LinkIdx>>,
    node_index: HashMap<String, NodeIdx>,
    link_index: HashMap<String, LinkIdx>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateNode { node: String },
    DuplicateLink { link: String },
    DanglingEndpoint { link: String, endpoint: String },
    SelfLoop { link: String },
    ParallelLink { link: String, existing: String },
    PdrOutOfRange { link: String },
    NonPositiveDelay { link: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { node } => write!(f, "node `{node}` declared more than once"),
            Violation::DuplicateLink { link } => write!(f, "link `{link}` declared more than once"),
            Violation::DanglingEndpoint { link, endpoint } => {
                write!(f, "link `{link}` references unknown node `{endpoint}`")
            }
            Violation::SelfLoop { link } => write!(f, "link `{link}` is a self-loop"),
            Violation::ParallelLink { link, existing } => {
                write!(f, "link `{link}` duplicates the node pair of `{existing}`")
            }
            Violation::PdrOutOfRange { link } => write!(f, "link `{link}`: pdr must lie in (0, 1]"),
            Violation::NonPositiveDelay { link } => write!(f, "link `{link}`: delay must be positive"),
        }
    }
}

/// Checks a substrate description against the model invariants.
///
/// Capacities are unsigned in the schema, so negativity is rejected at parse
/// time and never shows up here.
pub fn validate_substrate(doc: &SubstrateDoc) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut nodes = BTreeSet::new();
    for node in &doc.nodes {
        if !nodes.insert(node.id.as_str()) {
            report.push(Violation::DuplicateNode { node: node.id.clone() });
        }
    }
    let mut link_ids = BTreeSet::new();
    let mut pairs: HashMap<(&str, &str), &str> = HashMap::new();
    for link in &doc.links {
        if !link_ids.insert(link.id.as_str()) {
            report.push(Violation::DuplicateLink { link: link.id.clone() });
        }
        let mut dangling = false;
        for end in [&link.a, &link.b] {
            if !nodes.contains(end.as_str()) {
                dangling = true;
                report.push(Violation::DanglingEndpoint {
                    link: link.id.clone(),
                    endpoint: end.clone(),
                });
            }
        }
        if link.a == link.b {
            report.push(Violation::SelfLoop { link: link.id.clone() });
        } else if !dangling {
            let key = if link.a < link.b {
                (link.a.as_str(), link.b.as_str())
            } else {
                (link.b.as_str(), link.a.as_str())
            };
            if let Some(existing) = pairs.get(&key) {
                report.push(Violation::ParallelLink {
                    link: link.id.clone(),
                    existing: existing.to_string(),
                });
            } else {
                pairs.insert(key, &link.id);
            }
        }
        if !(link.pdr > 0.0 && link.pdr <= 1.0) {
            report.push(Violation::PdrOutOfRange { link: link.id.clone() });
        }
        if !(link.delay > 0.0 && link.delay.is_finite()) {
            report.push(Violation::NonPositiveDelay { link: link.id.clone() });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid substrate: {}", join(.0))]
    InvalidSubstrate(Vec<Violation>),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("node `{node}` lacks capacity: needs {demand}, has {available}")]
    InsufficientCapacity {
        node: String,
        demand: Resources,
        available: Resources,
    },
    #[error("link `{link}` lacks bandwidth: needs {demand}, has {available}")]
    InsufficientBandwidth { link: String, demand: u32, available: u32 },
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl SubstrateNetwork {
    pub fn from_doc(doc: &SubstrateDoc) -> Result<Self, ModelError> {
        let report = validate_substrate(doc);
        if !report.is_empty() {
            return Err(ModelError::InvalidSubstrate(report));
        }
        let mut builder = SubstrateBuilder::default();
        for n in &doc.nodes {
            builder.node_with(
                &n.id,
                Resources::new(n.cpu, n.gpu, n.mem),
                n.functionals.iter().cloned(),
            );
        }
        for l in &doc.links {
            builder.link(&l.id, &l.a, &l.b, l.bw, l.delay, l.pdr);
        }
        Ok(builder.build_unchecked())
    }

    /// Serializable description of the *original* capacities.
    pub fn to_doc(&self) -> SubstrateDoc {
        SubstrateDoc {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.clone(),
                    cpu: n.capacity.cpu,
                    gpu: n.capacity.gpu,
                    mem: n.capacity.mem,
                    functionals: n.functionals.iter().cloned().collect(),
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc {
                    id: l.id.clone(),
                    a: self.nodes[l.endpoints.0 .0].id.clone(),
                    b: self.nodes[l.endpoints.1 .0].id.clone(),
                    bw: l.capacity,
                    delay: l.delay,
                    pdr: l.pdr,
                })
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node(&self, idx: NodeIdx) -> &SubstrateNode {
        &self.nodes[idx.0]
    }

    pub fn link(&self, idx: LinkIdx) -> &SubstrateLink {
        &self.links[idx.0]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = (NodeIdx, &SubstrateNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeIdx(i), n))
    }

    pub fn links(&self) -> impl ExactSizeIterator<Item = (LinkIdx, &SubstrateLink)> {
        self.links.iter().enumerate().map(|(i, l)| (LinkIdx(i), l))
    }

    pub fn incident_links(&self, node: NodeIdx) -> &[LinkIdx] {
        &self.adjacency[node.0]
    }

    pub fn node_by_id(&self, id: &str) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn link_by_id(&self, id: &str) -> Option<LinkIdx> {
        self.link_index.get(id).copied()
    }

    pub fn node_id(&self, idx: NodeIdx) -> &str {
        &self.nodes[idx.0].id
    }

    pub fn link_id(&self, idx: LinkIdx) -> &str {
        &self.links[idx.0].id
    }

    /// Mean delivery ratio over the links incident to `node`; 0 when isolated.
    pub fn local_pdr(&self, node: NodeIdx) -> f64 {
        let incident = &self.adjacency[node.0];
        if incident.is_empty() {
            return 0.0;
        }
        incident.iter().map(|l| self.links[l.0].pdr).sum::<f64>() / incident.len() as f64
    }

    /// Nodes whose available resources cover the service demand and whose
    /// capability labels include every label the service requires.
    pub fn suitable_nodes(&self, service: &NanoService) -> Vec<NodeIdx> {
        self.nodes()
            .filter(|(_, n)| is_suitable(n, service))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_suitable(&self, node: NodeIdx, service: &NanoService) -> bool {
        is_suitable(&self.nodes[node.0], service)
    }

    pub fn reserve_service(
        &mut self,
        node: NodeIdx,
        service: &NanoService,
        ledger: &mut ReservationLedger,
    ) -> Result<(), ModelError> {
        let n = &mut self.nodes[node.0];
        let remaining = n
            .available
            .checked_sub(&service.demand)
            .ok_or_else(|| ModelError::InsufficientCapacity {
                node: n.id.clone(),
                demand: service.demand,
                available: n.available,
            })?;
        n.available = remaining;
        ledger.entries.push(Reservation::Node {
            node,
            amount: service.demand,
        });
        Ok(())
    }

    /// Debits `bw` from every link in the set. Either all links are debited or none.
    pub fn reserve_channel<I>(&mut self, links: I, bw: u32, ledger: &mut ReservationLedger) -> Result<(), ModelError>
    where
        I: IntoIterator<Item = LinkIdx>,
        I::IntoIter: Clone,
    {
        let links = links.into_iter();
        for l in links.clone() {
            let link = &self.links[l.0];
            if link.available < bw {
                return Err(ModelError::InsufficientBandwidth {
                    link: link.id.clone(),
                    demand: bw,
                    available: link.available,
                });
            }
        }
        for l in links {
            self.links[l.0].available -= bw;
            ledger.entries.push(Reservation::Link { link: l, bw });
        }
        Ok(())
    }

    /// Undoes every ledger entry, newest first, and empties the ledger.
    pub fn rollback(&mut self, ledger: &mut ReservationLedger) {
        while let Some(entry) = ledger.entries.pop() {
            match entry {
                Reservation::Node { node, amount } => {
                    let n = &mut self.nodes[node.0];
                    n.available = n.available + amount;
                    debug_assert!(n.available.fits_within(&n.capacity));
                }
                Reservation::Link { link, bw } => {
                    let l = &mut self.links[link.0];
                    l.available += bw;
                    debug_assert!(l.available <= l.capacity);
                }
            }
        }
    }

    /// True when both networks share ids, endpoints and original capacities.
    pub fn same_topology(&self, other: &SubstrateNetwork) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.links.len() == other.links.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| a.id == b.id && a.capacity == b.capacity)
            && self
                .links
                .iter()
                .zip(&other.links)
                .all(|(a, b)| a.id == b.id && a.endpoints == b.endpoints && a.capacity == b.capacity)
    }
}

fn is_suitable(node: &SubstrateNode, service: &NanoService) -> bool {
    service.demand.fits_within(&node.available) && service.functionals.is_subset(&node.functionals)
}

/// Incremental constructor used by fixtures and generators.
#[derive(Debug, Default)]
pub struct SubstrateBuilder {
    nodes: Vec<SubstrateNode>,
    links: Vec<SubstrateLink>,
    node_index: HashMap<String, NodeIdx>,
    link_index: HashMap<String, LinkIdx>,
}

impl SubstrateBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, id: &str, capacity: Resources) -> NodeIdx {
        self.node_with(id, capacity, std::iter::empty())
    }

    pub fn node_with(
        &mut self,
        id: &str,
        capacity: Resources,
        functionals: impl IntoIterator<Item = String>,
    ) -> NodeIdx {
        let idx = NodeIdx(self.nodes.len());
        self.nodes.push(SubstrateNode {
            id: id.to_string(),
            capacity,
            available: capacity,
            functionals: functionals.into_iter().collect(),
        });
        self.node_index.insert(id.to_string(), idx);
        idx
    }

    /// Adds a link between two already-declared node ids.
    ///
    /// Panics on unknown endpoints; use [`SubstrateNetwork::from_doc`] for
    /// untrusted input.
    pub fn link(&mut self, id: &str, a: &str, b: &str, bw: u32, delay: f64, pdr: f64) -> LinkIdx {
        let a = self.node_index[a];
        let b = self.node_index[b];
        self.link_between(id, a, b, bw, delay, pdr)
    }

    pub fn link_between(&mut self, id: &str, a: NodeIdx, b: NodeIdx, bw: u32, delay: f64, pdr: f64) -> LinkIdx {
        let idx = LinkIdx(self.links.len());
        self.links.push(SubstrateLink {
            id: id.to_string(),
            endpoints: (a, b),
            delay,
            pdr,
            capacity: bw,
            available: bw,
        });
        self.link_index.insert(id.to_string(), idx);
        idx
    }

    pub fn build(self) -> Result<SubstrateNetwork, ModelError> {
        let net = self.build_unchecked();
        let report = validate_substrate(&net.to_doc());
        if report.is_empty() {
            Ok(net)
        } else {
            Err(ModelError::InvalidSubstrate(report))
        }
    }

    fn build_unchecked(self) -> SubstrateNetwork {
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (i, l) in self.links.iter().enumerate() {
            adjacency[l.endpoints.0 .0].push(LinkIdx(i));
            adjacency[l.endpoints.1 .0].push(LinkIdx(i));
        }
        SubstrateNetwork {
            nodes: self.nodes,
            links: self.links,
            adjacency,
            node_index: self.node_index,
            link_index: self.link_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NanoService {
    pub id: String,
    pub demand: Resources,
    pub functionals: BTreeSet<String>,
}

impl NanoService {
    pub fn new(id: impl Into<String>, demand: Resources) -> Self {
        NanoService {
            id: id.into(),
            demand,
            functionals: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub id: String,
    pub src: ServiceIdx,
    pub dst: ServiceIdx,
    pub bw: u32,
    pub max_delay: f64,
    pub min_pdr: f64,
}

impl Channel {
    /// Largest route cost the channel tolerates, `d / ρ`.
    pub fn max_cost(&self) -> f64 {
        self.max_delay / self.min_pdr
    }

    /// Reliability-to-delay quality factor, `ρ / d`.
    pub fn quality(&self) -> f64 {
        self.min_pdr / self.max_delay
    }
}

/// Directed dataflow graph of nano-services and channels.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualRequest {
    pub id: String,
    services: Vec<NanoService>,
    channels: Vec<Channel>,
}

impl VirtualRequest {
    pub fn new(id: impl Into<String>, services: Vec<NanoService>, channels: Vec<Channel>) -> Result<Self, ModelError> {
        let id = id.into();
        let mut seen = BTreeSet::new();
        for s in &services {
            if !seen.insert(s.id.as_str()) {
                return Err(ModelError::InvalidRequest(format!(
                    "service `{}` declared more than once",
                    s.id
                )));
            }
        }
        for c in &channels {
            if c.src.0 >= services.len() || c.dst.0 >= services.len() {
                return Err(ModelError::InvalidRequest(format!(
                    "channel `{}` references an unknown service",
                    c.id
                )));
            }
            if c.src == c.dst {
                return Err(ModelError::InvalidRequest(format!(
                    "channel `{}` connects a service to itself",
                    c.id
                )));
            }
            if c.bw == 0 {
                return Err(ModelError::InvalidRequest(format!(
                    "channel `{}`: bw must be positive",
                    c.id
                )));
            }
            if !(c.max_delay > 0.0 && c.max_delay.is_finite()) {
                return Err(ModelError::InvalidRequest(format!(
                    "channel `{}`: max_delay must be positive",
                    c.id
                )));
            }
            if !(c.min_pdr > 0.0 && c.min_pdr <= 1.0) {
                return Err(ModelError::InvalidRequest(format!(
                    "channel `{}`: min_pdr must lie in (0, 1]",
                    c.id
                )));
            }
        }
        Ok(VirtualRequest { id, services, channels })
    }

    pub fn from_doc(doc: &RequestDoc) -> Result<Self, ModelError> {
        let services: Vec<NanoService> = doc
            .services
            .iter()
            .map(|s| NanoService {
                id: s.id.clone(),
                demand: Resources::new(s.cpu, s.gpu, s.mem),
                functionals: s.functionals.iter().cloned().collect(),
            })
            .collect();
        let lookup = |id: &str, channel: &str, field: &str| {
            services.iter().position(|s| s.id == id).map(ServiceIdx).ok_or_else(|| {
                ModelError::InvalidRequest(format!("channel `{channel}`: {field} names unknown service `{id}`"))
            })
        };
        let mut channels = Vec::with_capacity(doc.channels.len());
        for c in &doc.channels {
            channels.push(Channel {
                id: c.id.clone(),
                src: lookup(&c.src, &c.id, "src")?,
                dst: lookup(&c.dst, &c.id, "dst")?,
                bw: c.bw,
                max_delay: c.max_delay,
                min_pdr: c.min_pdr,
            });
        }
        VirtualRequest::new(doc.id.clone().unwrap_or_else(|| "request".into()), services, channels)
    }

    pub fn to_doc(&self) -> RequestDoc {
        RequestDoc {
            id: Some(self.id.clone()),
            services: self
                .services
                .iter()
                .map(|s| ServiceDoc {
                    id: s.id.clone(),
                    cpu: s.demand.cpu,
                    gpu: s.demand.gpu,
                    mem: s.demand.mem,
                    functionals: s.functionals.iter().cloned().collect(),
                })
                .collect(),
            channels: self
                .channels
                .iter()
                .map(|c| crate::schema::ChannelDoc {
                    id: c.id.clone(),
                    src: self.services[c.src.0].id.clone(),
                    dst: self.services[c.dst.0].id.clone(),
                    bw: c.bw,
                    max_delay: c.max_delay,
                    min_pdr: c.min_pdr,
                })
                .collect(),
        }
    }

    pub fn services(&self) -> &[NanoService] {
        &self.services
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn service(&self, idx: ServiceIdx) -> &NanoService {
        &self.services[idx.0]
    }

    pub fn channel(&self, idx: ChannelIdx) -> &Channel {
        &self.channels[idx.0]
    }

    pub fn total_demand(&self) -> Resources {
        self.services.iter().fold(Resources::ZERO, |acc, s| acc + s.demand)
    }

    pub fn total_bandwidth(&self) -> u64 {
        self.channels.iter().map(|c| c.bw as u64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reservation {
    Node { node: NodeIdx, amount: Resources },
    Link { link: LinkIdx, bw: u32 },
}

/// Ordered record of reservations; replaying it backwards restores the substrate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReservationLedger {
    entries: Vec<Reservation>,
}

impl ReservationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[Reservation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
