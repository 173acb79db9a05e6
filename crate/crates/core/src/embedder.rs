//! Per-request embedding: channel pairs are placed one at a time in
//! descending quality-revenue order, with the destination chosen by local PDR
//! and the source by the fewest anypath links under the channel's cost bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anypath::{anypath_routes, bandwidth_subgraph, prune, AnypathRouteTable, ClosureCounter, RouteClosure};
use crate::netmodel::{
    Channel, ChannelIdx, ModelError, NanoService, NodeIdx, ReservationLedger, Resources, ServiceIdx, SubstrateNetwork,
    VirtualRequest,
};

/// Per-resource weights for CPU, GPU and MEM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceWeights {
    pub cpu: f64,
    pub gpu: f64,
    pub mem: f64,
}

impl ResourceWeights {
    pub const fn uniform(w: f64) -> Self {
        ResourceWeights { cpu: w, gpu: w, mem: w }
    }

    pub fn price(&self, r: Resources) -> f64 {
        self.cpu * r.cpu as f64 + self.gpu * r.gpu as f64 + self.mem * r.mem as f64
    }
}

/// Revenue weights (`alpha`, `beta`), cost weights (`alpha_prime`,
/// `beta_prime`) and the quality-revenue weight `gamma`.
///
/// The default is the simulation setting: α = α' = 1, β = β' = 3, γ = 3000.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Coefficients {
    pub alpha: ResourceWeights,
    pub beta: f64,
    pub alpha_prime: ResourceWeights,
    pub beta_prime: f64,
    pub gamma: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients {
            alpha: ResourceWeights::uniform(1.0),
            beta: 3.0,
            alpha_prime: ResourceWeights::uniform(1.0),
            beta_prime: 3.0,
            gamma: 3000.0,
        }
    }
}

impl Coefficients {
    /// Weights used by the five-node walkthrough: α = β = 1, γ = 500.
    pub fn worked_example() -> Self {
        Coefficients {
            alpha: ResourceWeights::uniform(1.0),
            beta: 1.0,
            alpha_prime: ResourceWeights::uniform(1.0),
            beta_prime: 1.0,
            gamma: 500.0,
        }
    }

    /// Returns the name of the first negative or non-finite coefficient.
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("alpha.cpu", self.alpha.cpu),
            ("alpha.gpu", self.alpha.gpu),
            ("alpha.mem", self.alpha.mem),
            ("beta", self.beta),
            ("alpha_prime.cpu", self.alpha_prime.cpu),
            ("alpha_prime.gpu", self.alpha_prime.gpu),
            ("alpha_prime.mem", self.alpha_prime.mem),
            ("beta_prime", self.beta_prime),
            ("gamma", self.gamma),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, _)) => Err(format!("coefficient `{name}` must be a non-negative number")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("no substrate node can host service `{service}`")]
    NoSuitableNode { service: String },
    #[error("no route satisfies the cost bound of channel `{channel}`")]
    NoFeasiblePath { channel: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Route assigned to one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRoute {
    pub channel: ChannelIdx,
    pub src_node: NodeIdx,
    pub dst_node: NodeIdx,
    /// EATT of the selected node toward the routing destination.
    pub eatt: f64,
    /// Set when the route was computed toward the source service's node and
    /// is traversed against the forwarding direction.
    pub reversed: bool,
    pub closure: RouteClosure,
}

impl ChannelRoute {
    pub fn link_count(&self) -> usize {
        self.closure.links.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub request_id: String,
    placement: Vec<NodeIdx>,
    routes: Vec<ChannelRoute>,
    order: Vec<ChannelIdx>,
    ledger: ReservationLedger,
}

impl Embedding {
    pub fn node_of(&self, service: ServiceIdx) -> NodeIdx {
        self.placement[service.0]
    }

    pub fn placement(&self) -> &[NodeIdx] {
        &self.placement
    }

    /// Routes indexed by channel.
    pub fn routes(&self) -> &[ChannelRoute] {
        &self.routes
    }

    pub fn route(&self, channel: ChannelIdx) -> &ChannelRoute {
        &self.routes[channel.0]
    }

    /// Order in which channels were processed.
    pub fn order(&self) -> &[ChannelIdx] {
        &self.order
    }

    pub fn ledger(&self) -> &ReservationLedger {
        &self.ledger
    }

    /// Releases everything this embedding reserved.
    pub fn release(mut self, net: &mut SubstrateNetwork) {
        net.rollback(&mut self.ledger);
    }

    pub fn to_doc(&self, net: &SubstrateNetwork, req: &VirtualRequest) -> EmbeddingDoc {
        let node = |n: NodeIdx| net.node_id(n).to_string();
        EmbeddingDoc {
            request: self.request_id.clone(),
            placements: req
                .services()
                .iter()
                .zip(&self.placement)
                .map(|(s, &n)| PlacementDoc {
                    service: s.id.clone(),
                    node: node(n),
                })
                .collect(),
            channels: self
                .order
                .iter()
                .map(|&c| {
                    let r = &self.routes[c.0];
                    ChannelRouteDoc {
                        id: req.channel(c).id.clone(),
                        src_node: node(r.src_node),
                        dst_node: node(r.dst_node),
                        eatt: r.eatt,
                        reversed: r.reversed,
                        links: r.closure.links.iter().map(|&l| net.link_id(l).to_string()).collect(),
                        hyperlinks: r
                            .closure
                            .hyperlinks
                            .iter()
                            .map(|h| HyperlinkDoc {
                                transmitter: node(h.transmitter),
                                forwarders: h
                                    .forwarders
                                    .iter()
                                    .map(|f| crate::anypath::HopDoc {
                                        node: node(f.node),
                                        link: net.link_id(f.link).to_string(),
                                    })
                                    .collect(),
                            })
                            .collect(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingDoc {
    pub request: String,
    pub placements: Vec<PlacementDoc>,
    /// Channels in processing order.
    pub channels: Vec<ChannelRouteDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementDoc {
    pub service: String,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRouteDoc {
    pub id: String,
    pub src_node: String,
    pub dst_node: String,
    pub eatt: f64,
    pub reversed: bool,
    pub links: Vec<String>,
    pub hyperlinks: Vec<HyperlinkDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperlinkDoc {
    pub transmitter: String,
    pub forwarders: Vec<crate::anypath::HopDoc>,
}

/// Revenue of the two endpoint services and the channel, plus the weighted
/// reliability-to-delay quality term.
pub fn pair_quality_revenue(channel: &Channel, req: &VirtualRequest, coeffs: &Coefficients) -> f64 {
    let endpoints = req.service(channel.src).demand + req.service(channel.dst).demand;
    coeffs.alpha.price(endpoints) + coeffs.beta * channel.bw as f64 + coeffs.gamma * channel.quality()
}

/// Channels sorted by descending pair quality-revenue; ties keep request order.
pub fn channel_order(req: &VirtualRequest, coeffs: &Coefficients) -> Vec<ChannelIdx> {
    let keys: Vec<f64> = req
        .channels()
        .iter()
        .map(|c| pair_quality_revenue(c, req, coeffs))
        .collect();
    let mut order: Vec<ChannelIdx> = (0..keys.len()).map(ChannelIdx).collect();
    order.sort_by(|a, b| keys[b.0].total_cmp(&keys[a.0]));
    order
}

/// Suitable node with the highest local PDR; ties go to the smallest index.
pub fn select_max_pdr(net: &SubstrateNetwork, service: &NanoService) -> Result<NodeIdx, EmbedError> {
    let mut best: Option<(NodeIdx, f64)> = None;
    for n in net.suitable_nodes(service) {
        let pdr = net.local_pdr(n);
        if best.is_none_or(|(_, b)| pdr > b) {
            best = Some((n, pdr));
        }
    }
    best.map(|(n, _)| n).ok_or_else(|| EmbedError::NoSuitableNode {
        service: service.id.clone(),
    })
}

/// Candidate whose route closure uses the fewest links; ties by lower EATT,
/// then smaller index. Candidates must be reachable in `table`.
pub fn select_min_links(
    table: &AnypathRouteTable,
    net: &SubstrateNetwork,
    candidates: &[NodeIdx],
) -> Option<(NodeIdx, RouteClosure)> {
    let mut counter = ClosureCounter::default();
    let mut best: Option<(usize, f64, NodeIdx)> = None;
    for &n in candidates {
        let Some(links) = table.closure_link_count(n, &mut counter) else {
            continue;
        };
        let key = (links, table.cost(n), n);
        let better = match best {
            None => true,
            Some(cur) => key.0 < cur.0 || (key.0 == cur.0 && (key.1 < cur.1 || (key.1 == cur.1 && key.2 < cur.2))),
        };
        if better {
            best = Some(key);
        }
    }
    let (_, _, n) = best?;
    let closure = table.route_closure(n, net).expect("counted candidates are reachable");
    Some((n, closure))
}

/// Embeds `req` into `net`. On success the network carries every reservation
/// recorded in the returned embedding's ledger; on failure it is left exactly
/// as it was.
pub fn embed(net: &mut SubstrateNetwork, req: &VirtualRequest, coeffs: &Coefficients) -> Result<Embedding, EmbedError> {
    let mut ledger = ReservationLedger::new();
    match embed_inner(net, req, coeffs, &mut ledger) {
        Ok((placement, routes, order)) => Ok(Embedding {
            request_id: req.id.clone(),
            placement,
            routes,
            order,
            ledger,
        }),
        Err(e) => {
            net.rollback(&mut ledger);
            Err(e)
        }
    }
}

type Placed = (Vec<NodeIdx>, Vec<ChannelRoute>, Vec<ChannelIdx>);

fn embed_inner(
    net: &mut SubstrateNetwork,
    req: &VirtualRequest,
    coeffs: &Coefficients,
    ledger: &mut ReservationLedger,
) -> Result<Placed, EmbedError> {
    let mut placed: Vec<Option<NodeIdx>> = vec![None; req.services().len()];
    let mut routes: Vec<Option<ChannelRoute>> = vec![None; req.channels().len()];
    let order = channel_order(req, coeffs);

    for &ci in &order {
        let c = req.channel(ci);
        let (target, candidates, pending, reversed) = match (placed[c.src.0], placed[c.dst.0]) {
            (None, None) => {
                let dst_service = req.service(c.dst);
                let n_dst = select_max_pdr(net, dst_service)?;
                net.reserve_service(n_dst, dst_service, ledger)?;
                placed[c.dst.0] = Some(n_dst);
                (n_dst, net.suitable_nodes(req.service(c.src)), Some(c.src), false)
            }
            (None, Some(n_dst)) => (n_dst, net.suitable_nodes(req.service(c.src)), Some(c.src), false),
            (Some(n_src), None) => (n_src, net.suitable_nodes(req.service(c.dst)), Some(c.dst), true),
            (Some(n_src), Some(n_dst)) => (n_dst, vec![n_src], None, false),
        };
        if candidates.is_empty() {
            let service = pending.expect("placed endpoints always yield a candidate");
            return Err(EmbedError::NoSuitableNode {
                service: req.service(service).id.clone(),
            });
        }

        let table = {
            let view = bandwidth_subgraph(net, c.bw);
            anypath_routes(&prune(&view, target))
        };
        let bound = c.max_cost();
        let feasible: Vec<NodeIdx> = candidates.into_iter().filter(|&n| table.cost(n) <= bound).collect();
        let (chosen, closure) = select_min_links(&table, net, &feasible)
            .ok_or_else(|| EmbedError::NoFeasiblePath { channel: c.id.clone() })?;

        if let Some(service) = pending {
            net.reserve_service(chosen, req.service(service), ledger)?;
            placed[service.0] = Some(chosen);
        }
        net.reserve_channel(closure.links.iter().copied(), c.bw, ledger)?;
        routes[ci.0] = Some(ChannelRoute {
            channel: ci,
            src_node: placed[c.src.0].expect("source placed"),
            dst_node: placed[c.dst.0].expect("destination placed"),
            eatt: table.cost(chosen),
            reversed,
            closure,
        });
    }

    // services without any channel are otherwise never visited
    for (i, slot) in placed.iter_mut().enumerate() {
        if slot.is_none() {
            let service = &req.services()[i];
            let n = select_max_pdr(net, service)?;
            net.reserve_service(n, service, ledger)?;
            *slot = Some(n);
        }
    }

    Ok((
        placed.into_iter().map(|n| n.expect("every service placed")).collect(),
        routes.into_iter().map(|r| r.expect("every channel routed")).collect(),
        order,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Channel, SubstrateBuilder};
    use crate::scenario::example_fixture;
    use approx::assert_abs_diff_eq;

    fn node(net: &SubstrateNetwork, id: &str) -> NodeIdx {
        net.node_by_id(id).unwrap()
    }

    fn link_ids(net: &SubstrateNetwork, r: &ChannelRoute) -> Vec<String> {
        r.closure.links.iter().map(|&l| net.link_id(l).to_string()).collect()
    }

    #[test]
    fn pair_quality_revenue_examples() {
        let (_, req, coeffs) = example_fixture();
        let q: Vec<f64> = req
            .channels()
            .iter()
            .map(|c| pair_quality_revenue(c, &req, &coeffs))
            .collect();
        assert_abs_diff_eq!(q[0], 225.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q[1], 198.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q[2], 143.333_333_333, epsilon = 1e-6);

        let zero = VirtualRequest::new(
            "z",
            vec![
                NanoService::new("a", Resources::ZERO),
                NanoService::new("b", Resources::ZERO),
            ],
            vec![Channel {
                id: "c".into(),
                src: ServiceIdx(0),
                dst: ServiceIdx(1),
                bw: 7,
                max_delay: 10.0,
                min_pdr: 0.5,
            }],
        )
        .unwrap();
        let coeffs = Coefficients {
            beta: 2.5,
            gamma: 0.0,
            ..Coefficients::worked_example()
        };
        assert_eq!(pair_quality_revenue(&zero.channels()[0], &zero, &coeffs), 17.5);
    }

    #[test]
    fn worked_example_end_to_end() {
        let (mut net, req, coeffs) = example_fixture();
        let emb = embed(&mut net, &req, &coeffs).unwrap();
        let placed: Vec<&str> = emb.placement().iter().map(|&n| net.node_id(n)).collect();
        assert_eq!(placed, ["n1", "n4", "n5"]);
        assert_eq!(emb.order(), [ChannelIdx(0), ChannelIdx(1), ChannelIdx(2)]);
        assert_eq!(link_ids(&net, emb.route(ChannelIdx(0))), ["l1", "l2", "l3", "l4"]);
        assert_eq!(link_ids(&net, emb.route(ChannelIdx(1))), ["l2", "l5"]);
        assert_eq!(link_ids(&net, emb.route(ChannelIdx(2))), ["l4", "l5", "l6"]);

        assert_abs_diff_eq!(emb.route(ChannelIdx(0)).eatt, 21.212, epsilon = 1e-3);
        assert_abs_diff_eq!(emb.route(ChannelIdx(1)).eatt, 37.778, epsilon = 1e-3);
        // c3 routes toward the node of its destination service (n5), from n4
        assert_abs_diff_eq!(
            emb.route(ChannelIdx(2)).eatt,
            20.0 / 0.95 + (0.45 / 0.95) * (80.0 / 3.0),
            epsilon = 1e-9
        );
        assert!(emb.route(ChannelIdx(1)).reversed);
        assert!(!emb.route(ChannelIdx(0)).reversed);

        let avail = |id| net.node(node(&net, id)).available();
        assert_eq!(avail("n1"), Resources::new(0, 0, 0));
        assert_eq!(avail("n4"), Resources::new(0, 0, 10));
        assert_eq!(avail("n5"), Resources::new(10, 10, 0));
        let bw: Vec<u32> = net.links().map(|(_, l)| l.available()).collect();
        assert_eq!(bw, [20, 0, 50, 10, 60, 90]);
    }

    #[test]
    fn unmappable_service_leaves_substrate_untouched() {
        let (mut net, req, coeffs) = example_fixture();
        let before = net.clone();
        let mut doc = req.to_doc();
        doc.services[2].cpu = 1_000;
        let big = VirtualRequest::from_doc(&doc).unwrap();
        let err = embed(&mut net, &big, &coeffs).unwrap_err();
        assert_eq!(err, EmbedError::NoSuitableNode { service: "s3".into() });
        assert_eq!(net, before);
    }

    #[test]
    fn infeasible_cost_bound_rolls_back_partial_work() {
        let (mut net, req, coeffs) = example_fixture();
        let before = net.clone();
        let mut doc = req.to_doc();
        // c3 is processed last; a bound below any route cost fails after two channels succeeded
        doc.channels[2].max_delay = 1.0;
        let tight = VirtualRequest::from_doc(&doc).unwrap();
        let err = embed(&mut net, &tight, &coeffs).unwrap_err();
        assert_eq!(err, EmbedError::NoFeasiblePath { channel: "c3".into() });
        assert_eq!(net, before);
    }

    #[test]
    fn co_location_uses_no_links() {
        // only `big` fits either service, so both land on it with an empty route
        let mut b = SubstrateBuilder::new();
        b.node("big", Resources::new(10, 10, 10));
        b.node("small", Resources::new(1, 1, 1));
        b.link("l", "big", "small", 100, 1.0, 0.9);
        let mut net = b.build().unwrap();
        let req = VirtualRequest::new(
            "r",
            vec![
                NanoService::new("a", Resources::new(3, 0, 3)),
                NanoService::new("b", Resources::new(4, 0, 4)),
            ],
            vec![Channel {
                id: "c".into(),
                src: ServiceIdx(0),
                dst: ServiceIdx(1),
                bw: 5,
                max_delay: 10.0,
                min_pdr: 0.9,
            }],
        )
        .unwrap();
        let emb = embed(&mut net, &req, &Coefficients::default()).unwrap();
        assert_eq!(emb.placement(), [NodeIdx(0), NodeIdx(0)]);
        assert_eq!(emb.route(ChannelIdx(0)).link_count(), 0);
        assert_eq!(emb.route(ChannelIdx(0)).eatt, 0.0);
        assert_eq!(net.link(crate::netmodel::LinkIdx(0)).available(), 100);
        assert_eq!(net.node(NodeIdx(0)).available(), Resources::new(3, 10, 3));
    }

    #[test]
    fn isolated_services_are_placed_by_max_pdr() {
        let (mut net, _, coeffs) = example_fixture();
        let req = VirtualRequest::new("lonely", vec![NanoService::new("x", Resources::new(1, 1, 1))], vec![]).unwrap();
        let emb = embed(&mut net, &req, &coeffs).unwrap();
        // n1 and n2 tie at 0.9 local pdr; smallest index wins
        assert_eq!(net.node_id(emb.node_of(ServiceIdx(0))), "n1");
        emb.release(&mut net);
        assert_eq!(net, example_fixture().0);
    }

    #[test]
    fn max_pdr_selection() {
        let (net, req, _) = example_fixture();
        assert_eq!(select_max_pdr(&net, &req.services()[1]).unwrap(), node(&net, "n4"));
        let only = NanoService::new("only", Resources::new(50, 0, 0));
        assert_eq!(select_max_pdr(&net, &only).unwrap(), node(&net, "n1"));
        let none = NanoService::new("none", Resources::new(500, 0, 0));
        assert!(matches!(
            select_max_pdr(&net, &none),
            Err(EmbedError::NoSuitableNode { .. })
        ));
    }

    #[test]
    fn min_links_selection() {
        let (net, _, _) = example_fixture();
        let view = crate::anypath::SubgraphView::full(&net);
        let table = anypath_routes(&prune(&view, node(&net, "n4")));
        // n1 needs 4 links, n5 needs 3 (l6, l5, l4)
        let (pick, closure) = select_min_links(&table, &net, &[node(&net, "n1"), node(&net, "n5")]).unwrap();
        assert_eq!(net.node_id(pick), "n5");
        assert_eq!(closure.links.len(), 3);
        let (pick, closure) = select_min_links(&table, &net, &[node(&net, "n1"), node(&net, "n4")]).unwrap();
        assert_eq!(net.node_id(pick), "n4");
        assert!(closure.links.is_empty());
        // n2 and n3 both need one link; n2 and n3 tie on EATT too, smallest index wins
        let (pick, _) = select_min_links(&table, &net, &[node(&net, "n3"), node(&net, "n2")]).unwrap();
        assert_eq!(net.node_id(pick), "n2");
    }

    #[test]
    fn embedding_doc_lists_routes_in_processing_order() {
        let (mut net, req, coeffs) = example_fixture();
        let emb = embed(&mut net, &req, &coeffs).unwrap();
        let doc = serde_json::to_value(emb.to_doc(&net, &req)).unwrap();
        assert_eq!(doc["placements"][1], serde_json::json!({"service": "s2", "node": "n4"}));
        assert_eq!(doc["channels"][0]["links"], serde_json::json!(["l1", "l2", "l3", "l4"]));
        assert_eq!(doc["channels"][0]["hyperlinks"][0]["transmitter"], "n1");
        assert_eq!(doc["channels"][1]["reversed"], true);
    }

    #[test]
    fn coefficient_validation_names_field() {
        let mut c = Coefficients::default();
        assert!(c.validate().is_ok());
        c.beta_prime = -1.0;
        assert!(c.validate().unwrap_err().contains("beta_prime"));
    }
}
