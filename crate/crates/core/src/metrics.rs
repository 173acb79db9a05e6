//! Acceptance, revenue, cost and utilization metrics over window outcomes.

use serde::Serialize;
use thiserror::Error;

use crate::embedder::{Coefficients, Embedding};
use crate::netmodel::{LinkIdx, NodeIdx, Resources, SubstrateNetwork, VirtualRequest};
use crate::windowing::WindowOutcome;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("window contains no requests")]
    EmptyWindow,
    #[error("embedding cost is zero; no request was accepted")]
    ZeroCost,
    #[error("substrate snapshots do not share a topology")]
    TopologyMismatch,
}

/// Demanded resources priced with `alpha` and `beta`.
pub fn revenue(req: &VirtualRequest, coeffs: &Coefficients) -> f64 {
    coeffs.alpha.price(req.total_demand()) + coeffs.beta * req.total_bandwidth() as f64
}

/// Consumed resources priced with `alpha_prime` and `beta_prime`; each channel
/// is charged once per link in its route.
pub fn cost(req: &VirtualRequest, embedding: &Embedding, coeffs: &Coefficients) -> f64 {
    let links: f64 = req
        .channels()
        .iter()
        .zip(embedding.routes())
        .map(|(c, r)| c.bw as f64 * r.link_count() as f64)
        .sum();
    coeffs.alpha_prime.price(req.total_demand()) + coeffs.beta_prime * links
}

/// `(acceptance, blocking)`.
pub fn ratios(outcome: &WindowOutcome) -> Result<(f64, f64), MetricsError> {
    if outcome.total() == 0 {
        return Err(MetricsError::EmptyWindow);
    }
    let acceptance = outcome.accepted_count() as f64 / outcome.total() as f64;
    Ok((acceptance, 1.0 - acceptance))
}

pub fn embedding_revenue(outcome: &WindowOutcome, requests: &[VirtualRequest], coeffs: &Coefficients) -> f64 {
    outcome.accepted().map(|(i, _)| revenue(&requests[i], coeffs)).sum()
}

pub fn embedding_cost(outcome: &WindowOutcome, requests: &[VirtualRequest], coeffs: &Coefficients) -> f64 {
    outcome.accepted().map(|(i, e)| cost(&requests[i], e, coeffs)).sum()
}

pub fn revenue_cost_ratio(
    outcome: &WindowOutcome,
    requests: &[VirtualRequest],
    coeffs: &Coefficients,
) -> Result<f64, MetricsError> {
    let c = embedding_cost(outcome, requests, coeffs);
    if c == 0.0 {
        return Err(MetricsError::ZeroCost);
    }
    Ok(embedding_revenue(outcome, requests, coeffs) / c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeUsage {
    pub node: NodeIdx,
    pub services: usize,
    pub used: Resources,
    pub total: Resources,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkUsage {
    pub link: LinkIdx,
    pub channels: usize,
    pub used: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageReport {
    pub nodes: Vec<NodeUsage>,
    pub links: Vec<LinkUsage>,
}

/// Resources consumed between two snapshots of the same substrate, with the
/// number of accepted services hosted on each node and channels crossing each link.
pub fn usage_report(
    before: &SubstrateNetwork,
    after: &SubstrateNetwork,
    outcome: &WindowOutcome,
) -> Result<UsageReport, MetricsError> {
    if !before.same_topology(after) {
        return Err(MetricsError::TopologyMismatch);
    }
    let mut services = vec![0usize; after.node_count()];
    let mut channels = vec![0usize; after.link_count()];
    for (_, e) in outcome.accepted() {
        for n in e.placement() {
            services[n.0] += 1;
        }
        for r in e.routes() {
            for l in &r.closure.links {
                channels[l.0] += 1;
            }
        }
    }
    let nodes = after
        .nodes()
        .map(|(i, n)| NodeUsage {
            node: i,
            services: services[i.0],
            used: before.node(i).available() - n.available(),
            total: n.capacity(),
        })
        .collect();
    let links = after
        .links()
        .map(|(i, l)| LinkUsage {
            link: i,
            channels: channels[i.0],
            used: before.link(i).available() - l.available(),
            total: l.capacity(),
        })
        .collect();
    Ok(UsageReport { nodes, links })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accepted: usize,
    pub blocked: usize,
    pub acceptance_ratio: f64,
    pub blocking_ratio: f64,
    pub revenue: f64,
    pub cost: f64,
    /// `None` when nothing was accepted.
    pub rc_ratio: Option<f64>,
    pub usage: UsageReport,
}

pub fn evaluate(
    before: &SubstrateNetwork,
    after: &SubstrateNetwork,
    requests: &[VirtualRequest],
    outcome: &WindowOutcome,
    coeffs: &Coefficients,
) -> Result<MetricsReport, MetricsError> {
    let (acceptance_ratio, blocking_ratio) = ratios(outcome)?;
    Ok(MetricsReport {
        accepted: outcome.accepted_count(),
        blocked: outcome.blocked_count(),
        acceptance_ratio,
        blocking_ratio,
        revenue: embedding_revenue(outcome, requests, coeffs),
        cost: embedding_cost(outcome, requests, coeffs),
        rc_ratio: revenue_cost_ratio(outcome, requests, coeffs).ok(),
        usage: usage_report(before, after, outcome)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::{embed, EmbedError, ResourceWeights};
    use crate::netmodel::{Channel, NanoService, ServiceIdx, SubstrateBuilder};
    use crate::scenario::example_fixture;
    use crate::windowing::{process_window, RequestStatus};
    use approx::assert_abs_diff_eq;

    fn blocked() -> RequestStatus {
        RequestStatus::Blocked(EmbedError::NoFeasiblePath { channel: "c".into() })
    }

    #[test]
    fn revenue_examples() {
        let (_, req, coeffs) = example_fixture();
        assert_eq!(revenue(&req, &coeffs), 310.0);
        let beta3 = Coefficients { beta: 3.0, ..coeffs };
        assert_eq!(revenue(&req, &beta3), 490.0);
        let empty = VirtualRequest::new("e", vec![], vec![]).unwrap();
        assert_eq!(revenue(&empty, &coeffs), 0.0);
    }

    #[test]
    fn cost_and_ratio_on_example() {
        let (mut net, req, coeffs) = example_fixture();
        let before = net.clone();
        let requests = [req];
        let out = process_window(&mut net, &requests, &coeffs);
        let emb = out.statuses[0].embedding().unwrap();
        assert_eq!(cost(&requests[0], emb, &coeffs), 510.0);
        assert_abs_diff_eq!(revenue_cost_ratio(&out, &requests, &coeffs).unwrap(), 310.0 / 510.0);
        assert_eq!(ratios(&out).unwrap(), (1.0, 0.0));

        let usage = usage_report(&before, &net, &out).unwrap();
        let n1 = &usage.nodes[0];
        assert_eq!((n1.services, n1.used.cpu, n1.total.cpu), (1, 50, 50));
        let n4 = &usage.nodes[3];
        assert_eq!(
            (n4.services, n4.used, n4.total),
            (1, Resources::new(10, 30, 20), Resources::new(10, 30, 30))
        );
        assert_eq!(
            (usage.links[1].used, usage.links[1].total, usage.links[1].channels),
            (80, 80, 2)
        );
        assert_eq!((usage.links[5].used, usage.links[5].total), (10, 100));
    }

    #[test]
    fn ratio_examples() {
        let (mut net, req, coeffs) = example_fixture();
        let mut out = process_window(&mut net, &[req], &coeffs);
        let accepted = out.statuses[0].clone();
        out.statuses = (0..10)
            .map(|i| if i < 9 { accepted.clone() } else { blocked() })
            .collect();
        out.order = (0..10).collect();
        let (a, b) = ratios(&out).unwrap();
        assert_abs_diff_eq!(a, 0.9);
        assert_abs_diff_eq!(a + b, 1.0);
        assert_eq!(ratios(&WindowOutcome::default()), Err(MetricsError::EmptyWindow));
    }

    #[test]
    fn empty_window_has_no_usage_and_no_ratio() {
        let (net, _, coeffs) = example_fixture();
        let out = WindowOutcome::default();
        let usage = usage_report(&net, &net, &out).unwrap();
        assert!(usage.nodes.iter().all(|n| n.services == 0 && n.used.is_zero()));
        assert!(usage.links.iter().all(|l| l.channels == 0 && l.used == 0));
        assert_eq!(revenue_cost_ratio(&out, &[], &coeffs), Err(MetricsError::ZeroCost));
    }

    #[test]
    fn topology_mismatch_is_rejected() {
        let (net, _, _) = example_fixture();
        let other = crate::scenario::simulation_substrate();
        assert_eq!(
            usage_report(&net, &other, &WindowOutcome::default()),
            Err(MetricsError::TopologyMismatch)
        );
    }

    fn pair_request(bw: u32) -> VirtualRequest {
        VirtualRequest::new(
            "p",
            vec![
                NanoService::new("a", Resources::new(4, 0, 0)),
                NanoService::new("b", Resources::new(4, 0, 0)),
            ],
            vec![Channel {
                id: "c".into(),
                src: ServiceIdx(0),
                dst: ServiceIdx(1),
                bw,
                max_delay: 50.0,
                min_pdr: 0.5,
            }],
        )
        .unwrap()
    }

    #[test]
    fn single_link_routes_give_unit_ratio_and_co_location_exceeds_it() {
        let coeffs = Coefficients {
            alpha: ResourceWeights::uniform(1.0),
            alpha_prime: ResourceWeights::uniform(1.0),
            beta: 2.0,
            beta_prime: 2.0,
            gamma: 10.0,
        };
        // two nodes that can each host only one service force a one-link route
        let mut b = SubstrateBuilder::new();
        b.node("x", Resources::new(5, 0, 5));
        b.node("y", Resources::new(5, 0, 5));
        b.link("l", "x", "y", 10, 1.0, 0.9);
        let mut net = b.build().unwrap();
        let req = [pair_request(3)];
        let out = process_window(&mut net, &req, &coeffs);
        assert_eq!(
            out.accepted()
                .next()
                .unwrap()
                .1
                .route(crate::netmodel::ChannelIdx(0))
                .link_count(),
            1
        );
        assert_abs_diff_eq!(revenue_cost_ratio(&out, &req, &coeffs).unwrap(), 1.0, epsilon = 1e-12);

        let mut b = SubstrateBuilder::new();
        b.node("x", Resources::new(50, 0, 50));
        let mut net = b.build().unwrap();
        let out = process_window(&mut net, &req, &coeffs);
        let emb = out.accepted().next().unwrap().1;
        assert_eq!(cost(&req[0], emb, &coeffs), 8.0);
        assert!(revenue_cost_ratio(&out, &req, &coeffs).unwrap() > 1.0);
    }

    #[test]
    fn cost_grows_with_route_length() {
        let (mut net, req, coeffs) = example_fixture();
        let emb = embed(&mut net, &req, &coeffs).unwrap();
        let node_term = coeffs.alpha_prime.price(req.total_demand());
        assert!(cost(&req, &emb, &coeffs) >= node_term);
    }
}
