//! The five-node walkthrough with its reference tables.

use std::io::Write;

use qrpad_core::embedder::pair_quality_revenue;
use qrpad_core::metrics::{cost, revenue};
use qrpad_core::netmodel::{ChannelIdx, Resources};
use qrpad_core::scenario::example_fixture;
use qrpad_core::{embed, Embedding, SubstrateNetwork, VirtualRequest};

use crate::{CliError, EXIT_INTERNAL, EXIT_OK};

/// EATT values are compared to this many units.
pub const EATT_TOLERANCE: f64 = 1e-3;

pub struct ExpectedRoute {
    pub channel: &'static str,
    pub eatt: f64,
    pub links: &'static [&'static str],
}

/// Processing order with each channel's pair quality-revenue.
pub const ORDER: [(&str, f64); 3] = [("c1", 225.0), ("c2", 198.0), ("c3", 143.333_333_333_333_3)];
pub const QUALITY_REVENUE_TOLERANCE: f64 = 1e-6;

pub const PLACEMENT: [(&str, &str); 3] = [("s1", "n1"), ("s2", "n4"), ("s3", "n5")];

pub const ROUTES: [ExpectedRoute; 3] = [
    ExpectedRoute {
        channel: "c1",
        eatt: 21.212,
        links: &["l1", "l2", "l3", "l4"],
    },
    ExpectedRoute {
        channel: "c2",
        eatt: 37.778,
        links: &["l2", "l5"],
    },
    ExpectedRoute {
        channel: "c3",
        eatt: 33.684,
        links: &["l4", "l5", "l6"],
    },
];

/// Residual (cpu, gpu, mem) per node after the walkthrough.
pub const NODE_RESIDUALS: [(&str, Resources); 5] = [
    ("n1", Resources::new(0, 0, 0)),
    ("n2", Resources::new(20, 20, 50)),
    ("n3", Resources::new(10, 10, 10)),
    ("n4", Resources::new(0, 0, 10)),
    ("n5", Resources::new(10, 10, 0)),
];

pub const LINK_RESIDUALS: [(&str, u32); 6] = [("l1", 20), ("l2", 0), ("l3", 50), ("l4", 10), ("l5", 60), ("l6", 90)];

pub const REVENUE: f64 = 310.0;
pub const COST: f64 = 510.0;

pub struct Walkthrough {
    pub net: SubstrateNetwork,
    pub request: VirtualRequest,
    pub embedding: Embedding,
    pub quality_revenue: Vec<f64>,
    pub revenue: f64,
    pub cost: f64,
}

pub fn walkthrough() -> Walkthrough {
    let (mut net, request, coeffs) = example_fixture();
    let embedding = embed(&mut net, &request, &coeffs).expect("walkthrough request embeds");
    Walkthrough {
        quality_revenue: request
            .channels()
            .iter()
            .map(|c| pair_quality_revenue(c, &request, &coeffs))
            .collect(),
        revenue: revenue(&request, &coeffs),
        cost: cost(&request, &embedding, &coeffs),
        net,
        request,
        embedding,
    }
}

/// Every difference between `w` and the reference tables.
pub fn mismatches(w: &Walkthrough) -> Vec<String> {
    let mut diffs = Vec::new();
    let (net, req, emb) = (&w.net, &w.request, &w.embedding);
    let order: Vec<&str> = emb.order().iter().map(|&c| req.channel(c).id.as_str()).collect();
    if order != ORDER.map(|(c, _)| c) {
        diffs.push(format!("channel order {order:?}, expected c1, c2, c3"));
    }
    for (i, (channel, qr)) in ORDER.iter().enumerate() {
        let got = w.quality_revenue[i];
        if req.channels()[i].id != *channel || (got - qr).abs() > QUALITY_REVENUE_TOLERANCE {
            diffs.push(format!("{channel}: pair quality-revenue {got}, expected {qr}"));
        }
    }
    for (i, (service, node)) in PLACEMENT.iter().enumerate() {
        let got = net.node_id(emb.placement()[i]);
        if req.services()[i].id != *service || got != *node {
            diffs.push(format!("{service}: placed on {got}, expected {node}"));
        }
    }
    for (i, exp) in ROUTES.iter().enumerate() {
        let route = emb.route(ChannelIdx(i));
        if (route.eatt - exp.eatt).abs() > EATT_TOLERANCE {
            diffs.push(format!(
                "{}: eatt {:.3}, expected {:.3}",
                exp.channel, route.eatt, exp.eatt
            ));
        }
        let links: Vec<&str> = route.closure.links.iter().map(|&l| net.link_id(l)).collect();
        if links != exp.links {
            diffs.push(format!("{}: links {:?}, expected {:?}", exp.channel, links, exp.links));
        }
    }
    for (id, expected) in NODE_RESIDUALS {
        let got = net.node_by_id(id).map(|n| net.node(n).available());
        if got != Some(expected) {
            diffs.push(format!("{id}: residual {got:?}, expected {expected}"));
        }
    }
    for (id, expected) in LINK_RESIDUALS {
        let got = net.link_by_id(id).map(|l| net.link(l).available());
        if got != Some(expected) {
            diffs.push(format!("{id}: residual bandwidth {got:?}, expected {expected}"));
        }
    }
    if w.revenue != REVENUE || w.cost != COST {
        diffs.push(format!(
            "revenue/cost {}/{}, expected {REVENUE}/{COST}",
            w.revenue, w.cost
        ));
    }
    diffs
}

pub fn run(out: &mut dyn Write) -> Result<i32, CliError> {
    let w = walkthrough();
    let diffs = mismatches(&w);
    print(&w, &diffs, out).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(if diffs.is_empty() { EXIT_OK } else { EXIT_INTERNAL })
}

fn print(w: &Walkthrough, diffs: &[String], out: &mut dyn Write) -> std::io::Result<()> {
    let (net, req, emb) = (&w.net, &w.request, &w.embedding);
    writeln!(out, "placement")?;
    for (s, &n) in req.services().iter().zip(emb.placement()) {
        writeln!(out, "  {} -> {}", s.id, net.node_id(n))?;
    }
    writeln!(out, "routes (processing order)")?;
    for &c in emb.order() {
        let r = emb.route(c);
        let links: Vec<&str> = r.closure.links.iter().map(|&l| net.link_id(l)).collect();
        writeln!(
            out,
            "  {}: quality-revenue {:.3}  {} => {}  eatt {:.3}  links {{{}}}{}",
            req.channel(c).id,
            w.quality_revenue[c.0],
            net.node_id(r.src_node),
            net.node_id(r.dst_node),
            r.eatt,
            links.join(", "),
            if r.reversed { "  (reversed)" } else { "" }
        )?;
    }
    writeln!(out, "residual nodes (cpu, gpu, mem)")?;
    for (_, n) in net.nodes() {
        writeln!(out, "  {}: {}", n.id, n.available())?;
    }
    writeln!(out, "residual link bandwidth")?;
    for (_, l) in net.links() {
        writeln!(out, "  {}: {}", l.id, l.available())?;
    }
    writeln!(
        out,
        "revenue {}  cost {}  R/C {:.4}",
        w.revenue,
        w.cost,
        w.revenue / w.cost
    )?;
    if diffs.is_empty() {
        writeln!(out, "reference check: ok")
    } else {
        for d in diffs {
            writeln!(out, "mismatch: {d}")?;
        }
        writeln!(out, "reference check: FAILED ({} mismatches)", diffs.len())
    }
}
