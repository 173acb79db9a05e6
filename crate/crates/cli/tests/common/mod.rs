#![allow(dead_code)]

use qrpad_core::netmodel::{Resources, SubstrateBuilder, SubstrateNetwork};
use rand::Rng;

/// Random substrate with `2..=max_nodes` nodes, each pair linked with
/// probability `p`. Delays and reliabilities are continuous, so distance ties
/// have probability zero.
pub fn random_substrate<R: Rng>(rng: &mut R, max_nodes: usize, p: f64) -> SubstrateNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let mut b = SubstrateBuilder::new();
    for i in 0..n {
        let cap = Resources::new(rng.gen_range(0..=60), rng.gen_range(0..=30), rng.gen_range(0..=40));
        b.node(&format!("n{}", i + 1), cap);
    }
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                count += 1;
                b.link(
                    &format!("l{count}"),
                    &format!("n{}", i + 1),
                    &format!("n{}", j + 1),
                    rng.gen_range(1..=100),
                    rng.gen_range(1.0..10.0),
                    rng.gen_range(0.3..0.99),
                );
            }
        }
    }
    b.build().expect("random substrate is valid")
}

/// Random tree: node `i > 0` hangs off a uniformly chosen earlier node.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> SubstrateNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let mut b = SubstrateBuilder::new();
    for i in 0..n {
        b.node(&format!("n{}", i + 1), Resources::new(10, 10, 10));
    }
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        b.link(
            &format!("l{i}"),
            &format!("n{}", parent + 1),
            &format!("n{}", i + 1),
            50,
            rng.gen_range(1.0..10.0),
            rng.gen_range(0.3..0.99),
        );
    }
    b.build().expect("random tree is valid")
}

/// All-pairs link-cost distances by Floyd-Warshall, over links with at least
/// `bw` available.
pub fn floyd_distances(net: &SubstrateNetwork, bw: u32) -> Vec<Vec<f64>> {
    let n = net.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (_, l) in net.links() {
        if l.available() < bw {
            continue;
        }
        let (a, b) = (l.endpoints.0 .0, l.endpoints.1 .0);
        let c = l.delay / l.pdr;
        if c < d[a][b] {
            d[a][b] = c;
            d[b][a] = c;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Hyperlink cost plus weighted remaining cost for forwarders listed in
/// priority order as `(delay, pdr, remaining)`, written out term by term.
pub fn eatt_of(members: &[(f64, f64, f64)]) -> f64 {
    let mut fail = 1.0;
    for &(_, p, _) in members {
        fail *= 1.0 - p;
    }
    let pdr = 1.0 - fail;
    let delay = members.iter().map(|m| m.0).fold(0.0, f64::max);
    let mut weighted = 0.0;
    for (m, &(_, p, rest)) in members.iter().enumerate() {
        let mut miss = 1.0;
        for &(_, q, _) in &members[..m] {
            miss *= 1.0 - q;
        }
        weighted += p * miss / pdr * rest;
    }
    delay / pdr + weighted
}
