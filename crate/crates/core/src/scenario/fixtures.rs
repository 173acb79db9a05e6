//! The five-node walkthrough and the ten-node simulation substrate.

use crate::embedder::Coefficients;
use crate::netmodel::{
    Channel, NanoService, Resources, ServiceIdx, SubstrateBuilder, SubstrateNetwork, VirtualRequest,
};

/// Five-node substrate, three-service request and the walkthrough weights.
pub fn example_fixture() -> (SubstrateNetwork, VirtualRequest, Coefficients) {
    let mut b = SubstrateBuilder::new();
    b.node("n1", Resources::new(50, 20, 30));
    b.node("n2", Resources::new(20, 20, 50));
    b.node("n3", Resources::new(10, 10, 10));
    b.node("n4", Resources::new(10, 30, 30));
    b.node("n5", Resources::new(20, 10, 50));
    b.link("l1", "n1", "n2", 70, 10.0, 0.9);
    b.link("l2", "n1", "n3", 80, 10.0, 0.9);
    b.link("l3", "n2", "n4", 100, 10.0, 0.9);
    b.link("l4", "n3", "n4", 70, 10.0, 0.9);
    b.link("l5", "n3", "n5", 100, 20.0, 0.75);
    b.link("l6", "n4", "n5", 100, 20.0, 0.5);
    let net = b.build().expect("example substrate is valid");

    let services = vec![
        NanoService::new("s1", Resources::new(50, 20, 30)),
        NanoService::new("s2", Resources::new(10, 30, 20)),
        NanoService::new("s3", Resources::new(10, 0, 50)),
    ];
    let ch = |id: &str, src, dst, max_delay, min_pdr, bw| Channel {
        id: id.into(),
        src: ServiceIdx(src),
        dst: ServiceIdx(dst),
        bw,
        max_delay,
        min_pdr,
    };
    let channels = vec![
        ch("c1", 0, 1, 20.0, 0.6, 50),
        ch("c2", 0, 2, 50.0, 0.8, 30),
        ch("c3", 1, 2, 30.0, 0.8, 10),
    ];
    let req = VirtualRequest::new("example", services, channels).expect("example request is valid");
    (net, req, Coefficients::worked_example())
}

/// Ten-node, twenty-link substrate used by the Monte-Carlo evaluation.
pub fn simulation_substrate() -> SubstrateNetwork {
    const NODES: [(u32, u32, u32); 10] = [
        (71, 30, 89),
        (98, 41, 85),
        (92, 47, 69),
        (136, 45, 81),
        (67, 33, 71),
        (84, 30, 79),
        (77, 46, 85),
        (119, 50, 55),
        (72, 44, 97),
        (132, 36, 100),
    ];
    // (a, b, bw, d, ρ)
    const LINKS: [(usize, usize, u32, f64, f64); 20] = [
        (1, 2, 84, 2.0, 0.93),
        (1, 3, 90, 8.0, 0.99),
        (1, 4, 51, 7.0, 0.99),
        (2, 3, 59, 5.0, 0.90),
        (2, 4, 94, 10.0, 0.96),
        (2, 5, 87, 8.0, 0.91),
        (2, 6, 75, 3.0, 0.95),
        (3, 4, 56, 2.0, 0.92),
        (3, 7, 74, 6.0, 0.91),
        (3, 8, 76, 4.0, 0.95),
        (4, 5, 65, 10.0, 0.95),
        (4, 7, 52, 1.0, 0.94),
        (4, 8, 72, 4.0, 0.95),
        (4, 9, 54, 3.0, 0.93),
        (5, 6, 52, 8.0, 0.98),
        (5, 9, 84, 9.0, 0.92),
        (6, 9, 93, 8.0, 0.98),
        (6, 10, 56, 2.0, 0.96),
        (8, 9, 56, 9.0, 0.96),
        (9, 10, 74, 1.0, 0.90),
    ];
    let mut b = SubstrateBuilder::new();
    for (i, &(cpu, gpu, mem)) in NODES.iter().enumerate() {
        b.node(&format!("n{}", i + 1), Resources::new(cpu, gpu, mem));
    }
    for (i, &(a, z, bw, d, pdr)) in LINKS.iter().enumerate() {
        b.link(&format!("l{}", i + 1), &format!("n{a}"), &format!("n{z}"), bw, d, pdr);
    }
    b.build().expect("simulation substrate is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_values() {
        let (net, req, coeffs) = example_fixture();
        assert_eq!(
            net.node(net.node_by_id("n1").unwrap()).capacity(),
            Resources::new(50, 20, 30)
        );
        let l5 = net.link(net.link_by_id("l5").unwrap());
        assert_eq!((l5.delay, l5.pdr, l5.capacity()), (20.0, 0.75, 100));
        let c1 = &req.channels()[0];
        assert_eq!((c1.max_delay, c1.min_pdr, c1.bw), (20.0, 0.6, 50));
        assert_eq!(coeffs.gamma, 500.0);
    }

    #[test]
    fn simulation_substrate_values() {
        let net = simulation_substrate();
        assert_eq!((net.node_count(), net.link_count()), (10, 20));
        assert_eq!(
            net.node(net.node_by_id("n4").unwrap()).capacity(),
            Resources::new(136, 45, 81)
        );
        let l12 = net.link(net.link_by_id("l12").unwrap());
        assert_eq!(
            (net.node_id(l12.endpoints.0), net.node_id(l12.endpoints.1)),
            ("n4", "n7")
        );
        assert_eq!((l12.capacity(), l12.delay, l12.pdr), (52, 1.0, 0.94));
    }
}
