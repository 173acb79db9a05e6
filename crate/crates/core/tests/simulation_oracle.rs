//! Recomputes simulation rows from first principles and compares.

use qrpad_core::embed;
use qrpad_core::netmodel::VirtualRequest;
use qrpad_core::scenario::{
    iteration_pool, run_simulation_with, simulation_substrate, Execution, Metric, SimulationConfig,
};

fn config() -> SimulationConfig {
    SimulationConfig {
        iterations: 12,
        load_levels: vec![10, 30, 50],
        ..SimulationConfig::default()
    }
}

/// Quality-revenue key, written out directly.
fn key(r: &VirtualRequest, gamma: f64) -> f64 {
    let nodes: f64 = r
        .services()
        .iter()
        .map(|s| (s.demand.cpu + s.demand.gpu + s.demand.mem) as f64)
        .sum();
    let bw: f64 = r.channels().iter().map(|c| c.bw as f64).sum();
    let quality: f64 = r.channels().iter().map(|c| c.min_pdr / c.max_delay).sum();
    nodes + 3.0 * bw + gamma * quality
}

#[test]
fn raw_rows_match_a_direct_replay() {
    let cfg = config();
    let results = run_simulation_with(&cfg, Execution::Sequential);
    for row in &results.raw {
        let pool = iteration_pool(&cfg, row.iteration);
        let mut window: Vec<&VirtualRequest> = pool[..row.load].iter().collect();
        window.sort_by(|a, b| key(b, cfg.coefficients.gamma).total_cmp(&key(a, cfg.coefficients.gamma)));

        let mut net = simulation_substrate();
        let (mut accepted, mut revenue, mut cost) = (0usize, 0.0, 0.0);
        for req in window {
            if let Ok(e) = embed(&mut net, req, &cfg.coefficients) {
                accepted += 1;
                let demand: f64 = req
                    .services()
                    .iter()
                    .map(|s| (s.demand.cpu + s.demand.gpu + s.demand.mem) as f64)
                    .sum();
                let bw: f64 = req.channels().iter().map(|c| c.bw as f64).sum();
                let carried: f64 = req
                    .channels()
                    .iter()
                    .zip(e.routes())
                    .map(|(c, r)| c.bw as f64 * r.closure.links.len() as f64)
                    .sum();
                revenue += demand + 3.0 * bw;
                cost += demand + 3.0 * carried;
            }
        }
        assert_eq!(row.accepted, accepted, "iteration {} load {}", row.iteration, row.load);
        assert_eq!(row.blocked, row.load - accepted);
        assert!((row.revenue - revenue).abs() < 1e-9);
        assert!((row.cost - cost).abs() < 1e-9);
        assert_eq!(row.rc_ratio.is_some(), cost > 0.0);
        if let Some(rc) = row.rc_ratio {
            assert!((rc - revenue / cost).abs() < 1e-12);
        }
    }
}

#[test]
fn summary_matches_welford_over_raw_rows() {
    let cfg = config();
    let results = run_simulation_with(&cfg, Execution::default());
    for &load in &cfg.load_levels {
        for m in Metric::ALL {
            let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for r in results.raw.iter().filter(|r| r.load == load) {
                if let Some(x) = r.metric(m) {
                    n += 1.0;
                    let delta = x - mean;
                    mean += delta / n;
                    m2 += delta * (x - mean);
                }
            }
            let sd = if n > 1.0 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
            let row = results.summary_for(load, m).unwrap();
            assert!(
                (row.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0),
                "{load} {}",
                m.name()
            );
            assert!((row.stddev - sd).abs() <= 1e-9 * sd.max(1.0), "{load} {}", m.name());
        }
    }
}

#[test]
fn usage_means_are_consistent_with_capacities() {
    let cfg = config();
    let results = run_simulation_with(&cfg, Execution::default());
    for row in &results.node_usage {
        assert!(row.cpu_used_mean <= row.cpu_total as f64 + 1e-9);
        assert!(row.gpu_used_mean <= row.gpu_total as f64 + 1e-9);
        assert!(row.mem_used_mean <= row.mem_total as f64 + 1e-9);
    }
    for row in &results.link_usage {
        assert!(row.bw_used_mean <= row.bw_total as f64 + 1e-9);
    }
    // each accepted request hosts at least two services somewhere
    for &load in &cfg.load_levels {
        let hosted: f64 = results
            .node_usage
            .iter()
            .filter(|r| r.load == load)
            .map(|r| r.services_mean)
            .sum();
        let accepted: f64 = results
            .raw
            .iter()
            .filter(|r| r.load == load)
            .map(|r| r.accepted as f64)
            .sum::<f64>()
            / cfg.iterations as f64;
        assert!(
            hosted >= 2.0 * accepted - 1e-9,
            "load {load}: {hosted} services for {accepted} requests"
        );
    }
}
