//! Monte-Carlo sweep over window loads.
//!
//! Each iteration owns an independent random stream: a ChaCha8 generator keyed
//! by the master seed, positioned on stream number `iteration`
//! (`ChaCha8Rng::seed_from_u64(seed)` followed by `set_stream(iteration)`).
//! It draws a pool of requests once and every load level embeds a prefix of
//! that pool into a fresh substrate copy. Iterations are independent, so they
//! run in parallel when the `parallel` feature is on; results are reduced in
//! iteration order either way and do not depend on the execution mode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{example_fixture, generate_request, simulation_substrate, GeneratorConfig};
use crate::embedder::Coefficients;
use crate::metrics::{evaluate, MetricsReport};
use crate::netmodel::{SubstrateNetwork, VirtualRequest};
use crate::windowing::process_window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstrateFixture {
    /// Ten-node, twenty-link simulation substrate.
    Simulation,
    /// Five-node walkthrough substrate.
    Example,
}

impl SubstrateFixture {
    pub fn build(self) -> SubstrateNetwork {
        match self {
            SubstrateFixture::Simulation => simulation_substrate(),
            SubstrateFixture::Example => example_fixture().0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub substrate: SubstrateFixture,
    pub load_levels: Vec<usize>,
    pub iterations: usize,
    pub seed: u64,
    pub coefficients: Coefficients,
    pub pool_size: usize,
    pub generator: GeneratorConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            substrate: SubstrateFixture::Simulation,
            load_levels: vec![10, 20, 30, 40, 50],
            iterations: 100,
            seed: 42,
            coefficients: Coefficients::default(),
            pool_size: 50,
            generator: GeneratorConfig::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations == 0 {
            return Err("iterations: must be at least 1".into());
        }
        if self.load_levels.is_empty() {
            return Err("load_levels: at least one load level is required".into());
        }
        if let Some(l) = self.load_levels.iter().find(|&&l| l == 0 || l > self.pool_size) {
            return Err(format!("load_levels: {l} is outside 1..={}", self.pool_size));
        }
        self.coefficients.validate()?;
        self.generator.validate()
    }
}

/// Defaults to `Parallel` when the `parallel` feature is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AcceptanceRatio,
    Revenue,
    Cost,
    RcRatio,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::AcceptanceRatio, Metric::Revenue, Metric::Cost, Metric::RcRatio];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AcceptanceRatio => "acceptance_ratio",
            Metric::Revenue => "revenue",
            Metric::Cost => "cost",
            Metric::RcRatio => "rc_ratio",
        }
    }
}

/// One row per (iteration, load).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub iteration: usize,
    pub load: usize,
    pub accepted: usize,
    pub blocked: usize,
    pub acceptance_ratio: f64,
    pub revenue: f64,
    pub cost: f64,
    pub rc_ratio: Option<f64>,
}

impl RawRow {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::AcceptanceRatio => Some(self.acceptance_ratio),
            Metric::Revenue => Some(self.revenue),
            Metric::Cost => Some(self.cost),
            Metric::RcRatio => self.rc_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub load: usize,
    pub metric: Metric,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeUsageRow {
    pub load: usize,
    pub node: String,
    pub services_mean: f64,
    pub cpu_used_mean: f64,
    pub cpu_total: u32,
    pub gpu_used_mean: f64,
    pub gpu_total: u32,
    pub mem_used_mean: f64,
    pub mem_total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkUsageRow {
    pub load: usize,
    pub link: String,
    pub channels_mean: f64,
    pub bw_used_mean: f64,
    pub bw_total: u32,
}

/// Aggregated sweep results.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationResults {
    pub raw: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
    pub node_usage: Vec<NodeUsageRow>,
    pub link_usage: Vec<LinkUsageRow>,
}

impl SimulationResults {
    pub fn summary_for(&self, load: usize, metric: Metric) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.load == load && r.metric == metric)
    }
}

/// Arithmetic mean and sample standard deviation (0 for a single sample).
pub fn mean_and_stddev(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Request pool of one iteration.
pub fn iteration_pool(cfg: &SimulationConfig, iteration: usize) -> Vec<VirtualRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(iteration as u64);
    (0..cfg.pool_size)
        .map(|k| generate_request(&mut rng, &cfg.generator, format!("vnr{}", k + 1)))
        .collect()
}

fn run_iteration(cfg: &SimulationConfig, base: &SubstrateNetwork, iteration: usize) -> Vec<MetricsReport> {
    let pool = iteration_pool(cfg, iteration);
    cfg.load_levels
        .iter()
        .map(|&load| {
            let mut net = base.clone();
            let window = &pool[..load];
            let outcome = process_window(&mut net, window, &cfg.coefficients);
            evaluate(base, &net, window, &outcome, &cfg.coefficients).expect("load levels are non-empty")
        })
        .collect()
}

pub fn run_simulation(cfg: &SimulationConfig) -> SimulationResults {
    run_simulation_with(cfg, Execution::default())
}

/// Runs the sweep. Panics if `cfg` does not validate.
pub fn run_simulation_with(cfg: &SimulationConfig, exec: Execution) -> SimulationResults {
    if let Err(e) = cfg.validate() {
        panic!("invalid simulation config: {e}");
    }
    let base = cfg.substrate.build();
    let per_iteration: Vec<Vec<MetricsReport>> = match exec {
        Execution::Sequential => (0..cfg.iterations).map(|i| run_iteration(cfg, &base, i)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..cfg.iterations)
            .into_par_iter()
            .map(|i| run_iteration(cfg, &base, i))
            .collect(),
    };
    aggregate(cfg, &base, &per_iteration)
}

fn aggregate(cfg: &SimulationConfig, base: &SubstrateNetwork, reports: &[Vec<MetricsReport>]) -> SimulationResults {
    let mut results = SimulationResults::default();
    for (iteration, per_load) in reports.iter().enumerate() {
        for (&load, r) in cfg.load_levels.iter().zip(per_load) {
            results.raw.push(RawRow {
                iteration,
                load,
                accepted: r.accepted,
                blocked: r.blocked,
                acceptance_ratio: r.acceptance_ratio,
                revenue: r.revenue,
                cost: r.cost,
                rc_ratio: r.rc_ratio,
            });
        }
    }

    let iterations = reports.len() as f64;
    for (li, &load) in cfg.load_levels.iter().enumerate() {
        let rows: Vec<&RawRow> = results.raw.iter().filter(|r| r.load == load).collect();
        for m in Metric::ALL {
            let samples: Vec<f64> = rows.iter().filter_map(|r| r.metric(m)).collect();
            let (mean, stddev) = mean_and_stddev(&samples);
            results.summary.push(SummaryRow {
                load,
                metric: m,
                mean,
                stddev,
            });
        }

        let usage = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(|r| f(&r[li])).sum::<f64>() / iterations;
        for (ni, node) in base.nodes() {
            let cap = node.capacity();
            results.node_usage.push(NodeUsageRow {
                load,
                node: node.id.clone(),
                services_mean: usage(&|r| r.usage.nodes[ni.0].services as f64),
                cpu_used_mean: usage(&|r| r.usage.nodes[ni.0].used.cpu as f64),
                cpu_total: cap.cpu,
                gpu_used_mean: usage(&|r| r.usage.nodes[ni.0].used.gpu as f64),
                gpu_total: cap.gpu,
                mem_used_mean: usage(&|r| r.usage.nodes[ni.0].used.mem as f64),
                mem_total: cap.mem,
            });
        }
        for (li_, link) in base.links() {
            results.link_usage.push(LinkUsageRow {
                load,
                link: link.id.clone(),
                channels_mean: usage(&|r| r.usage.links[li_.0].channels as f64),
                bw_used_mean: usage(&|r| r.usage.links[li_.0].used as f64),
                bw_total: link.capacity(),
            });
        }
    }
    results
}
