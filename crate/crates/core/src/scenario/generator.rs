//! Random virtual requests and random mesh substrates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::netmodel::{
    Channel, NanoService, NodeIdx, Resources, ServiceIdx, SubstrateBuilder, SubstrateNetwork, VirtualRequest,
};

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

impl IntRange {
    pub const fn new(min: u32, max: u32) -> Self {
        IntRange { min, max }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.gen_range(self.min..=self.max)
    }

    pub fn contains(&self, v: u32) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub services: IntRange,
    pub cpu: IntRange,
    pub gpu: IntRange,
    /// Probability that a service asks for any GPU at all.
    pub gpu_probability: f64,
    pub mem: IntRange,
    pub channel_probability: f64,
    pub bandwidth: IntRange,
    pub delay: IntRange,
    /// Channel reliability is drawn from the open interval `(pdr_min, pdr_max)`.
    pub pdr_min: f64,
    pub pdr_max: f64,
    /// Draw a channel per ordered service pair instead of per unordered pair.
    pub ordered_pairs: bool,
    /// Give every channel-less service one channel to a random peer.
    pub connect_isolated: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            services: IntRange::new(2, 7),
            cpu: IntRange::new(1, 10),
            gpu: IntRange::new(1, 10),
            gpu_probability: 0.25,
            mem: IntRange::new(1, 5),
            channel_probability: 0.3,
            bandwidth: IntRange::new(1, 10),
            delay: IntRange::new(10, 50),
            pdr_min: 0.5,
            pdr_max: 1.0,
            ordered_pairs: false,
            connect_isolated: true,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ranges = [
            ("services", self.services),
            ("cpu", self.cpu),
            ("gpu", self.gpu),
            ("mem", self.mem),
            ("bandwidth", self.bandwidth),
            ("delay", self.delay),
        ];
        for (name, r) in ranges {
            if r.min > r.max {
                return Err(format!("generator.{name}: min exceeds max"));
            }
        }
        if self.services.min < 2 {
            return Err("generator.services: at least two services are required".into());
        }
        if self.bandwidth.min == 0 {
            return Err("generator.bandwidth: channels need positive bandwidth".into());
        }
        if self.delay.min == 0 {
            return Err("generator.delay: channels need positive delay".into());
        }
        for (name, p) in [
            ("gpu_probability", self.gpu_probability),
            ("channel_probability", self.channel_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("generator.{name}: must lie in [0, 1]"));
            }
        }
        if !(0.0 <= self.pdr_min && self.pdr_min < self.pdr_max && self.pdr_max <= 1.0) {
            return Err("generator.pdr_min/pdr_max: need 0 <= pdr_min < pdr_max <= 1".into());
        }
        Ok(())
    }

    fn sample_channel<R: Rng + ?Sized>(&self, rng: &mut R, id: String, src: usize, dst: usize) -> Channel {
        let bw = self.bandwidth.sample(rng);
        let max_delay = self.delay.sample(rng) as f64;
        let min_pdr = loop {
            let p = rng.gen_range(self.pdr_min..self.pdr_max);
            if p > self.pdr_min {
                break p;
            }
        };
        Channel {
            id,
            src: ServiceIdx(src),
            dst: ServiceIdx(dst),
            bw,
            max_delay,
            min_pdr,
        }
    }
}

/// Draws one request. The sequence of RNG draws is fixed: service count, then
/// per service (cpu, gpu gate, gpu if gated in, mem), then per pair (gate,
/// attributes if gated in), then fix-up channels.
pub fn generate_request<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig, id: impl Into<String>) -> VirtualRequest {
    let count = cfg.services.sample(rng) as usize;
    let services: Vec<NanoService> = (0..count)
        .map(|i| {
            let cpu = cfg.cpu.sample(rng);
            let gpu = if rng.gen_bool(cfg.gpu_probability) {
                cfg.gpu.sample(rng)
            } else {
                0
            };
            let mem = cfg.mem.sample(rng);
            NanoService::new(format!("s{}", i + 1), Resources::new(cpu, gpu, mem))
        })
        .collect();

    let mut channels = Vec::new();
    let next_id = |channels: &Vec<Channel>| format!("c{}", channels.len() + 1);
    for i in 0..count {
        for j in 0..count {
            let considered = if cfg.ordered_pairs { i != j } else { i < j };
            if considered && rng.gen_bool(cfg.channel_probability) {
                let c = cfg.sample_channel(rng, next_id(&channels), i, j);
                channels.push(c);
            }
        }
    }

    if cfg.connect_isolated {
        for i in 0..count {
            if channels.iter().any(|c| c.src.0 == i || c.dst.0 == i) {
                continue;
            }
            let mut peer = rng.gen_range(0..count - 1);
            if peer >= i {
                peer += 1;
            }
            let (src, dst) = (i.min(peer), i.max(peer));
            let c = cfg.sample_channel(rng, next_id(&channels), src, dst);
            channels.push(c);
        }
    }

    VirtualRequest::new(id, services, channels).expect("generated request is well formed")
}

/// Random geometric mesh with constant node density: `nodes` points in a
/// square of side `sqrt(nodes)`, linked when closer than the radius giving
/// roughly `mean_degree` neighbours. Capacities and link attributes follow the
/// ranges of the ten-node simulation substrate.
pub fn random_mesh_substrate<R: Rng + ?Sized>(rng: &mut R, nodes: usize, mean_degree: f64) -> SubstrateNetwork {
    let side = (nodes as f64).sqrt();
    let radius = (mean_degree / std::f64::consts::PI).sqrt();
    let points: Vec<(f64, f64)> = (0..nodes)
        .map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
        .collect();
    let mut b = SubstrateBuilder::new();
    for i in 0..nodes {
        let cap = Resources::new(rng.gen_range(50..=150), rng.gen_range(30..=50), rng.gen_range(50..=100));
        b.node(&format!("n{}", i + 1), cap);
    }
    let mut count = 0;
    for i in 0..nodes {
        for j in i + 1..nodes {
            let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
            if dx * dx + dy * dy <= radius * radius {
                count += 1;
                let bw = rng.gen_range(50..=100);
                let delay = rng.gen_range(1..=10) as f64;
                let pdr = rng.gen_range(0.9..0.99);
                b.link_between(&format!("l{count}"), NodeIdx(i), NodeIdx(j), bw, delay, pdr);
            }
        }
    }
    b.build().expect("random mesh is valid")
}
