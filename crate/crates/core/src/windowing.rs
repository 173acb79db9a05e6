//! Window assignment: requests collected over one window are embedded in
//! descending request-level quality-revenue order.

use crate::embedder::{embed, Coefficients, EmbedError, Embedding};
use crate::metrics::revenue;
use crate::netmodel::{SubstrateNetwork, VirtualRequest};

/// Revenue plus `γ · Σ ρ/d` over the request's channels.
pub fn request_quality_revenue(req: &VirtualRequest, coeffs: &Coefficients) -> f64 {
    revenue(req, coeffs) + coeffs.gamma * req.channels().iter().map(|c| c.quality()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestStatus {
    Accepted(Embedding),
    Blocked(EmbedError),
}

impl RequestStatus {
    pub fn embedding(&self) -> Option<&Embedding> {
        match self {
            RequestStatus::Accepted(e) => Some(e),
            RequestStatus::Blocked(_) => None,
        }
    }
}

/// Result of one window. `statuses[i]` belongs to the i-th submitted request.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowOutcome {
    pub order: Vec<usize>,
    pub statuses: Vec<RequestStatus>,
}

impl WindowOutcome {
    pub fn total(&self) -> usize {
        self.statuses.len()
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted().count()
    }

    pub fn blocked_count(&self) -> usize {
        self.total() - self.accepted_count()
    }

    /// Accepted embeddings with their request position, in processing order.
    pub fn accepted(&self) -> impl Iterator<Item = (usize, &Embedding)> {
        self.order
            .iter()
            .filter_map(|&i| self.statuses[i].embedding().map(|e| (i, e)))
    }
}

/// Request positions sorted by descending quality-revenue, ties by arrival.
pub fn window_order(requests: &[VirtualRequest], coeffs: &Coefficients) -> Vec<usize> {
    let keys: Vec<f64> = requests.iter().map(|r| request_quality_revenue(r, coeffs)).collect();
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
    order
}

pub fn process_window(net: &mut SubstrateNetwork, requests: &[VirtualRequest], coeffs: &Coefficients) -> WindowOutcome {
    let order = window_order(requests, coeffs);
    let mut statuses: Vec<Option<RequestStatus>> = vec![None; requests.len()];
    for &i in &order {
        statuses[i] = Some(match embed(net, &requests[i], coeffs) {
            Ok(e) => RequestStatus::Accepted(e),
            Err(e) => RequestStatus::Blocked(e),
        });
    }
    WindowOutcome {
        order,
        statuses: statuses
            .into_iter()
            .map(|s| s.expect("every request processed"))
            .collect(),
    }
}
