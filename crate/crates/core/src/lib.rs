//! Quality-revenue paired anypath embedding (QRPAD-VNE) of dataflow virtual
//! network requests onto wireless multi-hop substrates.
//!
//! The crate is organised bottom-up:
//!
//! - [`netmodel`]: substrate and request graphs, reservations and rollback
//! - [`anypath`]: destination pruning and expected-anypath-transmission-time routing
//! - [`embedder`]: channel-pair embedding of a single request
//! - [`windowing`]: ordering and embedding a window of requests
//! - [`metrics`]: acceptance, revenue, cost and utilization
//! - [`scenario`]: fixtures, request generation and the Monte-Carlo sweep

pub mod anypath;
pub mod embedder;
pub mod metrics;
pub mod netmodel;
pub mod scenario;
pub mod schema;
pub mod windowing;

pub use anypath::{AnypathRouteTable, PrunedDag, RouteClosure};
pub use embedder::{embed, Coefficients, EmbedError, Embedding};
pub use netmodel::{SubstrateNetwork, VirtualRequest};
pub use windowing::{process_window, WindowOutcome};
