//! Energy-aware uplink routing for multi-hop relay networks.
//!
//! The crate models a single-cell relay network (one BS, transparent and
//! non-transparent relays, mobile stations), a physical layer built on the
//! SUI path-loss model with MCS-dependent transmit power, and two routers
//! evaluated over the same energy model: a bee-colony optimizer ([`bco`])
//! and a hop-constrained Dijkstra baseline ([`baseline`]). The [`simulator`]
//! runs either router frame by frame and [`sweep`] drives parameter sweeps.

pub mod baseline;
pub mod bco;
pub mod channel;
pub mod config;
pub mod energy;
pub mod radio;
pub mod report;
pub mod rng;
pub mod routing;
pub mod simulator;
pub mod sweep;
pub mod topology;
