//! Experiment harness: scenario configuration, the receive-chain protocol,
//! parallel sweeps, and result persistence.
//!
//! Every sweep is a deterministic function of its configuration and a master
//! seed; records are canonically ordered so reruns are byte-identical aside
//! from wall-clock metadata.

pub mod config;
pub mod fit;
pub mod keyrate_sweep;
pub mod protocol;
pub mod records;
pub mod sweep;
