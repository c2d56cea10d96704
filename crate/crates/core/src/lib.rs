//! TCP-Engset toolkit: an analytical model of superposed ON-OFF TCP file
//! transfers sharing a multiplexing link, and a deterministic packet-level
//! simulator of the same dumbbell network to validate it against.
//!
//! The `model` module computes per-connection rates, durations, state
//! probabilities, queue statistics and buffer sizes. `netsim` runs the
//! matching discrete-event simulation with a NewReno-style TCP from `tcp`.
//! `harness` drives model-vs-simulation sweeps and comparison reports.

pub mod dist;
pub mod model;
pub mod netsim;
pub mod tcp;
pub mod units;

pub use units::Nanos;
