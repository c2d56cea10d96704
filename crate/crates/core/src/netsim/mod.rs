//! Packet-level simulator of the dumbbell network the model describes.

pub mod engine;
pub mod event;
pub mod metrics;
pub mod scenario;

pub use engine::run_scenario;
pub use metrics::{ConnRecord, DropReport, QueueDistributions, SimMetrics, TimeoutRecord};
pub use scenario::{FileSizes, RoundTrip, Scenario, ScenarioError};
