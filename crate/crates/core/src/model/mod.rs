//! The analytical side: path algebra, slow-start flight schedules, the
//! birth-death sharing model, queue statistics, and the buffer sizing rule.

use thiserror::Error;

pub mod engset;
pub mod flights;
pub mod path;
pub mod queue;
pub mod record;
pub mod rule;

pub use engset::{aggregate_rates, engset_probabilities, solve_n_for_load, EngsetInputs, EngsetSolution};
pub use flights::{compute_flights, compute_flights_with_window, compute_on0, peak_rate, renormalize, FlightSchedule};
pub use path::{saturation_check, PathInputs, PathParams, Saturation};
pub use queue::{buffer_size, loss_rate, queue_stats, single_connection_queue_mean, QueueModel, SingleConnectionQueue};
pub use record::{evaluate, ModelInputs, ModelRecord};
pub use rule::{buffer_rule, BufferRuleOutcome, RulePoint, DEFAULT_FILE_SWEEP, DEFAULT_RTT_SWEEP_MS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(&'static str),
}
