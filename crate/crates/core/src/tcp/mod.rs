//! Packet-granular TCP endpoints driven by the simulator's event loop.

pub mod receiver;
pub mod rto;
pub mod sender;

pub use receiver::Receiver;
pub use rto::{RtoEstimator, DEFAULT_MIN_RTO_NS, MAX_RTO_NS};
pub use sender::{Actions, ConnStats, RecoveryEpisode, SendItem, TcpSender, TimeoutEvent, TimeoutKind};
