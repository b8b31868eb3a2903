//! Real-time co-simulation bridge: framed TCP publish/subscribe relays,
//! wall-clock pacing to the simulation step, and interval statistics.

pub mod codec;
pub mod pacing;
pub mod relay;
pub mod split;

pub use codec::{decode, encode, CodecError, RelayMessage};
pub use pacing::{
    interval_stats, histogram, try_elevate_priority, IntervalLog, IntervalStats, Pacer, StatsError,
};
pub use relay::{Publisher, Subscriber};
