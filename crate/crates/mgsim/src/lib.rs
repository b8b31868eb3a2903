//! Deterministic mixed-signal simulation of cyber-physical power systems.
//!
//! The crate couples a static-scheduled discrete-time dataflow kernel
//! ([`tdf`]) with a fixed-step electrical linear network solver ([`eln`]).
//! On top of those sit reusable three-phase grid components ([`power`]),
//! discrete controller primitives ([`control`]), three packaged experiments
//! ([`scenario`]) and a TCP-based real-time plant/controller bridge ([`rt`]).

pub mod analysis;
pub mod config;
pub mod control;
pub mod eln;
pub mod io;
pub mod power;
pub mod rt;
pub mod scenario;
pub mod tdf;
pub mod waveform;
