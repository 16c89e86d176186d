//! Discrete-time co-simulation of a DC microgrid whose distributed secondary
//! control runs over a jammable wireless network.
//!
//! The crate is `no_std` and only needs an allocator. It contains:
//!
//! * [`grid`]: quasi-static solve of parallel droop-controlled converters on a
//!   common DC bus, plus the seeded ADC noise model.
//! * [`wireless`]: geometric ad-hoc network, jammer silencing and local jam
//!   detection.
//! * [`secondary`]: robust broadcast gossip and the dual PI regulators that
//!   produce droop correction offsets.
//! * [`powertalk`]: the powerline side channel used to broadcast connectivity
//!   rows in TDMA slots.
//! * [`reconfig`]: component analysis of the connectivity matrix and
//!   construction of the replacement set of voltage-controlling units.
//! * [`sim`]: scenario configuration, the two-rate run loop, traces and the
//!   bit-error-rate tool.
//!
//! File formats and the command-line interface live in the `dcmg` crate.

#![no_std]

extern crate alloc;

pub mod grid;
pub mod powertalk;
pub mod reconfig;
pub mod rng;
pub mod secondary;
pub mod sim;
pub mod time;
pub mod wireless;

mod id;

pub use id::DerId;
pub use time::Micros;
