//! Scenario description and the two-rate run loop.
//!
//! Outside PTCh windows the bus is solved once per secondary period. Inside a
//! window secondary control is frozen and the bus is solved per power-talk
//! slot; the trace keeps one row per period plus one row per event.

mod ber;
mod engine;
pub mod presets;
mod scenario;
mod trace;

pub use ber::{analytic_ber, ber_tool, ber_with, q_function, BerReport, BerSetup, SymbolLevels};
pub use engine::{run, PtchReport, SimError, SimOutput};
pub use scenario::{
    validate, LoadConfig, LoadStep, NetworkConfig, ScenarioConfig, TimingConfig, UnitSpec, Violation,
    LINE_RESISTANCE_RANGE,
};
pub use trace::{smooth_trace, AlarmReason, Event, Safety, TraceRecord};
