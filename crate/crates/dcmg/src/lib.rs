//! File formats for the `dcmg` co-simulator: JSON scenarios, CSV traces and
//! decoded connectivity dumps.

pub mod scenario;
pub mod tracefile;

pub use scenario::{load_scenario, ScenarioError, BUILTIN};
pub use tracefile::{write_q_dump, write_trace};
