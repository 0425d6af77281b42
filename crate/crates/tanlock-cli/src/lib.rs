//! Scenario configuration, experiment runners and serialization for the
//! tanlock synthesizer simulator.

pub mod output;
pub mod runners;
pub mod scenario;

pub use runners::{oracle_divider, run_compare, run_lockrange, run_scenario};
pub use scenario::{load_scenario, Scenario};

/// Exit code for a completed, locked run.
pub const EXIT_OK: i32 = 0;
/// Exit code for I/O or configuration errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit code for a run that completed without locking.
pub const EXIT_UNLOCKED: i32 = 2;
