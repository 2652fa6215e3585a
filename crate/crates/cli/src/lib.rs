//! Scenario runner and result persistence behind the `mclab` command line.
//!
//! A [`Scenario`] names a kernel family, a grid of sizes and trials, and the
//! analyses to run; [`run`] executes it into a [`ResultSet`], which [`emit`]
//! writes as CSV, JSON or plot data.

pub mod builtin;
pub mod emit;
pub mod results;
pub mod runner;
pub mod scenario;

pub use builtin::{builtin, BUILTIN_NAMES};
pub use emit::{emit, Format};
pub use results::{Check, ResultSet, Row, Series, SummaryStat};
pub use runner::{run, run_bytes, run_scenario, RunError, RunOptions};
pub use scenario::{Analysis, Generator, Horizon, Mode, Scenario, ScenarioError};
