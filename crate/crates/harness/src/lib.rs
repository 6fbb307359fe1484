//! Benchmark harness for RDIS: runs RDIS and its baselines on generated or
//! file-based problems under evaluation, time and restart budgets, and
//! records best-value trajectories and summary tables.

pub mod algorithm;
pub mod bcd;
pub mod compare;
pub mod error;
pub mod problem;
pub mod run;
pub mod trajectory;

pub use algorithm::Algorithm;
pub use bcd::{bcd_minimize, bcd_sweeps};
pub use compare::{compare, CompareConfig, Comparison, TotalRow};
pub use error::{Error, Result};
pub use problem::{Family, Problem, ProblemSource, RestartStates};
pub use run::{run, run_problem, RunConfig, RunOutput, SummaryRow};
pub use trajectory::{Record, Trajectory};
