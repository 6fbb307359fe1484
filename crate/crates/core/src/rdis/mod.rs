//! Recursive decomposition: pick a block of variables whose assignment
//! splits the function, optimize that block, drop terms that have become
//! nearly constant, and recurse on the independent pieces that remain.

mod config;
mod engine;
mod simplify;
mod stats;

pub use config::{RdisConfig, Selection};
pub use engine::{choose_vars, decompose, rdis, BestRecord, Rdis, RdisRun, SimplifyEvent};
pub use simplify::{simplify, RemovedTerm, SimplifiedFunction};
pub use stats::{RecursionStats, RunTotals};

/// Per-node counters of a finished run.
pub fn stats_report<T>(run: &RdisRun<T>) -> &RecursionStats {
    &run.stats
}

#[cfg(test)]
mod tests;
