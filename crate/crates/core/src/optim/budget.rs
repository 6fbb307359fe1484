use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

/// Shared evaluation counters and limits.
///
/// One term evaluation is one unit whether or not its gradient is also
/// computed; the evaluation limit applies to that unit.
#[derive(Debug)]
pub struct Budget {
    term_evals: AtomicU64,
    value_calls: AtomicU64,
    grad_calls: AtomicU64,
    bound_evals: AtomicU64,
    lattice_points: AtomicU64,
    eval_limit: Option<u64>,
    deadline: Option<Instant>,
    started: Instant,
}

/// Plain copy of the counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub term_evals: u64,
    pub value_calls: u64,
    pub grad_calls: u64,
    pub bound_evals: u64,
    pub lattice_points: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget::unlimited()
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            term_evals: AtomicU64::new(0),
            value_calls: AtomicU64::new(0),
            grad_calls: AtomicU64::new(0),
            bound_evals: AtomicU64::new(0),
            lattice_points: AtomicU64::new(0),
            eval_limit: None,
            deadline: None,
            started: Instant::now(),
        }
    }

    pub fn with_eval_limit(mut self, limit: u64) -> Self {
        self.eval_limit = Some(limit);
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.deadline = Some(self.started + limit);
        self
    }

    pub fn eval_limit(&self) -> Option<u64> {
        self.eval_limit
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn exhausted(&self) -> bool {
        if let Some(limit) = self.eval_limit {
            if self.term_evals.load(Ordering::Relaxed) >= limit {
                return true;
            }
        }
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub(crate) fn add_value(&self, terms: usize) {
        self.value_calls.fetch_add(1, Ordering::Relaxed);
        self.term_evals.fetch_add(terms as u64, Ordering::Relaxed);
    }

    pub(crate) fn add_grad(&self, terms: usize) {
        self.grad_calls.fetch_add(1, Ordering::Relaxed);
        self.term_evals.fetch_add(terms as u64, Ordering::Relaxed);
    }

    pub(crate) fn add_terms(&self, terms: usize) {
        self.term_evals.fetch_add(terms as u64, Ordering::Relaxed);
    }

    pub(crate) fn add_bounds(&self, n: usize) {
        self.bound_evals.fetch_add(n as u64, Ordering::Relaxed);
    }

    pub(crate) fn add_lattice(&self, n: u64) {
        self.lattice_points.fetch_add(n, Ordering::Relaxed);
    }

    pub fn term_evals(&self) -> u64 {
        self.term_evals.load(Ordering::Relaxed)
    }

    pub fn counts(&self) -> Counts {
        Counts {
            term_evals: self.term_evals.load(Ordering::Relaxed),
            value_calls: self.value_calls.load(Ordering::Relaxed),
            grad_calls: self.grad_calls.load(Ordering::Relaxed),
            bound_evals: self.bound_evals.load(Ordering::Relaxed),
            lattice_points: self.lattice_points.load(Ordering::Relaxed),
        }
    }
}
