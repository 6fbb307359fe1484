//! Subspace optimizers: grid search, conjugate gradient descent, and
//! Levenberg–Marquardt, each usable alone or under a multi-start wrapper.

mod budget;
mod cgd;
mod config;
mod grid;
mod lm;
mod multistart;
mod rng;
mod subspace;

pub use budget::{Budget, Counts};
pub use cgd::{cgd_descent, cgd_minimize};
pub use config::{OptimizerConfig, OptimizerKind};
pub use grid::{grid_search, Lattice};
pub use lm::lm_minimize;
pub use multistart::{multi_start, run_inner};
pub use rng::RngStream;
pub use subspace::{SearchBox, Subspace};

/// One accepted line-search step.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmijoStep<T> {
    pub f_before: T,
    pub f_after: T,
    pub alpha: T,
    /// Directional derivative along the search direction.
    pub slope: T,
    pub c: f64,
}

impl<T: crate::Scalar> ArmijoStep<T> {
    pub fn satisfies_armijo(&self) -> bool {
        self.f_after <= self.f_before + T::of(self.c) * self.alpha * self.slope
    }
}

/// Outcome of an optimizer run over a subset of variables. `point` follows
/// the subset's order.
#[derive(Clone, Debug, PartialEq)]
pub struct OptResult<T> {
    pub value: T,
    pub point: Vec<T>,
    pub iterations: usize,
    /// Objective evaluations, with or without gradient.
    pub evaluations: u64,
    pub grad_evals: u64,
    pub converged: bool,
    pub restarts_used: usize,
    /// Gradient norm at the starting point, for descent methods.
    pub start_grad_norm: Option<T>,
    pub steps: Vec<ArmijoStep<T>>,
}
