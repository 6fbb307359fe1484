use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Grid,
    Cgd,
    Lm,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Grid => "grid",
            OptimizerKind::Cgd => "cgd",
            OptimizerKind::Lm => "lm",
        }
    }
}

/// Settings shared by the subspace optimizers. Real-valued fields are `f64`
/// regardless of the scalar type being optimized.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// Lattice points per dimension for grid search.
    pub grid_points: usize,
    /// Stop once the gradient norm is at or below this.
    pub grad_tol: f64,
    /// Iteration cap for one descent run.
    pub max_iters: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo_c: f64,
    /// Step shrink factor when backtracking.
    pub backtrack: f64,
    /// Forcing parameter: a descent invoked with a reference gradient norm
    /// stops once its own gradient norm falls to `eta` times that reference.
    /// Zero disables the test.
    pub eta: f64,
    /// Starts for multi-start runs (the first start is the given state).
    pub restarts: usize,
    /// Iteration cap used when a descent is called for value selection
    /// inside the recursion.
    pub early_stop: usize,
    /// Relative decrease below which a run counts as making no progress.
    pub progress_tol: f64,
    /// Half-width of the restart-sampling box around the initial state for
    /// variables with unbounded domains.
    pub sample_half_width: f64,
    /// Record every accepted line-search step.
    pub log_steps: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Cgd,
            grid_points: 11,
            grad_tol: 1e-8,
            max_iters: 1000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            eta: 0.0,
            restarts: 1,
            early_stop: 25,
            progress_tol: 1e-8,
            sample_half_width: 1.0,
            log_steps: false,
        }
    }
}

impl OptimizerConfig {
    pub fn with_kind(kind: OptimizerKind) -> Self {
        OptimizerConfig {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2");
        }
        if !(self.grad_tol >= 0.0) {
            return bad("grad_tol must be non-negative");
        }
        if self.max_iters == 0 || self.early_stop == 0 {
            return bad("iteration caps must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.eta) {
            return bad("eta must lie in [0, 1)");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.progress_tol >= 0.0) {
            return bad("progress_tol must be non-negative");
        }
        if !(self.sample_half_width > 0.0 && self.sample_half_width.is_finite()) {
            return bad("sample_half_width must be positive");
        }
        Ok(())
    }
}
