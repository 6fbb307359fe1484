use crate::error::{Error, Result};
use crate::optim::OptimizerConfig;

/// How the assigned block `x_C` is picked at each recursion node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Selection {
    /// Cutset of a balanced hypergraph partition.
    Partition,
    /// Uniformly random variables, as many as the partition cutset has.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdisConfig {
    /// Terms whose bounds are at most `2 * epsilon` wide become constants.
    pub epsilon: f64,
    /// Nodes with at most this many variables are optimized directly.
    pub d_min: usize,
    /// Parts per partition.
    pub parts: usize,
    /// Allowed partition imbalance.
    pub balance: f64,
    /// Starts of the value loop at every node, the first from the inherited
    /// state. In base cases this is the multi-start restart count.
    pub restarts: usize,
    /// Consecutive values without progress before a node gives up.
    pub patience: usize,
    /// Cap on value-loop rounds at one node.
    pub max_rounds: usize,
    /// Relative decrease below which a round counts as making no progress.
    pub progress_tol: f64,
    pub selection: Selection,
    /// Reuse cutsets for nodes with the same variables and terms.
    pub cache_partitions: bool,
    /// Keep per-node statistics for every node rather than the root only.
    pub record_tree: bool,
    pub optimizer: OptimizerConfig,
}

impl Default for RdisConfig {
    fn default() -> Self {
        RdisConfig {
            epsilon: 0.0,
            d_min: 2,
            parts: 2,
            balance: 0.2,
            restarts: 5,
            patience: 3,
            max_rounds: 100,
            progress_tol: 1e-8,
            selection: Selection::Partition,
            cache_partitions: true,
            record_tree: false,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl RdisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be finite and non-negative");
        }
        if self.d_min == 0 {
            return bad("d_min must be at least 1");
        }
        if self.parts < 2 {
            return bad("parts must be at least 2");
        }
        if !(self.balance >= 0.0) {
            return bad("balance must be non-negative");
        }
        if self.restarts == 0 || self.patience == 0 || self.max_rounds == 0 {
            return bad("restarts, patience and max_rounds must be positive");
        }
        if !(self.progress_tol >= 0.0) {
            return bad("progress_tol must be non-negative");
        }
        self.optimizer.validate()
    }
}
