use crate::error::Result;
use crate::scalar::Scalar;

use super::cgd::cgd_minimize;
use super::config::{OptimizerConfig, OptimizerKind};
use super::grid::grid_search;
use super::lm::lm_minimize;
use super::rng::RngStream;
use super::subspace::{SearchBox, Subspace};
use super::OptResult;

/// One run of the optimizer selected by `cfg.kind` from the state in `x`.
pub fn run_inner<T: Scalar>(
    sub: &mut Subspace<'_, T>,
    x: &mut [T],
    sbox: &SearchBox<T>,
    cfg: &OptimizerConfig,
) -> Result<OptResult<T>> {
    match cfg.kind {
        OptimizerKind::Grid => grid_search(sub, x, &sbox.domain, cfg.grid_points),
        OptimizerKind::Cgd => cgd_minimize(sub, x, cfg),
        OptimizerKind::Lm => lm_minimize(sub, x, cfg),
    }
}

/// Best of `restarts` runs: the first from the state in `x`, the rest from
/// points drawn uniformly from the sampling box. Starts that fail are
/// skipped. The best point is left in `x`.
///
/// Grid search is deterministic, so it runs once whatever `restarts` is.
pub fn multi_start<T: Scalar>(
    sub: &mut Subspace<'_, T>,
    x: &mut [T],
    sbox: &SearchBox<T>,
    cfg: &OptimizerConfig,
    restarts: usize,
    rng: &mut RngStream,
) -> Result<OptResult<T>> {
    let restarts = if cfg.kind == OptimizerKind::Grid {
        1
    } else {
        restarts.max(1)
    };
    let mut best: Option<OptResult<T>> = None;
    let mut last_err = None;
    let (mut iterations, mut evaluations, mut grad_evals) = (0, 0, 0);
    let mut used = 0;
    for start in 0..restarts {
        if start > 0 {
            if sub.budget().exhausted() {
                break;
            }
            sbox.sample_into(sub.vars(), rng, x);
        }
        used += 1;
        match run_inner(sub, x, sbox, cfg) {
            Ok(r) => {
                iterations += r.iterations;
                evaluations += r.evaluations;
                grad_evals += r.grad_evals;
                if best.as_ref().is_none_or(|b| r.value < b.value) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(mut best) = best else {
        return Err(last_err.expect("at least one start ran"));
    };
    sub.scatter(&best.point, x);
    best.iterations = iterations;
    best.evaluations = evaluations;
    best.grad_evals = grad_evals;
    best.restarts_used = used;
    Ok(best)
}
