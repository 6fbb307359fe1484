use rdis_core::optim::{multi_start, Budget, OptResult, OptimizerConfig, RngStream, SearchBox, Subspace};
use rdis_core::problems::BlockSpec;
use rdis_core::{Objective, Result};

/// Block coordinate descent: cyclic sweeps over `blocks`, running the inner
/// optimizer (with `inner.restarts` starts) on one block at a time while the
/// others stay fixed. A block whose optimization ends higher than it started
/// is put back. Stops after `rounds` sweeps, once a sweep gains less than
/// `inner.progress_tol` relative to the current value, or when the budget
/// runs out.
///
/// `x` holds the start and receives the final state, which is also returned
/// as the result's point. With a single block the result is that of the inner
/// optimizer.
pub fn bcd_minimize(
    f: &Objective,
    x: &mut [f64],
    blocks: &[Vec<usize>],
    inner: &OptimizerConfig,
    rounds: usize,
    budget: &Budget,
    rng: &mut RngStream,
) -> Result<OptResult<f64>> {
    bcd_sweeps(f, x, blocks, inner, rounds, budget, rng, |_, _| {})
}

/// As [`bcd_minimize`], calling `on_sweep(sweep, value)` after every sweep.
#[allow(clippy::too_many_arguments)]
pub fn bcd_sweeps(
    f: &Objective,
    x: &mut [f64],
    blocks: &[Vec<usize>],
    inner: &OptimizerConfig,
    rounds: usize,
    budget: &Budget,
    rng: &mut RngStream,
    mut on_sweep: impl FnMut(usize, f64),
) -> Result<OptResult<f64>> {
    let spec = BlockSpec::new(f.universe(), blocks.to_vec())?;
    inner.validate()?;
    let mut full = Subspace::full(f, budget)?;
    let mut value = full.value(x)?;
    let (mut iterations, mut evaluations, mut grad_evals) = (0, 1, 0);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < rounds && !(sweeps > 0 && budget.exhausted()) {
        let before_sweep = value;
        for block in spec.blocks() {
            if budget.exhausted() {
                break;
            }
            let mut sub = Subspace::over(f, block, budget)?;
            let saved = sub.gather(x);
            let before = sub.value(x)?;
            let sbox = SearchBox::new(f, block, x, inner.sample_half_width);
            let r = multi_start(&mut sub, x, &sbox, inner, inner.restarts, rng)?;
            iterations += r.iterations;
            evaluations += r.evaluations + 1;
            grad_evals += r.grad_evals;
            if r.value > before {
                sub.scatter(&saved, x);
            }
        }
        value = full.value(x)?;
        evaluations += 1;
        sweeps += 1;
        on_sweep(sweeps - 1, value);
        let gain = before_sweep - value;
        if spec.len() == 1 || gain <= inner.progress_tol * before_sweep.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(OptResult {
        value,
        point: x.to_vec(),
        iterations,
        evaluations,
        grad_evals,
        converged,
        restarts_used: sweeps,
        start_grad_norm: None,
        steps: Vec::new(),
    })
}
