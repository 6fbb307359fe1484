use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Scalar;

use super::subspace::Subspace;
use super::OptResult;

/// Odometer over the `s^d` lattice of a box, endpoints included. The first
/// coordinate varies fastest.
#[derive(Clone, Debug)]
pub struct Lattice<T> {
    lo: Vec<T>,
    step: Vec<T>,
    idx: Vec<usize>,
    s: usize,
    done: bool,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(domain: &[Interval<T>], vars: &[usize], s: usize) -> Result<Self> {
        if s < 2 {
            return Err(Error::Config("grid needs at least 2 points per dimension".into()));
        }
        let mut lo = Vec::with_capacity(domain.len());
        let mut step = Vec::with_capacity(domain.len());
        for (k, d) in domain.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::UnboundedGrid(vars.get(k).copied().unwrap_or(k)));
            }
            lo.push(d.lo());
            step.push(d.width() / T::of((s - 1) as f64));
        }
        Ok(Lattice {
            idx: vec![0; lo.len()],
            lo,
            step,
            s,
            done: false,
        })
    }

    /// Number of lattice points, if it fits in a `u64`.
    pub fn len(&self) -> Option<u64> {
        (self.s as u64).checked_pow(self.lo.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coord(&self, k: usize) -> T {
        let i = self.idx[k];
        if i + 1 == self.s {
            // hit the upper endpoint exactly
            self.lo[k] + self.step[k] * T::of((self.s - 1) as f64)
        } else {
            self.lo[k] + self.step[k] * T::of(i as f64)
        }
    }

    /// Writes the next lattice point into `out`; false once exhausted.
    pub fn next_into(&mut self, out: &mut [T]) -> bool {
        if self.done {
            return false;
        }
        for (k, o) in out.iter_mut().enumerate().take(self.lo.len()) {
            *o = self.coord(k);
        }
        let mut k = 0;
        loop {
            if k == self.idx.len() {
                self.done = true;
                break;
            }
            self.idx[k] += 1;
            if self.idx[k] < self.s {
                break;
            }
            self.idx[k] = 0;
            k += 1;
        }
        true
    }
}

/// Exhaustive search over the `s^d` lattice of `domain` (one interval per
/// subset variable). Points where evaluation fails are skipped; ties keep
/// the first point visited. The best point is left in `x`.
pub fn grid_search<T: Scalar>(
    sub: &mut Subspace<'_, T>,
    x: &mut [T],
    domain: &[Interval<T>],
    s: usize,
) -> Result<OptResult<T>> {
    let mut lattice = Lattice::new(domain, sub.vars(), s)?;
    let mut point = vec![T::zero(); sub.dim()];
    let mut best: Option<(T, Vec<T>)> = None;
    let mut last_err = None;
    let mut evaluations = 0u64;
    let mut complete = true;
    while lattice.next_into(&mut point) {
        if sub.budget().exhausted() {
            complete = false;
            break;
        }
        sub.scatter(&point, x);
        sub.budget().add_lattice(1);
        evaluations += 1;
        match sub.value(x) {
            Ok(v) => {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, point.clone()));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((value, point)) = best else {
        return Err(last_err.unwrap_or(Error::NonFinite));
    };
    sub.scatter(&point, x);
    Ok(OptResult {
        value,
        point,
        iterations: evaluations as usize,
        evaluations,
        grad_evals: 0,
        converged: complete,
        restarts_used: 1,
        start_grad_norm: None,
        steps: Vec::new(),
    })
}
