use crate::error::Result;
use crate::scalar::Scalar;

use super::config::OptimizerConfig;
use super::subspace::Subspace;
use super::OptResult;

const MIN_DAMPING: f64 = 1e-15;
const MAX_DAMPING: f64 = 1e20;

/// In-place Cholesky solve of the dense SPD system `a x = b` (row-major
/// `n×n`). Returns false when `a` is not numerically positive definite.
pub(crate) fn cholesky_solve<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Levenberg–Marquardt on a view whose terms are all squared residuals.
///
/// Solves `(JᵀJ + μI) δ = −Jᵀr`; μ starts at `1e-3` times the mean diagonal
/// of `JᵀJ`, shrinks by 3 after an accepted step and doubles after a
/// rejected step or a failed factorization.
pub fn lm_minimize<T: Scalar>(sub: &mut Subspace<'_, T>, x: &mut [T], cfg: &OptimizerConfig) -> Result<OptResult<T>> {
    sub.require_squares()?;
    let d = sub.dim();
    let mut xs = sub.gather(x);
    let mut cost = sub.value(x)?;
    let mut evaluations = 1u64;
    let mut grad_evals = 0u64;
    let (mut r, mut jac) = (Vec::new(), Vec::new());
    let mut jtj = vec![T::zero(); d * d];
    let mut jtr = vec![T::zero(); d];

    let mut normal = |sub: &mut Subspace<'_, T>, x: &[T], jtj: &mut [T], jtr: &mut [T]| -> Result<()> {
        sub.residuals(x, &mut r, &mut jac)?;
        jtj.iter_mut().for_each(|v| *v = T::zero());
        jtr.iter_mut().for_each(|v| *v = T::zero());
        for (row, &ri) in r.iter().enumerate() {
            let jr = &jac[row * d..(row + 1) * d];
            for a in 0..d {
                if jr[a].is_zero() {
                    continue;
                }
                jtr[a] += jr[a] * ri;
                for b in 0..=a {
                    jtj[a * d + b] += jr[a] * jr[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                jtj[b * d + a] = jtj[a * d + b];
            }
        }
        Ok(())
    };

    let start_norm;
    let mut iterations = 0;
    let mut converged = false;
    if cost == sub.constant() {
        start_norm = T::zero();
        converged = true;
    } else {
        normal(sub, x, &mut jtj, &mut jtr)?;
        grad_evals += 1;
        start_norm = jtr.iter().fold(T::zero(), |a, &v| a + v * v).sqrt() * T::of(2.0);
        let mean_diag = (0..d).fold(T::zero(), |a, i| a + jtj[i * d + i]) / T::of(d.max(1) as f64);
        let mut mu = if mean_diag > T::zero() {
            T::of(1e-3) * mean_diag
        } else {
            T::of(1e-3)
        };
        let mut system = vec![T::zero(); d * d];
        let mut step = vec![T::zero(); d];
        let mut trial = vec![T::zero(); d];
        while iterations < cfg.max_iters {
            let gmax = jtr.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
            if gmax * T::of(2.0) <= T::of(cfg.grad_tol) {
                converged = true;
                break;
            }
            if sub.budget().exhausted() || mu > T::of(MAX_DAMPING) {
                break;
            }
            iterations += 1;
            system.copy_from_slice(&jtj);
            for i in 0..d {
                system[i * d + i] += mu;
                step[i] = -jtr[i];
            }
            if !cholesky_solve(&mut system, &mut step, d) {
                mu *= T::of(2.0);
                continue;
            }
            for k in 0..d {
                trial[k] = xs[k] + step[k];
            }
            sub.scatter(&trial, x);
            evaluations += 1;
            match sub.value(x) {
                Ok(c) if c < cost => {
                    let rel = (cost - c) / (cost - sub.constant()).abs().max(T::min_positive_value());
                    std::mem::swap(&mut xs, &mut trial);
                    cost = c;
                    mu = (mu / T::of(3.0)).max(T::of(MIN_DAMPING));
                    if cost == sub.constant() || rel < T::of(cfg.progress_tol) {
                        converged = true;
                        break;
                    }
                    normal(sub, x, &mut jtj, &mut jtr)?;
                    grad_evals += 1;
                }
                _ => {
                    sub.scatter(&xs, x);
                    mu *= T::of(2.0);
                }
            }
        }
    }
    sub.scatter(&xs, x);
    Ok(OptResult {
        value: cost,
        point: xs,
        iterations,
        evaluations,
        grad_evals,
        converged,
        restarts_used: 1,
        start_grad_norm: Some(start_norm),
        steps: Vec::new(),
    })
}
