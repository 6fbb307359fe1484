use crate::error::Result;
use crate::scalar::Scalar;

use super::config::OptimizerConfig;
use super::subspace::Subspace;
use super::{ArmijoStep, OptResult};

const MAX_BACKTRACKS: usize = 60;
const MAX_EXPANSIONS: usize = 30;

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `from + a·dir`, clamped to the bounds.
fn probe<T: Scalar>(a: T, from: &[T], dir: &[T], (lo, hi): (&[T], &[T]), out: &mut [T]) {
    for k in 0..out.len() {
        out[k] = (from[k] + a * dir[k]).max(lo[k]).min(hi[k]);
    }
}

fn steepest<T: Scalar>(g: &[T], dir: &mut [T]) {
    for (di, &gi) in dir.iter_mut().zip(g) {
        *di = -gi;
    }
}

fn is_steepest<T: Scalar>(g: &[T], dir: &[T]) -> bool {
    g.iter().zip(dir).all(|(&gi, &di)| di == -gi)
}

/// Polak–Ribière+ conjugate gradient with Armijo backtracking, run for at
/// most `cfg.max_iters` iterations.
pub fn cgd_minimize<T: Scalar>(sub: &mut Subspace<'_, T>, x: &mut [T], cfg: &OptimizerConfig) -> Result<OptResult<T>> {
    cgd_descent(sub, x, cfg, cfg.max_iters, None)
}

/// As [`cgd_minimize`] with an explicit iteration cap and an optional
/// reference gradient norm for the forcing test (stop once the gradient norm
/// is at most `cfg.eta` times the reference).
///
/// The starting point is read from and the final point written to the subset
/// entries of `x`. Iterates are clamped to finite domain bounds and gradient
/// components pushing against an active bound are dropped. Probes that fail
/// to evaluate count as rejected steps; a failure at the start is returned as
/// an error.
pub fn cgd_descent<T: Scalar>(
    sub: &mut Subspace<'_, T>,
    x: &mut [T],
    cfg: &OptimizerConfig,
    max_iters: usize,
    reference_norm: Option<T>,
) -> Result<OptResult<T>> {
    let d = sub.dim();
    let c = T::of(cfg.armijo_c);
    let beta = T::of(cfg.backtrack);
    let tol = T::of(cfg.grad_tol);
    let forcing = reference_norm.filter(|_| cfg.eta > 0.0).map(|r| r * T::of(cfg.eta));

    let (lo, hi): (Vec<T>, Vec<T>) = sub
        .vars()
        .iter()
        .map(|&v| {
            let dom = sub.function().domain(v).expect("subspace variables exist");
            (dom.lo(), dom.hi())
        })
        .unzip();
    let mask = |xs: &[T], g: &mut [T]| {
        for k in 0..g.len() {
            if (xs[k] <= lo[k] && g[k] > T::zero()) || (xs[k] >= hi[k] && g[k] < T::zero()) {
                g[k] = T::zero();
            }
        }
    };

    let mut xs = sub.gather(x);
    let mut g = vec![T::zero(); d];
    let mut fx = sub.value_grad(x, &mut g)?;
    mask(&xs, &mut g);
    let mut evaluations = 1u64;
    let mut grad_evals = 1u64;
    let start_norm = dot(&g, &g).sqrt();
    let mut dir: Vec<T> = g.iter().map(|&v| -v).collect();
    let mut g_new = vec![T::zero(); d];
    let mut trial = vec![T::zero(); d];
    let mut spare = vec![T::zero(); d];
    let mut prev: Option<(T, T, T)> = None;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= tol || forcing.is_some_and(|t| gnorm <= t) {
            converged = true;
            break;
        }
        if sub.budget().exhausted() {
            break;
        }
        let mut slope = dot(&g, &dir);
        if !(slope < T::zero()) {
            steepest(&g, &mut dir);
            slope = -gnorm * gnorm;
        }
        let mut accepted = None;
        let mut alpha = T::zero();
        for attempt in 0..2 {
            let dnorm = dot(&dir, &dir).sqrt();
            alpha = match prev {
                // previous step length times the ratio of slopes, growing by
                // at most a factor of four per iteration
                Some((a, s, len)) => (a * s / slope).min(T::of(4.0) * len / dnorm),
                None => T::one() / dnorm.max(T::one()),
            };
            if !(alpha.is_finite() && alpha > T::zero()) {
                alpha = T::one() / dnorm.max(T::one());
            }
            let mut first = true;
            for _ in 0..MAX_BACKTRACKS {
                probe(alpha, &xs, &dir, (&lo, &hi), &mut trial);
                sub.scatter(&trial, x);
                evaluations += 1;
                if let Ok(ft) = sub.value(x) {
                    if ft <= fx + c * alpha * slope {
                        accepted = Some(ft);
                        break;
                    }
                }
                alpha *= beta;
                first = false;
            }
            // the very first trial was acceptable: keep doubling while the
            // value keeps dropping
            if let (Some(mut ft), true) = (accepted, first) {
                for _ in 0..MAX_EXPANSIONS {
                    let wider = alpha + alpha;
                    probe(wider, &xs, &dir, (&lo, &hi), &mut spare);
                    sub.scatter(&spare, x);
                    evaluations += 1;
                    match sub.value(x) {
                        Ok(fw) if fw < ft && fw <= fx + c * wider * slope => {
                            ft = fw;
                            alpha = wider;
                            std::mem::swap(&mut trial, &mut spare);
                        }
                        _ => break,
                    }
                }
                sub.scatter(&trial, x);
                accepted = Some(ft);
            }
            if accepted.is_some() || attempt == 1 || is_steepest(&g, &dir) {
                break;
            }
            steepest(&g, &mut dir);
            slope = -gnorm * gnorm;
            prev = None;
        }
        let Some(ft) = accepted else {
            sub.scatter(&xs, x);
            converged = gnorm <= tol;
            break;
        };
        if cfg.log_steps {
            steps.push(ArmijoStep {
                f_before: fx,
                f_after: ft,
                alpha,
                slope,
                c: cfg.armijo_c,
            });
        }
        iterations += 1;
        let step_len = alpha * dot(&dir, &dir).sqrt();
        let f_new = match sub.value_grad(x, &mut g_new) {
            Ok(v) => v,
            Err(e) => {
                sub.scatter(&xs, x);
                return Err(e);
            }
        };
        mask(&trial, &mut g_new);
        grad_evals += 1;
        evaluations += 1;
        let gg = dot(&g, &g);
        let mut pr = T::zero();
        for k in 0..d {
            pr += g_new[k] * (g_new[k] - g[k]);
        }
        // Powell's restart: successive gradients far from orthogonal
        let b = if dot(&g_new, &g).abs() >= T::of(0.2) * dot(&g_new, &g_new) {
            T::zero()
        } else {
            (pr / gg).max(T::zero())
        };
        for k in 0..d {
            dir[k] = -g_new[k] + if b.is_finite() { b * dir[k] } else { T::zero() };
        }
        let improvement = (fx - f_new) / fx.abs().max(T::one());
        prev = Some((alpha, slope, step_len));
        std::mem::swap(&mut xs, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if improvement < T::of(cfg.progress_tol) {
            converged = true;
            break;
        }
    }
    sub.scatter(&xs, x);
    Ok(OptResult {
        value: fx,
        point: xs,
        iterations,
        evaluations,
        grad_evals,
        converged,
        restarts_used: 1,
        start_grad_norm: Some(start_norm),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_problem;
    use crate::optim::Budget;

    #[test]
    fn quadratic_reaches_all_ones() {
        let f = parse_problem::<f64>(
            "var a in [-5,5]\nvar b in [-5,5]\nvar c in [-5,5]\nterm (a-1)^2\nterm (b-1)^2\nterm (c-1)^2",
        )
        .unwrap();
        let b = Budget::unlimited();
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![0.0; 3];
        let cfg = OptimizerConfig {
            grad_tol: 1e-12,
            progress_tol: 0.0,
            ..OptimizerConfig::default()
        };
        let r = cgd_minimize(&mut sub, &mut x, &cfg).unwrap();
        assert!(r.converged);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-8), "{x:?}");
    }

    #[test]
    fn rosenbrock() {
        let f = parse_problem::<f64>("var x in [-5,5]\nvar y in [-5,5]\nterm 100*(y-x^2)^2\nterm (1-x)^2").unwrap();
        let b = Budget::unlimited();
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![-1.2, 1.0];
        let cfg = OptimizerConfig {
            max_iters: 20_000,
            grad_tol: 1e-10,
            progress_tol: 0.0,
            log_steps: true,
            ..OptimizerConfig::default()
        };
        let r = cgd_minimize(&mut sub, &mut x, &cfg).unwrap();
        assert!(
            (x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4,
            "{x:?} {} {} {}",
            r.iterations,
            r.converged,
            r.evaluations
        );
        assert_eq!(r.value, f.evaluate(&x).unwrap());
        for s in &r.steps {
            assert!(s.satisfies_armijo());
            assert!(s.f_after <= s.f_before);
        }
    }

    #[test]
    fn counters_match_calls() {
        let f = parse_problem::<f64>("var x in [-3,3]\nvar y in [-3,3]\nterm (x-1)^2\nterm x*y\nterm y^4").unwrap();
        let b = Budget::unlimited();
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![2.0, -1.0];
        let r = cgd_minimize(&mut sub, &mut x, &OptimizerConfig::default()).unwrap();
        let c = b.counts();
        assert_eq!(c.grad_calls, r.grad_evals);
        assert_eq!(c.value_calls + c.grad_calls, r.evaluations);
        assert_eq!(c.term_evals, 3 * r.evaluations);
    }

    #[test]
    fn forcing_stops_early() {
        let f = parse_problem::<f64>("var x in [-9,9]\nvar y in [-9,9]\nterm (x-1)^2 + 10*(y+2)^2 + x*y").unwrap();
        let b = Budget::unlimited();
        let cfg = OptimizerConfig {
            eta: 0.5,
            ..OptimizerConfig::default()
        };
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![5.0, 5.0];
        let r = cgd_descent(&mut sub, &mut x, &cfg, 1000, Some(100.0)).unwrap();
        let g = f.gradient(&x, &[0, 1]).unwrap();
        assert!(r.converged);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 50.0);
        assert!(r.iterations < 10);
    }

    #[test]
    fn stays_inside_finite_domain() {
        let f = parse_problem::<f64>("var x in [-1,1]\nvar y in [-1,1]\nterm (x-3)^2 + (y+0.5)^2").unwrap();
        let b = Budget::unlimited();
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![0.0, 0.0];
        let cfg = OptimizerConfig {
            progress_tol: 0.0,
            ..OptimizerConfig::default()
        };
        let r = cgd_minimize(&mut sub, &mut x, &cfg).unwrap();
        assert_eq!(x[0], 1.0);
        assert!((x[1] + 0.5).abs() < 1e-6, "{x:?} {r:?}");
        assert!(r.converged);
    }

    #[test]
    fn bad_start_errors() {
        let f = parse_problem::<f64>("var x in [-1,1]\nterm log(x)").unwrap();
        let b = Budget::unlimited();
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![-0.5];
        assert!(cgd_minimize(&mut sub, &mut x, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn rejected_probes_backtrack() {
        // the first full step would land outside log's domain
        let f = parse_problem::<f64>("var x in [0,10]\nterm x - 2*log(x)").unwrap();
        let b = Budget::unlimited();
        let mut sub = Subspace::full(&f, &b).unwrap();
        let mut x = vec![0.1];
        cgd_minimize(&mut sub, &mut x, &OptimizerConfig::default()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-3, "{x:?}");
    }
}
