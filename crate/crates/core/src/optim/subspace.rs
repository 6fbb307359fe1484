use crate::error::{Error, Result};
use crate::expr::{ObjectiveFunction, Scratch};
use crate::interval::Interval;
use crate::scalar::Scalar;

use super::budget::Budget;
use super::rng::RngStream;

/// A function of the variables in `vars` with every other variable held at
/// its value in the caller's dense state.
///
/// Only terms that touch `vars` are evaluated; the rest of the supplied term
/// set is folded into a constant when the view is built.
pub struct Subspace<'a, T: Scalar> {
    f: &'a ObjectiveFunction<T>,
    vars: Vec<usize>,
    local: Vec<u32>,
    terms: Vec<u32>,
    constant: T,
    budget: &'a Budget,
    scratch: Scratch<T>,
}

impl<'a, T: Scalar> Subspace<'a, T> {
    /// View over `vars` using the term positions `terms`; `x` supplies the
    /// fixed values used for the constant part.
    pub fn new(
        f: &'a ObjectiveFunction<T>,
        vars: &[usize],
        terms: &[u32],
        x: &[T],
        budget: &'a Budget,
    ) -> Result<Self> {
        let mut local = vec![u32::MAX; f.universe()];
        for (k, &v) in vars.iter().enumerate() {
            if !f.has_variable(v) {
                return Err(Error::UnknownVariable(v));
            }
            local[v] = k as u32;
        }
        let mut scratch = Scratch::default();
        let mut touching = Vec::new();
        let mut constant = T::zero();
        let mut fixed = 0;
        for &p in terms {
            let t = &f.terms()[p as usize];
            if t.scope().iter().any(|&i| local[i] != u32::MAX) {
                touching.push(p);
            } else {
                constant += t.eval(x, &mut scratch)?;
                fixed += 1;
            }
        }
        if fixed > 0 {
            budget.add_terms(fixed);
        }
        Ok(Subspace {
            f,
            vars: vars.to_vec(),
            local,
            terms: touching,
            constant,
            budget,
            scratch,
        })
    }

    /// View over all variables and terms, including the function's offset,
    /// so values equal `f.evaluate`.
    pub fn full(f: &'a ObjectiveFunction<T>, budget: &'a Budget) -> Result<Self> {
        let vars: Vec<usize> = f.variable_indices().collect();
        let terms: Vec<u32> = (0..f.num_terms() as u32).collect();
        // only terms with an empty scope are folded, so no state is needed
        let mut sub = Self::new(f, &vars, &terms, &[], budget)?;
        sub.shift(f.offset());
        Ok(sub)
    }

    /// View over `vars` against every term of `f`, offset included.
    pub fn over(f: &'a ObjectiveFunction<T>, vars: &[usize], budget: &'a Budget) -> Result<Self> {
        let terms: Vec<u32> = vars
            .iter()
            .flat_map(|&v| f.terms_touching(v).iter().copied())
            .collect::<std::collections::BTreeSet<u32>>()
            .into_iter()
            .collect();
        let mut sub = Self::new(f, vars, &terms, &[], budget)?;
        sub.constant = f.offset();
        Ok(sub)
    }

    /// Adds `c` to every value this view reports.
    pub fn shift(&mut self, c: T) {
        self.constant += c;
    }

    pub fn function(&self) -> &'a ObjectiveFunction<T> {
        self.f
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn budget(&self) -> &'a Budget {
        self.budget
    }

    /// Positions of the terms this view evaluates.
    pub fn terms(&self) -> &[u32] {
        &self.terms
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    /// Copies the subset's entries out of a dense state.
    pub fn gather(&self, x: &[T]) -> Vec<T> {
        self.vars.iter().map(|&v| x[v]).collect()
    }

    pub fn scatter(&self, xs: &[T], x: &mut [T]) {
        for (&v, &val) in self.vars.iter().zip(xs) {
            x[v] = val;
        }
    }

    pub fn value(&mut self, x: &[T]) -> Result<T> {
        self.budget.add_value(self.terms.len());
        let mut acc = self.constant;
        for &p in &self.terms {
            acc += self.f.terms()[p as usize].eval(x, &mut self.scratch)?;
        }
        if acc.is_finite() {
            Ok(acc)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Value and gradient over the subset; `g` has length `dim()`.
    pub fn value_grad(&mut self, x: &[T], g: &mut [T]) -> Result<T> {
        self.budget.add_grad(self.terms.len());
        g.iter_mut().for_each(|v| *v = T::zero());
        let mut acc = self.constant;
        let local = &self.local;
        for &p in &self.terms {
            acc += self.f.terms()[p as usize].eval_grad(x, &mut self.scratch, |i, d| {
                let k = local[i];
                if k != u32::MAX {
                    g[k as usize] += d;
                }
            })?;
        }
        if acc.is_finite() && g.iter().all(|v| v.is_finite()) {
            Ok(acc)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Residuals `r_j` of the touching terms (each of the form `r_j^2`) and
    /// their row-major Jacobian over the subset.
    pub fn residuals(&mut self, x: &[T], r: &mut Vec<T>, jac: &mut Vec<T>) -> Result<()> {
        let d = self.vars.len();
        r.clear();
        jac.clear();
        jac.resize(self.terms.len() * d, T::zero());
        self.budget.add_grad(self.terms.len());
        let local = &self.local;
        for (row, &p) in self.terms.iter().enumerate() {
            let term = &self.f.terms()[p as usize];
            let tape = term.residual().ok_or(Error::NotSumOfSquares(term.id()))?;
            let out = &mut jac[row * d..(row + 1) * d];
            let v = tape.eval_grad(x, &mut self.scratch, |i, dv| {
                let k = local[i];
                if k != u32::MAX {
                    out[k as usize] += dv;
                }
            })?;
            r.push(v);
        }
        Ok(())
    }

    /// Checks that every touching term is a squared residual.
    pub fn require_squares(&self) -> Result<()> {
        for &p in &self.terms {
            let t = &self.f.terms()[p as usize];
            if t.residual().is_none() {
                return Err(Error::NotSumOfSquares(t.id()));
            }
        }
        Ok(())
    }
}

/// Declared domains of a subset plus the finite box restarts sample from.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchBox<T> {
    pub domain: Vec<Interval<T>>,
    pub sample: Vec<Interval<T>>,
}

impl<T: Scalar> SearchBox<T> {
    /// Unbounded sides are replaced by `center ± half_width` for sampling.
    pub fn new(f: &ObjectiveFunction<T>, vars: &[usize], center: &[T], half_width: f64) -> Self {
        let hw = T::of(half_width);
        let mut domain = Vec::with_capacity(vars.len());
        let mut sample = Vec::with_capacity(vars.len());
        for &v in vars {
            let d = f.domain(v).unwrap_or_else(Interval::entire);
            let c = center.get(v).copied().unwrap_or_else(T::zero);
            let lo = if d.lo().is_finite() {
                d.lo()
            } else {
                (c - hw).min(d.hi() - hw - hw)
            };
            let hi = if d.hi().is_finite() {
                d.hi()
            } else {
                (c + hw).max(lo + hw + hw)
            };
            domain.push(d);
            sample.push(Interval::new(lo, hi).expect("sampling box is ordered"));
        }
        SearchBox { domain, sample }
    }

    pub fn is_finite(&self) -> bool {
        self.domain.iter().all(Interval::is_finite)
    }

    /// Draws a uniform point of the sampling box into the subset entries of
    /// the dense state `x`.
    pub fn sample_into(&self, vars: &[usize], rng: &mut RngStream, x: &mut [T]) {
        for (&v, b) in vars.iter().zip(&self.sample) {
            x[v] = rng.uniform(b.lo(), b.hi());
        }
    }
}
