use crate::error::Result;
use crate::expr::{ObjectiveFunction, Scratch};
use crate::interval::Interval;
use crate::optim::Budget;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct RemovedTerm<T> {
    pub id: usize,
    pub position: u32,
    /// Midpoint of `bounds`; the exact value when the term had no free
    /// variable.
    pub constant: T,
    pub bounds: Interval<T>,
    /// True when every variable of the term was fixed, so `constant` is its
    /// value rather than an approximation.
    pub exact: bool,
}

/// A set of terms with the near-constant ones replaced by constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplifiedFunction<T> {
    /// Positions of the terms kept as functions.
    pub retained: Vec<u32>,
    pub removed: Vec<RemovedTerm<T>>,
    /// Sum of the removed terms' constants.
    pub offset: T,
}

impl<T: Scalar> SimplifiedFunction<T> {
    /// `offset` plus the retained terms at `x`.
    pub fn value(&self, f: &ObjectiveFunction<T>, x: &[T]) -> Result<T> {
        let mut scratch = Scratch::default();
        let mut acc = self.offset;
        for &p in &self.retained {
            acc += f.terms()[p as usize].eval(x, &mut scratch)?;
        }
        Ok(acc)
    }

    /// Number of removed terms that still had a free variable.
    pub fn approximated(&self) -> usize {
        self.removed.iter().filter(|r| !r.exact).count()
    }

    /// Every term, removed ones included, at `x`.
    pub fn exact_value(&self, f: &ObjectiveFunction<T>, x: &[T]) -> Result<T> {
        let mut scratch = Scratch::default();
        let mut acc = T::zero();
        for p in self.retained.iter().chain(self.removed.iter().map(|r| &r.position)) {
            acc += f.terms()[*p as usize].eval(x, &mut scratch)?;
        }
        Ok(acc)
    }
}

/// Replaces every term of `terms` whose bounds are at most `2 * epsilon`
/// wide by its midpoint. Variables with `free[v]` range over their declared
/// domains, all others are fixed at `x[v]`. Terms without free variables are
/// evaluated exactly; terms whose bounds cannot be computed are kept.
pub fn simplify<T: Scalar>(
    f: &ObjectiveFunction<T>,
    terms: &[u32],
    free: &[bool],
    x: &[T],
    epsilon: f64,
    budget: &Budget,
) -> Result<SimplifiedFunction<T>> {
    simplify_with(f, terms, free, x, epsilon, budget, &mut Scratch::default())
}

pub(crate) fn simplify_with<T: Scalar>(
    f: &ObjectiveFunction<T>,
    terms: &[u32],
    free: &[bool],
    x: &[T],
    epsilon: f64,
    budget: &Budget,
    scratch: &mut Scratch<T>,
) -> Result<SimplifiedFunction<T>> {
    let limit = T::of(2.0 * epsilon);
    let mut retained = Vec::with_capacity(terms.len());
    let mut removed = Vec::new();
    let mut offset = T::zero();
    let mut bound_evals = 0;
    for &p in terms {
        let term = &f.terms()[p as usize];
        if !term.scope().iter().any(|&v| free[v]) {
            let k = term.eval(x, scratch)?;
            budget.add_terms(1);
            offset += k;
            removed.push(RemovedTerm {
                id: term.id(),
                position: p,
                constant: k,
                bounds: Interval::point(k),
                exact: true,
            });
            continue;
        }
        bound_evals += 1;
        let b = term.bounds(
            |v| {
                if free[v] {
                    f.domain(v).unwrap_or_else(Interval::entire)
                } else {
                    Interval::point(x[v])
                }
            },
            scratch,
        );
        match b {
            Ok(b) if b.width().is_finite() && b.width() <= limit => {
                let k = b.midpoint();
                offset += k;
                removed.push(RemovedTerm {
                    id: term.id(),
                    position: p,
                    constant: k,
                    bounds: b,
                    exact: false,
                });
            }
            _ => retained.push(p),
        }
    }
    budget.add_bounds(bound_evals);
    Ok(SimplifiedFunction {
        retained,
        removed,
        offset,
    })
}
