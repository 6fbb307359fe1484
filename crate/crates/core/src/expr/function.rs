use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::node::ExprNode;
use crate::expr::tape::{Scratch, Tape};
use crate::interval::Interval;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Variable<T> {
    pub index: usize,
    pub name: String,
    pub domain: Interval<T>,
}

impl<T: Scalar> Variable<T> {
    pub fn new(index: usize, name: impl Into<String>, lo: T, hi: T) -> Result<Self> {
        let name = name.into();
        let domain = Interval::new(lo, hi).map_err(|_| Error::EmptyDomain {
            name: name.clone(),
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        })?;
        Ok(Variable { index, name, domain })
    }
}

/// One summand of an objective, compiled for evaluation.
#[derive(Clone, Debug)]
pub struct Term<T> {
    id: usize,
    expr: ExprNode<T>,
    scope: Vec<usize>,
    tape: Tape<T>,
    residual: Option<Tape<T>>,
}

impl<T: Scalar> PartialEq for Term<T> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.expr == other.expr
    }
}

impl<T: Scalar> Term<T> {
    pub fn new(id: usize, expr: ExprNode<T>) -> Self {
        let scope = expr.variables().into_iter().collect();
        let tape = Tape::compile(&expr);
        let residual = expr.as_square().map(Tape::compile);
        Term {
            id,
            expr,
            scope,
            tape,
            residual,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn expr(&self) -> &ExprNode<T> {
        &self.expr
    }

    /// Sorted variable indices appearing in the expression.
    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn eval(&self, x: &[T], scratch: &mut Scratch<T>) -> Result<T> {
        self.tape.eval(x, scratch)
    }

    pub fn eval_grad<F: FnMut(usize, T)>(&self, x: &[T], scratch: &mut Scratch<T>, sink: F) -> Result<T> {
        self.tape.eval_grad(x, scratch, sink)
    }

    pub fn bounds<F: Fn(usize) -> Interval<T>>(&self, lookup: F, scratch: &mut Scratch<T>) -> Result<Interval<T>> {
        self.tape.bounds(lookup, scratch)
    }

    /// Tape of `r` when the term is `r^2`.
    pub fn residual(&self) -> Option<&Tape<T>> {
        self.residual.as_ref()
    }
}

/// Values for a subset of variables, keyed by variable index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartialAssignment<T> {
    values: BTreeMap<usize, T>,
}

impl<T: Scalar> PartialAssignment<T> {
    pub fn new() -> Self {
        PartialAssignment {
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, index: usize, value: T) -> Option<T> {
        self.values.insert(index, value)
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.values.get(&index).copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.values.contains_key(&index)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.values.iter().map(|(&i, &v)| (i, v))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    /// Union of two assignments over disjoint index sets.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (i, v) in other.iter() {
            if out.insert(i, v).is_some() {
                return Err(Error::Spec(format!("assignments overlap on variable {i}")));
            }
        }
        Ok(out)
    }

    /// Picks the given indices out of a dense state vector.
    pub fn from_dense(state: &[T], indices: impl IntoIterator<Item = usize>) -> Self {
        PartialAssignment {
            values: indices.into_iter().map(|i| (i, state[i])).collect(),
        }
    }

    /// Writes the assigned values into a dense state vector.
    pub fn write_into(&self, state: &mut [T]) {
        for (i, v) in self.iter() {
            state[i] = v;
        }
    }
}

impl<T: Scalar> FromIterator<(usize, T)> for PartialAssignment<T> {
    fn from_iter<I: IntoIterator<Item = (usize, T)>>(iter: I) -> Self {
        PartialAssignment {
            values: iter.into_iter().collect(),
        }
    }
}

/// `offset + sum of terms` over a set of box-constrained variables.
///
/// Variable indices and term ids are stable under restriction, so a
/// restricted function may have gaps in both; dense state vectors are always
/// indexed by the original variable index and must have length `universe()`.
#[derive(Clone, Debug)]
pub struct ObjectiveFunction<T> {
    variables: Vec<Variable<T>>,
    terms: Vec<Term<T>>,
    offset: T,
    universe: usize,
    slot: Vec<Option<u32>>,
    var_terms: Vec<Vec<u32>>,
}

impl<T: Scalar> ObjectiveFunction<T> {
    /// Builds a top-level function: variable indices must be `0..n` in order
    /// and term ids are assigned by position.
    pub fn new(variables: Vec<Variable<T>>, exprs: Vec<ExprNode<T>>) -> Result<Self> {
        for (pos, v) in variables.iter().enumerate() {
            if v.index != pos {
                return Err(Error::Spec(format!(
                    "variable `{}` has index {} at position {pos}",
                    v.name, v.index
                )));
            }
        }
        let universe = variables.len();
        let terms = exprs.into_iter().enumerate().map(|(id, e)| Term::new(id, e)).collect();
        Self::from_parts(variables, terms, T::zero(), universe)
    }

    pub fn from_parts(
        mut variables: Vec<Variable<T>>,
        mut terms: Vec<Term<T>>,
        offset: T,
        universe: usize,
    ) -> Result<Self> {
        variables.sort_by_key(|v| v.index);
        terms.sort_by_key(|t| t.id);
        let universe = universe.max(variables.last().map_or(0, |v| v.index + 1));
        let mut slot = vec![None; universe];
        for (pos, v) in variables.iter().enumerate() {
            if slot[v.index].is_some() {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            slot[v.index] = Some(pos as u32);
        }
        let mut var_terms = vec![Vec::new(); universe];
        for (pos, t) in terms.iter().enumerate() {
            if pos > 0 && terms[pos - 1].id == t.id {
                return Err(Error::Spec(format!("duplicate term id {}", t.id)));
            }
            for &i in t.scope() {
                if i >= universe || slot[i].is_none() {
                    return Err(Error::UnknownVariable(i));
                }
                var_terms[i].push(pos as u32);
            }
        }
        Ok(ObjectiveFunction {
            variables,
            terms,
            offset,
            universe,
            slot,
            var_terms,
        })
    }

    pub fn variables(&self) -> &[Variable<T>] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables.iter().map(|v| v.index)
    }

    pub fn variable(&self, index: usize) -> Option<&Variable<T>> {
        self.slot
            .get(index)
            .copied()
            .flatten()
            .map(|p| &self.variables[p as usize])
    }

    pub fn has_variable(&self, index: usize) -> bool {
        self.variable(index).is_some()
    }

    pub fn domain(&self, index: usize) -> Option<Interval<T>> {
        self.variable(index).map(|v| v.domain)
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Positions (into `terms()`) of the terms containing `index`.
    pub fn terms_touching(&self, index: usize) -> &[u32] {
        self.var_terms.get(index).map_or(&[], |v| v.as_slice())
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Dense state vector holding each variable's domain midpoint, or zero
    /// for unbounded domains.
    pub fn default_state(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.universe];
        for v in &self.variables {
            let m = v.domain.midpoint();
            x[v.index] = if m.is_finite() { m } else { T::zero() };
        }
        x
    }

    /// `offset + sum of terms` at the dense state `x`.
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        let mut scratch = Scratch::default();
        self.evaluate_with(x, &mut scratch)
    }

    pub fn evaluate_with(&self, x: &[T], scratch: &mut Scratch<T>) -> Result<T> {
        if x.len() < self.universe {
            return Err(Error::MissingValue(x.len()));
        }
        let mut acc = self.offset;
        for t in &self.terms {
            acc += t.eval(x, scratch)?;
        }
        if acc.is_finite() {
            Ok(acc)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn dense_from(&self, rho: &PartialAssignment<T>) -> Result<Vec<T>> {
        let mut x = vec![T::zero(); self.universe];
        for v in &self.variables {
            x[v.index] = rho.get(v.index).ok_or(Error::MissingValue(v.index))?;
        }
        Ok(x)
    }

    pub fn evaluate_assignment(&self, rho: &PartialAssignment<T>) -> Result<T> {
        self.evaluate(&self.dense_from(rho)?)
    }

    /// Partial derivatives over `subset` (in the given order). Only terms
    /// touching the subset are evaluated.
    pub fn gradient(&self, x: &[T], subset: &[usize]) -> Result<Vec<T>> {
        let mut local = vec![usize::MAX; self.universe];
        for (k, &i) in subset.iter().enumerate() {
            if !self.has_variable(i) {
                return Err(Error::UnknownVariable(i));
            }
            local[i] = k;
        }
        let mut touched: Vec<u32> = subset
            .iter()
            .flat_map(|&i| self.terms_touching(i).iter().copied())
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let mut g = vec![T::zero(); subset.len()];
        let mut scratch = Scratch::default();
        for pos in touched {
            self.terms[pos as usize].eval_grad(x, &mut scratch, |i, d| {
                let k = local[i];
                if k != usize::MAX {
                    g[k] += d;
                }
            })?;
        }
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn check_assignment(&self, rho: &PartialAssignment<T>) -> Result<()> {
        for (i, v) in rho.iter() {
            let d = self.domain(i).ok_or(Error::UnknownVariable(i))?;
            if !d.contains(v) {
                return Err(Error::OutOfDomain {
                    index: i,
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// `f|rho`: assigned variables become constants, terms left without free
    /// variables fold into the offset.
    pub fn restrict(&self, rho: &PartialAssignment<T>) -> Result<Self> {
        self.check_assignment(rho)?;
        let mut scratch = Scratch::default();
        let mut dense = vec![T::zero(); self.universe];
        rho.write_into(&mut dense);
        let mut offset = self.offset;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.scope().iter().all(|&i| rho.contains(i)) {
                offset += t.eval(&dense, &mut scratch)?;
            } else if t.scope().iter().any(|&i| rho.contains(i)) {
                terms.push(Term::new(t.id, t.expr.substitute(|i| rho.get(i))));
            } else {
                terms.push(t.clone());
            }
        }
        let variables = self
            .variables
            .iter()
            .filter(|v| !rho.contains(v.index))
            .cloned()
            .collect();
        Self::from_parts(variables, terms, offset, self.universe)
    }

    /// Interval bounds of the term at `pos` over `box_of`.
    pub fn term_bounds<F: Fn(usize) -> Interval<T>>(&self, pos: usize, box_of: F) -> Result<Interval<T>> {
        let mut scratch = Scratch::default();
        self.terms[pos].bounds(box_of, &mut scratch)
    }

    /// Dense box of declared domains.
    pub fn domain_box(&self) -> Vec<Interval<T>> {
        let mut b = vec![Interval::entire(); self.universe];
        for v in &self.variables {
            b[v.index] = v.domain;
        }
        b
    }
}
