use std::collections::BTreeSet;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    /// Whether interval evaluation of this op can fail on part of the line.
    pub fn domain_restricted(self) -> bool {
        matches!(self, UnaryOp::Log | UnaryOp::Sqrt)
    }

    pub(crate) fn apply<T: Scalar>(self, v: T) -> Result<T> {
        Ok(match self {
            UnaryOp::Neg => -v,
            UnaryOp::Sin => v.sin(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Exp => v.exp(),
            UnaryOp::Log => {
                if v <= T::zero() {
                    return Err(Error::Domain { op: "log" });
                }
                v.ln()
            }
            UnaryOp::Sqrt => {
                if v < T::zero() {
                    return Err(Error::Domain { op: "sqrt" });
                }
                v.sqrt()
            }
        })
    }

    pub(crate) fn apply_interval<T: Scalar>(self, v: Interval<T>) -> Result<Interval<T>> {
        match self {
            UnaryOp::Neg => Ok(-v),
            UnaryOp::Sin => Ok(v.sin()),
            UnaryOp::Cos => Ok(v.cos()),
            UnaryOp::Exp => Ok(v.exp()),
            UnaryOp::Log => v.ln(),
            UnaryOp::Sqrt => v.sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    pub(crate) fn apply<T: Scalar>(self, a: T, b: T) -> Result<T> {
        Ok(match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b.is_zero() {
                    return Err(Error::Domain { op: "division" });
                }
                a / b
            }
        })
    }

    pub(crate) fn apply_interval<T: Scalar>(self, a: Interval<T>, b: Interval<T>) -> Result<Interval<T>> {
        match self {
            BinaryOp::Add => Ok(a + b),
            BinaryOp::Sub => Ok(a - b),
            BinaryOp::Mul => Ok(a * b),
            BinaryOp::Div => a.checked_div(b),
        }
    }
}

/// Expression tree for one term. Exponents are integers.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprNode<T> {
    Const(T),
    Var(usize),
    Unary(UnaryOp, Box<ExprNode<T>>),
    Binary(BinaryOp, Box<ExprNode<T>>, Box<ExprNode<T>>),
    Pow(Box<ExprNode<T>>, i32),
}

impl<T: Scalar> ExprNode<T> {
    pub fn constant(v: T) -> Self {
        ExprNode::Const(v)
    }

    pub fn var(index: usize) -> Self {
        ExprNode::Var(index)
    }

    fn unary(self, op: UnaryOp) -> Self {
        ExprNode::Unary(op, Box::new(self))
    }

    pub fn sin(self) -> Self {
        self.unary(UnaryOp::Sin)
    }

    pub fn cos(self) -> Self {
        self.unary(UnaryOp::Cos)
    }

    pub fn exp(self) -> Self {
        self.unary(UnaryOp::Exp)
    }

    pub fn ln(self) -> Self {
        self.unary(UnaryOp::Log)
    }

    pub fn sqrt(self) -> Self {
        self.unary(UnaryOp::Sqrt)
    }

    pub fn powi(self, n: i32) -> Self {
        ExprNode::Pow(Box::new(self), n)
    }

    pub fn binary(op: BinaryOp, a: Self, b: Self) -> Self {
        ExprNode::Binary(op, Box::new(a), Box::new(b))
    }

    /// Sum of a non-empty list, folded left.
    pub fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self {
        let mut it = items.into_iter();
        let first = it.next().unwrap_or(ExprNode::Const(T::zero()));
        it.fold(first, |acc, e| acc + e)
    }

    /// Product of a non-empty list, folded left.
    pub fn product<I: IntoIterator<Item = Self>>(items: I) -> Self {
        let mut it = items.into_iter();
        let first = it.next().unwrap_or(ExprNode::Const(T::one()));
        it.fold(first, |acc, e| acc * e)
    }

    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            ExprNode::Const(_) => {}
            ExprNode::Var(i) => {
                out.insert(*i);
            }
            ExprNode::Unary(_, a) | ExprNode::Pow(a, _) => a.collect_vars(out),
            ExprNode::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            ExprNode::Const(_) | ExprNode::Var(_) => 1,
            ExprNode::Unary(_, a) | ExprNode::Pow(a, _) => 1 + a.node_count(),
            ExprNode::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Direct recursive evaluation; `lookup` supplies variable values.
    pub fn eval_with<F: Fn(usize) -> T + Copy>(&self, lookup: F) -> Result<T> {
        Ok(match self {
            ExprNode::Const(c) => *c,
            ExprNode::Var(i) => lookup(*i),
            ExprNode::Unary(op, a) => op.apply(a.eval_with(lookup)?)?,
            ExprNode::Binary(op, a, b) => op.apply(a.eval_with(lookup)?, b.eval_with(lookup)?)?,
            ExprNode::Pow(a, n) => {
                let base = a.eval_with(lookup)?;
                if *n < 0 && base.is_zero() {
                    return Err(Error::Domain { op: "division" });
                }
                base.powi(*n)
            }
        })
    }

    /// Interval enclosure over the box given by `lookup`.
    pub fn bounds_with<F: Fn(usize) -> Interval<T> + Copy>(&self, lookup: F) -> Result<Interval<T>> {
        match self {
            ExprNode::Const(c) => Ok(Interval::point(*c)),
            ExprNode::Var(i) => Ok(lookup(*i)),
            ExprNode::Unary(op, a) => op.apply_interval(a.bounds_with(lookup)?),
            ExprNode::Binary(op, a, b) => op.apply_interval(a.bounds_with(lookup)?, b.bounds_with(lookup)?),
            ExprNode::Pow(a, n) => a.bounds_with(lookup)?.powi(*n),
        }
    }

    /// Replaces variables for which `value` returns `Some` with constants.
    pub fn substitute<F: Fn(usize) -> Option<T> + Copy>(&self, value: F) -> Self {
        match self {
            ExprNode::Const(c) => ExprNode::Const(*c),
            ExprNode::Var(i) => match value(*i) {
                Some(v) => ExprNode::Const(v),
                None => ExprNode::Var(*i),
            },
            ExprNode::Unary(op, a) => ExprNode::Unary(*op, Box::new(a.substitute(value))),
            ExprNode::Binary(op, a, b) => {
                ExprNode::Binary(*op, Box::new(a.substitute(value)), Box::new(b.substitute(value)))
            }
            ExprNode::Pow(a, n) => ExprNode::Pow(Box::new(a.substitute(value)), *n),
        }
    }

    /// Rewrites variable indices.
    pub fn remap<F: Fn(usize) -> usize + Copy>(&self, map: F) -> Self {
        match self {
            ExprNode::Const(c) => ExprNode::Const(*c),
            ExprNode::Var(i) => ExprNode::Var(map(*i)),
            ExprNode::Unary(op, a) => ExprNode::Unary(*op, Box::new(a.remap(map))),
            ExprNode::Binary(op, a, b) => ExprNode::Binary(*op, Box::new(a.remap(map)), Box::new(b.remap(map))),
            ExprNode::Pow(a, n) => ExprNode::Pow(Box::new(a.remap(map)), *n),
        }
    }

    /// The residual `r` when this expression has the form `r^2`.
    pub fn as_square(&self) -> Option<&ExprNode<T>> {
        match self {
            ExprNode::Pow(inner, 2) => Some(inner),
            _ => None,
        }
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl<T: Scalar> $trait for ExprNode<T> {
            type Output = ExprNode<T>;
            fn $method(self, rhs: Self) -> Self {
                ExprNode::binary($op, self, rhs)
            }
        }
    };
}

expr_binop!(Add, add, BinaryOp::Add);
expr_binop!(Sub, sub, BinaryOp::Sub);
expr_binop!(Mul, mul, BinaryOp::Mul);
expr_binop!(Div, div, BinaryOp::Div);

impl<T: Scalar> Neg for ExprNode<T> {
    type Output = ExprNode<T>;
    fn neg(self) -> Self {
        self.unary(UnaryOp::Neg)
    }
}
