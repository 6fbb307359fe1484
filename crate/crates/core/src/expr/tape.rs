//! Flattened expression tape: one forward sweep for values or interval
//! bounds, one reverse sweep for partial derivatives.

use crate::error::{Error, Result};
use crate::expr::node::{BinaryOp, ExprNode, UnaryOp};
use crate::interval::Interval;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
enum Op<T> {
    Const(T),
    Var(usize),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
    Pow(u32, i32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tape<T> {
    ops: Vec<Op<T>>,
}

/// Reusable buffers for tape sweeps.
#[derive(Debug)]
pub struct Scratch<T> {
    vals: Vec<T>,
    adj: Vec<T>,
    bounds: Vec<Interval<T>>,
}

impl<T: Scalar> Default for Scratch<T> {
    fn default() -> Self {
        Scratch {
            vals: Vec::new(),
            adj: Vec::new(),
            bounds: Vec::new(),
        }
    }
}

impl<T: Scalar> Tape<T> {
    pub fn compile(expr: &ExprNode<T>) -> Self {
        let mut ops = Vec::with_capacity(expr.node_count());
        push(expr, &mut ops);
        Tape { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn forward(&self, x: &[T], vals: &mut Vec<T>) -> Result<T> {
        vals.clear();
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i],
                Op::Unary(u, a) => u.apply(vals[a as usize])?,
                Op::Binary(b, l, r) => b.apply(vals[l as usize], vals[r as usize])?,
                Op::Pow(a, n) => {
                    let base = vals[a as usize];
                    if n < 0 && base.is_zero() {
                        return Err(Error::Domain { op: "division" });
                    }
                    base.powi(n)
                }
            };
            vals.push(v);
        }
        let out = *vals.last().expect("tape is never empty");
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Value of the expression at the dense state `x`.
    pub fn eval(&self, x: &[T], scratch: &mut Scratch<T>) -> Result<T> {
        self.forward(x, &mut scratch.vals)
    }

    /// Value plus a reverse sweep; `sink(var, partial)` is called once per
    /// variable occurrence, so callers accumulate.
    pub fn eval_grad<F: FnMut(usize, T)>(&self, x: &[T], scratch: &mut Scratch<T>, mut sink: F) -> Result<T> {
        let out = self.forward(x, &mut scratch.vals)?;
        let vals = &scratch.vals;
        let adj = &mut scratch.adj;
        adj.clear();
        adj.resize(self.ops.len(), T::zero());
        *adj.last_mut().expect("tape is never empty") = T::one();
        for (pos, op) in self.ops.iter().enumerate().rev() {
            let w = adj[pos];
            if w.is_zero() {
                continue;
            }
            match *op {
                Op::Const(_) => {}
                Op::Var(i) => sink(i, w),
                Op::Unary(u, a) => {
                    let a = a as usize;
                    let v = vals[a];
                    let d = match u {
                        UnaryOp::Neg => -T::one(),
                        UnaryOp::Sin => v.cos(),
                        UnaryOp::Cos => -v.sin(),
                        UnaryOp::Exp => vals[pos],
                        UnaryOp::Log => v.recip(),
                        UnaryOp::Sqrt => (vals[pos] * T::of(2.0)).recip(),
                    };
                    adj[a] += w * d;
                }
                Op::Binary(b, l, r) => {
                    let (l, r) = (l as usize, r as usize);
                    match b {
                        BinaryOp::Add => {
                            adj[l] += w;
                            adj[r] += w;
                        }
                        BinaryOp::Sub => {
                            adj[l] += w;
                            adj[r] -= w;
                        }
                        BinaryOp::Mul => {
                            let (vl, vr) = (vals[l], vals[r]);
                            adj[l] += w * vr;
                            adj[r] += w * vl;
                        }
                        BinaryOp::Div => {
                            let vr = vals[r];
                            adj[l] += w / vr;
                            adj[r] -= w * vals[pos] / vr;
                        }
                    }
                }
                Op::Pow(a, n) => {
                    let a = a as usize;
                    let d = if n == 0 {
                        T::zero()
                    } else {
                        T::of(n as f64) * vals[a].powi(n - 1)
                    };
                    adj[a] += w * d;
                }
            }
        }
        Ok(out)
    }

    /// Interval enclosure of the expression over the box given by `lookup`.
    pub fn bounds<F: Fn(usize) -> Interval<T>>(&self, lookup: F, scratch: &mut Scratch<T>) -> Result<Interval<T>> {
        let b = &mut scratch.bounds;
        b.clear();
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => Interval::point(c),
                Op::Var(i) => lookup(i),
                Op::Unary(u, a) => u.apply_interval(b[a as usize])?,
                Op::Binary(o, l, r) => o.apply_interval(b[l as usize], b[r as usize])?,
                Op::Pow(a, n) => b[a as usize].powi(n)?,
            };
            b.push(v);
        }
        Ok(*b.last().expect("tape is never empty"))
    }
}

fn push<T: Scalar>(expr: &ExprNode<T>, ops: &mut Vec<Op<T>>) -> u32 {
    let op = match expr {
        ExprNode::Const(c) => Op::Const(*c),
        ExprNode::Var(i) => Op::Var(*i),
        ExprNode::Unary(u, a) => {
            let a = push(a, ops);
            Op::Unary(*u, a)
        }
        ExprNode::Binary(b, l, r) => {
            let l = push(l, ops);
            let r = push(r, ops);
            Op::Binary(*b, l, r)
        }
        ExprNode::Pow(a, n) => {
            let a = push(a, ops);
            Op::Pow(a, *n)
        }
    };
    ops.push(op);
    (ops.len() - 1) as u32
}
