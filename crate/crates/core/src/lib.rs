//! Nonconvex optimization by recursive decomposition into approximately
//! locally independent subspaces.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix it to `f64`, which is what the benchmark
//! generators and the command-line harness use.

pub mod error;
pub mod expr;
pub mod interval;
pub mod optim;
pub mod problems;
pub mod rdis;
pub mod scalar;
pub mod structure;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Interval = interval::Interval<f64>;
pub type Objective = expr::ObjectiveFunction<f64>;
pub type Expr = expr::ExprNode<f64>;
pub type Assignment = expr::PartialAssignment<f64>;
