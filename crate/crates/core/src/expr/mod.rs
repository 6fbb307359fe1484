//! Objective functions as sums of expression-tree terms: evaluation,
//! gradients, restriction, interval bounds and the problem text format.

mod dsl;
mod function;
mod node;
mod tape;

pub use dsl::{expr_to_string, parse_problem, to_dsl};
pub use function::{ObjectiveFunction, PartialAssignment, Term, Variable};
pub use node::{BinaryOp, ExprNode, UnaryOp};
pub use tape::{Scratch, Tape};
