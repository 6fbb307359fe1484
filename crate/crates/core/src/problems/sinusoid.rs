use crate::error::{Error, Result};
use crate::expr::{ExprNode, ObjectiveFunction, Variable};

/// Largest number of terms a generated sinusoid may have.
pub const SIZE_CAP: usize = 5_000_000;

/// Multimodal sinusoid over a complete `k`-ary tree of height `h`, counted
/// in edges, so the tree has `h + 1` levels.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidSpec {
    pub height: usize,
    pub branching: usize,
    pub arity: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Every variable's domain is `[-bound, bound]`.
    pub bound: f64,
}

impl SinusoidSpec {
    pub fn new(height: usize, branching: usize, arity: usize) -> Self {
        SinusoidSpec {
            height,
            branching,
            arity,
            c0: 0.6,
            c1: 0.1,
            c2: 12.0,
            bound: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 1 || self.branching < 2 || self.arity < 2 || !self.arity.is_multiple_of(2) {
            return Err(Error::Spec(
                "sinusoid needs height >= 1, branching >= 2 and an even arity >= 2".into(),
            ));
        }
        if !(self.bound > 0.0) {
            return Err(Error::Spec("sinusoid bound must be positive".into()));
        }
        Ok(())
    }

    /// Number of tree vertices, `(k^(h+1) - 1) / (k - 1)`.
    pub fn num_variables(&self) -> Option<usize> {
        let mut total = 0usize;
        let mut level = 1usize;
        for _ in 0..=self.height {
            total = total.checked_add(level)?;
            level = level.checked_mul(self.branching)?;
        }
        Some(total)
    }
}

/// Depth of every vertex in BFS order; children of `i` are
/// `k*i + 1 ..= k*i + k`.
pub fn tree_depths(spec: &SinusoidSpec) -> Vec<usize> {
    let n = spec.num_variables().unwrap_or(0);
    let mut depth = vec![0; n];
    for i in 1..n {
        depth[i] = depth[(i - 1) / spec.branching] + 1;
    }
    depth
}

/// Builds the sinusoid. Each vertex `i` contributes the two terms `c0*x_i`
/// and `c1*x_i^2`. Each vertical path of `L` vertices, `L` even and
/// `2 <= L <= arity`, contributes `c2 * sin(x_top) * ... * sin(x_bottom)`;
/// paths are listed by bottom vertex, shortest first.
///
/// With `h = 11, k = 2` this gives 4095 variables and 16372, 24404 and 30036
/// terms for arity 4, 8 and 12.
pub fn make_sinusoid(spec: &SinusoidSpec) -> Result<ObjectiveFunction<f64>> {
    spec.validate()?;
    let n = spec
        .num_variables()
        .filter(|&n| n <= SIZE_CAP)
        .ok_or_else(|| Error::Spec("sinusoid exceeds the size cap".into()))?;
    let depth = tree_depths(spec);
    let paths: usize = depth.iter().map(|&d| (d + 1).min(spec.arity) / 2).sum();
    if 2 * n + paths > SIZE_CAP {
        return Err(Error::Spec(format!(
            "sinusoid would have {} terms, above the cap of {SIZE_CAP}",
            2 * n + paths
        )));
    }

    let variables = (0..n)
        .map(|i| Variable::new(i, format!("x{i}"), -spec.bound, spec.bound))
        .collect::<Result<Vec<_>>>()?;
    let mut exprs = Vec::with_capacity(2 * n + paths);
    for i in 0..n {
        let x = ExprNode::var(i);
        exprs.push(ExprNode::constant(spec.c0) * x.clone());
        exprs.push(ExprNode::constant(spec.c1) * x.powi(2));
    }
    for bottom in 0..n {
        let mut path = vec![bottom];
        let mut v = bottom;
        while path.len() < spec.arity && v > 0 {
            v = (v - 1) / spec.branching;
            path.push(v);
            if path.len() % 2 == 0 {
                let sines = path.iter().rev().map(|&i| ExprNode::var(i).sin());
                exprs.push(ExprNode::constant(spec.c2) * ExprNode::product(sines));
            }
        }
    }
    ObjectiveFunction::new(variables, exprs)
}

/// Blocks of vertices for block-coordinate descent: the tree is cut into
/// subtrees of `levels` consecutive depths.
pub fn sinusoid_blocks(spec: &SinusoidSpec, levels: usize) -> Vec<Vec<usize>> {
    let levels = levels.max(1);
    let depth = tree_depths(spec);
    let n = depth.len();
    let mut root = vec![0usize; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of_root = std::collections::HashMap::new();
    for i in 0..n {
        root[i] = if depth[i].is_multiple_of(levels) {
            i
        } else {
            root[(i - 1) / spec.branching]
        };
        let b = *block_of_root.entry(root[i]).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(i);
    }
    blocks
}
