/// Counters for one recursion node. Evaluation and lattice counts include
/// the node's descendants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecursionStats {
    pub depth: usize,
    pub vars: usize,
    pub terms: usize,
    /// Size of the assigned block `x_C`; equal to `vars` in a base case.
    pub cut: usize,
    pub base_case: bool,
    /// Value-loop rounds, or starts in a base case.
    pub iterations: usize,
    /// Random restarts of the value loop.
    pub restarts: usize,
    pub optimizer_calls: usize,
    pub simplify_calls: usize,
    pub removed_terms: usize,
    /// Removed terms that still had a free variable.
    pub approximated_terms: usize,
    /// Largest number of components seen after a decomposition.
    pub max_components: usize,
    pub total_components: usize,
    pub term_evals: u64,
    pub lattice_points: u64,
    /// Child nodes, only kept when the tree is recorded.
    pub children: Vec<RecursionStats>,
}

impl RecursionStats {
    /// Nodes in the recorded tree.
    pub fn nodes(&self) -> usize {
        1 + self.children.iter().map(Self::nodes).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        self.children.iter().map(|c| 1 + c.height()).max().unwrap_or(0)
    }

    pub fn walk<'s>(&'s self, visit: &mut impl FnMut(&'s RecursionStats)) {
        visit(self);
        for c in &self.children {
            c.walk(visit);
        }
    }
}

/// Tallies over every node of a run, recorded or not.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunTotals {
    pub nodes: usize,
    pub base_cases: usize,
    pub max_depth: usize,
    /// Largest base-case size.
    pub max_base_vars: usize,
    /// Largest component count after one decomposition.
    pub max_components: usize,
    pub iterations: usize,
    pub optimizer_calls: usize,
    pub simplify_calls: usize,
    pub removed_terms: usize,
    pub approximated_terms: usize,
}
