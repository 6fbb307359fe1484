//! Term/variable incidence: the hypergraph view used to pick cutsets and the
//! dynamic bipartite graph used to find independent components.

mod graph;
mod hypergraph;
mod partition;

pub use graph::{Component, ComponentView, Entity, TermVarGraph};
pub use hypergraph::{build_hypergraph, Hypergraph};
pub use partition::{partition_cutset, PartitionResult, DEFAULT_BALANCE, DEFAULT_PARTS};
