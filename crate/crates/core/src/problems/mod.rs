//! Benchmark generators: tree-structured sinusoids, Lennard-Jones side-chain
//! chains and synthetic bundle adjustment, plus a reader and writer for
//! plain-text bundle adjustment files.

pub mod bal;
pub mod bundle;
pub mod ljchain;
pub mod sinusoid;

pub use bal::{load_bal, read_bal, write_bal, BalData};
pub use bundle::{
    bundle_blocks, bundle_objective, camera_var, make_bundle, point_var, projection, rotation_vector, Bundle,
    BundleSpec, Observation, CAMERA_PARAMS, POINT_PARAMS,
};
pub use ljchain::{chain_blocks, lj_energy, lj_term, make_lj_chain, ChainSpec};
pub use sinusoid::{make_sinusoid, sinusoid_blocks, tree_depths, SinusoidSpec, SIZE_CAP};

use crate::error::{Error, Result};

/// Variable blocks for block coordinate descent; the blocks partition the
/// variables `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    blocks: Vec<Vec<usize>>,
}

impl BlockSpec {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in blocks.iter().flatten() {
            if v >= n {
                return Err(Error::UnknownVariable(v));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::OverlappingBlocks(v));
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::MissingValue(v));
        }
        Ok(BlockSpec {
            blocks: blocks.into_iter().filter(|b| !b.is_empty()).collect(),
        })
    }

    /// A single block holding every variable.
    pub fn whole(n: usize) -> Self {
        BlockSpec {
            blocks: vec![(0..n).collect()],
        }
    }

    /// One block per variable.
    pub fn singletons(n: usize) -> Self {
        BlockSpec {
            blocks: (0..n).map(|v| vec![v]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
