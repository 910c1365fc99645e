use super::forward::encode_batch;
use super::layout::{Block, BlockLayout};
use super::params::{SdrlParams, Side};
use crate::data::NodeFeatures;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Rows encoded per forward call when embedding a whole side.
const CHUNK: usize = 256;

/// Embeddings of every user and item under one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub layout: BlockLayout,
    /// `[users × k]`
    pub users: DenseMatrix,
    /// `[items × k]`
    pub items: DenseMatrix,
}

impl EmbeddingSet {
    pub fn new(layout: BlockLayout, users: DenseMatrix, items: DenseMatrix) -> Result<Self> {
        if users.cols() != layout.k() || items.cols() != layout.k() {
            return Err(Error::shape("EmbeddingSet", layout.k(), users.cols().max(items.cols())));
        }
        Ok(Self { layout, users, items })
    }

    /// Encodes every node of both sides.
    pub fn compute(params: &SdrlParams, features: &NodeFeatures) -> Result<Self> {
        let users = encode_all(params, Side::User, &features.users)?;
        let items = encode_all(params, Side::Item, &features.items)?;
        Ok(Self {
            layout: params.layout,
            users,
            items,
        })
    }

    pub fn k(&self) -> usize {
        self.layout.k()
    }

    pub fn side(&self, side: Side) -> &DenseMatrix {
        match side {
            Side::User => &self.users,
            Side::Item => &self.items,
        }
    }

    /// The columns of one block, e.g. the internal slice of every item.
    pub fn block(&self, side: Side, block: Block) -> DenseMatrix {
        self.side(side).columns(self.layout.range(block))
    }
}

fn encode_all(params: &SdrlParams, side: Side, features: &DenseMatrix) -> Result<DenseMatrix> {
    let k = params.layout.k();
    let mut out = DenseMatrix::zeros(features.rows(), k);
    let mut start = 0;
    while start < features.rows() {
        let end = (start + CHUNK).min(features.rows());
        let idx: alloc::vec::Vec<usize> = (start..end).collect();
        let z = encode_batch(params, side, &features.select_rows(&idx))?;
        for (r, row) in z.iter_rows().enumerate() {
            out.row_mut(start + r).copy_from_slice(row);
        }
        start = end;
    }
    Ok(out)
}
