//! Semi-disentangled representation learning for recommendation.
//!
//! Users and items are embedded by block-partitioned stacked autoencoders:
//! an *internal* block supervised by category information, an *external*
//! block supervised by user-item ratings and an unsupervised *other* block.
//! The crate is `no_std` (with `alloc`) and carries every numerical piece:
//! the dense network core, dataset preparation, the model and its exact
//! gradients, the training loop and the evaluation harness. File formats and
//! the command line live in the companion `sdrl` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod model;
pub mod nn;
pub mod train;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
