//! The block-partitioned autoencoder, its loss and its embeddings.

pub mod embeddings;
pub mod forward;
pub mod layout;
pub mod loss;
pub mod params;

pub use embeddings::EmbeddingSet;
pub use forward::{
    encode, encode_batch, predict_categories, predict_ratings, predict_ratings_external, rating_logits,
    reconstruct, reconstruct_batch,
};
pub use layout::{Block, BlockLayout, Proportion, Variant, VariantConfig};
pub use loss::{loss_and_gradients, loss_components, Batch, LossComponents, LossWeights, ModelInputs};
pub use params::{ModelShape, SdrlParams, Side, SideParams, TwoLayer};
