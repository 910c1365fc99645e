//! Dataset preparation: deduplication, filtering, splitting, normalisation,
//! category supervision targets and initial node features.

mod categories;
mod dataset;
mod features;
mod filter;
mod ratings;
mod split;
pub mod synthetic;

pub use categories::{
    build_vocabulary, derive_user_category_preferences, item_category_matrix, CategoryMatrix,
    NO_GENRES_SENTINEL,
};
pub use dataset::{prepare, DatasetSummary, InteractionDataset, PrepareOptions, PreparedData, Rating};
pub use features::NodeFeatures;
pub use filter::{filter_min_interactions, filter_pairs_min_interactions};
pub use ratings::{dedup_keep_latest, id_order, normalize_ratings, RawRating};
pub use split::{split_train_test, train_count, Split};
