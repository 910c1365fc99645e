use super::dataset::InteractionDataset;
use crate::matrix::DenseMatrix;

/// Initial node features: each user's normalised training-rating row over
/// all items, and each item's column over all users.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    /// `[users × items]`; doubles as the dense training rating target.
    pub users: DenseMatrix,
    /// `[items × users]`, the exact transpose of `users`.
    pub items: DenseMatrix,
}

impl NodeFeatures {
    pub fn build(dataset: &InteractionDataset) -> Self {
        let mut users = DenseMatrix::zeros(dataset.num_users(), dataset.num_items());
        for (u, i, r) in dataset.train_normalized() {
            users.set(u, i, r);
        }
        let items = users.transpose();
        Self { users, items }
    }

    /// Dense normalised training rating of `(user, item)`, zero if unobserved.
    #[inline]
    pub fn rating(&self, user: usize, item: usize) -> f64 {
        self.users.get(user, item)
    }
}
