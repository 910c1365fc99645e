use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::matrix::DenseMatrix;

/// MovieLens marker for movies without genres; never a vocabulary entry.
pub const NO_GENRES_SENTINEL: &str = "(no genres listed)";

/// Item-category incidence and user category preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMatrix {
    /// Sorted category names; column `q` of both matrices is `vocabulary[q]`.
    pub vocabulary: Vec<String>,
    /// `[items × categories]`, entries in {0, 1}.
    pub items: DenseMatrix,
    /// `[users × categories]`, entries in [0, 1].
    pub users: DenseMatrix,
}

impl CategoryMatrix {
    pub fn num_categories(&self) -> usize {
        self.vocabulary.len()
    }
}

/// Sorted, deduplicated vocabulary over every category set, minus the
/// excluded names and empty strings.
pub fn build_vocabulary<'a, I>(sets: I, excluded: &[&str]) -> Vec<String>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    let mut vocab: BTreeSet<&str> = BTreeSet::new();
    for set in sets {
        for c in set {
            let c = c.as_str();
            if !c.is_empty() && c != NO_GENRES_SENTINEL && !excluded.contains(&c) {
                vocab.insert(c);
            }
        }
    }
    vocab.into_iter().map(String::from).collect()
}

/// Binary `[items × vocabulary]` matrix; names outside the vocabulary are ignored.
pub fn item_category_matrix(item_sets: &[BTreeSet<String>], vocabulary: &[String]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(item_sets.len(), vocabulary.len());
    for (i, set) in item_sets.iter().enumerate() {
        for c in set {
            if let Ok(q) = vocabulary.binary_search(c) {
                m.set(i, q, 1.0);
            }
        }
    }
    m
}

/// Rating-weighted category sums per user, scaled so each non-empty row peaks at 1.
///
/// `train` yields `(user, item, normalized_rating)`; only positive ratings count.
pub fn derive_user_category_preferences<I>(
    train: I,
    num_users: usize,
    item_categories: &DenseMatrix,
) -> DenseMatrix
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    let q = item_categories.cols();
    let mut prefs = DenseMatrix::zeros(num_users, q);
    for (u, i, r) in train {
        if r > 0.0 {
            crate::matrix::axpy(r, item_categories.row(i), prefs.row_mut(u));
        }
    }
    for u in 0..num_users {
        let row = prefs.row_mut(u);
        let max = row.iter().copied().fold(0.0f64, f64::max);
        if max > 0.0 {
            for v in row.iter_mut() {
                *v /= max;
            }
        }
    }
    prefs
}
