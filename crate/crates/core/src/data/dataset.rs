use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::categories::{
    build_vocabulary, derive_user_category_preferences, item_category_matrix, CategoryMatrix,
};
use super::filter::filter_min_interactions;
use super::ratings::{dedup_keep_latest, id_order, normalize_ratings, RawRating};
use super::split::{split_train_test, Split};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub raw: f64,
}

/// Indexed ratings with their train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    /// External user ids; position is the contiguous index.
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub ratings: Vec<Rating>,
    /// Rating-scale maximum used for normalisation.
    pub r_max: f64,
    pub split: Split,
}

impl InteractionDataset {
    /// Checks index bounds, pair uniqueness, rating range and that every
    /// user has at least one training rating.
    pub fn new(
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        ratings: Vec<Rating>,
        r_max: f64,
        split: Split,
    ) -> Result<Self> {
        let ds = Self {
            user_ids,
            item_ids,
            ratings,
            r_max,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.split.in_train.len() != self.ratings.len() {
            return Err(Error::Data(format!(
                "split covers {} ratings, dataset has {}",
                self.split.in_train.len(),
                self.ratings.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for r in &self.ratings {
            if r.user >= self.num_users() || r.item >= self.num_items() {
                return Err(Error::Data(format!(
                    "rating ({}, {}) outside {} users x {} items",
                    r.user,
                    r.item,
                    self.num_users(),
                    self.num_items()
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::Data(format!("duplicate rating for pair ({}, {})", r.user, r.item)));
            }
        }
        let raw: Vec<f64> = self.ratings.iter().map(|r| r.raw).collect();
        normalize_ratings(&raw, self.r_max)?;
        let mut has_train = vec![false; self.num_users()];
        for r in self.train_ratings() {
            has_train[r.user] = true;
        }
        if let Some(u) = has_train.iter().position(|&t| !t) {
            return Err(Error::Data(format!(
                "user {} has no training rating",
                self.user_ids[u]
            )));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn normalized(&self, r: &Rating) -> f64 {
        r.raw / self.r_max
    }

    pub fn train_ratings(&self) -> impl Iterator<Item = &Rating> + '_ {
        self.ratings
            .iter()
            .zip(&self.split.in_train)
            .filter(|(_, &t)| t)
            .map(|(r, _)| r)
    }

    pub fn test_ratings(&self) -> impl Iterator<Item = &Rating> + '_ {
        self.ratings
            .iter()
            .zip(&self.split.in_train)
            .filter(|(_, &t)| !t)
            .map(|(r, _)| r)
    }

    /// `(user, item, normalized rating)` over the training split.
    pub fn train_normalized(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.train_ratings().map(move |r| (r.user, r.item, r.raw / self.r_max))
    }

    /// Sorted item indices per user from one side of the split.
    fn items_by_user(&self, train: bool) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_users()];
        for (r, &t) in self.ratings.iter().zip(&self.split.in_train) {
            if t == train {
                out[r.user].push(r.item);
            }
        }
        for v in &mut out {
            v.sort_unstable();
        }
        out
    }

    pub fn train_items_by_user(&self) -> Vec<Vec<usize>> {
        self.items_by_user(true)
    }

    pub fn test_items_by_user(&self) -> Vec<Vec<usize>> {
        self.items_by_user(false)
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_ids.binary_search_by(|p| id_order(p, id)).ok()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_ids.binary_search_by(|p| id_order(p, id)).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOptions {
    pub min_count: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// Rating-scale maximum from dataset metadata (5.0 for MovieLens and Amazon).
    pub rating_scale_max: f64,
    /// Category names kept out of the vocabulary besides the no-genre sentinel.
    pub excluded_categories: Vec<String>,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            min_count: 20,
            train_fraction: 0.8,
            seed: 0,
            rating_scale_max: 5.0,
            excluded_categories: Vec::new(),
        }
    }
}

/// Table-style dataset statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub users: usize,
    /// Distinct items that appear in the ratings.
    pub items: usize,
    /// Items listed in the item/category catalogue.
    pub catalog_items: usize,
    pub ratings: usize,
    pub categories: usize,
    /// `ratings / (users × catalog_items)`.
    pub density: f64,
}

impl DatasetSummary {
    fn new(users: usize, items: usize, catalog_items: usize, ratings: usize, categories: usize) -> Self {
        let cells = users as f64 * catalog_items as f64;
        Self {
            users,
            items,
            catalog_items,
            ratings,
            categories,
            density: if cells > 0.0 { ratings as f64 / cells } else { 0.0 },
        }
    }
}

/// Everything the model needs, built from raw ratings and an item catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub dataset: InteractionDataset,
    pub categories: CategoryMatrix,
    /// Statistics of the deduplicated input, before any filtering.
    pub raw_summary: DatasetSummary,
    pub summary: DatasetSummary,
}

impl PreparedData {
    /// Reassembles prepared data from an indexed dataset and its item
    /// category matrix, recomputing user preferences from training ratings.
    pub fn from_parts(
        dataset: InteractionDataset,
        vocabulary: Vec<String>,
        item_categories: DenseMatrix,
        raw_summary: DatasetSummary,
    ) -> Result<Self> {
        if item_categories.rows() != dataset.num_items() || item_categories.cols() != vocabulary.len() {
            return Err(Error::shape(
                "PreparedData::from_parts",
                format!("[{} x {}]", dataset.num_items(), vocabulary.len()),
                format!("[{} x {}]", item_categories.rows(), item_categories.cols()),
            ));
        }
        if item_categories.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Data("item category matrix must be binary".to_string()));
        }
        if let Some(i) = (0..item_categories.rows()).find(|&i| item_categories.row(i).iter().all(|&v| v == 0.0)) {
            return Err(Error::Data(format!("item {} has no category", dataset.item_ids[i])));
        }
        let users = derive_user_category_preferences(
            dataset.train_normalized(),
            dataset.num_users(),
            &item_categories,
        );
        let summary = DatasetSummary::new(
            dataset.num_users(),
            dataset.num_items(),
            dataset.num_items(),
            dataset.ratings.len(),
            vocabulary.len(),
        );
        Ok(Self {
            dataset,
            categories: CategoryMatrix {
                vocabulary,
                items: item_categories,
                users,
            },
            raw_summary,
            summary,
        })
    }
}

/// Runs the full preparation pipeline.
///
/// Steps: deduplicate (latest timestamp wins), build the category
/// vocabulary, drop ratings of items without any vocabulary category,
/// filter users and items below `min_count` to a fixpoint, index ids,
/// split, and derive category targets from the training split.
pub fn prepare(
    raw: Vec<RawRating>,
    catalog: &BTreeMap<String, BTreeSet<String>>,
    options: &PrepareOptions,
) -> Result<PreparedData> {
    let raw = dedup_keep_latest(raw);
    if raw.is_empty() {
        return Err(Error::Domain("no ratings to prepare".to_string()));
    }
    let excluded: Vec<&str> = options.excluded_categories.iter().map(String::as_str).collect();
    let vocabulary = build_vocabulary(catalog.values(), &excluded);
    if vocabulary.is_empty() {
        return Err(Error::Domain("category vocabulary is empty".to_string()));
    }

    let raw_users: BTreeSet<&str> = raw.iter().map(|r| r.user.as_str()).collect();
    let raw_items: BTreeSet<&str> = raw.iter().map(|r| r.item.as_str()).collect();
    let raw_summary = DatasetSummary::new(
        raw_users.len(),
        raw_items.len(),
        catalog.len(),
        raw.len(),
        vocabulary.len(),
    );

    let has_category = |item: &str| {
        catalog
            .get(item)
            .is_some_and(|set| set.iter().any(|c| vocabulary.binary_search(c).is_ok()))
    };
    let categorised: Vec<RawRating> = raw.into_iter().filter(|r| has_category(&r.item)).collect();
    let filtered = filter_min_interactions(&categorised, options.min_count)?;

    let mut user_ids: Vec<String> = filtered.iter().map(|r| r.user.clone()).collect();
    user_ids.sort_by(|a, b| id_order(a, b));
    user_ids.dedup();
    let mut item_ids: Vec<String> = filtered.iter().map(|r| r.item.clone()).collect();
    item_ids.sort_by(|a, b| id_order(a, b));
    item_ids.dedup();
    let find = |ids: &[String], id: &str| {
        ids.binary_search_by(|p| id_order(p, id))
            .expect("id collected from the same rows")
    };
    let ratings: Vec<Rating> = filtered
        .iter()
        .map(|r| Rating {
            user: find(&user_ids, &r.user),
            item: find(&item_ids, &r.item),
            raw: r.rating,
        })
        .collect();

    let users: Vec<usize> = ratings.iter().map(|r| r.user).collect();
    let split = split_train_test(&users, options.train_fraction, options.seed)?;
    let item_sets: Vec<BTreeSet<String>> = item_ids
        .iter()
        .map(|id| catalog.get(id).cloned().unwrap_or_default())
        .collect();
    let item_categories = item_category_matrix(&item_sets, &vocabulary);
    let dataset = InteractionDataset::new(user_ids, item_ids, ratings, options.rating_scale_max, split)?;
    PreparedData::from_parts(dataset, vocabulary, item_categories, raw_summary)
}
