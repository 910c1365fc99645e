use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::classify::ClassificationScores;
use super::ranking::{f1, ndcg_at_k, precision_recall_f1_at_k, topk_recommend};
use crate::data::InteractionDataset;
use crate::error::{Error, Result};
use crate::model::{BlockLayout, EmbeddingSet};

/// Macro averages over evaluated users at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingMetrics {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    /// Harmonic mean of the macro precision and recall above.
    pub f1: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingEvaluation {
    pub per_k: Vec<RankingMetrics>,
    /// Users with at least one test item and one eligible candidate.
    pub users_evaluated: usize,
    /// Users left out of the averages.
    pub users_excluded: usize,
}

impl RankingEvaluation {
    pub fn at(&self, k: usize) -> Option<&RankingMetrics> {
        self.per_k.iter().find(|m| m.k == k)
    }
}

/// Validates and returns a K list: non-empty, positive, no repeats.
pub fn check_k_list(k_list: &[usize]) -> Result<()> {
    if k_list.is_empty() {
        return Err(Error::Config("K list is empty".into()));
    }
    if k_list.contains(&0) {
        return Err(Error::Config("K values must be at least 1".into()));
    }
    let mut sorted = k_list.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != k_list.len() {
        return Err(Error::Config(format!("K list {k_list:?} repeats a value")));
    }
    Ok(())
}

/// Ranks test items for every user and macro-averages the metrics.
///
/// Every list is checked against the user's training items; a leak is a
/// state error rather than a silently inflated score.
pub fn evaluate_ranking(
    embeddings: &EmbeddingSet,
    dataset: &InteractionDataset,
    k_list: &[usize],
) -> Result<RankingEvaluation> {
    check_k_list(k_list)?;
    if embeddings.users.rows() != dataset.num_users() || embeddings.items.rows() != dataset.num_items() {
        return Err(Error::shape(
            "evaluate_ranking",
            format!("{} users, {} items", dataset.num_users(), dataset.num_items()),
            format!("{} users, {} items", embeddings.users.rows(), embeddings.items.rows()),
        ));
    }
    let train = dataset.train_items_by_user();
    let test = dataset.test_items_by_user();
    let k_max = *k_list.iter().max().expect("non-empty");
    let lists = topk_recommend(&embeddings.users, &embeddings.items, &train, k_max)?;

    let mut sums = alloc::vec![[0.0f64; 3]; k_list.len()];
    let mut evaluated = 0usize;
    for list in &lists {
        let seen = &train[list.user];
        if let Some(&leak) = list.items.iter().find(|i| seen.binary_search(i).is_ok()) {
            return Err(Error::State(format!(
                "ranking for user {} contains training item {leak}",
                list.user
            )));
        }
        let relevant = &test[list.user];
        if relevant.is_empty() || list.items.is_empty() {
            continue;
        }
        evaluated += 1;
        for (s, &k) in sums.iter_mut().zip(k_list) {
            let (p, r, _) = precision_recall_f1_at_k(&list.items, relevant, k).expect("non-empty relevant set");
            s[0] += p;
            s[1] += r;
            s[2] += ndcg_at_k(&list.items, relevant, k).expect("non-empty relevant set");
        }
    }
    if evaluated == 0 {
        return Err(Error::Domain("no user has a test item to evaluate".into()));
    }
    let n = evaluated as f64;
    let per_k = k_list
        .iter()
        .zip(&sums)
        .map(|(&k, s)| {
            let (precision, recall) = (s[0] / n, s[1] / n);
            RankingMetrics {
                k,
                precision,
                recall,
                f1: f1(precision, recall),
                ndcg: s[2] / n,
            }
        })
        .collect();
    Ok(RankingEvaluation {
        per_k,
        users_evaluated: evaluated,
        users_excluded: lists.len() - evaluated,
    })
}

/// Everything measured for one trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub variant: String,
    pub layout: BlockLayout,
    pub seed: u64,
    pub dataset: String,
    pub ranking: RankingEvaluation,
    pub classification: ClassificationScores,
}
