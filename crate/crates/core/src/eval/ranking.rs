//! Top-K lists and per-user ranking metrics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Recommended items of one user, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub user: usize,
    pub items: Vec<usize>,
    pub k: usize,
}

/// The `k` best-scoring items outside `excluded`, ties going to the lower index.
///
/// `excluded` must be sorted ascending.
pub fn top_k(scores: &[f64], excluded: &[usize], k: usize) -> Vec<usize> {
    let mut eligible: Vec<usize> = Vec::with_capacity(scores.len());
    let mut skip = excluded.iter().peekable();
    for i in 0..scores.len() {
        while skip.peek().is_some_and(|&&e| e < i) {
            skip.next();
        }
        if skip.peek() == Some(&&i) {
            continue;
        }
        eligible.push(i);
    }
    let order = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < eligible.len() {
        eligible.select_nth_unstable_by(k, order);
        eligible.truncate(k);
    }
    eligible.sort_unstable_by(order);
    eligible
}

/// Ranks every item for every user by the matching score of their
/// embeddings, masking each user's training items.
///
/// Scores are the embedding dot products; the sigmoid on top of them is
/// monotone and only adds ties once it saturates.
pub fn topk_recommend(
    users: &DenseMatrix,
    items: &DenseMatrix,
    train_items_by_user: &[Vec<usize>],
    k: usize,
) -> Result<Vec<RankedList>> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if users.cols() != items.cols() {
        return Err(Error::shape("topk_recommend", users.cols(), items.cols()));
    }
    if train_items_by_user.len() != users.rows() {
        return Err(Error::shape("topk_recommend users", users.rows(), train_items_by_user.len()));
    }
    let mut scores = alloc::vec![0.0; items.rows()];
    let mut out = Vec::with_capacity(users.rows());
    for (u, zu) in users.iter_rows().enumerate() {
        for (s, zi) in scores.iter_mut().zip(items.iter_rows()) {
            *s = dot(zu, zi);
        }
        let mut excluded = train_items_by_user[u].clone();
        excluded.sort_unstable();
        out.push(RankedList {
            user: u,
            items: top_k(&scores, &excluded, k),
            k,
        });
    }
    Ok(out)
}

fn hits<'a>(ranked: &'a [usize], relevant: &'a [usize], k: usize) -> impl Iterator<Item = usize> + 'a {
    ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(move |(_, i)| relevant.contains(i))
        .map(|(rank, _)| rank)
}

/// Precision `hits / K`, recall `hits / |relevant|` and their harmonic mean.
///
/// `relevant` is a set (no repeats). Returns `None` when it is empty.
pub fn precision_recall_f1_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> Option<(f64, f64, f64)> {
    if relevant.is_empty() || k == 0 {
        return None;
    }
    let h = hits(ranked, relevant, k).count() as f64;
    let p = h / k as f64;
    let r = h / relevant.len() as f64;
    Some((p, r, f1(p, r)))
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Binary-gain nDCG with a `log2(rank + 1)` discount; the ideal list holds
/// `min(K, |relevant|)` hits.
pub fn ndcg_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> Option<f64> {
    if relevant.is_empty() || k == 0 {
        return None;
    }
    let gain = |rank0: usize| 1.0 / libm::log2(rank0 as f64 + 2.0);
    let dcg: f64 = hits(ranked, relevant, k).map(gain).sum();
    let idcg: f64 = (0..k.min(relevant.len())).map(gain).sum();
    Some(dcg / idcg)
}
