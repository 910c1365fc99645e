use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ratings::RawRating;
use crate::error::{Error, Result};

/// Keep-mask after repeatedly dropping users and items with fewer than
/// `min_count` surviving interactions, until nothing changes.
///
/// `pairs` holds `(user, item)` indices; user and item index spaces are
/// independent and need not be contiguous.
pub fn filter_pairs_min_interactions(pairs: &[(usize, usize)], min_count: usize) -> Result<Vec<bool>> {
    if min_count == 0 {
        return Err(Error::Config(String::from("min_count must be at least 1")));
    }
    let n_users = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
    let n_items = pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    let mut keep = vec![true; pairs.len()];
    loop {
        let mut user_count = vec![0usize; n_users];
        let mut item_count = vec![0usize; n_items];
        for (&(u, i), _) in pairs.iter().zip(&keep).filter(|(_, &k)| k) {
            user_count[u] += 1;
            item_count[i] += 1;
        }
        let mut changed = false;
        for (&(u, i), k) in pairs.iter().zip(keep.iter_mut()) {
            if *k && (user_count[u] < min_count || item_count[i] < min_count) {
                *k = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !keep.iter().any(|&k| k) {
        return Err(Error::Domain(String::from("dataset vanished under filtering")));
    }
    Ok(keep)
}

/// [`filter_pairs_min_interactions`] over raw rows keyed by external ids.
pub fn filter_min_interactions(ratings: &[RawRating], min_count: usize) -> Result<Vec<RawRating>> {
    let mut users: BTreeMap<&str, usize> = BTreeMap::new();
    let mut items: BTreeMap<&str, usize> = BTreeMap::new();
    let pairs: Vec<(usize, usize)> = ratings
        .iter()
        .map(|r| {
            let nu = users.len();
            let u = *users.entry(r.user.as_str()).or_insert(nu);
            let ni = items.len();
            let i = *items.entry(r.item.as_str()).or_insert(ni);
            (u, i)
        })
        .collect();
    let keep = filter_pairs_min_interactions(&pairs, min_count)?;
    Ok(ratings
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn grid(users: usize, items: usize) -> Vec<RawRating> {
        let mut out = Vec::new();
        for u in 0..users {
            for i in 0..items {
                out.push(RawRating::new(format!("u{u}"), format!("i{i}"), 3.0, 0));
            }
        }
        out
    }

    #[test]
    fn already_dense_is_unchanged() {
        let data = grid(20, 20);
        assert_eq!(filter_min_interactions(&data, 20).unwrap(), data);
    }

    #[test]
    fn lone_sparse_user_vanishes() {
        let data: Vec<RawRating> = (0..5)
            .map(|i| RawRating::new("solo", format!("i{i}"), 4.0, 0))
            .collect();
        assert!(matches!(
            filter_min_interactions(&data, 20),
            Err(Error::Domain(msg)) if msg.contains("vanished")
        ));
    }

    #[test]
    fn cascade_reaches_fixpoint() {
        // 3x3 block plus user x on item i0 and item j rated only by u0.
        // Pass 1 drops x (1 rating) and j (1 rating), u0 then keeps 3.
        let mut data = grid(3, 3);
        data.push(RawRating::new("x", "i0", 1.0, 0));
        data.push(RawRating::new("u0", "j", 1.0, 0));
        let out = filter_min_interactions(&data, 3).unwrap();
        assert_eq!(out, grid(3, 3));
        assert_eq!(filter_min_interactions(&out, 3).unwrap(), out);
    }

    #[test]
    fn zero_threshold_rejected() {
        assert!(filter_pairs_min_interactions(&[(0, 0)], 0).is_err());
    }
}
