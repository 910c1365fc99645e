use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Train/test partition of rating indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub in_train: Vec<bool>,
}

impl Split {
    pub fn train_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.in_train.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i)
    }

    pub fn test_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.in_train.iter().enumerate().filter(|(_, &t)| !t).map(|(i, _)| i)
    }

    pub fn num_train(&self) -> usize {
        self.in_train.iter().filter(|&&t| t).count()
    }

    pub fn num_test(&self) -> usize {
        self.in_train.len() - self.num_train()
    }
}

/// Number of training ratings: `n * fraction` rounded to nearest, ties down.
pub fn train_count(n: usize, fraction: f64) -> usize {
    let exact = n as f64 * fraction;
    let count = libm::ceil(exact - 0.5);
    (count.max(0.0) as usize).min(n)
}

/// Global seeded random split of ratings into train and test.
///
/// `users[r]` is the user index of rating `r`. After the random draw, every
/// user left without a training rating gets one moved back from test;
/// users are repaired in order of fewest test ratings first (then by index)
/// and the user's earliest test rating is the one moved.
pub fn split_train_test(users: &[usize], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = users.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &r in &order[..train_count(n, train_fraction)] {
        in_train[r] = true;
    }

    let n_users = users.iter().map(|&u| u + 1).max().unwrap_or(0);
    let mut train_per_user = vec![0usize; n_users];
    let mut test_per_user = vec![0usize; n_users];
    let mut first_test = vec![usize::MAX; n_users];
    for (r, &u) in users.iter().enumerate() {
        if in_train[r] {
            train_per_user[u] += 1;
        } else {
            test_per_user[u] += 1;
            first_test[u] = first_test[u].min(r);
        }
    }
    let mut starved: Vec<usize> = (0..n_users)
        .filter(|&u| train_per_user[u] == 0 && test_per_user[u] > 0)
        .collect();
    starved.sort_by_key(|&u| (test_per_user[u], u));
    for u in starved {
        in_train[first_test[u]] = true;
    }
    Ok(Split { in_train })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_ratings_split_eight_two() {
        let users: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let split = split_train_test(&users, 0.8, 7).unwrap();
        assert_eq!(split.num_train(), 8);
        assert_eq!(split.num_test(), 2);
    }

    #[test]
    fn rounding_ties_go_down() {
        assert_eq!(train_count(5, 0.5), 2);
        assert_eq!(train_count(7, 0.5), 3);
        assert_eq!(train_count(10, 0.8), 8);
        assert_eq!(train_count(9, 0.8), 7);
    }

    #[test]
    fn seeded_split_is_reproducible() {
        let users: Vec<usize> = (0..200).map(|i| i % 13).collect();
        let a = split_train_test(&users, 0.8, 42).unwrap();
        let b = split_train_test(&users, 0.8, 42).unwrap();
        assert_eq!(a, b);
        let c = split_train_test(&users, 0.8, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_rating_user_is_repaired_into_train() {
        // user 1 owns only rating 0; find a seed that sends it to test first
        let mut users = vec![1usize];
        users.extend(core::iter::repeat(0).take(9));
        let seed = (0..1000u64)
            .find(|&s| {
                let mut order: Vec<usize> = (0..10).collect();
                order.shuffle(&mut ChaCha20Rng::seed_from_u64(s));
                !order[..8].contains(&0)
            })
            .expect("some seed puts rating 0 in test");
        let split = split_train_test(&users, 0.8, seed).unwrap();
        assert!(split.in_train[0]);
        assert_eq!(split.num_train(), 9);
    }

    #[test]
    fn fraction_bounds() {
        assert!(split_train_test(&[0, 0], 0.0, 1).is_err());
        assert!(split_train_test(&[0, 0], 1.0, 1).is_err());
    }
}
