//! Seeded generator of small rating datasets with category structure.
//!
//! Users prefer a few categories; the items they rate and the values they
//! give follow those preferences plus a low-rank taste term, so both the
//! category targets and the rating targets carry learnable signal.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::ratings::RawRating;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub users: usize,
    pub items: usize,
    pub categories: usize,
    /// Capped at `items`; equal to it gives a dense rating matrix.
    pub ratings_per_user: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            users: 60,
            items: 80,
            categories: 6,
            ratings_per_user: 30,
            seed: 7,
        }
    }
}

/// Raw ratings plus an item → category-set catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub ratings: Vec<RawRating>,
    pub catalog: BTreeMap<String, BTreeSet<String>>,
}

pub fn category_name(q: usize) -> String {
    format!("genre{q:02}")
}

pub fn synthetic(spec: SyntheticSpec) -> SyntheticData {
    const TASTE: usize = 3;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let q = spec.categories.max(1);

    let mut item_cats: Vec<Vec<usize>> = Vec::with_capacity(spec.items);
    let mut item_taste: Vec<[f64; TASTE]> = Vec::with_capacity(spec.items);
    let mut popularity: Vec<f64> = Vec::with_capacity(spec.items);
    for i in 0..spec.items {
        let mut cats = alloc::vec![rng.gen_range(0..q)];
        for p in [0.45, 0.15] {
            if rng.gen::<f64>() < p {
                let c = rng.gen_range(0..q);
                if !cats.contains(&c) {
                    cats.push(c);
                }
            }
        }
        cats.sort_unstable();
        item_cats.push(cats);
        item_taste.push(core::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        popularity.push(1.0 / (1.0 + 0.05 * i as f64));
    }

    let mut catalog = BTreeMap::new();
    for (i, cats) in item_cats.iter().enumerate() {
        catalog.insert(format!("{}", i + 1), cats.iter().map(|&c| category_name(c)).collect());
    }

    let per_user = spec.ratings_per_user.min(spec.items);
    let mut ratings = Vec::with_capacity(spec.users * per_user);
    let mut clock = 1_000_000i64;
    for u in 0..spec.users {
        let mut pref = alloc::vec![0.0; q];
        for _ in 0..2 {
            pref[rng.gen_range(0..q)] += 1.0;
        }
        let taste: [f64; TASTE] = core::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let affinity: Vec<f64> = (0..spec.items)
            .map(|i| {
                let cat: f64 = item_cats[i].iter().map(|&c| pref[c]).sum::<f64>() / item_cats[i].len() as f64;
                let t: f64 = taste.iter().zip(&item_taste[i]).map(|(a, b)| a * b).sum();
                cat + 0.5 * t
            })
            .collect();
        // Gumbel top-k: sample items without replacement, weighted by
        // popularity and affinity.
        let mut keyed: Vec<(f64, usize)> = (0..spec.items)
            .map(|i| {
                let g = -libm::log(-libm::log(rng.gen_range(1e-12..1.0)));
                (libm::log(popularity[i]) + 2.0 * affinity[i] + g, i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in keyed.iter().take(per_user) {
            let noise: f64 = rng.gen_range(-0.6..0.6);
            let score = 1.0 + 4.0 / (1.0 + libm::exp(-(1.8 * (affinity[i] - 0.6) + noise)));
            let stars = (libm::round(score * 2.0) / 2.0).clamp(0.5, 5.0);
            clock += rng.gen_range(1..100);
            ratings.push(RawRating::new(format!("{}", u + 1), format!("{}", i + 1), stars, clock));
        }
    }
    SyntheticData { ratings, catalog }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_when_every_item_is_rated() {
        let d = synthetic(SyntheticSpec {
            users: 10,
            items: 12,
            categories: 3,
            ratings_per_user: 12,
            seed: 1,
        });
        assert_eq!(d.ratings.len(), 120);
        assert_eq!(d.catalog.len(), 12);
        assert!(d.ratings.iter().all(|r| r.rating >= 0.5 && r.rating <= 5.0));
        assert!(d.catalog.values().all(|s| !s.is_empty()));
    }

    #[test]
    fn seeded() {
        let s = SyntheticSpec::default();
        assert_eq!(synthetic(s), synthetic(s));
        assert_ne!(synthetic(s), synthetic(SyntheticSpec { seed: 8, ..s }));
    }
}
