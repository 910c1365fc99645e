//! Random toy problems shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use sdrl_core::data::{derive_user_category_preferences, CategoryMatrix, NodeFeatures};
use sdrl_core::model::{BlockLayout, ModelShape, SdrlParams, Variant, VariantConfig};
use sdrl_core::nn::ParamSet;
use sdrl_core::DenseMatrix;

pub struct Toy {
    pub features: NodeFeatures,
    pub categories: CategoryMatrix,
}

/// Sparse half-star ratings scaled to (0, 1], every item in 1..=q categories.
pub fn toy(rng: &mut ChaCha20Rng, users: usize, items: usize, q: usize) -> Toy {
    let mut r = DenseMatrix::zeros(users, items);
    for u in 0..users {
        for i in 0..items {
            if rng.gen_bool(0.5) {
                r.set(u, i, rng.gen_range(1..=10) as f64 / 10.0);
            }
        }
    }
    let mut cats = DenseMatrix::zeros(items, q);
    for i in 0..items {
        cats.set(i, rng.gen_range(0..q), 1.0);
        for c in 0..q {
            if rng.gen_bool(0.3) {
                cats.set(i, c, 1.0);
            }
        }
    }
    let train = (0..users).flat_map(|u| (0..items).map(move |i| (u, i))).filter(|&(u, i)| r.get(u, i) > 0.0);
    let train: Vec<(usize, usize, f64)> = train.map(|(u, i)| (u, i, r.get(u, i))).collect();
    let prefs = derive_user_category_preferences(train, users, &cats);
    Toy {
        features: NodeFeatures {
            items: r.transpose(),
            users: r,
        },
        categories: CategoryMatrix {
            vocabulary: (0..q).map(|c| format!("c{c}")).collect(),
            items: cats,
            users: prefs,
        },
    }
}

pub fn random_variant(rng: &mut ChaCha20Rng) -> Variant {
    Variant::ALL[rng.gen_range(0..Variant::ALL.len())]
}

/// A layout with every active block 1..=max_dim wide.
pub fn random_layout(rng: &mut ChaCha20Rng, variant: Variant, max_dim: usize) -> BlockLayout {
    let dims = variant.active().map(|a| if a { rng.gen_range(1..=max_dim) } else { 0 });
    BlockLayout::new(dims[0], dims[1], dims[2]).unwrap()
}

pub fn default_layout(variant: Variant, k: usize) -> BlockLayout {
    VariantConfig::default_for(variant).layout(k).unwrap()
}

/// Glorot init with every tensor scaled by a random factor so that the
/// activations leave the near-linear regime.
pub fn random_params(rng: &mut ChaCha20Rng, toy: &Toy, layout: BlockLayout, hidden: usize) -> SdrlParams {
    let shape = ModelShape {
        user_dim: toy.features.users.cols(),
        item_dim: toy.features.items.cols(),
        hidden,
        num_categories: toy.categories.num_categories(),
    };
    let mut p = SdrlParams::init(layout, shape, rng).unwrap();
    for t in p.tensors_mut() {
        let scale = rng.gen_range(0.5..2.0);
        for v in t.values.iter_mut() {
            *v = *v * scale + rng.gen_range(-0.1..0.1);
        }
    }
    p
}
