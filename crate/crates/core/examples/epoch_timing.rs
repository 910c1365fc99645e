//! Times a few training epochs on a synthetic dataset of roughly the size of
//! a small MovieLens release after filtering.

use std::time::Instant;

use sdrl_core::data::synthetic::{synthetic, SyntheticSpec};
use sdrl_core::data::{prepare, NodeFeatures, PrepareOptions};
use sdrl_core::model::ModelInputs;
use sdrl_core::train::{TrainConfig, Trainer};

fn main() {
    let d = synthetic(SyntheticSpec {
        users: 600,
        items: 1300,
        categories: 18,
        ratings_per_user: 110,
        seed: 1,
    });
    let p = prepare(d.ratings, &d.catalog, &PrepareOptions::default()).expect("prepare");
    println!("{:?}", p.summary);
    let f = NodeFeatures::build(&p.dataset);
    let inputs = ModelInputs::new(&f, &p.categories);
    let mut t = Trainer::new(TrainConfig { epochs: 3, ..TrainConfig::default() }, inputs).expect("trainer");
    let start = Instant::now();
    t.run(|_, e| {
        println!("epoch {} total {:.5} after {:.1?}", e.epoch, e.total, start.elapsed());
        Ok(())
    })
    .expect("train");
}
