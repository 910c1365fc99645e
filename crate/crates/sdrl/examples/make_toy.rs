//! Writes a small synthetic dataset in the MovieLens layout.
//!
//! `cargo run -p sdrl --example make_toy -- DIR`

use std::path::PathBuf;

use sdrl::toy::write_toy_movielens;
use sdrl_core::data::synthetic::SyntheticSpec;

fn main() {
    let dir: PathBuf = std::env::args_os().nth(1).map_or_else(|| "toy".into(), PathBuf::from);
    let spec = SyntheticSpec {
        users: 100,
        items: 150,
        categories: 8,
        ratings_per_user: 35,
        seed: 7,
    };
    if let Err(e) = write_toy_movielens(&dir, spec) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
    println!("wrote {}", dir.display());
}
