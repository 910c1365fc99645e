//! Writes seeded synthetic datasets in the raw MovieLens layout, for demos
//! and tests that need real files on disk.

use std::fmt::Write as _;
use std::path::Path;

use sdrl_core::data::synthetic::{synthetic, SyntheticSpec};

use crate::codec::write_atomic;
use crate::error::Result;

/// Writes `ratings.csv` and `movies.csv` into `dir`.
pub fn write_toy_movielens(dir: &Path, spec: SyntheticSpec) -> Result<()> {
    let data = synthetic(spec);
    let mut ratings = String::from("userId,movieId,rating,timestamp\n");
    for r in &data.ratings {
        let _ = writeln!(ratings, "{},{},{:.1},{}", r.user, r.item, r.rating, r.timestamp);
    }
    let mut movies = String::from("movieId,title,genres\n");
    let mut ids: Vec<&String> = data.catalog.keys().collect();
    ids.sort_by_key(|id| id.parse::<u64>().unwrap_or(u64::MAX));
    for id in ids {
        let genres: Vec<&str> = data.catalog[id].iter().map(String::as_str).collect();
        let genres = if genres.is_empty() { "(no genres listed)".to_string() } else { genres.join("|") };
        let _ = writeln!(movies, "{id},\"Item {id}\",{genres}");
    }
    write_atomic(&dir.join("ratings.csv"), ratings.as_bytes())?;
    write_atomic(&dir.join("movies.csv"), movies.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loaders::{load_categories, load_ratings, DatasetFormat};

    #[test]
    fn files_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec::default();
        write_toy_movielens(dir.path(), spec).unwrap();
        let data = synthetic(spec);
        let ratings = load_ratings(&dir.path().join("ratings.csv"), DatasetFormat::MovieLens).unwrap();
        assert_eq!(ratings.len(), data.ratings.len());
        let (catalog, vocab) = load_categories(&dir.path().join("movies.csv"), DatasetFormat::MovieLens, &[]).unwrap();
        assert_eq!(catalog, data.catalog);
        assert_eq!(vocab.len(), spec.categories);
    }
}
