//! CSV readers for rating and item-category files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use sdrl_core::data::{build_vocabulary, dedup_keep_latest, RawRating};

use crate::error::{Error, Result};

/// Item id → category names. An empty set marks an item without categories.
pub type Catalog = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `ratings.csv` (`userId,movieId,rating,timestamp`) and `movies.csv`
    /// (`movieId,title,genres`, genres separated by `|`).
    MovieLens,
    /// `user,item,rating,timestamp` and one `item,category` row per pair.
    Amazon,
}

impl DatasetFormat {
    pub fn name(self) -> &'static str {
        match self {
            DatasetFormat::MovieLens => "movielens",
            DatasetFormat::Amazon => "amazon",
        }
    }

    fn ratings_header(self) -> [&'static str; 4] {
        match self {
            DatasetFormat::MovieLens => ["userId", "movieId", "rating", "timestamp"],
            DatasetFormat::Amazon => ["user", "item", "rating", "timestamp"],
        }
    }

    /// Default file names inside a dataset directory.
    pub fn default_files(self) -> (&'static str, &'static str) {
        match self {
            DatasetFormat::MovieLens => ("ratings.csv", "movies.csv"),
            DatasetFormat::Amazon => ("ratings.csv", "categories.csv"),
        }
    }

    /// Category labels kept out of the vocabulary by default. MovieLens
    /// tags IMAX releases like a genre; it describes the print, not the film.
    pub fn default_excluded_categories(self) -> Vec<String> {
        match self {
            DatasetFormat::MovieLens => vec!["IMAX".to_string()],
            DatasetFormat::Amazon => Vec::new(),
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "movielens" | "ml" => Ok(DatasetFormat::MovieLens),
            "amazon" => Ok(DatasetFormat::Amazon),
            other => Err(Error::Config(format!("unknown dataset format `{other}` (movielens or amazon)"))),
        }
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(sdrl_core::Error::Domain(format!("{}: empty file", path.display())).into());
    }
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

/// Reads a rating file. Repeated `(user, item)` pairs keep the row with the
/// latest timestamp.
pub fn load_ratings(path: &Path, format: DatasetFormat) -> Result<Vec<RawRating>> {
    let mut reader = open(path)?;
    check_header(path, &mut reader, &format.ratings_header())?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        let (user, item) = (field(0), field(1));
        if user.is_empty() || item.is_empty() {
            return Err(Error::parse(path, line, "empty user or item id"));
        }
        let rating: f64 = field(2)
            .parse()
            .map_err(|_| Error::parse(path, line, format!("rating `{}` is not a number", field(2))))?;
        let timestamp: i64 = field(3)
            .parse()
            .map_err(|_| Error::parse(path, line, format!("timestamp `{}` is not an integer", field(3))))?;
        rows.push(RawRating::new(user, item, rating, timestamp));
    }
    if rows.is_empty() {
        return Err(sdrl_core::Error::Domain(format!("{}: no rating rows", path.display())).into());
    }
    Ok(dedup_keep_latest(rows))
}

/// Reads an item-category file and builds the sorted vocabulary, leaving out
/// the no-genre sentinel and `excluded`.
pub fn load_categories(path: &Path, format: DatasetFormat, excluded: &[String]) -> Result<(Catalog, Vec<String>)> {
    let mut reader = open(path)?;
    let mut catalog = Catalog::new();
    match format {
        DatasetFormat::MovieLens => {
            check_header(path, &mut reader, &["movieId", "title", "genres"])?;
            for record in reader.records() {
                let record = record.map_err(|e| csv_error(path, e))?;
                let line = record.position().map_or(0, |p| p.line());
                let id = record.get(0).map(str::trim).unwrap_or("");
                if id.is_empty() {
                    return Err(Error::parse(path, line, "empty movie id"));
                }
                let genres: BTreeSet<String> = record
                    .get(2)
                    .unwrap_or("")
                    .split('|')
                    .map(str::trim)
                    .filter(|g| !g.is_empty())
                    .map(String::from)
                    .collect();
                catalog.entry(id.to_string()).or_default().extend(genres);
            }
        }
        DatasetFormat::Amazon => {
            check_header(path, &mut reader, &["item", "category"])?;
            for record in reader.records() {
                let record = record.map_err(|e| csv_error(path, e))?;
                let line = record.position().map_or(0, |p| p.line());
                let id = record.get(0).map(str::trim).unwrap_or("");
                if id.is_empty() {
                    return Err(Error::parse(path, line, "empty item id"));
                }
                let set = catalog.entry(id.to_string()).or_default();
                let c = record.get(1).map(str::trim).unwrap_or("");
                if !c.is_empty() {
                    set.insert(c.to_string());
                }
            }
        }
    }
    if catalog.is_empty() {
        return Err(sdrl_core::Error::Domain(format!("{}: no item rows", path.display())).into());
    }
    let excluded: Vec<&str> = excluded.iter().map(String::as_str).collect();
    let vocabulary = build_vocabulary(catalog.values(), &excluded);
    Ok((catalog, vocabulary))
}
