//! Binary snapshot of a prepared dataset.
//!
//! Body layout after the common header (see [`crate::codec`]):
//!
//! ```text
//! name: str
//! options: min_count u64, train_fraction f64, seed u64, rating_scale_max f64,
//!          excluded: u64 count + str each
//! raw summary: users, items, catalog_items, ratings, categories (u64 each), density f64
//! user ids: u64 count + str each
//! item ids: u64 count + str each
//! ratings: u64 count + (user u32, item u32, raw f64, in_train u8) each
//! vocabulary: u64 count + str each
//! item categories: per item, u32 count + u32 column index each
//! ```

use std::path::Path;

use sdrl_core::data::{DatasetSummary, InteractionDataset, PrepareOptions, PreparedData, Rating, Split};
use sdrl_core::DenseMatrix;

use crate::codec::{write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"SDRLSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Free-form dataset label carried into reports.
    pub name: String,
    pub options: PrepareOptions,
    pub data: PreparedData,
}

fn summary(e: &mut Encoder, s: &DatasetSummary) {
    for v in [s.users, s.items, s.catalog_items, s.ratings, s.categories] {
        e.usize(v);
    }
    e.f64(s.density);
}

fn strings(e: &mut Encoder, values: &[String]) {
    e.usize(values.len());
    for s in values {
        e.str(s);
    }
}

fn read_strings(d: &mut Decoder<'_>) -> Result<Vec<String>> {
    let n = d.count(8)?;
    (0..n).map(|_| d.str()).collect()
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Config(format!("{what} {v} does not fit the snapshot format")))
}

pub fn encode_snapshot(s: &Snapshot) -> Result<Vec<u8>> {
    let mut e = Encoder::new(SNAPSHOT_MAGIC, SNAPSHOT_VERSION);
    e.str(&s.name);
    let o = &s.options;
    e.usize(o.min_count);
    e.f64(o.train_fraction);
    e.u64(o.seed);
    e.f64(o.rating_scale_max);
    strings(&mut e, &o.excluded_categories);
    summary(&mut e, &s.data.raw_summary);

    let ds = &s.data.dataset;
    strings(&mut e, &ds.user_ids);
    strings(&mut e, &ds.item_ids);
    e.usize(ds.ratings.len());
    for (r, &t) in ds.ratings.iter().zip(&ds.split.in_train) {
        e.u32(to_u32(r.user, "user index")?);
        e.u32(to_u32(r.item, "item index")?);
        e.f64(r.raw);
        e.u8(u8::from(t));
    }
    let cats = &s.data.categories;
    strings(&mut e, &cats.vocabulary);
    for row in cats.items.iter_rows() {
        let cols: Vec<usize> = row.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(q, _)| q).collect();
        e.u32(to_u32(cols.len(), "category count")?);
        for q in cols {
            e.u32(to_u32(q, "category index")?);
        }
    }
    Ok(e.finish())
}

pub fn decode_snapshot(path: &Path, bytes: &[u8]) -> Result<Snapshot> {
    let mut d = Decoder::open(path, bytes, SNAPSHOT_MAGIC, SNAPSHOT_VERSION)?;
    let name = d.str()?;
    let min_count = d.usize()?;
    let train_fraction = d.f64()?;
    let seed = d.u64()?;
    let rating_scale_max = d.f64()?;
    let excluded_categories = read_strings(&mut d)?;
    let options = PrepareOptions {
        min_count,
        train_fraction,
        seed,
        rating_scale_max,
        excluded_categories,
    };
    let raw_summary = DatasetSummary {
        users: d.usize()?,
        items: d.usize()?,
        catalog_items: d.usize()?,
        ratings: d.usize()?,
        categories: d.usize()?,
        density: d.f64()?,
    };
    let user_ids = read_strings(&mut d)?;
    let item_ids = read_strings(&mut d)?;
    let n = d.count(17)?;
    let mut ratings = Vec::with_capacity(n);
    let mut in_train = Vec::with_capacity(n);
    for _ in 0..n {
        let user = d.u32()? as usize;
        let item = d.u32()? as usize;
        let raw = d.f64()?;
        let t = d.u8()?;
        if t > 1 {
            return Err(d.error(format!("split flag {t} is not 0 or 1")));
        }
        ratings.push(Rating { user, item, raw });
        in_train.push(t == 1);
    }
    let vocabulary = read_strings(&mut d)?;
    let mut item_categories = DenseMatrix::zeros(item_ids.len(), vocabulary.len());
    for i in 0..item_ids.len() {
        let count = d.u32()? as usize;
        for _ in 0..count {
            let q = d.u32()? as usize;
            if q >= vocabulary.len() {
                return Err(d.error(format!("category index {q} outside the vocabulary")));
            }
            item_categories.set(i, q, 1.0);
        }
    }
    d.finish()?;
    let dataset = InteractionDataset::new(user_ids, item_ids, ratings, rating_scale_max, Split { in_train })?;
    let data = PreparedData::from_parts(dataset, vocabulary, item_categories, raw_summary)?;
    Ok(Snapshot { name, options, data })
}

pub fn save_snapshot(s: &Snapshot, path: &Path) -> Result<()> {
    write_atomic(path, &encode_snapshot(s)?)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(path, &bytes)
}
