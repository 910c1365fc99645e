use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// One rating row as read from a source file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRating {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: i64,
}

impl RawRating {
    pub fn new(user: impl Into<String>, item: impl Into<String>, rating: f64, timestamp: i64) -> Self {
        Self {
            user: user.into(),
            item: item.into(),
            rating,
            timestamp,
        }
    }
}

/// Collapses repeated `(user, item)` pairs onto the row with the latest
/// timestamp (the later row wins a timestamp tie). Surviving rows keep the
/// position of the pair's first occurrence.
pub fn dedup_keep_latest(rows: Vec<RawRating>) -> Vec<RawRating> {
    let mut slot: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut out: Vec<RawRating> = Vec::with_capacity(rows.len());
    for row in rows {
        match slot.get(&(row.user.clone(), row.item.clone())) {
            Some(&i) => {
                if row.timestamp >= out[i].timestamp {
                    out[i] = row;
                }
            }
            None => {
                slot.insert((row.user.clone(), row.item.clone()), out.len());
                out.push(row);
            }
        }
    }
    out
}

/// Divides raw ratings by the rating-scale maximum, yielding values in `(0, 1]`.
pub fn normalize_ratings(raw: &[f64], scale_max: f64) -> Result<Vec<f64>> {
    if !(scale_max > 0.0 && scale_max.is_finite()) {
        return Err(Error::Data(format!("rating scale maximum must be positive, got {scale_max}")));
    }
    raw.iter()
        .enumerate()
        .map(|(i, &r)| {
            if !(r > 0.0) || !r.is_finite() {
                Err(Error::Data(format!("rating #{i} is {r}; ratings must be positive")))
            } else if r > scale_max {
                Err(Error::Data(format!(
                    "rating #{i} is {r}, above the scale maximum {scale_max}"
                )))
            } else {
                Ok(r / scale_max)
            }
        })
        .collect()
}

/// Ordering for external ids: numeric ids numerically, then everything else
/// lexicographically.
pub fn id_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}
