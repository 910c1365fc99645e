//! Embedding export as tab-separated text.
//!
//! ```text
//! # int:0-63 ext:64-95 oth:96-127
//! kind	id	z0	z1	...	z127
//! user	1	0.52	...
//! item	31	0.47	...
//! ```
//!
//! The comment line lists each active block's inclusive column range. Values
//! use shortest round-trip formatting, so importing reproduces them exactly.

use std::fmt::Write as _;
use std::path::Path;

use sdrl_core::data::InteractionDataset;
use sdrl_core::model::{Block, BlockLayout, EmbeddingSet};
use sdrl_core::DenseMatrix;

use crate::codec::write_atomic;
use crate::error::{Error, Result};

/// Embeddings with the external ids of their rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub embeddings: EmbeddingSet,
}

impl EmbeddingTable {
    pub fn new(dataset: &InteractionDataset, embeddings: EmbeddingSet) -> Result<Self> {
        if embeddings.users.rows() != dataset.num_users() || embeddings.items.rows() != dataset.num_items() {
            return Err(Error::Config(format!(
                "embeddings cover {} users and {} items, the dataset has {} and {}",
                embeddings.users.rows(),
                embeddings.items.rows(),
                dataset.num_users(),
                dataset.num_items()
            )));
        }
        Ok(Self {
            user_ids: dataset.user_ids.clone(),
            item_ids: dataset.item_ids.clone(),
            embeddings,
        })
    }
}

pub fn embeddings_tsv(t: &EmbeddingTable) -> String {
    let e = &t.embeddings;
    let mut out = String::new();
    let _ = writeln!(out, "# {}", e.layout.annotation());
    out.push_str("kind\tid");
    for c in 0..e.k() {
        let _ = write!(out, "\tz{c}");
    }
    out.push('\n');
    for (kind, ids, m) in [("user", &t.user_ids, &e.users), ("item", &t.item_ids, &e.items)] {
        for (id, row) in ids.iter().zip(m.iter_rows()) {
            out.push_str(kind);
            out.push('\t');
            out.push_str(id);
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_embeddings(path: &Path, t: &EmbeddingTable) -> Result<()> {
    write_atomic(path, embeddings_tsv(t).as_bytes())
}

/// Recovers the layout from an annotation such as `int:0-63 ext:64-95 oth:96-127`.
pub fn parse_annotation(s: &str) -> std::result::Result<BlockLayout, String> {
    let mut dims = [0usize; 3];
    let mut next = 0usize;
    for part in s.split_whitespace() {
        let (name, range) = part.split_once(':').ok_or(format!("block `{part}` has no range"))?;
        let block = Block::ALL
            .into_iter()
            .find(|b| b.short_name() == name)
            .ok_or(format!("unknown block `{name}`"))?;
        let (a, b) = range.split_once('-').ok_or(format!("range `{range}` is not a-b"))?;
        let a: usize = a.parse().map_err(|_| format!("bad range start `{a}`"))?;
        let b: usize = b.parse().map_err(|_| format!("bad range end `{b}`"))?;
        if a != next || b < a || dims[block.index()] != 0 {
            return Err(format!("block ranges in `{s}` are not contiguous and ordered"));
        }
        dims[block.index()] = b - a + 1;
        next = b + 1;
    }
    let layout = BlockLayout::new(dims[0], dims[1], dims[2]).map_err(|e| e.to_string())?;
    if layout.annotation() != s.trim() {
        return Err(format!("block ranges in `{s}` are out of order"));
    }
    Ok(layout)
}

pub fn parse_embeddings(path: &Path, text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let (_, first) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let annotation = first
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(path, 1, "missing block annotation line"))?;
    let layout = parse_annotation(annotation).map_err(|m| Error::parse(path, 1, m))?;
    let k = layout.k();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 2, "missing header row"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    let expected: Vec<String> = ["kind".to_string(), "id".to_string()]
        .into_iter()
        .chain((0..k).map(|c| format!("z{c}")))
        .collect();
    if cols != expected {
        return Err(Error::parse(path, 2, format!("header does not match {k} embedding columns")));
    }
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut users = Vec::new();
    let mut items = Vec::new();
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != k + 2 {
            return Err(Error::parse(path, line, format!("{} fields, expected {}", fields.len(), k + 2)));
        }
        let values = fields[2..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| Error::parse(path, line, format!("`{v}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        match fields[0] {
            "user" if item_ids.is_empty() => {
                user_ids.push(fields[1].to_string());
                users.extend(values);
            }
            "item" => {
                item_ids.push(fields[1].to_string());
                items.extend(values);
            }
            "user" => return Err(Error::parse(path, line, "user row after item rows")),
            other => return Err(Error::parse(path, line, format!("unknown node kind `{other}`"))),
        }
    }
    let users = DenseMatrix::new(user_ids.len(), k, users)?;
    let items = DenseMatrix::new(item_ids.len(), k, items)?;
    Ok(EmbeddingTable {
        user_ids,
        item_ids,
        embeddings: EmbeddingSet::new(layout, users, items)?,
    })
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let layout = BlockLayout::new(2, 1, 1).unwrap();
        let users = DenseMatrix::new(2, 4, vec![0.1, 0.2, 0.3, 0.4, 1.0 / 3.0, 0.0, -0.0, 1e-300]).unwrap();
        let items = DenseMatrix::new(3, 4, (0..12).map(|v| v as f64 / 7.0).collect()).unwrap();
        EmbeddingTable {
            user_ids: vec!["1".into(), "2".into()],
            item_ids: vec!["a".into(), "b".into(), "c".into()],
            embeddings: EmbeddingSet::new(layout, users, items).unwrap(),
        }
    }

    #[test]
    fn shape_of_the_file() {
        let text = embeddings_tsv(&table());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# int:0-1 ext:2-2 oth:3-3");
        assert_eq!(lines[1], "kind\tid\tz0\tz1\tz2\tz3");
        assert_eq!(lines.len(), 2 + 5);
        assert!(lines[2..].iter().all(|l| l.split('\t').count() == 6));
        assert!(lines[4].starts_with("item\ta\t0\t"));
    }

    #[test]
    fn import_reproduces_values() {
        let t = table();
        let back = parse_embeddings(Path::new("e.tsv"), &embeddings_tsv(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn annotations() {
        assert_eq!(parse_annotation("int:0-63 ext:64-95 oth:96-127").unwrap().dims(), [64, 32, 32]);
        assert_eq!(parse_annotation(" oth:0-127").unwrap().dims(), [0, 0, 128]);
        assert_eq!(parse_annotation("ext:0-63 oth:64-127").unwrap().dims(), [0, 64, 64]);
        assert!(parse_annotation("ext:0-3 int:4-7").is_err());
        assert!(parse_annotation("int:0-3 ext:5-7").is_err());
        assert!(parse_annotation("").is_err());
    }

    #[test]
    fn malformed_rows() {
        let text = embeddings_tsv(&table());
        let bad = text.replacen("item\ta\t0", "item\ta\tzero", 1);
        assert!(matches!(parse_embeddings(Path::new("e"), &bad), Err(Error::Parse { line: 5, .. })));
        let short: String = text.lines().skip(1).collect::<Vec<_>>().join("\n");
        assert!(parse_embeddings(Path::new("e"), &short).is_err());
    }
}
