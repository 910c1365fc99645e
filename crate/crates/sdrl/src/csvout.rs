//! CSV writers for loss traces, metric reports and ablation tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::path::Path;

use sdrl_core::data::DatasetSummary;
use sdrl_core::eval::{AblationTable, MetricsReport};
use sdrl_core::model::VariantConfig;
use sdrl_core::train::LossTrace;

use crate::codec::write_atomic;
use crate::error::{Error, Result};

pub const LOSS_HEADER: [&str; 5] = ["epoch", "recon", "int", "ext", "total"];
pub const RANKING_HEADER: [&str; 8] = ["variant", "proportion", "seed", "K", "precision", "recall", "f1", "ndcg"];
pub const CLASSIFICATION_HEADER: [&str; 5] = ["variant", "seed", "recall", "precision", "micro_f1"];

/// Decimals of the `mean(±std)` cells in ablation summaries.
pub const SUMMARY_DECIMALS: usize = 4;

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new<S: AsRef<[u8]>>(header: &[S]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("writing to memory");
        Self { w }
    }

    fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) {
        self.w.write_record(fields).expect("writing to memory");
    }

    fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("writing to memory")
    }
}

pub fn losses_csv(trace: &LossTrace) -> Vec<u8> {
    let mut t = Table::new(&LOSS_HEADER);
    for e in &trace.epochs {
        t.row(&[
            e.epoch.to_string(),
            e.recon.to_string(),
            e.int.to_string(),
            e.ext.to_string(),
            e.total.to_string(),
        ]);
    }
    t.into_bytes()
}

pub fn write_losses(path: &Path, trace: &LossTrace) -> Result<()> {
    write_atomic(path, &losses_csv(trace))
}

fn cell_label(cell: &VariantConfig) -> (String, String) {
    (cell.variant.name().to_string(), cell.proportion().to_string())
}

fn ranking_rows(t: &mut Table, cell: &VariantConfig, report: &MetricsReport) {
    let (variant, proportion) = cell_label(cell);
    for m in &report.ranking.per_k {
        t.row(&[
            variant.clone(),
            proportion.clone(),
            report.seed.to_string(),
            m.k.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.ndcg.to_string(),
        ]);
    }
}

fn classification_row(t: &mut Table, cell: &VariantConfig, report: &MetricsReport) {
    let c = &report.classification;
    t.row(&[
        cell.variant.name().to_string(),
        report.seed.to_string(),
        c.recall.to_string(),
        c.precision.to_string(),
        c.micro_f1.to_string(),
    ]);
}

/// One row per K.
pub fn ranking_csv<'a, I>(reports: I) -> Vec<u8>
where
    I: IntoIterator<Item = (&'a VariantConfig, &'a MetricsReport)>,
{
    let mut t = Table::new(&RANKING_HEADER);
    for (cell, report) in reports {
        ranking_rows(&mut t, cell, report);
    }
    t.into_bytes()
}

pub fn classification_csv<'a, I>(reports: I) -> Vec<u8>
where
    I: IntoIterator<Item = (&'a VariantConfig, &'a MetricsReport)>,
{
    let mut t = Table::new(&CLASSIFICATION_HEADER);
    for (cell, report) in reports {
        classification_row(&mut t, cell, report);
    }
    t.into_bytes()
}

fn ablation_header(k_list: &[usize]) -> Vec<String> {
    let mut h: Vec<String> = ["kind", "variant", "proportion", "seed"].map(String::from).to_vec();
    for k in k_list {
        for m in ["precision", "recall", "f1", "ndcg"] {
            h.push(format!("{m}@{k}"));
        }
    }
    h.extend(["cls_recall", "cls_precision", "micro_f1"].map(String::from));
    h
}

/// The consolidated sweep table: one `run` row per cell and seed, then one
/// `summary` row per cell whose metric cells read `mean(±std)` and whose
/// seed cell is the number of seeds.
pub fn ablation_csv(table: &AblationTable) -> Vec<u8> {
    let mut t = Table::new(&ablation_header(&table.k_list));
    for row in &table.rows {
        let (variant, proportion) = cell_label(&row.cell);
        let mut fields = vec!["run".to_string(), variant, proportion, row.seed.to_string()];
        for &k in &table.k_list {
            let m = row.report.ranking.at(k).expect("report covers the sweep K list");
            fields.extend([m.precision, m.recall, m.f1, m.ndcg].map(|v| v.to_string()));
        }
        let c = &row.report.classification;
        fields.extend([c.recall, c.precision, c.micro_f1].map(|v| v.to_string()));
        t.row(&fields);
    }
    for s in &table.summaries {
        let (variant, proportion) = cell_label(&s.cell);
        let mut fields = vec!["summary".to_string(), variant, proportion, format!("n={}", s.seeds)];
        for (_, stats) in &s.ranking {
            fields.extend(stats.iter().map(|m| m.display(SUMMARY_DECIMALS)));
        }
        fields.extend(s.classification.iter().map(|m| m.display(SUMMARY_DECIMALS)));
        t.row(&fields);
    }
    t.into_bytes()
}

/// Dataset statistics before and after filtering.
pub fn summary_csv(raw: &DatasetSummary, filtered: &DatasetSummary) -> Vec<u8> {
    let mut t = Table::new(&["stage", "users", "items", "catalog_items", "ratings", "categories", "density"]);
    for (stage, s) in [("raw", raw), ("filtered", filtered)] {
        t.row(&[
            stage.to_string(),
            s.users.to_string(),
            s.items.to_string(),
            s.catalog_items.to_string(),
            s.ratings.to_string(),
            s.categories.to_string(),
            s.density.to_string(),
        ]);
    }
    t.into_bytes()
}

/// Reads a `losses.csv` back, checking its header.
pub fn read_losses(path: &Path) -> Result<LossTrace> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, 0, format!("{kind:?}")),
    })?;
    let header = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != LOSS_HEADER {
        return Err(Error::parse(path, 1, format!("expected header `{}`", LOSS_HEADER.join(","))));
    }
    let mut trace = LossTrace::default();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("`{}` is not a number", &record[i])))
        };
        trace.epochs.push(sdrl_core::train::EpochLoss {
            epoch: record[0]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("epoch `{}` is not an integer", &record[0])))?,
            recon: num(1)?,
            int: num(2)?,
            ext: num(3)?,
            total: num(4)?,
        });
    }
    Ok(trace)
}
