//! The pipeline steps behind each subcommand.
//!
//! Every command writes its outputs into one directory together with a
//! `<command>.manifest.toml` listing the files and their checksums.

use std::path::{Path, PathBuf};

use sdrl_core::data::{prepare as prepare_data, DatasetSummary, NodeFeatures};
use sdrl_core::eval::{evaluate_model, run_ablation, AblationTable, MetricsReport};
use sdrl_core::model::{EmbeddingSet, ModelInputs, VariantConfig};
use sdrl_core::train::{EpochLoss, TrainConfig, Trainer};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::codec::{file_sha256, write_atomic};
use crate::config::RunConfig;
use crate::csvout::{ablation_csv, classification_csv, ranking_csv, summary_csv, write_losses};
use crate::error::{Error, Result};
use crate::export::{write_embeddings, EmbeddingTable};
use crate::loaders::{load_categories, load_ratings};
use crate::manifest::RunManifest;
use crate::snapshot::{load_snapshot, save_snapshot, Snapshot};

pub const SNAPSHOT_FILE: &str = "dataset.snap";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOSSES_FILE: &str = "losses.csv";
pub const RANKING_FILE: &str = "ranking.csv";
pub const CLASSIFICATION_FILE: &str = "classification.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.tsv";

/// Environment variable naming the default raw data directory.
pub const DATA_DIR_ENV: &str = "SDRL_DATA_DIR";

/// Progress messages go through this so callers pick the sink.
pub type Log<'a> = &'a mut dyn FnMut(&str);

#[derive(Debug, Clone, Default)]
pub struct PrepareInputs {
    /// Directory holding the format's default file names.
    pub data_dir: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub items: Option<PathBuf>,
    /// Label stored in the snapshot; defaults to the data directory name.
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PrepareOutcome {
    pub snapshot: PathBuf,
    pub checksum: String,
    pub raw: DatasetSummary,
    pub filtered: DatasetSummary,
}

fn resolve_inputs(config: &RunConfig, inputs: &PrepareInputs) -> Result<(PathBuf, PathBuf, String)> {
    let (ratings_name, items_name) = config.format()?.default_files();
    let from_dir = |name: &str| inputs.data_dir.as_ref().map(|d| d.join(name));
    let ratings = inputs.ratings.clone().or_else(|| from_dir(ratings_name));
    let items = inputs.items.clone().or_else(|| from_dir(items_name));
    let (Some(ratings), Some(items)) = (ratings, items) else {
        return Err(Error::Config(format!(
            "no input data: pass --input DIR (or set {DATA_DIR_ENV}) or both --ratings and --items"
        )));
    };
    let name = inputs
        .name
        .clone()
        .or_else(|| {
            let dir = inputs.data_dir.clone().or_else(|| ratings.parent().map(Path::to_path_buf))?;
            dir.file_name().map(|n| n.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "dataset".to_string());
    Ok((ratings, items, name))
}

pub fn prepare(config: &RunConfig, inputs: &PrepareInputs, out: &Path, log: Log<'_>) -> Result<PrepareOutcome> {
    let format = config.format()?;
    let options = config.prepare_options()?;
    let (ratings_path, items_path, name) = resolve_inputs(config, inputs)?;
    let ratings = load_ratings(&ratings_path, format)?;
    let (catalog, _) = load_categories(&items_path, format, &options.excluded_categories)?;
    let data = prepare_data(ratings, &catalog, &options)?;
    let raw = data.raw_summary.clone();
    let filtered = data.summary.clone();
    log(&format!(
        "raw: {} users, {} items rated ({} in catalogue), {} ratings, {} categories, density {:.4}%",
        raw.users,
        raw.items,
        raw.catalog_items,
        raw.ratings,
        raw.categories,
        raw.density * 100.0
    ));
    log(&format!(
        "after min_count={} filtering: {} users, {} items, {} ratings, density {:.4}%",
        options.min_count,
        filtered.users,
        filtered.items,
        filtered.ratings,
        filtered.density * 100.0
    ));

    let snapshot = Snapshot { name, options, data };
    let snap_path = out.join(SNAPSHOT_FILE);
    save_snapshot(&snapshot, &snap_path)?;
    write_atomic(&out.join(SUMMARY_FILE), &summary_csv(&raw, &filtered))?;
    let checksum = file_sha256(&snap_path)?;
    let mut manifest = RunManifest::new("prepare", config.prepare.seed, checksum.clone(), config.clone());
    manifest.add(out, SNAPSHOT_FILE)?;
    manifest.add(out, SUMMARY_FILE)?;
    manifest.save(out)?;
    Ok(PrepareOutcome {
        snapshot: snap_path,
        checksum,
        raw,
        filtered,
    })
}

fn open_snapshot(path: &Path) -> Result<(Snapshot, String)> {
    let snapshot = load_snapshot(path)?;
    let checksum = file_sha256(path)?;
    Ok((snapshot, checksum))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub losses: PathBuf,
    pub resumed_from: usize,
    pub first: Option<EpochLoss>,
    pub last: Option<EpochLoss>,
}

fn same_run(a: &TrainConfig, b: &TrainConfig) -> bool {
    TrainConfig { epochs: 0, log_every: 0, ..*a } == TrainConfig { epochs: 0, log_every: 0, ..*b }
}

fn log_epoch(log: Log<'_>, e: &EpochLoss) {
    log(&format!(
        "epoch {:>4}  total {:.6}  recon {:.6}  int {:.6}  ext {:.6}",
        e.epoch, e.total, e.recon, e.int, e.ext
    ));
}

/// Trains with checkpoints every `log_every` epochs and after the last one.
/// `losses.csv` is rewritten after every epoch. With `resume`, an existing
/// checkpoint in `out` continues where it stopped; the outcome is
/// bit-identical to an uninterrupted run.
pub fn train(config: &RunConfig, snapshot_path: &Path, out: &Path, resume: bool, log: Log<'_>) -> Result<TrainOutcome> {
    let train_config = config.train_config()?;
    let (snapshot, checksum) = open_snapshot(snapshot_path)?;
    let data = &snapshot.data;
    let features = NodeFeatures::build(&data.dataset);
    let inputs = ModelInputs::new(&features, &data.categories);
    let ckpt_path = out.join(CHECKPOINT_FILE);
    let losses_path = out.join(LOSSES_FILE);

    let mut trainer = if resume && ckpt_path.exists() {
        let ckpt = load_checkpoint(&ckpt_path)?;
        if ckpt.dataset_checksum != checksum {
            return Err(Error::integrity(&ckpt_path, "checkpoint was trained on a different dataset snapshot"));
        }
        if !same_run(&ckpt.config, &train_config) {
            return Err(Error::Config(format!(
                "{}: checkpoint configuration differs from the requested one; only epochs may change on resume",
                ckpt_path.display()
            )));
        }
        let optimizer = ckpt
            .optimizer
            .ok_or_else(|| Error::integrity(&ckpt_path, "checkpoint carries no optimizer state to resume from"))?;
        log(&format!("resuming from epoch {}", ckpt.trace.len()));
        Trainer::resume(train_config, inputs, ckpt.params, optimizer, ckpt.trace)?
    } else {
        if resume {
            log("no checkpoint to resume from, starting fresh");
        }
        Trainer::new(train_config, inputs)?
    };
    let resumed_from = trainer.epochs_done();
    let every = train_config.log_every.max(1);
    let save = |t: &Trainer<'_>| -> Result<()> {
        let c = Checkpoint {
            config: train_config,
            dataset_checksum: checksum.clone(),
            params: t.params().clone(),
            trace: t.trace().clone(),
            optimizer: Some(t.optimizer().clone()),
        };
        save_checkpoint(&c, &ckpt_path)
    };
    if trainer.is_finished() {
        log("checkpoint already covers every configured epoch");
    }
    while !trainer.is_finished() {
        let e = trainer.run_epoch()?;
        write_losses(&losses_path, trainer.trace())?;
        if e.epoch % every == 0 || e.epoch == 1 || trainer.is_finished() {
            log_epoch(log, &e);
        }
        if e.epoch % every == 0 || trainer.is_finished() {
            save(&trainer)?;
        }
    }
    write_losses(&losses_path, trainer.trace())?;
    if !ckpt_path.exists() {
        save(&trainer)?;
    }

    let mut manifest = RunManifest::new("train", train_config.seed, checksum, config.clone());
    manifest.layout = Some(train_config.layout()?.to_string());
    manifest.add(out, CHECKPOINT_FILE)?;
    manifest.add(out, LOSSES_FILE)?;
    manifest.save(out)?;
    Ok(TrainOutcome {
        checkpoint: ckpt_path,
        losses: losses_path,
        resumed_from,
        first: trainer.trace().first().copied(),
        last: trainer.trace().last().copied(),
    })
}

/// Checks that a checkpoint fits a snapshot before it is used on it.
fn check_compatible(ckpt: &Checkpoint, ckpt_path: &Path, snapshot: &Snapshot, checksum: &str) -> Result<()> {
    let shape = ckpt.params.shape();
    let ds = &snapshot.data.dataset;
    let q = snapshot.data.categories.num_categories();
    if shape.user_dim != ds.num_items() || shape.item_dim != ds.num_users() || (shape.num_categories != 0 && shape.num_categories != q) {
        return Err(Error::integrity(
            ckpt_path,
            format!(
                "checkpoint expects {} items, {} users and {} categories; the snapshot has {}, {} and {q}",
                shape.user_dim,
                shape.item_dim,
                shape.num_categories,
                ds.num_items(),
                ds.num_users()
            ),
        ));
    }
    if ckpt.dataset_checksum != checksum {
        return Err(Error::integrity(ckpt_path, "checkpoint was trained on a different dataset snapshot"));
    }
    Ok(())
}

fn check_expected_layout(ckpt: &Checkpoint, ckpt_path: &Path, expected: Option<VariantConfig>) -> Result<()> {
    if let Some(v) = expected {
        let want = v.layout(ckpt.config.k)?;
        if want != ckpt.params.layout || v.variant != ckpt.config.variant.variant {
            return Err(Error::integrity(
                ckpt_path,
                format!(
                    "layout mismatch: checkpoint is {} {}, requested {} {want}",
                    ckpt.config.variant.variant, ckpt.params.layout, v.variant
                ),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub report: MetricsReport,
    pub ranking: PathBuf,
    pub classification: PathBuf,
}

/// Scores a trained checkpoint. `expected` is the variant the caller asked
/// for explicitly, if any; a checkpoint with another layout is refused.
/// `seed` overrides the classifier split seed, which defaults to the
/// training seed.
pub fn evaluate(
    config: &RunConfig,
    checkpoint: &Path,
    snapshot_path: &Path,
    out: &Path,
    expected: Option<VariantConfig>,
    seed: Option<u64>,
    log: Log<'_>,
) -> Result<EvaluateOutcome> {
    let k_list = config.k_list()?;
    let classifier = config.classifier_config()?;
    let (snapshot, checksum) = open_snapshot(snapshot_path)?;
    let ckpt = load_checkpoint(checkpoint)?;
    check_compatible(&ckpt, checkpoint, &snapshot, &checksum)?;
    check_expected_layout(&ckpt, checkpoint, expected)?;
    let data = &snapshot.data;
    let features = NodeFeatures::build(&data.dataset);
    let seed = seed.unwrap_or(ckpt.config.seed);
    let (_, report) = evaluate_model(&ckpt.params, data, &features, seed, &classifier, &k_list, &snapshot.name)?;
    log(&format!(
        "{} users evaluated, {} without test items skipped",
        report.ranking.users_evaluated, report.ranking.users_excluded
    ));
    for m in &report.ranking.per_k {
        log(&format!(
            "K={:<3} precision {:.4}  recall {:.4}  f1 {:.4}  ndcg {:.4}",
            m.k, m.precision, m.recall, m.f1, m.ndcg
        ));
    }
    let c = &report.classification;
    log(&format!(
        "items: recall {:.4}  precision {:.4}  micro-F1 {:.4}",
        c.recall, c.precision, c.micro_f1
    ));

    let cell = ckpt.config.variant;
    write_atomic(&out.join(RANKING_FILE), &ranking_csv([(&cell, &report)]))?;
    write_atomic(&out.join(CLASSIFICATION_FILE), &classification_csv([(&cell, &report)]))?;
    let mut manifest = RunManifest::new("evaluate", seed, checksum, config.clone());
    manifest.layout = Some(ckpt.params.layout.to_string());
    manifest.add(out, RANKING_FILE)?;
    manifest.add(out, CLASSIFICATION_FILE)?;
    manifest.save(out)?;
    Ok(EvaluateOutcome {
        report,
        ranking: out.join(RANKING_FILE),
        classification: out.join(CLASSIFICATION_FILE),
    })
}

/// Runs the sweep from the `[sweep]` section.
pub fn ablate(config: &RunConfig, snapshot_path: &Path, out: &Path, log: Log<'_>) -> Result<AblationTable> {
    let spec = config.sweep_spec()?;
    let (snapshot, checksum) = open_snapshot(snapshot_path)?;
    let data = &snapshot.data;
    let features = NodeFeatures::build(&data.dataset);
    let last_k = *spec.k_list.last().expect("checked non-empty");
    let table = run_ablation(data, &features, &spec, &snapshot.name, |row| {
        let m = row.report.ranking.at(last_k).expect("report covers the K list");
        log(&format!(
            "{:<8} {:<6} seed {:<4} f1@{last_k} {:.4}  ndcg@{last_k} {:.4}  micro-F1 {:.4}",
            row.cell.variant.name(),
            row.cell.proportion().to_string(),
            row.seed,
            m.f1,
            m.ndcg,
            row.report.classification.micro_f1
        ));
        Ok(())
    })?;
    for s in &table.summaries {
        let f1 = s.ranking.last().map(|(_, m)| m[2].display(4)).unwrap_or_default();
        log(&format!(
            "{:<8} {:<6} over {} seeds: f1@{last_k} {f1}  micro-F1 {}",
            s.cell.variant.name(),
            s.cell.proportion().to_string(),
            s.seeds,
            s.classification[2].display(4)
        ));
    }
    let reports = || table.rows.iter().map(|r| (&r.cell, &r.report));
    write_atomic(&out.join(ABLATION_FILE), &ablation_csv(&table))?;
    write_atomic(&out.join(RANKING_FILE), &ranking_csv(reports()))?;
    write_atomic(&out.join(CLASSIFICATION_FILE), &classification_csv(reports()))?;
    let mut manifest = RunManifest::new("ablate", spec.base.seed, checksum, config.clone());
    for f in [ABLATION_FILE, RANKING_FILE, CLASSIFICATION_FILE] {
        manifest.add(out, f)?;
    }
    manifest.save(out)?;
    Ok(table)
}

/// Writes the embeddings of every user and item.
pub fn export(config: &RunConfig, checkpoint: &Path, snapshot_path: &Path, out: &Path) -> Result<PathBuf> {
    let (snapshot, checksum) = open_snapshot(snapshot_path)?;
    let ckpt = load_checkpoint(checkpoint)?;
    check_compatible(&ckpt, checkpoint, &snapshot, &checksum)?;
    let features = NodeFeatures::build(&snapshot.data.dataset);
    let embeddings = EmbeddingSet::compute(&ckpt.params, &features)?;
    let table = EmbeddingTable::new(&snapshot.data.dataset, embeddings)?;
    let path = out.join(EMBEDDINGS_FILE);
    write_embeddings(&path, &table)?;
    let mut manifest = RunManifest::new("export", ckpt.config.seed, checksum, config.clone());
    manifest.layout = Some(ckpt.params.layout.to_string());
    manifest.add(out, EMBEDDINGS_FILE)?;
    manifest.save(out)?;
    Ok(path)
}
