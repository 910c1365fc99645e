//! Variant and block-proportion sweeps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::classify::{classify_items, ClassificationScores, ClassifierConfig};
use super::report::{check_k_list, evaluate_ranking, MetricsReport};
use crate::data::{NodeFeatures, PreparedData};
use crate::error::{Error, Result};
use crate::model::{EmbeddingSet, ModelInputs, Proportion, SdrlParams, Variant, VariantConfig};
use crate::train::{LossTrace, TrainConfig, Trainer};

/// Expands a sweep into variant configurations.
///
/// The full model runs once per listed proportion. Partial variants always
/// split their active blocks equally, so they run once regardless of the
/// proportion list.
pub fn sweep_cells(variants: &[Variant], proportions: &[Proportion]) -> Result<Vec<VariantConfig>> {
    if variants.is_empty() {
        return Err(Error::Config("sweep lists no variant".into()));
    }
    if variants.contains(&Variant::Full) && proportions.is_empty() {
        return Err(Error::Config("sweep includes the full model but no proportion".into()));
    }
    let mut cells = Vec::new();
    for &v in variants {
        if v == Variant::Full {
            for &p in proportions {
                if p.0.contains(&0) {
                    return Err(Error::Config(format!("proportion {p} gives the full model an empty block")));
                }
                cells.push(VariantConfig::new(v, p)?);
            }
        } else {
            cells.push(VariantConfig::default_for(v));
        }
    }
    let mut seen = Vec::new();
    for c in &cells {
        if seen.contains(c) {
            return Err(Error::Config(format!(
                "sweep repeats variant {} with proportion {}",
                c.variant,
                c.proportion()
            )));
        }
        seen.push(*c);
    }
    Ok(cells)
}

/// Outcome of training and evaluating one model.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub params: SdrlParams,
    pub trace: LossTrace,
    pub embeddings: EmbeddingSet,
    pub report: MetricsReport,
}

/// Trains one model and evaluates it for ranking and item classification.
pub fn run_cell(
    data: &PreparedData,
    features: &NodeFeatures,
    config: TrainConfig,
    classifier: &ClassifierConfig,
    k_list: &[usize],
    dataset_name: &str,
) -> Result<RunResult> {
    check_k_list(k_list)?;
    let inputs = ModelInputs::new(features, &data.categories);
    let mut trainer = Trainer::new(config, inputs)?;
    trainer.run(|_, _| Ok(()))?;
    let (params, _, trace) = trainer.into_parts();
    let (embeddings, report) = evaluate_model(&params, data, features, config.seed, classifier, k_list, dataset_name)?;
    Ok(RunResult {
        params,
        trace,
        embeddings,
        report,
    })
}

/// Embeds every node with trained parameters and scores the embeddings.
pub fn evaluate_model(
    params: &SdrlParams,
    data: &PreparedData,
    features: &NodeFeatures,
    seed: u64,
    classifier: &ClassifierConfig,
    k_list: &[usize],
    dataset_name: &str,
) -> Result<(EmbeddingSet, MetricsReport)> {
    let embeddings = EmbeddingSet::compute(params, features)?;
    let ranking = evaluate_ranking(&embeddings, &data.dataset, k_list)?;
    let classification = classify_items(&embeddings.items, &data.categories.items, seed, classifier)?;
    let report = MetricsReport {
        variant: variant_label(params),
        layout: params.layout,
        seed,
        dataset: dataset_name.to_string(),
        ranking,
        classification,
    };
    Ok((embeddings, report))
}

fn variant_label(params: &SdrlParams) -> String {
    use crate::model::Block;
    let l = &params.layout;
    match [Block::Internal, Block::External, Block::Other].map(|b| l.is_active(b)) {
        [true, true, true] => Variant::Full,
        [true, true, false] => Variant::IntExt,
        [true, false, true] => Variant::IntOth,
        [false, true, true] => Variant::ExtOth,
        _ => Variant::Whole,
    }
    .name()
    .to_string()
}

/// Mean and sample standard deviation; the deviation of one value is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
        };
        Self { mean, std }
    }

    /// `mean(±std)` at the given number of decimals.
    pub fn display(&self, decimals: usize) -> String {
        format!("{:.*}(±{:.*})", decimals, self.mean, decimals, self.std)
    }
}

/// One row of an ablation table: a cell evaluated under one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub cell: VariantConfig,
    pub seed: u64,
    pub report: MetricsReport,
    pub final_loss: Option<crate::train::EpochLoss>,
}

/// Seed statistics of one cell, metric by metric, in the order
/// `precision, recall, f1, ndcg` per K followed by the classification scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: VariantConfig,
    pub seeds: usize,
    pub ranking: Vec<(usize, [MeanStd; 4])>,
    pub classification: [MeanStd; 3],
}

pub fn summarize(cell: VariantConfig, rows: &[&AblationRow], k_list: &[usize]) -> CellSummary {
    let ranking = k_list
        .iter()
        .map(|&k| {
            let pick = |f: fn(&super::RankingMetrics) -> f64| -> MeanStd {
                let v: Vec<f64> = rows.iter().filter_map(|r| r.report.ranking.at(k).map(f)).collect();
                MeanStd::of(&v)
            };
            (k, [pick(|m| m.precision), pick(|m| m.recall), pick(|m| m.f1), pick(|m| m.ndcg)])
        })
        .collect();
    let cls = |f: fn(&ClassificationScores) -> f64| -> MeanStd {
        let v: Vec<f64> = rows.iter().map(|r| f(&r.report.classification)).collect();
        MeanStd::of(&v)
    };
    CellSummary {
        cell,
        seeds: rows.len(),
        ranking,
        classification: [cls(|c| c.recall), cls(|c| c.precision), cls(|c| c.micro_f1)],
    }
}

/// A complete sweep definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variants: Vec<Variant>,
    pub proportions: Vec<Proportion>,
    pub seeds: Vec<u64>,
    pub k_list: Vec<usize>,
    pub base: TrainConfig,
    pub classifier: ClassifierConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub k_list: Vec<usize>,
    pub rows: Vec<AblationRow>,
    pub summaries: Vec<CellSummary>,
}

/// Trains and evaluates every cell under every seed. `on_row` sees each
/// result as soon as it is available.
pub fn run_ablation<F>(
    data: &PreparedData,
    features: &NodeFeatures,
    spec: &SweepSpec,
    dataset_name: &str,
    mut on_row: F,
) -> Result<AblationTable>
where
    F: FnMut(&AblationRow) -> Result<()>,
{
    if spec.seeds.is_empty() {
        return Err(Error::Config("sweep lists no seed".into()));
    }
    check_k_list(&spec.k_list)?;
    let cells = sweep_cells(&spec.variants, &spec.proportions)?;
    let mut rows = Vec::new();
    for &cell in &cells {
        for &seed in &spec.seeds {
            let config = TrainConfig {
                seed,
                variant: cell,
                ..spec.base
            };
            let result = run_cell(data, features, config, &spec.classifier, &spec.k_list, dataset_name)?;
            let row = AblationRow {
                cell,
                seed,
                report: result.report,
                final_loss: result.trace.last().copied(),
            };
            on_row(&row)?;
            rows.push(row);
        }
    }
    let summaries = cells
        .iter()
        .map(|&cell| {
            let mine: Vec<&AblationRow> = rows.iter().filter(|r| r.cell == cell).collect();
            summarize(cell, &mine, &spec.k_list)
        })
        .collect();
    Ok(AblationTable {
        k_list: spec.k_list.clone(),
        rows,
        summaries,
    })
}
