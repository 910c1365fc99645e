//! Top-K ranking metrics, item classification and ablation sweeps.

pub mod ablation;
pub mod classify;
pub mod ranking;
pub mod report;

pub use ablation::{
    evaluate_model, run_ablation, run_cell, summarize, sweep_cells, AblationRow, AblationTable, CellSummary, MeanStd,
    RunResult, SweepSpec,
};
pub use classify::{classify_items, micro_scores, ClassificationScores, ClassifierConfig};
pub use ranking::{f1, ndcg_at_k, precision_recall_f1_at_k, top_k, topk_recommend, RankedList};
pub use report::{check_k_list, evaluate_ranking, MetricsReport, RankingEvaluation, RankingMetrics};
