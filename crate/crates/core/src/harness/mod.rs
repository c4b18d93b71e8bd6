//! Everything around the model: data, noise, splits, the training loop,
//! metrics and report files.

pub mod bench;
mod config;
mod dataset;
mod experiment;
mod metrics;
mod noise;
mod report;
mod sbm;
mod split;

pub use config::{Ablation, ExperimentConfig, FeatureNorm, ModelSelection, CONFIG_KEYS};
pub use dataset::{load_dataset, write_atomic, write_dataset, Dataset};
pub use experiment::{
    assemble_report, prepare_graph, prepare_seed, run_experiment, run_seed, train_seed, DetectionSummary, EpochRecord,
    ExperimentReport, IndicatorSnapshot, PreparedGraph, SeedReport, SeedSetup, SeedStatus,
};
pub use metrics::{accuracy, detection_metrics, mean_std, roc_auc, DetectionMetrics};
pub use noise::{inject_pair_noise, inject_uniform_noise, FlipMask, NoiseKind, NoiseSpec};
pub use report::{indicator_csv, report_json, summary_csv, table_csv, write_reports, SUMMARY_HEADER};
pub use sbm::{generate_sbm, SbmSpec};
pub use split::{split_nodes, split_nodes_with, NodeSplit, SplitFractions};
