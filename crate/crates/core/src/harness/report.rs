use std::path::Path;

use super::dataset::write_atomic;
use super::experiment::{ExperimentReport, IndicatorSnapshot, SeedReport};
use crate::{Error, Result};

/// Column order of `summary.csv`.
pub const SUMMARY_HEADER: [&str; 20] = [
    "dataset",
    "ablation",
    "noise_kind",
    "noise_rate",
    "label_rate",
    "seed",
    "status",
    "test_accuracy",
    "best_val_accuracy",
    "selected_epoch",
    "n_labeled",
    "noise_fraction",
    "auc_beta",
    "precision",
    "recall",
    "auc_structure",
    "auc_attribute",
    "auc_fused",
    "beta_mean",
    "max_correction_tv",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn seed_row(report: &ExperimentReport, s: &SeedReport) -> Vec<String> {
    let c = &report.config;
    let d = s.detection.as_ref();
    vec![
        report.dataset.clone(),
        c.ablation.to_string(),
        c.noise.kind.as_str().to_string(),
        c.noise.rate.to_string(),
        c.label_rate.to_string(),
        s.seed.to_string(),
        match s.status {
            super::experiment::SeedStatus::Completed => "completed".into(),
            super::experiment::SeedStatus::Failed => "failed".into(),
        },
        opt(s.test_accuracy),
        opt(s.best_val_accuracy),
        opt(s.selected_epoch),
        s.n_labeled.to_string(),
        s.noise_fraction.to_string(),
        opt(d.and_then(|d| d.auc_beta)),
        opt(d.and_then(|d| d.precision)),
        opt(d.and_then(|d| d.recall)),
        opt(d.and_then(|d| d.auc_structure)),
        opt(d.and_then(|d| d.auc_attribute)),
        opt(d.and_then(|d| d.auc_fused)),
        opt(d.map(|d| d.beta_mean)),
        opt(d.map(|d| d.max_correction_tv)),
    ]
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Numeric(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Numeric(format!("csv encoding failed: {e}")))
}

/// One row per seed, per report.
pub fn summary_csv(reports: &[ExperimentReport]) -> Result<Vec<u8>> {
    csv_bytes(
        &SUMMARY_HEADER,
        reports.iter().flat_map(|r| r.seeds.iter().map(move |s| seed_row(r, s))),
    )
}

pub fn report_json(reports: &[ExperimentReport]) -> Result<Vec<u8>> {
    let mut bytes = if reports.len() == 1 {
        serde_json::to_vec_pretty(&reports[0])
    } else {
        serde_json::to_vec_pretty(reports)
    }
    .map_err(|e| Error::Numeric(format!("json encoding failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `report.json` and `summary.csv` into `dir`.
pub fn write_reports(dir: &Path, reports: &[ExperimentReport]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("report.json"), &report_json(reports)?)?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(reports)?)
}

/// Per-node indicator table: `node_id,structure_ics,attribute_ics,fused_ics,beta`.
pub fn indicator_csv(snapshot: &IndicatorSnapshot) -> Result<Vec<u8>> {
    let rows = (0..snapshot.nodes.len()).map(|r| {
        vec![
            snapshot.nodes[r].to_string(),
            snapshot.structure[r].to_string(),
            snapshot.attribute[r].to_string(),
            snapshot.fused[r].to_string(),
            snapshot.beta[r].to_string(),
        ]
    });
    csv_bytes(&["node_id", "structure_ics", "attribute_ics", "fused_ics", "beta"], rows)
}

/// A generic table, used by the comparison and sweep outputs.
pub fn table_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    csv_bytes(header, rows)
}
