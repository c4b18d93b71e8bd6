//! Run every ablation variant on one noisy SBM and print a comparison table.
//!
//!     cargo run --release --example ablation -- [n_seeds]

use icgnn::harness::{bench, run_experiment, Ablation, ExperimentConfig};

fn main() -> icgnn::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let data = bench::sample(&bench::robustness_sbm(), 0)?;
    println!("{:<24} {:>8} {:>8}", "variant", "mean", "std");
    for ablation in Ablation::COMPARED.into_iter().chain([Ablation::GcnOnly]) {
        let config = ExperimentConfig {
            ablation,
            seeds: (0..n_seeds).collect(),
            ..bench::robustness_config(0.3)
        };
        let report = run_experiment(&config, &data)?;
        println!(
            "{:<24} {:>8.2} {:>8.2}",
            ablation.as_str(),
            100.0 * report.test_accuracy_mean,
            100.0 * report.test_accuracy_std
        );
    }
    Ok(())
}
