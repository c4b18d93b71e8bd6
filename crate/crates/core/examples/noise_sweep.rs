//! Accuracy of the full pipeline against plain GCN training as the noise
//! rate grows, on the four-block SBM benchmark.
//!
//!     cargo run --release --example noise_sweep -- [n_seeds]

use icgnn::harness::{bench, run_experiment, Ablation, ExperimentConfig};

fn main() -> icgnn::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let data = bench::sample(&bench::robustness_sbm(), 0)?;
    println!("rate   full            gcn_only        gap");
    for rate in [0.1, 0.2, 0.3, 0.4] {
        let run = |ablation| {
            let config = ExperimentConfig {
                ablation,
                seeds: (0..n_seeds).collect(),
                ..bench::robustness_config(rate)
            };
            run_experiment(&config, &data)
        };
        let full = run(Ablation::Full)?;
        let plain = run(Ablation::GcnOnly)?;
        println!(
            "{rate:.1}    {:.2} ± {:.2}    {:.2} ± {:.2}    {:+.2}",
            100.0 * full.test_accuracy_mean,
            100.0 * full.test_accuracy_std,
            100.0 * plain.test_accuracy_mean,
            100.0 * plain.test_accuracy_std,
            100.0 * (full.test_accuracy_mean - plain.test_accuracy_mean)
        );
    }
    Ok(())
}
