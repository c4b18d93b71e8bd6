//! Noise detection on the two-block SBM benchmark.
//!
//! For each seed: sample the graph, corrupt 30% of the training labels,
//! train, and score how well the final indicator separates flipped labels.
//!
//!     cargo run --release --example detect_noise -- [n_seeds]

use icgnn::harness::{bench, mean_std, prepare_graph, prepare_seed, train_seed};

fn main() -> icgnn::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let config = bench::detection_config();
    let (mut structure, mut fused, mut beta) = (Vec::new(), Vec::new(), Vec::new());
    println!("seed  flipped  auc_structure  auc_attribute  auc_fused  auc_beta");
    for seed in 0..n_seeds {
        let data = bench::sample(&bench::detection_sbm(), seed)?;
        let prepared = prepare_graph(&config, &data)?;
        let setup = prepare_seed(&config, &data, seed)?;
        let report = train_seed(&config, &data, &prepared, &setup)?;
        let Some(d) = report.detection else { continue };
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{seed:>4}  {:>3}/{:<3}  {:>13}  {:>13}  {:>9}  {:>8}",
            setup.flips.n_flipped(),
            setup.split.labeled.len(),
            show(d.auc_structure),
            show(d.auc_attribute),
            show(d.auc_fused),
            show(d.auc_beta)
        );
        structure.extend(d.auc_structure);
        fused.extend(d.auc_fused);
        beta.extend(d.auc_beta);
    }
    for (name, xs) in [("structure", &structure), ("fused", &fused), ("beta", &beta)] {
        let (m, s) = mean_std(xs);
        println!("{name:>9}: mean auc {m:.3} ± {s:.3}");
    }
    Ok(())
}
