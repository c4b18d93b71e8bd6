//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`, `FAIL` or `BLOCKED` line; run with
//!
//!     cargo test --test acceptance -- --include-ignored --nocapture
//!
//! to evaluate all of them, including the ones that need external data or
//! are known to fail.

use std::path::PathBuf;
use std::process::Command;

use ndarray::Array2;
use rand::Rng;

use icgnn::diffusion::{ppr_diffusion, ppr_power_series};
use icgnn::encoder::{forward, weighted_loss_and_grad, GcnInput, Mode, ModelParams};
use icgnn::graph::NormalizedAdjacency;
use icgnn::harness::{
    bench, load_dataset, mean_std, prepare_graph, prepare_seed, run_experiment, train_seed, Ablation, ExperimentConfig,
    ExperimentReport, NoiseKind,
};
use icgnn::indicator::{fit_gmm, IcsLevel, IcsVector};
use icgnn::rng;

const CORA_ENV: &str = "ICGNN_CORA_DIR";

fn verdict(name: &str, pass: bool, detail: impl AsRef<str>) -> bool {
    println!("{} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    pass
}

fn random_graph(r: &mut rng::Rng, n: usize) -> Vec<(usize, usize)> {
    let p: f64 = r.gen_range(0.0..0.5);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if r.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

#[test]
fn diffusion_matches_power_series() {
    let mut r = rng::stream(2024, "diffusion-oracle");
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.gen_range(1..=64);
        let adj = NormalizedAdjacency::from_edges(n, &random_graph(&mut r, n)).unwrap();
        for eps in [0.1, 0.5, 0.85] {
            let exact = ppr_diffusion(&adj, eps).unwrap();
            let series = ppr_power_series(&adj, eps, 1e-13).unwrap();
            let diff = exact
                .matrix()
                .iter()
                .zip(series.matrix().iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(diff);
        }
    }
    assert!(verdict(
        "diffusion oracle",
        worst < 1e-9,
        format!("max |T - series| = {worst:.2e} over 50 graphs x 3 teleports (tol 1e-9)")
    ));
}

/// Loss at `params` with a fixed dropout mask (the rng is re-seeded).
fn loss_at(input: &GcnInput, params: &ModelParams, targets: &Array2<f64>, weights: &[f64], l2: f64, seed: u64) -> f64 {
    let out = forward(input, params, Mode::Train, &mut rng::stream(seed, "mask")).unwrap();
    weighted_loss_and_grad(input, params, &out, targets.view(), weights, l2).unwrap().0
}

#[test]
fn gradients_match_finite_differences() {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for instance in 0..20u64 {
        let mut r = rng::stream(instance, "gradcheck");
        let n = r.gen_range(2..=20);
        let f = r.gen_range(1..=8);
        let d = r.gen_range(1..=8);
        let c = r.gen_range(2..=8);
        let adj = NormalizedAdjacency::from_edges(n, &random_graph(&mut r, n)).unwrap();
        let x = Array2::from_shape_simple_fn((n, f), || r.gen_range(-1.0..1.0));
        let input = GcnInput::new(adj, x.view()).unwrap();
        let dropout = if instance % 2 == 0 { 0.0 } else { 0.3 };
        let params = ModelParams::glorot(f, d, c, dropout, &mut r).unwrap();
        // soft targets on a random subset with uneven weights
        let mut targets = Array2::<f64>::zeros((n, c));
        let mut weights = vec![0.0; n];
        for i in 0..n {
            if r.gen_bool(0.7) {
                let mut row: Vec<f64> = (0..c).map(|_| r.gen_range(0.0..1.0)).collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                targets.row_mut(i).assign(&ndarray::Array1::from(row));
                weights[i] = r.gen_range(0.1..1.0);
            }
        }
        weights[0] = 0.5;
        targets[[0, 0]] = 1.0;
        let l2 = 5e-4;

        let out = forward(&input, &params, Mode::Train, &mut rng::stream(instance, "mask")).unwrap();
        let (_, grads) = weighted_loss_and_grad(&input, &params, &out, targets.view(), &weights, l2).unwrap();

        for layer in 0..2 {
            let shape = if layer == 0 { params.w1.dim() } else { params.w2.dim() };
            for a in 0..shape.0 {
                for b in 0..shape.1 {
                    let mut plus = params.clone();
                    let mut minus = params.clone();
                    if layer == 0 {
                        plus.w1[[a, b]] += h;
                        minus.w1[[a, b]] -= h;
                    } else {
                        plus.w2[[a, b]] += h;
                        minus.w2[[a, b]] -= h;
                    }
                    let numeric = (loss_at(&input, &plus, &targets, &weights, l2, instance)
                        - loss_at(&input, &minus, &targets, &weights, l2, instance))
                        / (2.0 * h);
                    let analytic = if layer == 0 { grads.w1[[a, b]] } else { grads.w2[[a, b]] };
                    let scale = analytic.abs().max(numeric.abs()).max(1e-8);
                    worst = worst.max((analytic - numeric).abs() / scale);
                }
            }
        }
    }
    assert!(verdict(
        "gradient correctness",
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 20 instances (tol 1e-4)")
    ));
}

#[test]
fn gmm_is_monotone_and_recovers_clusters() {
    let mut r = rng::stream(7, "gmm-acceptance");
    let mut worst_drop = 0.0f64;
    for _ in 0..100 {
        let len = r.gen_range(2..300);
        let kind = r.gen_range(0..3);
        let xs: Vec<f64> = (0..len)
            .map(|_| match kind {
                0 => r.gen_range(0.0..1.0),
                1 => {
                    let base: f64 = if r.gen_bool(0.6) { 0.1 } else { 0.9 };
                    (base + r.gen_range(-0.05..0.05f64)).max(0.0)
                }
                _ => r.gen_range(0.0f64..1.0).powi(4) * 3.0,
            })
            .collect();
        let model = fit_gmm(&IcsVector::new(xs, IcsLevel::Fused).unwrap(), 50).unwrap();
        for w in model.log_likelihood_trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }

    use rand_distr::{Distribution, Normal};
    let mut s = rng::stream(8, "gmm-recovery");
    let (a, b) = (Normal::new(0.1, 0.02).unwrap(), Normal::new(0.5, 0.05).unwrap());
    let xs: Vec<f64> = (0..500)
        .map(|i| {
            let x: f64 = if i % 10 < 7 { a.sample(&mut s) } else { b.sample(&mut s) };
            x.max(0.0)
        })
        .collect();
    let model = fit_gmm(&IcsVector::new(xs, IcsLevel::Fused).unwrap(), 100).unwrap();
    let mut means = model.means;
    means.sort_by(f64::total_cmp);
    let err = (means[0] - 0.1).abs().max((means[1] - 0.5).abs());

    assert!(verdict(
        "GMM properties",
        worst_drop <= 1e-9 && err < 0.03,
        format!("largest log-likelihood decrease {worst_drop:.2e} (slack 1e-9); recovered means {means:.4?}, max error {err:.4} (tol 0.03)")
    ));
}

/// Fused-score AUC must exceed `0.5 + margin` on this many of the 20 seeds.
const DETECTION_MARGIN: f64 = 0.1;
const DETECTION_MIN_SEEDS: usize = 18;

#[test]
#[ignore = "fails: seeds 0-19 include realized flip rates of 45-65%, where two-class contradiction scores cannot separate flipped labels"]
fn detection_beats_chance_on_sbm() {
    let config = bench::detection_config();
    let (mut fused, mut structure) = (Vec::new(), Vec::new());
    let mut above = 0;
    for seed in 0..20u64 {
        let data = bench::sample(&bench::detection_sbm(), seed).unwrap();
        let prepared = prepare_graph(&config, &data).unwrap();
        let setup = prepare_seed(&config, &data, seed).unwrap();
        let report = train_seed(&config, &data, &prepared, &setup).unwrap();
        let d = report.detection.expect("full pipeline reports detection");
        let f = d.auc_fused.unwrap_or(0.5);
        let s = d.auc_structure.unwrap_or(0.5);
        if f > 0.5 + DETECTION_MARGIN {
            above += 1;
        }
        println!(
            "  seed {seed:>2}: flipped {:>2}/{}, auc fused {f:.3}, structure {s:.3}",
            setup.flips.n_flipped(),
            setup.split.labeled.len()
        );
        fused.push(f);
        structure.push(s);
    }
    let (mf, _) = mean_std(&fused);
    let (ms, _) = mean_std(&structure);
    assert!(verdict(
        "detection property",
        above >= DETECTION_MIN_SEEDS && mf >= ms - 0.05,
        format!(
            "fused AUC > {:.2} on {above}/20 seeds (need {DETECTION_MIN_SEEDS}); mean fused {mf:.3} vs structure {ms:.3} (need >= structure - 0.05)",
            0.5 + DETECTION_MARGIN
        )
    ));
}

#[test]
fn train_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sbm");
    let exe = env!("CARGO_BIN_EXE_icgnn");
    let status = Command::new(exe)
        .args(["gen-sbm", "--out"])
        .arg(&data)
        .args(["--blocks", "40,40,40", "--p-in", "0.15", "--p-out", "0.01", "--seed", "3"])
        .status()
        .unwrap();
    assert!(status.success());
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "max_epochs = 60\nlabel_rate = 0.1\nnoise_rate = 0.3\n").unwrap();

    let run = |out: &str| {
        let out = dir.path().join(out);
        let status = Command::new(exe)
            .args(["train", "--data"])
            .arg(&data)
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", "7", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        (
            std::fs::read(out.join("summary.csv")).unwrap(),
            std::fs::read(out.join("report.json")).unwrap(),
        )
    };
    let (csv_a, json_a) = run("a");
    let (csv_b, json_b) = run("b");
    assert!(verdict(
        "determinism",
        csv_a == csv_b && json_a == json_b,
        format!("two `train --seed 7` runs: summary.csv {} bytes, identical = {}", csv_a.len(), csv_a == csv_b)
    ));
}

#[test]
fn accuracy_degrades_gracefully_with_noise() {
    let data = bench::sample(&bench::robustness_sbm(), 0).unwrap();
    let rates = [0.1, 0.2, 0.3, 0.4];
    let mut full = Vec::new();
    let mut gap = Vec::new();
    for rate in rates {
        let run = |ablation| {
            let config = ExperimentConfig {
                ablation,
                ..bench::robustness_config(rate)
            };
            run_experiment(&config, &data).unwrap().test_accuracy_mean
        };
        let f = run(Ablation::Full);
        let g = run(Ablation::GcnOnly);
        println!("  noise {rate:.1}: full {:.2}, gcn_only {:.2}", 100.0 * f, 100.0 * g);
        full.push(f);
        gap.push(f - g);
    }
    let monotone = full.windows(2).all(|w| w[1] <= w[0] + 0.02);
    let holds = gap[3] >= gap[0] - 0.02;
    assert!(verdict(
        "noise-rate robustness",
        monotone && holds,
        format!(
            "full accuracy {:.2?} (non-increasing within 2 points: {monotone}); gap over gcn_only {:+.2} at 0.1 -> {:+.2} at 0.4 (holds within 2 points: {holds})",
            full.iter().map(|a| 100.0 * a).collect::<Vec<_>>(),
            100.0 * gap[0],
            100.0 * gap[3]
        )
    ));
}

fn cora() -> Option<PathBuf> {
    std::env::var_os(CORA_ENV).map(PathBuf::from)
}

#[test]
fn cora_availability() {
    if cora().is_none() {
        for name in ["Cora uniform noise", "Cora pair noise", "Cora ablation ordering"] {
            println!("BLOCKED {name}: set {CORA_ENV} to a converted Cora directory and run with --include-ignored");
        }
    }
}

fn cora_runs(kind: NoiseKind, ablations: &[Ablation]) -> Vec<ExperimentReport> {
    let dir = cora().unwrap_or_else(|| panic!("{CORA_ENV} is not set"));
    let data = load_dataset(&dir).unwrap();
    assert_eq!((data.graph.n_nodes(), data.graph.n_classes()), (2708, 7), "not the Cora graph");
    ablations
        .iter()
        .map(|&ablation| {
            let mut config = ExperimentConfig {
                ablation,
                label_rate: 0.05,
                feature_norm: icgnn::harness::FeatureNorm::Row,
                ..ExperimentConfig::default()
            };
            config.noise.kind = kind;
            config.noise.rate = 0.2;
            run_experiment(&config, &data).unwrap()
        })
        .collect()
}

fn cora_band(kind: NoiseKind, name: &str, band: (f64, f64), margin: f64) {
    let r = cora_runs(kind, &[Ablation::Full, Ablation::GcnOnly]);
    let (full, plain) = (100.0 * r[0].test_accuracy_mean, 100.0 * r[1].test_accuracy_mean);
    assert!(verdict(
        name,
        full >= band.0 && full <= band.1 && full - plain >= margin,
        format!(
            "full {full:.2} ± {:.2} (band [{}, {}]), gcn_only {plain:.2}, margin {:.2} (need >= {margin})",
            100.0 * r[0].test_accuracy_std,
            band.0,
            band.1,
            full - plain
        )
    ));
}

#[test]
#[ignore = "needs the Cora dataset (set ICGNN_CORA_DIR)"]
fn cora_uniform_noise_accuracy() {
    cora_band(NoiseKind::Uniform, "Cora uniform noise", (77.0, 84.0), 5.0);
}

#[test]
#[ignore = "needs the Cora dataset (set ICGNN_CORA_DIR)"]
fn cora_pair_noise_accuracy() {
    cora_band(NoiseKind::Pair, "Cora pair noise", (76.0, 82.0), 3.0);
}

#[test]
#[ignore = "needs the Cora dataset (set ICGNN_CORA_DIR)"]
fn cora_ablation_ordering() {
    let variants = [Ablation::Full, Ablation::NoNc, Ablation::NoPl, Ablation::AdjacencyInsteadOfT];
    let r = cora_runs(NoiseKind::Uniform, &variants);
    let full = r[0].test_accuracy_mean;
    let ok = r[1..].iter().all(|x| full > x.test_accuracy_mean);
    let detail: Vec<String> = r
        .iter()
        .map(|x| format!("{} {:.2}", x.config.ablation, 100.0 * x.test_accuracy_mean))
        .collect();
    assert!(verdict("Cora ablation ordering", ok, detail.join(", ")));
}
