//! The `icgnn` command line.
//!
//! Configuration is layered: built-in defaults, then `--config <file>`, then
//! each `--set key=value`, then `--seed`. All randomness derives from the
//! seed through named sub-streams (see [`crate::rng`]).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::harness::{
    generate_sbm, indicator_csv, load_dataset, mean_std, prepare_graph, prepare_seed, run_experiment, table_csv,
    train_seed, write_atomic, write_dataset, write_reports, Ablation, Dataset, ExperimentConfig, ExperimentReport,
    SbmSpec,
};
use crate::{rng, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "icgnn", version, about = "Noise-robust node classification on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the full pipeline and write report.json and summary.csv.
    Train(RunArgs),
    /// Train one seed and write the final per-node indicator table.
    Detect(RunArgs),
    /// Split the data, corrupt the training labels and write them out.
    InjectNoise(RunArgs),
    /// Compare the pipeline variants on identical splits and noise.
    Ablate(RunArgs),
    /// Grid over noise rates and label rates.
    Sweep(SweepArgs),
    /// Write a synthetic stochastic-block-model dataset.
    GenSbm(SbmArgs),
    /// Check a dataset directory.
    ValidateData {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
    pub noise_rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.025,0.05,0.075,0.1")]
    pub label_rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "full,gcn_only")]
    pub ablations: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SbmArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', default_value = "50,50")]
    pub blocks: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    pub p_out: f64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub mean_shift: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Builds the configuration from the three layers.
pub fn resolve_config(config: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    if let Some(path) = config {
        c.apply_file(path)?;
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{o}`")))?;
        c.set(k.trim(), v).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("--set {o}: {m}")),
            other => other,
        })?;
    }
    if let Some(s) = seed {
        c.seeds = vec![s];
    }
    c.validate()?;
    Ok(c)
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("--workers must be >= 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn failed_seeds(reports: &[ExperimentReport]) -> Result<()> {
    let failed: usize = reports.iter().map(|r| r.n_failed).sum();
    if failed > 0 {
        return Err(Error::Numeric(format!("{failed} run(s) failed; see report.json")));
    }
    Ok(())
}

fn fmt_pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn train(args: &RunArgs) -> Result<()> {
    let config = resolve_config(args.config.as_deref(), &args.overrides, args.seed)?;
    let data = load_dataset(&args.data)?;
    let report = with_pool(args.workers, || run_experiment(&config, &data))?;
    write_reports(&args.out, std::slice::from_ref(&report))?;
    println!(
        "{} {}: test accuracy {} ± {} over {} seed(s)",
        data.name,
        config.ablation,
        fmt_pct(report.test_accuracy_mean),
        fmt_pct(report.test_accuracy_std),
        report.seeds.len() - report.n_failed
    );
    failed_seeds(std::slice::from_ref(&report))
}

fn detect(args: &RunArgs) -> Result<()> {
    let mut config = resolve_config(args.config.as_deref(), &args.overrides, args.seed)?;
    if config.ablation == Ablation::GcnOnly {
        return Err(Error::Config("detect needs a variant with the noise indicator, not gcn_only".into()));
    }
    config.seeds.truncate(1);
    let data = load_dataset(&args.data)?;
    let seed = config.seeds[0];
    let prepared = prepare_graph(&config, &data)?;
    let setup = prepare_seed(&config, &data, seed)?;
    let report = train_seed(&config, &data, &prepared, &setup)?;
    let snapshot = report
        .indicator
        .as_ref()
        .ok_or_else(|| Error::Config("no indicator epoch ran (warmup_epochs >= max_epochs)".into()))?;
    create_dir(&args.out)?;
    write_atomic(&args.out.join("indicator.csv"), &indicator_csv(snapshot)?)?;
    if let Some(d) = &report.detection {
        println!(
            "seed {seed}: {} labeled, beta mean {:.4}, detection auc {}",
            snapshot.nodes.len(),
            d.beta_mean,
            d.auc_beta.map_or("n/a".into(), |a| format!("{a:.4}"))
        );
    }
    Ok(())
}

fn inject_noise(args: &RunArgs) -> Result<()> {
    let mut config = resolve_config(args.config.as_deref(), &args.overrides, args.seed)?;
    config.seeds.truncate(1);
    let data = load_dataset(&args.data)?;
    let setup = prepare_seed(&config, &data, config.seeds[0])?;
    let rows = setup
        .split
        .labeled
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            vec![
                i.to_string(),
                data.labels[i].to_string(),
                setup.noisy_labels[r].to_string(),
                u8::from(setup.flips.as_slice()[r]).to_string(),
            ]
        })
        .collect();
    create_dir(&args.out)?;
    let path = args.out.join("noisy_labels.csv");
    write_atomic(&path, &table_csv(&["node_id", "clean_label", "noisy_label", "flipped"], rows)?)?;
    println!(
        "{} of {} labels flipped, written to {}",
        setup.flips.n_flipped(),
        setup.split.labeled.len(),
        path.display()
    );
    Ok(())
}

fn run_variants(data: &Dataset, configs: Vec<ExperimentConfig>) -> Result<Vec<ExperimentReport>> {
    configs.par_iter().map(|c| run_experiment(c, data)).collect()
}

fn ablate(args: &RunArgs) -> Result<()> {
    let base = resolve_config(args.config.as_deref(), &args.overrides, args.seed)?;
    let data = load_dataset(&args.data)?;
    let configs = Ablation::COMPARED
        .iter()
        .map(|&a| ExperimentConfig {
            ablation: a,
            ..base.clone()
        })
        .collect();
    let reports = with_pool(args.workers, || run_variants(&data, configs))?;
    write_reports(&args.out, &reports)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.config.ablation.to_string(),
                r.test_accuracy_mean.to_string(),
                r.test_accuracy_std.to_string(),
                (r.seeds.len() - r.n_failed).to_string(),
            ]
        })
        .collect();
    for row in &rows {
        println!("{:<24} {:>6} ± {:<6}", row[0], fmt_pct(row[1].parse().unwrap_or(f64::NAN)), fmt_pct(row[2].parse().unwrap_or(f64::NAN)));
    }
    write_atomic(
        &args.out.join("ablation.csv"),
        &table_csv(&["variant", "test_accuracy_mean", "test_accuracy_std", "n_seeds"], rows)?,
    )?;
    failed_seeds(&reports)
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let run = &args.run;
    let base = resolve_config(run.config.as_deref(), &run.overrides, run.seed)?;
    let data = load_dataset(&run.data)?;
    let ablations: Vec<Ablation> = args.ablations.iter().map(|a| a.parse()).collect::<Result<_>>()?;
    let mut grid = Vec::new();
    for &a in &ablations {
        for &rate in &args.noise_rates {
            let mut c = ExperimentConfig { ablation: a, ..base.clone() };
            c.noise.rate = rate;
            grid.push(("noise_rate", c));
        }
        for &label_rate in &args.label_rates {
            let c = ExperimentConfig {
                ablation: a,
                label_rate,
                ..base.clone()
            };
            grid.push(("label_rate", c));
        }
    }
    for (_, c) in &grid {
        c.validate()?;
    }
    let reports = with_pool(run.workers, || run_variants(&data, grid.iter().map(|(_, c)| c.clone()).collect()))?;
    write_reports(&run.out, &reports)?;
    let rows = grid
        .iter()
        .zip(&reports)
        .map(|((axis, c), r)| {
            let (mean, std) = mean_std(&r.completed_accuracies());
            vec![
                axis.to_string(),
                c.ablation.to_string(),
                c.noise.kind.as_str().to_string(),
                c.noise.rate.to_string(),
                c.label_rate.to_string(),
                mean.to_string(),
                std.to_string(),
            ]
        })
        .collect();
    write_atomic(
        &run.out.join("sweep.csv"),
        &table_csv(
            &["axis", "ablation", "noise_kind", "noise_rate", "label_rate", "test_accuracy_mean", "test_accuracy_std"],
            rows,
        )?,
    )?;
    println!("{} runs written to {}", reports.len(), run.out.join("sweep.csv").display());
    failed_seeds(&reports)
}

fn gen_sbm(args: &SbmArgs) -> Result<()> {
    let spec = SbmSpec {
        block_sizes: args.blocks.clone(),
        p_in: args.p_in,
        p_out: args.p_out,
        feature_dim: args.feature_dim,
        mean_shift: args.mean_shift,
    };
    let data = generate_sbm(&spec, &mut rng::stream(args.seed, "sbm"))?;
    write_dataset(&args.out, &data)?;
    println!(
        "wrote {} nodes, {} edges, {} classes to {}",
        data.graph.n_nodes(),
        data.graph.n_edges(),
        data.graph.n_classes(),
        args.out.display()
    );
    Ok(())
}

fn validate_data(dir: &Path) -> Result<()> {
    let data = load_dataset(dir)?;
    let mut counts = vec![0usize; data.graph.n_classes()];
    for &y in &data.labels {
        counts[y] += 1;
    }
    let isolated = data.graph.degrees().iter().filter(|&&d| d == 0).count();
    println!(
        "ok: {} nodes, {} edges, {} features, {} classes (sizes {:?}), {} isolated",
        data.graph.n_nodes(),
        data.graph.n_edges(),
        data.graph.n_features(),
        data.graph.n_classes(),
        counts,
        isolated
    );
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Detect(a) => detect(a),
        Command::InjectNoise(a) => inject_noise(a),
        Command::Ablate(a) => ablate(a),
        Command::Sweep(a) => sweep(a),
        Command::GenSbm(a) => gen_sbm(a),
        Command::ValidateData { data } => validate_data(data),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
