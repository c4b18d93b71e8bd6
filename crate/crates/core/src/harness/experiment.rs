//! The end-to-end training loop, one isolated run per seed.
//!
//! Per epoch: an eval-mode forward gives `Z` and `P`; labeled
//! representations build the affinity graph and `R`; structure and
//! attribute scores are fused and fed to the GMM; the resulting `β̂` mixes
//! each noisy one-hot with its neighbor aggregate; unlabeled nodes get the
//! aggregate as a pseudo-label; one optimizer step follows.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Ablation, ExperimentConfig, FeatureNorm, ModelSelection};
use super::metrics::{accuracy, detection_metrics, mean_std, roc_auc};
use super::noise::FlipMask;
use super::split::{split_nodes_with, NodeSplit, SplitFractions};
use super::Dataset;
use crate::diffusion::{adjacency_diffusion, ppr_diffusion_with, row_normalize, DiffusionMatrix, DiffusionSource, RowStochasticDiffusion};
use crate::encoder::{
    forward, optimizer_step, predict, weighted_loss_and_grad, AdamConfig, GcnInput, Mode, ModelParams, OptimizerState,
    StepOutcome,
};
use crate::graph::{build_knn_affinity, normalize_adjacency};
use crate::indicator::{
    attribute_ics, class_index_sets, clean_confidence, fit_gmm, fuse_ics, structure_ics, ClassIndexSets, IcsVector,
};
use crate::refinery::{
    aggregate_rows, assemble_targets, correct_labels, pseudo_labels, select_neighbors, NeighborSample, NeighborSelection,
    RowOrigin,
};
use crate::rng;
use crate::{Error, Result};

/// Seed-independent inputs: the encoder input and, unless the run is
/// `gcn_only`, the structural diffusion matrix with its row-normalized form.
pub struct PreparedGraph {
    pub input: GcnInput,
    pub diffusion: Option<(DiffusionMatrix, RowStochasticDiffusion)>,
}

pub fn prepare_graph(config: &ExperimentConfig, data: &Dataset) -> Result<PreparedGraph> {
    let graph = match config.feature_norm {
        FeatureNorm::None => data.graph.clone(),
        FeatureNorm::Row => data.graph.with_row_normalized_features(),
    };
    let adj = normalize_adjacency(&graph)?;
    let diffusion = match config.ablation {
        Ablation::GcnOnly => None,
        Ablation::AdjacencyInsteadOfT => Some(adjacency_diffusion(&adj)?),
        _ => Some(ppr_diffusion_with(&adj, config.epsilon, DiffusionSource::Structure, config.dense_cap)?),
    };
    let diffusion = match diffusion {
        Some(t) => {
            let tn = row_normalize(&t)?;
            Some((t, tn))
        }
        None => None,
    };
    Ok(PreparedGraph {
        input: GcnInput::new(adj, graph.features().view())?,
        diffusion,
    })
}

/// Split and corrupted labels of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSetup {
    pub seed: u64,
    pub split: NodeSplit,
    /// Noisy label of each node in `split.labeled`, in the same order.
    pub noisy_labels: Vec<usize>,
    pub flips: FlipMask,
}

/// Draws the split and the label noise. Both depend only on the seed, the
/// split fractions and the noise spec, so ablations share them.
pub fn prepare_seed(config: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<SeedSetup> {
    let fractions = SplitFractions {
        test: config.test_fraction,
        validation: config.val_fraction,
        labeled: config.label_rate,
    };
    let c = data.graph.n_classes();
    let split = split_nodes_with(&data.labels, c, fractions, &mut rng::stream(seed, "split"))?;
    let clean: Vec<usize> = split.labeled.iter().map(|&i| data.labels[i]).collect();
    let (noisy_labels, flips) = config.noise.inject(&clean, c, &mut rng::stream(seed, "noise"))?;
    Ok(SeedSetup {
        seed,
        split,
        noisy_labels,
        flips,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// Validation accuracy of the parameters after this epoch's step.
    pub val_accuracy: f64,
    pub step_skipped: bool,
}

/// Detection quality of the final epoch's indicator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionSummary {
    pub beta_mean: f64,
    /// Largest total-variation distance between a corrected label and its
    /// noisy one-hot.
    pub max_correction_tv: f64,
    /// `None` when the flip mask has no flipped or no clean entry.
    pub auc_beta: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub auc_structure: Option<f64>,
    pub auc_attribute: Option<f64>,
    pub auc_fused: Option<f64>,
}

/// Per-node indicator values of the final epoch, labeled nodes only.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSnapshot {
    pub nodes: Vec<usize>,
    pub structure: Vec<f64>,
    pub attribute: Vec<f64>,
    pub fused: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub status: SeedStatus,
    pub error: Option<String>,
    pub test_accuracy: Option<f64>,
    pub best_val_accuracy: Option<f64>,
    /// Number of optimizer epochs behind the test prediction.
    pub selected_epoch: Option<usize>,
    pub n_labeled: usize,
    pub noise_fraction: f64,
    /// Agreement of final pseudo-labels with the true labels of the
    /// unlabeled nodes. Reporting only; never used in training.
    pub pseudo_label_accuracy: Option<f64>,
    pub detection: Option<DetectionSummary>,
    pub trace: Vec<EpochRecord>,
    #[serde(skip)]
    pub indicator: Option<IndicatorSnapshot>,
}

impl SeedReport {
    fn failed(setup: &SeedSetup, error: &Error) -> Self {
        Self {
            seed: setup.seed,
            status: SeedStatus::Failed,
            error: Some(error.to_string()),
            test_accuracy: None,
            best_val_accuracy: None,
            selected_epoch: None,
            n_labeled: setup.split.labeled.len(),
            noise_fraction: setup.flips.fraction(),
            pseudo_label_accuracy: None,
            detection: None,
            trace: Vec::new(),
            indicator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub n_nodes: usize,
    pub n_classes: usize,
    pub config: ExperimentConfig,
    /// Mean and population std over completed seeds.
    pub test_accuracy_mean: f64,
    pub test_accuracy_std: f64,
    pub n_failed: usize,
    pub seeds: Vec<SeedReport>,
}

impl ExperimentReport {
    pub fn completed_accuracies(&self) -> Vec<f64> {
        self.seeds.iter().filter_map(|s| s.test_accuracy).collect()
    }
}

fn one_hot(labels: &[usize], c: usize) -> Array2<f64> {
    let mut m = Array2::zeros((labels.len(), c));
    for (i, &y) in labels.iter().enumerate() {
        m[[i, y]] = 1.0;
    }
    m
}

fn select_all(
    tn: &RowStochasticDiffusion,
    m: usize,
    selection: NeighborSelection,
    rng: &mut rng::Rng,
) -> Result<Vec<NeighborSample>> {
    (0..tn.n()).map(|i| select_neighbors(tn, i, m, selection, rng)).collect()
}

fn argmax(row: ndarray::ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

struct Indicator {
    attribute: IcsVector,
    fused: IcsVector,
    beta: Vec<f64>,
    max_tv: f64,
    pseudo: Option<Array2<f64>>,
}

/// Runs one seed on a prepared graph. Numeric failures are returned as
/// errors; [`run_experiment`] turns them into failed seed reports.
pub fn train_seed(
    config: &ExperimentConfig,
    data: &Dataset,
    prepared: &PreparedGraph,
    setup: &SeedSetup,
) -> Result<SeedReport> {
    let input = &prepared.input;
    let c = data.graph.n_classes();
    let labeled = &setup.split.labeled;
    let unlabeled = setup.split.unlabeled();
    let n = input.n_nodes();
    let seed = setup.seed;

    let mut params = ModelParams::glorot(
        input.n_features(),
        config.hidden_dim,
        c,
        config.dropout,
        &mut rng::stream(seed, "init"),
    )?;
    // weight decay enters the loss as an L2 term, not through the optimizer
    let adam = AdamConfig {
        lr: config.lr,
        weight_decay: 0.0,
        ..AdamConfig::default()
    };
    let mut opt = OptimizerState::new(adam, &params);
    let mut dropout_rng = rng::stream(seed, "dropout");
    let mut neighbor_rng = rng::stream(seed, "neighbors");

    let y = one_hot(&setup.noisy_labels, c);
    let plain_weights = {
        let mut w = vec![0.0; n];
        for &i in labeled {
            w[i] = 1.0 / labeled.len() as f64;
        }
        w
    };
    let plain_targets = {
        let mut t = Array2::zeros((n, c));
        for (r, &i) in labeled.iter().enumerate() {
            t.row_mut(i).assign(&y.row(r));
        }
        t
    };

    let detecting = config.ablation != Ablation::GcnOnly;
    let sets: Option<ClassIndexSets> = if detecting {
        Some(class_index_sets(&setup.noisy_labels, c)?)
    } else {
        None
    };
    let s_ics = match (&prepared.diffusion, &sets) {
        (Some((t, _)), Some(sets)) => Some(structure_ics(t, sets, labeled)?),
        _ => None,
    };
    let mut samples = match (&prepared.diffusion, config.neighbor_selection) {
        (Some((_, tn)), NeighborSelection::TopM) => {
            Some(select_all(tn, config.neighbor_m, NeighborSelection::TopM, &mut neighbor_rng)?)
        }
        _ => None,
    };
    let alpha = config.effective_alpha();
    let knn_k = config.knn_k.min(labeled.len().saturating_sub(1));

    let mut trace = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut last: Option<Indicator> = None;
    let mut eval = forward(input, &params, Mode::Eval, &mut dropout_rng)?;

    for epoch in 0..config.max_epochs {
        let use_indicator = detecting && epoch >= config.warmup_epochs;
        let (targets, weights) = if use_indicator {
            let (t, tn) = prepared.diffusion.as_ref().expect("diffusion present when detecting");
            let sets = sets.as_ref().expect("class sets present when detecting");
            let s_ics = s_ics.as_ref().expect("structure scores present when detecting");

            let z_l = eval.z.select(Axis(0), labeled);
            let a_ics = if knn_k == 0 {
                IcsVector::new(vec![0.0; labeled.len()], crate::indicator::IcsLevel::Attribute)?
            } else {
                let affinity = build_knn_affinity(z_l.view(), knn_k)?;
                let r = ppr_diffusion_with(&affinity.normalized()?, config.epsilon, DiffusionSource::Attribute, config.dense_cap)?;
                attribute_ics(&r, sets)?
            };
            let fused = fuse_ics(s_ics, &a_ics, alpha)?;
            let model = fit_gmm(&fused, config.gmm_iters)?;
            let beta = clean_confidence(&model, &fused);

            if config.neighbor_selection == NeighborSelection::Sampled {
                samples = Some(select_all(tn, config.neighbor_m, NeighborSelection::Sampled, &mut neighbor_rng)?);
            }
            let samples = samples.as_ref().expect("neighbor samples selected");
            let h_l = aggregate_rows(samples, t, eval.p.view(), labeled)?;
            let corrected = if config.ablation == Ablation::NoNc {
                y.clone()
            } else {
                correct_labels(y.view(), &beta, h_l.view())?
            };
            let use_pseudo = config.ablation != Ablation::NoPl && config.pseudo_weight > 0.0 && !unlabeled.is_empty();
            let pseudo = if use_pseudo {
                Some(pseudo_labels(samples, t, eval.p.view(), &unlabeled)?)
            } else {
                None
            };
            let targets = assemble_targets(n, labeled, corrected.view(), &unlabeled, pseudo.as_ref().map(|p| p.view()))?;
            let weights = targets.row_weights(config.pseudo_weight);
            debug_assert!(targets.nodes_with(RowOrigin::CorrectedLabeled).len() == labeled.len());

            let max_tv = (&corrected - &y)
                .rows()
                .into_iter()
                .map(|r| 0.5 * r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            last = Some(Indicator {
                attribute: a_ics,
                fused,
                beta: beta.values().to_vec(),
                max_tv,
                pseudo,
            });
            (targets.rows, weights)
        } else {
            (plain_targets.clone(), plain_weights.clone())
        };

        let train = forward(input, &params, Mode::Train, &mut dropout_rng)?;
        let (loss, grads) = weighted_loss_and_grad(input, &params, &train, targets.view(), &weights, config.weight_decay)
            .map_err(|e| Error::Numeric(format!("epoch {epoch}: {e}")))?;
        let skipped = optimizer_step(&mut params, &grads, &mut opt)? == StepOutcome::SkippedNonFinite;

        eval = forward(input, &params, Mode::Eval, &mut dropout_rng)?;
        let val_accuracy = if setup.split.validation.is_empty() {
            f64::NAN
        } else {
            accuracy(&predict(&eval, &setup.split.validation), &data.labels, &setup.split.validation)?
        };
        trace.push(EpochRecord {
            epoch,
            loss,
            val_accuracy,
            step_skipped: skipped,
        });
        if config.model_selection == ModelSelection::BestValidation
            && best.as_ref().map_or(true, |(acc, _, _)| val_accuracy > *acc)
        {
            best = Some((val_accuracy, epoch + 1, params.clone()));
        }
    }

    let (selected_epoch, final_out) = match best {
        Some((_, e, p)) if config.model_selection == ModelSelection::BestValidation => {
            (e, forward(input, &p, Mode::Eval, &mut dropout_rng)?)
        }
        _ => (config.max_epochs, eval),
    };
    let test = &setup.split.test;
    let test_accuracy = if test.is_empty() {
        None
    } else {
        Some(accuracy(&predict(&final_out, test), &data.labels, test)?)
    };
    let best_val_accuracy = trace
        .iter()
        .map(|r| r.val_accuracy)
        .filter(|v| v.is_finite())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));

    let flips = setup.flips.as_slice();
    let has_both = flips.iter().any(|&f| f) && flips.iter().any(|&f| !f);
    let (detection, indicator, pseudo_label_accuracy) = match (last, &s_ics) {
        (Some(ind), Some(s)) => {
            let auc = |scores: &[f64]| if has_both { roc_auc(scores, flips).ok() } else { None };
            let det = if has_both { Some(detection_metrics(&ind.beta, flips)?) } else { None };
            let summary = DetectionSummary {
                beta_mean: ind.beta.iter().sum::<f64>() / ind.beta.len() as f64,
                max_correction_tv: ind.max_tv,
                auc_beta: det.map(|d| d.auc),
                precision: det.map(|d| d.precision),
                recall: det.map(|d| d.recall),
                auc_structure: auc(s.values()),
                auc_attribute: auc(ind.attribute.values()),
                auc_fused: auc(ind.fused.values()),
            };
            let pseudo_acc = ind.pseudo.as_ref().map(|p| {
                let hits = unlabeled
                    .iter()
                    .enumerate()
                    .filter(|&(r, &i)| argmax(p.row(r)) == data.labels[i])
                    .count();
                hits as f64 / unlabeled.len() as f64
            });
            let snapshot = IndicatorSnapshot {
                nodes: labeled.clone(),
                structure: s.values().to_vec(),
                attribute: ind.attribute.values().to_vec(),
                fused: ind.fused.values().to_vec(),
                beta: ind.beta,
            };
            (Some(summary), Some(snapshot), pseudo_acc)
        }
        _ => (None, None, None),
    };

    Ok(SeedReport {
        seed,
        status: SeedStatus::Completed,
        error: None,
        test_accuracy,
        best_val_accuracy,
        selected_epoch: Some(selected_epoch),
        n_labeled: labeled.len(),
        noise_fraction: setup.flips.fraction(),
        pseudo_label_accuracy,
        detection,
        trace,
        indicator,
    })
}

/// Runs one seed from scratch: split, noise, training.
pub fn run_seed(config: &ExperimentConfig, data: &Dataset, prepared: &PreparedGraph, seed: u64) -> Result<SeedReport> {
    let setup = prepare_seed(config, data, seed)?;
    match train_seed(config, data, prepared, &setup) {
        Ok(r) => Ok(r),
        Err(e @ Error::Numeric(_)) => Ok(SeedReport::failed(&setup, &e)),
        Err(e) => Err(e),
    }
}

/// Runs every configured seed in parallel on the current rayon pool and
/// merges the results in seed order.
pub fn run_experiment(config: &ExperimentConfig, data: &Dataset) -> Result<ExperimentReport> {
    config.validate()?;
    let prepared = prepare_graph(config, data)?;
    let seeds: Vec<SeedReport> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, data, &prepared, seed))
        .collect::<Result<_>>()?;
    Ok(assemble_report(config, data, seeds))
}

pub fn assemble_report(config: &ExperimentConfig, data: &Dataset, seeds: Vec<SeedReport>) -> ExperimentReport {
    let accs: Vec<f64> = seeds.iter().filter_map(|s| s.test_accuracy).collect();
    let (mean, std) = mean_std(&accs);
    ExperimentReport {
        dataset: data.name.clone(),
        n_nodes: data.graph.n_nodes(),
        n_classes: data.graph.n_classes(),
        config: config.clone(),
        test_accuracy_mean: mean,
        test_accuracy_std: std,
        n_failed: seeds.iter().filter(|s| s.status == SeedStatus::Failed).count(),
        seeds,
    }
}
