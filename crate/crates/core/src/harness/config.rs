//! Experiment configuration and its flat `key = value` file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::noise::{NoiseKind, NoiseSpec};
use crate::diffusion::{DEFAULT_DENSE_CAP, DEFAULT_TELEPORT};
use crate::indicator::DEFAULT_GMM_ITERS;
use crate::refinery::{NeighborSelection, DEFAULT_NEIGHBORS};
use crate::{Error, Result};

/// Pipeline variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    /// Attribute-level scores only (`α = 1`).
    NoSIcs,
    /// Structure-level scores only (`α = 0`).
    NoAIcs,
    /// Labeled targets stay the raw noisy one-hots.
    NoNc,
    /// No pseudo-label loss term.
    NoPl,
    /// Row-normalized `A + I` replaces the structural diffusion.
    #[serde(rename = "adjacency_instead_of_T")]
    AdjacencyInsteadOfT,
    /// Plain cross-entropy on the noisy labels.
    GcnOnly,
}

impl Ablation {
    /// The variants compared by the `ablate` command.
    pub const COMPARED: [Ablation; 6] = [
        Ablation::Full,
        Ablation::NoSIcs,
        Ablation::NoAIcs,
        Ablation::NoNc,
        Ablation::NoPl,
        Ablation::AdjacencyInsteadOfT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoSIcs => "no_s_ics",
            Ablation::NoAIcs => "no_a_ics",
            Ablation::NoNc => "no_nc",
            Ablation::NoPl => "no_pl",
            Ablation::AdjacencyInsteadOfT => "adjacency_instead_of_T",
            Ablation::GcnOnly => "gcn_only",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Ablation::Full,
            Ablation::NoSIcs,
            Ablation::NoAIcs,
            Ablation::NoNc,
            Ablation::NoPl,
            Ablation::AdjacencyInsteadOfT,
            Ablation::GcnOnly,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown ablation `{s}`")))
    }
}

/// Which parameters produce the test prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelection {
    /// Earliest epoch with the best validation accuracy.
    BestValidation,
    LastEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureNorm {
    None,
    /// Divide each feature row by its L1 norm.
    Row,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub knn_k: usize,
    pub alpha: f64,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub gmm_iters: usize,
    pub neighbor_m: usize,
    #[serde(serialize_with = "ser_selection")]
    pub neighbor_selection: NeighborSelection,
    pub warmup_epochs: usize,
    pub pseudo_weight: f64,
    pub label_rate: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub noise: NoiseSpec,
    pub seeds: Vec<u64>,
    pub ablation: Ablation,
    pub model_selection: ModelSelection,
    pub feature_norm: FeatureNorm,
    pub dense_cap: usize,
}

fn ser_selection<S: serde::Serializer>(s: &NeighborSelection, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(selection_str(*s))
}

fn selection_str(s: NeighborSelection) -> &'static str {
    match s {
        NeighborSelection::TopM => "top_m",
        NeighborSelection::Sampled => "sampled",
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_TELEPORT,
            knn_k: 5,
            alpha: 0.5,
            hidden_dim: 64,
            dropout: 0.5,
            lr: 0.01,
            weight_decay: 5e-4,
            max_epochs: 200,
            gmm_iters: DEFAULT_GMM_ITERS,
            neighbor_m: DEFAULT_NEIGHBORS,
            neighbor_selection: NeighborSelection::TopM,
            warmup_epochs: 0,
            pseudo_weight: 1.0,
            label_rate: 0.05,
            val_fraction: 0.1,
            test_fraction: 0.8,
            noise: NoiseSpec {
                kind: NoiseKind::Uniform,
                rate: 0.2,
            },
            seeds: (0..5).collect(),
            ablation: Ablation::Full,
            model_selection: ModelSelection::BestValidation,
            feature_norm: FeatureNorm::None,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

/// Every accepted key, in echo order.
pub const CONFIG_KEYS: [&str; 23] = [
    "epsilon",
    "knn_k",
    "alpha",
    "hidden_dim",
    "dropout",
    "lr",
    "weight_decay",
    "max_epochs",
    "gmm_iters",
    "neighbor_m",
    "neighbor_selection",
    "warmup_epochs",
    "pseudo_weight",
    "label_rate",
    "val_fraction",
    "test_fraction",
    "noise_kind",
    "noise_rate",
    "seeds",
    "ablation",
    "model_selection",
    "feature_norm",
    "dense_cap",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "epsilon" => self.epsilon = parse(key, value)?,
            "knn_k" => self.knn_k = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "gmm_iters" => self.gmm_iters = parse(key, value)?,
            "neighbor_m" => self.neighbor_m = parse(key, value)?,
            "neighbor_selection" => {
                self.neighbor_selection = match value {
                    "top_m" => NeighborSelection::TopM,
                    "sampled" => NeighborSelection::Sampled,
                    _ => return Err(Error::Config(format!("invalid value `{value}` for `{key}` (top_m|sampled)"))),
                }
            }
            "warmup_epochs" => self.warmup_epochs = parse(key, value)?,
            "pseudo_weight" => self.pseudo_weight = parse(key, value)?,
            "label_rate" => self.label_rate = parse(key, value)?,
            "val_fraction" => self.val_fraction = parse(key, value)?,
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "noise_kind" => self.noise.kind = value.parse()?,
            "noise_rate" => self.noise.rate = parse(key, value)?,
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|s| parse::<u64>(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "ablation" => self.ablation = value.parse()?,
            "model_selection" => {
                self.model_selection = match value {
                    "best_validation" => ModelSelection::BestValidation,
                    "last_epoch" => ModelSelection::LastEpoch,
                    _ => {
                        return Err(Error::Config(format!(
                            "invalid value `{value}` for `{key}` (best_validation|last_epoch)"
                        )))
                    }
                }
            }
            "feature_norm" => {
                self.feature_norm = match value {
                    "none" => FeatureNorm::None,
                    "row" => FeatureNorm::Row,
                    _ => return Err(Error::Config(format!("invalid value `{value}` for `{key}` (none|row)"))),
                }
            }
            "dense_cap" => self.dense_cap = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Current value of `key`, formatted so that [`set`](Self::set) reads it back.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "epsilon" => self.epsilon.to_string(),
            "knn_k" => self.knn_k.to_string(),
            "alpha" => self.alpha.to_string(),
            "hidden_dim" => self.hidden_dim.to_string(),
            "dropout" => self.dropout.to_string(),
            "lr" => self.lr.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "max_epochs" => self.max_epochs.to_string(),
            "gmm_iters" => self.gmm_iters.to_string(),
            "neighbor_m" => self.neighbor_m.to_string(),
            "neighbor_selection" => selection_str(self.neighbor_selection).to_string(),
            "warmup_epochs" => self.warmup_epochs.to_string(),
            "pseudo_weight" => self.pseudo_weight.to_string(),
            "label_rate" => self.label_rate.to_string(),
            "val_fraction" => self.val_fraction.to_string(),
            "test_fraction" => self.test_fraction.to_string(),
            "noise_kind" => self.noise.kind.as_str().to_string(),
            "noise_rate" => self.noise.rate.to_string(),
            "seeds" => self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
            "ablation" => self.ablation.as_str().to_string(),
            "model_selection" => match self.model_selection {
                ModelSelection::BestValidation => "best_validation".into(),
                ModelSelection::LastEpoch => "last_epoch".into(),
            },
            "feature_norm" => match self.feature_norm {
                FeatureNorm::None => "none".into(),
                FeatureNorm::Row => "row".into(),
            },
            "dense_cap" => self.dense_cap.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Applies a config file body on top of `self`. Errors name the line.
    pub fn apply_str(&mut self, text: &str, origin: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| match e {
                Error::Config(msg) => Error::Config(format!("{origin}:{}: {msg}", idx + 1)),
                other => other,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected `key = value`, got `{line}`", idx + 1)))?;
            self.set(key.trim(), value).map_err(at)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile(path.to_path_buf())
            } else {
                Error::io(path, e)
            }
        })?;
        self.apply_str(&text, &path.display().to_string())
    }

    /// `key = value` lines for every key; parsing them yields `self` again.
    pub fn to_config_string(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    /// Rejects out-of-range values. Dataset-dependent checks (for example
    /// enough labeled nodes per class) happen when a run starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.knn_k == 0 {
            return bad("knn_k must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.gmm_iters == 0 {
            return bad("gmm_iters must be >= 1".into());
        }
        if self.neighbor_m == 0 {
            return bad("neighbor_m must be >= 1".into());
        }
        if !(self.pseudo_weight >= 0.0 && self.pseudo_weight.is_finite()) {
            return bad(format!("pseudo_weight must be >= 0, got {}", self.pseudo_weight));
        }
        for (name, v) in [
            ("label_rate", self.label_rate),
            ("val_fraction", self.val_fraction),
            ("test_fraction", self.test_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.label_rate <= 0.0 {
            return bad("label_rate must be positive".into());
        }
        if self.label_rate + self.val_fraction + self.test_fraction > 1.0 + 1e-12 {
            return bad(format!(
                "label_rate {} + val_fraction {} + test_fraction {} exceeds 1",
                self.label_rate, self.val_fraction, self.test_fraction
            ));
        }
        self.noise.validate()?;
        if self.seeds.is_empty() {
            return bad("seeds must list at least one seed".into());
        }
        Ok(())
    }

    /// `α` after the ablation override.
    pub fn effective_alpha(&self) -> f64 {
        match self.ablation {
            Ablation::NoSIcs => 1.0,
            Ablation::NoAIcs => 0.0,
            _ => self.alpha,
        }
    }
}
