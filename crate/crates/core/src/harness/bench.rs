//! Fixed synthetic workloads shared by the test suite and the examples.

use super::config::ExperimentConfig;
use super::noise::{NoiseKind, NoiseSpec};
use super::sbm::{generate_sbm, SbmSpec};
use super::Dataset;
use crate::{rng, Result};

/// Two blocks of 50 nodes, intra-block edge probability 0.2, inter 0.02,
/// 16-dimensional features with class means 2.0 apart.
pub fn detection_sbm() -> SbmSpec {
    SbmSpec {
        block_sizes: vec![50, 50],
        p_in: 0.2,
        p_out: 0.02,
        feature_dim: 16,
        mean_shift: 2.0,
    }
}

/// 30% uniform noise on a 20% labeled set; 10% validation, 70% test.
pub fn detection_config() -> ExperimentConfig {
    ExperimentConfig {
        label_rate: 0.2,
        val_fraction: 0.1,
        test_fraction: 0.7,
        noise: NoiseSpec {
            kind: NoiseKind::Uniform,
            rate: 0.3,
        },
        ..ExperimentConfig::default()
    }
}

/// Four blocks of 150 nodes, intra 0.06, inter 0.006, 32-dimensional
/// features with class means 1.5 apart.
pub fn robustness_sbm() -> SbmSpec {
    SbmSpec {
        block_sizes: vec![150; 4],
        p_in: 0.06,
        p_out: 0.006,
        feature_dim: 32,
        mean_shift: 1.5,
    }
}

/// Standard 80/10 split with a 10% label rate, uniform noise at `rate`.
pub fn robustness_config(rate: f64) -> ExperimentConfig {
    ExperimentConfig {
        label_rate: 0.1,
        noise: NoiseSpec {
            kind: NoiseKind::Uniform,
            rate,
        },
        ..ExperimentConfig::default()
    }
}

/// Samples `spec` from the `"sbm"` stream of `seed`.
pub fn sample(spec: &SbmSpec, seed: u64) -> Result<Dataset> {
    generate_sbm(spec, &mut rng::stream(seed, "sbm"))
}
