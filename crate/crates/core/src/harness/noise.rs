use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Flip to one of the other `C − 1` classes, uniformly.
    Uniform,
    /// Flip class `c` to `(c + 1) mod C`.
    Pair,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Uniform => "uniform",
            NoiseKind::Pair => "pair",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseKind::Uniform),
            "pair" => Ok(NoiseKind::Pair),
            other => Err(Error::Config(format!("unknown noise kind `{other}` (expected uniform or pair)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Total probability that a label is corrupted.
    pub rate: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::Config(format!("noise rate must lie in [0, 1), got {}", self.rate)));
        }
        Ok(())
    }

    pub fn inject<R: Rng + ?Sized>(&self, clean: &[usize], n_classes: usize, rng: &mut R) -> Result<(Vec<usize>, FlipMask)> {
        match self.kind {
            NoiseKind::Uniform => inject_uniform_noise(clean, n_classes, self.rate, rng),
            NoiseKind::Pair => inject_pair_noise(clean, n_classes, self.rate, rng),
        }
    }
}

/// `true` where the label was changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipMask(pub Vec<bool>);

impl FlipMask {
    pub fn n_flipped(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    pub fn fraction(&self) -> f64 {
        self.n_flipped() as f64 / self.0.len().max(1) as f64
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

fn check(clean: &[usize], n_classes: usize, p: f64) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument("noise injection needs at least 2 classes".into()));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("noise rate must lie in [0, 1), got {p}")));
    }
    if let Some(&y) = clean.iter().find(|&&y| y >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {y} outside [0, {n_classes})")));
    }
    Ok(())
}

pub fn inject_uniform_noise<R: Rng + ?Sized>(
    clean: &[usize],
    n_classes: usize,
    p: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, FlipMask)> {
    check(clean, n_classes, p)?;
    let mut noisy = Vec::with_capacity(clean.len());
    let mut mask = Vec::with_capacity(clean.len());
    for &y in clean {
        if rng.gen::<f64>() < p {
            // uniform over the other classes: skip over y
            let mut other = rng.gen_range(0..n_classes - 1);
            if other >= y {
                other += 1;
            }
            noisy.push(other);
            mask.push(true);
        } else {
            noisy.push(y);
            mask.push(false);
        }
    }
    Ok((noisy, FlipMask(mask)))
}

pub fn inject_pair_noise<R: Rng + ?Sized>(
    clean: &[usize],
    n_classes: usize,
    p: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, FlipMask)> {
    check(clean, n_classes, p)?;
    let (noisy, mask) = clean
        .iter()
        .map(|&y| {
            if rng.gen::<f64>() < p {
                ((y + 1) % n_classes, true)
            } else {
                (y, false)
            }
        })
        .unzip();
    Ok((noisy, FlipMask(mask)))
}
