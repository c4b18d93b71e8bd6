use serde::Serialize;

use super::IcsVector;
use crate::{Error, Result};

/// Lower bound on component variances.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Default EM iteration budget.
pub const DEFAULT_GMM_ITERS: usize = 10;

const CONVERGENCE_DELTA: f64 = 1e-6;
const WEIGHT_FLOOR: f64 = 1e-12;

/// Two-component 1-D Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmModel {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
    /// Log-likelihood of the initial parameters followed by one entry per EM
    /// iteration.
    pub log_likelihood_trace: Vec<f64>,
    /// Set when every input value was identical.
    pub degenerate: bool,
    pub converged: bool,
}

fn log_normal(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - d * d / (2.0 * variance)
}

impl GmmModel {
    fn log_joint(&self, x: f64) -> [f64; 2] {
        [
            self.weights[0].ln() + log_normal(x, self.means[0], self.variances[0]),
            self.weights[1].ln() + log_normal(x, self.means[1], self.variances[1]),
        ]
    }

    /// Posterior component probabilities at `x`.
    pub fn posterior(&self, x: f64) -> [f64; 2] {
        if self.degenerate {
            return [0.5, 0.5];
        }
        let [a, b] = self.log_joint(x);
        let m = a.max(b);
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        [ea / (ea + eb), eb / (ea + eb)]
    }

    pub fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| {
                let [a, b] = self.log_joint(x);
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            })
            .sum()
    }

    /// Index of the component with the smaller mean (the clean cluster).
    pub fn clean_component(&self) -> usize {
        usize::from(self.means[1] < self.means[0])
    }

    /// One EM iteration: E-step responsibilities, then maximum-likelihood
    /// updates of weights, means and floored variances.
    pub fn em_step(&self, xs: &[f64]) -> GmmModel {
        let mut mass = [0.0; 2];
        let mut weighted_sum = [0.0; 2];
        let resp: Vec<[f64; 2]> = xs.iter().map(|&x| self.posterior(x)).collect();
        for (r, &x) in resp.iter().zip(xs) {
            for q in 0..2 {
                mass[q] += r[q];
                weighted_sum[q] += r[q] * x;
            }
        }
        let mut next = self.clone();
        for q in 0..2 {
            if mass[q] > 0.0 {
                next.means[q] = weighted_sum[q] / mass[q];
                let spread: f64 = resp
                    .iter()
                    .zip(xs)
                    .map(|(r, &x)| r[q] * (x - next.means[q]).powi(2))
                    .sum();
                next.variances[q] = (spread / mass[q]).max(VARIANCE_FLOOR);
            }
            next.weights[q] = (mass[q] / xs.len() as f64).max(WEIGHT_FLOOR);
        }
        let total = next.weights[0] + next.weights[1];
        next.weights = [next.weights[0] / total, next.weights[1] / total];
        next
    }
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fits a two-component mixture by EM.
///
/// Initialization is deterministic: means at the 25th and 75th percentiles
/// (falling back to min and max when those coincide), equal weights, and
/// both variances at the sample variance. Iteration stops when the
/// log-likelihood gains less than `1e-6` or after `max_iters` iterations.
pub fn fit_gmm(ics: &IcsVector, max_iters: usize) -> Result<GmmModel> {
    let xs = ics.values();
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "GMM needs at least 2 values, got {}",
            xs.len()
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidArgument("GMM needs max_iters >= 1".into()));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi - lo <= 1e-12 {
        return Ok(GmmModel {
            weights: [0.5, 0.5],
            means: [lo, lo],
            variances: [VARIANCE_FLOOR, VARIANCE_FLOOR],
            log_likelihood_trace: Vec::new(),
            degenerate: true,
            converged: true,
        });
    }

    let mut means = [percentile(&sorted, 0.25), percentile(&sorted, 0.75)];
    if means[0] == means[1] {
        means = [lo, hi];
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR);

    let mut model = GmmModel {
        weights: [0.5, 0.5],
        means,
        variances: [variance, variance],
        log_likelihood_trace: Vec::with_capacity(max_iters + 1),
        degenerate: false,
        converged: false,
    };
    let mut ll = model.log_likelihood(xs);
    model.log_likelihood_trace.push(ll);
    for _ in 0..max_iters {
        let mut next = model.em_step(xs);
        next.log_likelihood_trace = std::mem::take(&mut model.log_likelihood_trace);
        let next_ll = next.log_likelihood(xs);
        if !next_ll.is_finite() {
            return Err(Error::Numeric("GMM log-likelihood became non-finite".into()));
        }
        next.log_likelihood_trace.push(next_ll);
        model = next;
        if next_ll - ll < CONVERGENCE_DELTA {
            model.converged = true;
            break;
        }
        ll = next_ll;
    }
    Ok(model)
}

/// Per-node probability that the label is clean.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfidence {
    beta: Vec<f64>,
}

impl CleanConfidence {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some(b) = beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::InvalidArgument(format!("confidence {b} outside [0, 1]")));
        }
        Ok(Self { beta })
    }

    pub fn values(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.beta.iter().sum::<f64>() / self.beta.len().max(1) as f64
    }
}

/// Posterior of the smaller-mean component at each score; a degenerate fit
/// trusts every label.
pub fn clean_confidence(model: &GmmModel, ics: &IcsVector) -> CleanConfidence {
    let beta = if model.degenerate {
        vec![1.0; ics.len()]
    } else {
        let q = model.clean_component();
        ics.values().iter().map(|&x| model.posterior(x)[q]).collect()
    };
    CleanConfidence { beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicator::IcsLevel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ics(values: Vec<f64>) -> IcsVector {
        IcsVector::new(values, IcsLevel::Fused).unwrap()
    }

    fn two_clusters() -> IcsVector {
        let mut v = vec![0.0; 100];
        v.extend(std::iter::repeat(1.0).take(100));
        ics(v)
    }

    #[test]
    fn separated_clusters_are_recovered() {
        let model = fit_gmm(&two_clusters(), DEFAULT_GMM_ITERS).unwrap();
        let q = model.clean_component();
        assert!(model.means[q].abs() < 1e-3);
        assert!((model.means[1 - q] - 1.0).abs() < 1e-3);
        assert!((model.weights[0] - 0.5).abs() < 1e-3);
        assert!((model.weights[0] + model.weights[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clean_confidence_at_cluster_centres() {
        let data = two_clusters();
        let model = fit_gmm(&data, DEFAULT_GMM_ITERS).unwrap();
        let probe = ics(vec![0.0, 1.0]);
        let beta = clean_confidence(&model, &probe);
        assert!(beta.values()[0] >= 0.99);
        assert!(beta.values()[1] <= 0.01);
    }

    #[test]
    fn constant_input_is_degenerate() {
        let data = ics(vec![0.3; 20]);
        let model = fit_gmm(&data, DEFAULT_GMM_ITERS).unwrap();
        assert!(model.degenerate);
        assert_eq!(model.means, [0.3, 0.3]);
        assert_eq!(model.variances, [VARIANCE_FLOOR; 2]);
        assert_eq!(clean_confidence(&model, &data).values(), &[1.0; 20]);
    }

    #[test]
    fn rejects_tiny_inputs() {
        assert!(fit_gmm(&ics(vec![0.1]), 10).is_err());
        assert!(fit_gmm(&ics(vec![0.1, 0.2]), 0).is_err());
    }

    /// E and M formulas written out directly, one iteration from a given
    /// starting point.
    fn reference_iteration(xs: &[f64], w: [f64; 2], mu: [f64; 2], var: [f64; 2]) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let pdf = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let mut r = Vec::new();
        for &x in xs {
            let a = w[0] * pdf(x, mu[0], var[0]);
            let b = w[1] * pdf(x, mu[1], var[1]);
            r.push([a / (a + b), b / (a + b)]);
        }
        let mut nw = [0.0; 2];
        let mut nm = [0.0; 2];
        let mut nv = [0.0; 2];
        for q in 0..2 {
            let s: f64 = r.iter().map(|ri| ri[q]).sum();
            nm[q] = r.iter().zip(xs).map(|(ri, x)| ri[q] * x).sum::<f64>() / s;
            nv[q] = r.iter().zip(xs).map(|(ri, x)| ri[q] * (x - nm[q]).powi(2)).sum::<f64>() / s;
            nw[q] = s / xs.len() as f64;
        }
        (nw, nm, nv)
    }

    fn mixture_sample(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Normal::<f64>::new(0.1, 0.02).unwrap();
        let b = Normal::<f64>::new(0.5, 0.05).unwrap();
        (0..500)
            .map(|i| {
                let x: f64 = if i < 350 { a.sample(&mut rng) } else { b.sample(&mut rng) };
                x.max(0.0)
            })
            .collect()
    }

    #[test]
    fn single_iteration_matches_direct_formulas() {
        let xs = mixture_sample(11);
        let start = GmmModel {
            weights: [0.4, 0.6],
            means: [0.05, 0.3],
            variances: [0.01, 0.02],
            log_likelihood_trace: vec![],
            degenerate: false,
            converged: false,
        };
        let next = start.em_step(&xs);
        let (w, m, v) = reference_iteration(&xs, start.weights, start.means, start.variances);
        for q in 0..2 {
            assert!((next.weights[q] - w[q]).abs() < 1e-12);
            assert!((next.means[q] - m[q]).abs() < 1e-12);
            assert!((next.variances[q] - v[q]).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_mixture_recovery() {
        let model = fit_gmm(&ics(mixture_sample(5)), DEFAULT_GMM_ITERS).unwrap();
        let q = model.clean_component();
        assert!((model.means[q] - 0.1).abs() < 0.03, "{model:?}");
        assert!((model.means[1 - q] - 0.5).abs() < 0.03, "{model:?}");
    }

    #[test]
    fn crossover_point_has_even_confidence() {
        let data = ics(mixture_sample(9));
        let model = fit_gmm(&data, DEFAULT_GMM_ITERS).unwrap();
        let q = model.clean_component();
        // bisection on the posterior-equality condition between the means
        let f = |x: f64| {
            let [a, b] = model.log_joint(x);
            if q == 0 { a - b } else { b - a }
        };
        let (mut lo, mut hi) = (model.means[q], model.means[1 - q]);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        let beta = clean_confidence(&model, &ics(vec![0.5 * (lo + hi)]));
        assert!((beta.values()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn equal_variance_confidence_is_monotone() {
        let model = GmmModel {
            weights: [0.7, 0.3],
            means: [0.1, 0.6],
            variances: [0.01, 0.01],
            log_likelihood_trace: vec![],
            degenerate: false,
            converged: true,
        };
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.005).collect();
        let beta = clean_confidence(&model, &ics(grid));
        for w in beta.values().windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }
}
