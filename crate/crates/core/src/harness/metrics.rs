use serde::Serialize;

use crate::{Error, Result};

/// Noise-detection quality of a confidence vector against the flip mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionMetrics {
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Mann-Whitney AUC of `scores` for separating `positive` from the rest,
/// with tied scores counted as half a win.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} mask entries",
            scores.len(),
            positive.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of average ranks (1-based) over positives
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + end + 1) as f64 / 2.0;
        rank_sum += avg_rank * order[start..end].iter().filter(|&&i| positive[i]).count() as f64;
        start = end;
    }
    let n_pos = n_pos as f64;
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// AUC of ranking by `1 − β̂` against the flip mask, and precision/recall
/// of the rule "noisy if β̂ < 0.5". Precision is 0 when nothing is flagged.
pub fn detection_metrics(beta: &[f64], flipped: &[bool]) -> Result<DetectionMetrics> {
    let suspicion: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let auc = roc_auc(&suspicion, flipped)?;
    let mut tp = 0usize;
    let mut flagged = 0usize;
    for (&b, &f) in beta.iter().zip(flipped) {
        if b < 0.5 {
            flagged += 1;
            if f {
                tp += 1;
            }
        }
    }
    let positives = flipped.iter().filter(|&&f| f).count();
    let precision = if flagged == 0 { 0.0 } else { tp as f64 / flagged as f64 };
    Ok(DetectionMetrics {
        auc,
        precision,
        recall: tp as f64 / positives as f64,
    })
}

/// Fraction of `mask` where the prediction matches the truth. `pred` is
/// aligned with `mask`; `truth` is indexed by node id.
pub fn accuracy(pred: &[usize], truth: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("accuracy over an empty mask".into()));
    }
    if pred.len() != mask.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for a mask of {}",
            pred.len(),
            mask.len()
        )));
    }
    let mut hits = 0usize;
    for (&p, &i) in pred.iter().zip(mask) {
        let t = *truth
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("node {i} has no true label")))?;
        if p == t {
            hits += 1;
        }
    }
    Ok(hits as f64 / mask.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
