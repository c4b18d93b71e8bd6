//! Two-layer graph convolutional encoder with hand-derived gradients.
//!
//! ```text
//! H = Â X W1        Z = ReLU(H)        Z' = dropout(Z)
//! S = Â Z' W2       P = softmax(S)
//! ```
//!
//! `Â X` never changes during training, so [`GcnInput`] computes it once.
//! Targets are constants to the gradient: nothing upstream of the loss
//! (detection, correction, pseudo-labels) is differentiated.

use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;

use crate::graph::NormalizedAdjacency;
use crate::{Error, Result};

const LOG_CLAMP: f64 = 1e-12;

/// Trainable weights plus the dropout rate applied to the hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub dropout: f64,
}

impl ModelParams {
    /// Glorot-uniform initialization.
    pub fn glorot<R: Rng + ?Sized>(
        n_features: usize,
        hidden: usize,
        n_classes: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n_features == 0 || hidden == 0 || n_classes == 0 {
            return Err(Error::InvalidArgument(format!(
                "GCN dimensions must be >= 1 (F = {n_features}, d = {hidden}, C = {n_classes})"
            )));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidArgument(format!("dropout must lie in [0, 1), got {dropout}")));
        }
        let mut uniform = |rows: usize, cols: usize| {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-a..a))
        };
        let w1 = uniform(n_features, hidden);
        let w2 = uniform(hidden, n_classes);
        Ok(Self { w1, w2, dropout })
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.w2.ncols()
    }

    fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }
}

/// Gradients with the shapes of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }
}

/// Normalized adjacency together with the pre-propagated features `Â X`.
#[derive(Debug, Clone)]
pub struct GcnInput {
    adj: NormalizedAdjacency,
    propagated: Array2<f64>,
}

impl GcnInput {
    pub fn new(adj: NormalizedAdjacency, features: ArrayView2<'_, f64>) -> Result<Self> {
        if features.nrows() != adj.n() {
            return Err(Error::InvalidArgument(format!(
                "{} feature rows for a {}-node adjacency",
                features.nrows(),
                adj.n()
            )));
        }
        let propagated = adj.matmul(features);
        Ok(Self { adj, propagated })
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adj
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.n()
    }

    pub fn n_features(&self) -> usize {
        self.propagated.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    hidden_pre: Array2<f64>,
    /// Inverted-dropout multipliers (`0` or `1/(1-p)`), train mode only.
    dropout_scale: Option<Array2<f64>>,
    hidden_dropped: Array2<f64>,
}

/// Representations, predictions and the intermediates needed by
/// [`loss_and_grad`].
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Post-ReLU hidden layer, before dropout.
    pub z: Array2<f64>,
    /// Row-stochastic class probabilities.
    pub p: Array2<f64>,
    log_p: Array2<f64>,
    cache: ForwardCache,
}

impl ForwardOutput {
    pub fn log_probabilities(&self) -> &Array2<f64> {
        &self.log_p
    }
}

fn ensure_finite(m: &Array2<f64>, layer: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite activations in {layer}")))
    }
}

/// Row-wise log-softmax.
fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Forward pass. Eval mode is deterministic and never touches `rng`.
pub fn forward<R: Rng + ?Sized>(
    input: &GcnInput,
    params: &ModelParams,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardOutput> {
    if params.w1.nrows() != input.n_features() || params.w2.nrows() != params.w1.ncols() {
        return Err(Error::InvalidArgument(format!(
            "parameter shapes W1 {:?}, W2 {:?} do not fit {} input features",
            params.w1.dim(),
            params.w2.dim(),
            input.n_features()
        )));
    }
    let hidden_pre = input.propagated.dot(&params.w1);
    ensure_finite(&hidden_pre, "layer 1")?;
    let z = hidden_pre.mapv(|v| v.max(0.0));

    let (dropout_scale, hidden_dropped) = match mode {
        Mode::Train if params.dropout > 0.0 => {
            let keep = 1.0 - params.dropout;
            let scale = Array2::from_shape_simple_fn(z.dim(), || {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            let dropped = &z * &scale;
            (Some(scale), dropped)
        }
        _ => (None, z.clone()),
    };

    let logits = input.adj.matmul(hidden_dropped.dot(&params.w2).view());
    ensure_finite(&logits, "layer 2")?;
    let log_p = log_softmax(&logits);
    let p = log_p.mapv(f64::exp);
    Ok(ForwardOutput {
        z,
        p,
        log_p,
        cache: ForwardCache {
            hidden_pre,
            dropout_scale,
            hidden_dropped,
        },
    })
}

/// Mean soft-label cross-entropy over `mask`, plus `0.5·l2·‖W‖²`.
pub fn loss_and_grad(
    input: &GcnInput,
    params: &ModelParams,
    out: &ForwardOutput,
    targets: ArrayView2<'_, f64>,
    mask: &[usize],
    l2: f64,
) -> Result<(f64, Gradients)> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("loss mask is empty".into()));
    }
    let mut weights = vec![0.0; input.n_nodes()];
    let w = 1.0 / mask.len() as f64;
    for &i in mask {
        weights[i] += w;
    }
    weighted_loss_and_grad(input, params, out, targets, &weights, l2)
}

/// Cross-entropy with an explicit per-row weight (zero excludes a row):
/// `−Σ_i w_i Σ_c t_ic log P_ic + 0.5·l2·(‖W1‖² + ‖W2‖²)`.
///
/// The gradient with respect to the logits is `w_i (P_i Σ_c t_ic − t_i)`,
/// which is linear in the targets.
pub fn weighted_loss_and_grad(
    input: &GcnInput,
    params: &ModelParams,
    out: &ForwardOutput,
    targets: ArrayView2<'_, f64>,
    row_weights: &[f64],
    l2: f64,
) -> Result<(f64, Gradients)> {
    let (n, c) = out.p.dim();
    if targets.dim() != (n, c) || row_weights.len() != n {
        return Err(Error::InvalidArgument(format!(
            "targets {:?} / weights {} do not match predictions {:?}",
            targets.dim(),
            row_weights.len(),
            (n, c)
        )));
    }

    let mut loss = 0.0;
    let mut d_logits = Array2::<f64>::zeros((n, c));
    for i in 0..n {
        let w = row_weights[i];
        if w == 0.0 {
            continue;
        }
        let t = targets.row(i);
        let mass = t.sum();
        let log_p = out.log_p.row(i);
        let p = out.p.row(i);
        let mut d = d_logits.row_mut(i);
        for k in 0..c {
            loss -= w * t[k] * log_p[k].max(LOG_CLAMP.ln());
            d[k] = w * (p[k] * mass - t[k]);
        }
    }
    loss += 0.5 * l2 * (params.w1.iter().map(|v| v * v).sum::<f64>() + params.w2.iter().map(|v| v * v).sum::<f64>());

    // logits = Â G, Â symmetric
    let d_g = input.adj.matmul(d_logits.view());
    let mut grad_w2 = out.cache.hidden_dropped.t().dot(&d_g);
    grad_w2.scaled_add(l2, &params.w2);

    let mut d_hidden = d_g.dot(&params.w2.t());
    if let Some(scale) = &out.cache.dropout_scale {
        d_hidden *= scale;
    }
    Zip::from(&mut d_hidden)
        .and(&out.cache.hidden_pre)
        .for_each(|d, &h| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
    let mut grad_w1 = input.propagated.t().dot(&d_hidden);
    grad_w1.scaled_add(l2, &params.w1);

    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {loss}")));
    }
    Ok((loss, Gradients { w1: grad_w1, w2: grad_w2 }))
}

/// Adam hyper-parameters. `weight_decay` is decoupled (applied directly to
/// the weights, scaled by the learning rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

/// Moment accumulators for [`optimizer_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    m: [Array2<f64>; 2],
    v: [Array2<f64>; 2],
    step: u64,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        let zeros = || [Array2::zeros(params.w1.dim()), Array2::zeros(params.w2.dim())];
        Self {
            config,
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// The gradient contained NaN or infinity; nothing was changed.
    SkippedNonFinite,
}

/// One bias-corrected Adam update.
pub fn optimizer_step(params: &mut ModelParams, grads: &Gradients, state: &mut OptimizerState) -> Result<StepOutcome> {
    if grads.w1.dim() != params.w1.dim() || grads.w2.dim() != params.w2.dim() {
        return Err(Error::InvalidArgument("gradient shapes do not match parameters".into()));
    }
    if !grads.is_finite() {
        return Ok(StepOutcome::SkippedNonFinite);
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
        weight_decay,
    } = state.config;
    state.step += 1;
    let bc1 = 1.0 - beta1.powi(state.step as i32);
    let bc2 = 1.0 - beta2.powi(state.step as i32);
    let [m1, m2] = &mut state.m;
    let [v1, v2] = &mut state.v;
    for (w, g, m, v) in [
        (&mut params.w1, &grads.w1, m1, v1),
        (&mut params.w2, &grads.w2, m2, v2),
    ] {
        Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let update = (*m / bc1) / ((*v / bc2).sqrt() + eps);
            *w -= lr * (update + weight_decay * *w);
        });
    }
    if !params.is_finite() {
        return Err(Error::Numeric("parameters became non-finite".into()));
    }
    Ok(StepOutcome::Applied)
}

/// Arg-max class per masked row; ties go to the lower class id.
pub fn predict(out: &ForwardOutput, mask: &[usize]) -> Vec<usize> {
    mask.iter()
        .map(|&i| {
            let row = out.p.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    fn path_input(n: usize, f: usize, seed: u64) -> GcnInput {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        let adj = NormalizedAdjacency::from_edges(n, &edges).unwrap();
        let mut r = rng::stream(seed, "features");
        let x = Array2::from_shape_simple_fn((n, f), || r.gen_range(-1.0..1.0));
        GcnInput::new(adj, x.view()).unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_predictions() {
        let input = path_input(5, 3, 1);
        let params = ModelParams {
            w1: Array2::zeros((3, 4)),
            w2: Array2::zeros((4, 3)),
            dropout: 0.0,
        };
        let out = forward(&input, &params, Mode::Eval, &mut rng::stream(0, "t")).unwrap();
        for &p in out.p.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_node_single_class() {
        let adj = NormalizedAdjacency::from_edges(1, &[]).unwrap();
        let input = GcnInput::new(adj, array![[2.0]].view()).unwrap();
        let params = ModelParams {
            w1: array![[1.0]],
            w2: array![[3.0]],
            dropout: 0.5,
        };
        let out = forward(&input, &params, Mode::Eval, &mut rng::stream(0, "t")).unwrap();
        assert_eq!(out.z, array![[2.0]]);
        assert_eq!(out.p, array![[1.0]]);
    }

    #[test]
    fn rows_are_stochastic_and_eval_is_deterministic() {
        let input = path_input(12, 5, 2);
        let params = ModelParams::glorot(5, 6, 4, 0.5, &mut rng::stream(2, "init")).unwrap();
        for mode in [Mode::Train, Mode::Eval] {
            let out = forward(&input, &params, mode, &mut rng::stream(3, "drop")).unwrap();
            for row in out.p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
        let a = forward(&input, &params, Mode::Eval, &mut rng::stream(4, "a")).unwrap();
        let b = forward(&input, &params, Mode::Eval, &mut rng::stream(5, "b")).unwrap();
        assert_eq!(a.p, b.p);
        assert_eq!(predict(&a, &[0, 5, 11]), predict(&b, &[0, 5, 11]));
    }

    #[test]
    fn self_consistent_targets_have_zero_logit_gradient() {
        let input = path_input(8, 4, 3);
        let params = ModelParams::glorot(4, 5, 3, 0.0, &mut rng::stream(3, "init")).unwrap();
        let out = forward(&input, &params, Mode::Eval, &mut rng::stream(0, "t")).unwrap();
        let targets = out.p.clone();
        let mask: Vec<usize> = (0..8).collect();
        let (_, g) = loss_and_grad(&input, &params, &out, targets.view(), &mask, 0.0).unwrap();
        let norm: f64 = g.w1.iter().chain(g.w2.iter()).map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-9, "gradient norm {norm}");
    }

    #[test]
    fn half_half_prediction_costs_log_two() {
        let adj = NormalizedAdjacency::from_edges(1, &[]).unwrap();
        let input = GcnInput::new(adj, array![[1.0]].view()).unwrap();
        let params = ModelParams {
            w1: array![[1.0]],
            w2: array![[0.0, 0.0]],
            dropout: 0.0,
        };
        let out = forward(&input, &params, Mode::Eval, &mut rng::stream(0, "t")).unwrap();
        let (loss, _) = loss_and_grad(&input, &params, &out, array![[1.0, 0.0]].view(), &[0], 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_is_affine_in_targets() {
        let input = path_input(10, 4, 4);
        let params = ModelParams::glorot(4, 6, 3, 0.3, &mut rng::stream(4, "init")).unwrap();
        let out = forward(&input, &params, Mode::Train, &mut rng::stream(4, "drop")).unwrap();
        let mut r = rng::stream(4, "targets");
        let mut soft = || {
            let mut t = Array2::from_shape_simple_fn((10, 3), || r.gen_range(0.0..1.0));
            for mut row in t.rows_mut() {
                let s = row.sum();
                row.mapv_inplace(|v| v / s);
            }
            t
        };
        let (t1, t2) = (soft(), soft());
        let a = 0.3;
        let mix = &t1 * a + &t2 * (1.0 - a);
        let mask: Vec<usize> = (0..10).collect();
        let (_, g1) = loss_and_grad(&input, &params, &out, t1.view(), &mask, 5e-4).unwrap();
        let (_, g2) = loss_and_grad(&input, &params, &out, t2.view(), &mask, 5e-4).unwrap();
        let (_, gm) = loss_and_grad(&input, &params, &out, mix.view(), &mask, 5e-4).unwrap();
        let expect_w1 = &g1.w1 * a + &g2.w1 * (1.0 - a);
        let expect_w2 = &g1.w2 * a + &g2.w2 * (1.0 - a);
        for (x, y) in gm.w1.iter().zip(expect_w1.iter()).chain(gm.w2.iter().zip(expect_w2.iter())) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn predict_breaks_ties_low() {
        let adj = NormalizedAdjacency::from_edges(1, &[]).unwrap();
        let input = GcnInput::new(adj, array![[1.0]].view()).unwrap();
        let tie = ModelParams {
            w1: array![[1.0]],
            w2: array![[0.0, 0.0]],
            dropout: 0.0,
        };
        let out = forward(&input, &tie, Mode::Eval, &mut rng::stream(0, "t")).unwrap();
        assert_eq!(predict(&out, &[0]), vec![0]);
        let skew = ModelParams {
            w1: array![[1.0]],
            w2: array![[0.2f64.ln(), 0.5f64.ln(), 0.3f64.ln()]],
            dropout: 0.0,
        };
        let out = forward(&input, &skew, Mode::Eval, &mut rng::stream(0, "t")).unwrap();
        assert_eq!(predict(&out, &[0]), vec![1]);
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut params = ModelParams::glorot(3, 4, 2, 0.0, &mut rng::stream(1, "init")).unwrap();
        let before = params.clone();
        let config = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut state = OptimizerState::new(config, &params);
        let grads = Gradients {
            w1: Array2::zeros((3, 4)),
            w2: Array2::zeros((4, 2)),
        };
        assert_eq!(optimizer_step(&mut params, &grads, &mut state).unwrap(), StepOutcome::Applied);
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = ModelParams {
            w1: array![[1.0, -1.0]],
            w2: array![[0.5], [0.0]],
            dropout: 0.0,
        };
        let config = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut state = OptimizerState::new(config, &params);
        let g = Gradients {
            w1: array![[2.0, -0.001]],
            w2: array![[0.0], [1e3]],
        };
        optimizer_step(&mut params, &g, &mut state).unwrap();
        // bias-corrected first step: Δ = −lr · g / (|g| + eps)
        let expect = |w: f64, g: f64| w - 0.01 * g / (g.abs() + 1e-8);
        assert!((params.w1[[0, 0]] - expect(1.0, 2.0)).abs() < 1e-15);
        assert!((params.w1[[0, 1]] - expect(-1.0, -0.001)).abs() < 1e-15);
        assert_eq!(params.w2[[0, 0]], 0.5);
        assert!((params.w2[[1, 0]] - expect(0.0, 1e3)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let mut params = ModelParams::glorot(2, 2, 2, 0.0, &mut rng::stream(1, "init")).unwrap();
        let before = params.clone();
        let mut state = OptimizerState::new(AdamConfig::default(), &params);
        let mut g = Gradients {
            w1: Array2::zeros((2, 2)),
            w2: Array2::zeros((2, 2)),
        };
        g.w1[[0, 1]] = f64::NAN;
        assert_eq!(
            optimizer_step(&mut params, &g, &mut state).unwrap(),
            StepOutcome::SkippedNonFinite
        );
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn adam_descends_a_quadratic() {
        // f(w) = Σ (w - 3)², gradient 2(w - 3)
        let mut params = ModelParams {
            w1: array![[0.0, 10.0]],
            w2: array![[-4.0]],
            dropout: 0.0,
        };
        let config = AdamConfig {
            lr: 0.05,
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut state = OptimizerState::new(config, &params);
        let f = |p: &ModelParams| p.w1.iter().chain(p.w2.iter()).map(|w| (w - 3.0).powi(2)).sum::<f64>();
        let mut losses = vec![f(&params)];
        for _ in 0..200 {
            let g = Gradients {
                w1: params.w1.mapv(|w| 2.0 * (w - 3.0)),
                w2: params.w2.mapv(|w| 2.0 * (w - 3.0)),
            };
            optimizer_step(&mut params, &g, &mut state).unwrap();
            losses.push(f(&params));
        }
        for w in losses[20..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        assert!(*losses.last().unwrap() < 1e-2 * losses[0]);
    }
}
