//! Adam optimization and the deterministic training loop.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{loss_mse, Gradients, Mlp};
use crate::{Error, Result};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Desk-scale defaults. Paper-scale training uses 60000 epochs on the
    /// full architecture; the optimizer constants are the standard Adam
    /// values either way.
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            batch_size: 128,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

/// First/second moment estimates, parameter-shaped.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m_w: Vec<Array2<f64>>,
    pub v_w: Vec<Array2<f64>>,
    pub m_b: Vec<Array1<f64>>,
    pub v_b: Vec<Array1<f64>>,
    /// Completed steps; bias correction uses t+1 on the next step.
    pub t: usize,
}

impl AdamState {
    pub fn new(mlp: &Mlp) -> Self {
        AdamState {
            m_w: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v_w: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            m_b: mlp.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            v_b: mlp.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update on a flat parameter slice.
pub fn adam_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: usize,
    cfg: &TrainConfig,
) {
    debug_assert!(t >= 1);
    let b1t = 1.0 - cfg.beta1.powi(t as i32);
    let b2t = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..theta.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = m[i] / b1t;
        let v_hat = v[i] / b2t;
        theta[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Apply one Adam step to every parameter of the network.
pub fn adam_step(mlp: &mut Mlp, grads: &Gradients, state: &mut AdamState, cfg: &TrainConfig) {
    state.t += 1;
    let t = state.t;
    for l in 0..mlp.weights.len() {
        adam_update(
            mlp.weights[l].as_slice_mut().expect("contiguous"),
            grads.weights[l].as_slice().expect("contiguous"),
            state.m_w[l].as_slice_mut().expect("contiguous"),
            state.v_w[l].as_slice_mut().expect("contiguous"),
            t,
            cfg,
        );
        adam_update(
            mlp.biases[l].as_slice_mut().expect("contiguous"),
            grads.biases[l].as_slice().expect("contiguous"),
            state.m_b[l].as_slice_mut().expect("contiguous"),
            state.v_b[l].as_slice_mut().expect("contiguous"),
            t,
            cfg,
        );
    }
}

/// Per-epoch loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
}

/// Train on (x_train, y_train) with per-epoch validation.
///
/// Standardization statistics are computed from the training inputs and
/// stored on the network before the first step. Batch order, dropout draws,
/// and summation order are all fixed by `cfg.seed`, so the loss history is
/// bit-reproducible.
pub fn train(
    mlp: &mut Mlp,
    x_train: &ArrayView2<f64>,
    y_train: &ArrayView2<f64>,
    x_val: &ArrayView2<f64>,
    y_val: &ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    if x_train.nrows() == 0 || x_val.nrows() == 0 {
        return Err(Error::Validation("training and validation sets must be nonempty".into()));
    }
    if x_train.nrows() != y_train.nrows() || x_val.nrows() != y_val.nrows() {
        return Err(Error::Dimension("input/target row counts differ".into()));
    }
    if x_train.ncols() != mlp.arch().input_dim || y_train.ncols() != mlp.arch().output_dim {
        return Err(Error::Dimension(format!(
            "dataset is {}->{}, network is {}->{}",
            x_train.ncols(),
            y_train.ncols(),
            mlp.arch().input_dim,
            mlp.arch().output_dim
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Validation("epochs and batch size must be >= 1".into()));
    }
    if !(cfg.lr >= 0.0) {
        return Err(Error::Validation(format!("learning rate must be >= 0, got {}", cfg.lr)));
    }

    let n = x_train.nrows();
    let mean = x_train.mean_axis(Axis(0)).expect("nonempty");
    let std = x_train.std_axis(Axis(0), 0.0);
    mlp.set_normalization(mean, std);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut state = AdamState::new(mlp);
    let mut history = TrainHistory {
        train_mse: Vec::with_capacity(cfg.epochs),
        val_mse: Vec::with_capacity(cfg.epochs),
    };

    let mut idx: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        for i in (1..n).rev() {
            let j = shuffle_rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        for chunk in idx.chunks(cfg.batch_size) {
            let xb = x_train.select(Axis(0), chunk);
            let yb = y_train.select(Axis(0), chunk);
            let cache = mlp.forward_train(&xb.view(), &mut dropout_rng)?;
            let grads = mlp.backward(&cache, &yb.view())?;
            adam_step(mlp, &grads, &mut state, cfg);
        }
        let train_mse = loss_mse(&mlp.forward_eval(x_train)?.view(), y_train)?;
        let val_mse = loss_mse(&mlp.forward_eval(x_val)?.view(), y_val)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::NonFinite(format!("loss diverged at epoch {epoch}")));
        }
        history.train_mse.push(train_mse);
        history.val_mse.push(val_mse);
    }
    Ok(history)
}
