//! Network structure, forward pass, and backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Architecture: uniform-width ReLU hidden stack with a linear output layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpArch {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Number of hidden layers.
    pub n_hidden: usize,
    pub hidden_width: usize,
    /// Dropout probability on each hidden layer in training mode, in [0, 1).
    pub dropout: f64,
}

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Deterministic: no dropout. Inverted dropout at training time means no
    /// rescaling is needed here.
    Eval,
    /// Stochastic: hidden activations are zeroed with probability p and
    /// survivors scaled by 1/(1-p).
    Train,
}

impl MlpArch {
    pub fn new(input_dim: usize, output_dim: usize, n_hidden: usize, hidden_width: usize, dropout: f64) -> Self {
        MlpArch {
            input_dim,
            output_dim,
            n_hidden,
            hidden_width,
            dropout,
        }
    }

    /// Desk-scale default: 22 -> 9 x 64 -> 39, 10% dropout.
    pub fn desk_scale() -> Self {
        MlpArch::new(22, 39, 9, 64, 0.10)
    }

    /// Full-scale architecture: 22 -> 9 x 1048 -> 39, 10% dropout.
    pub fn full_scale() -> Self {
        MlpArch::new(22, 39, 9, 1048, 0.10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Validation("network dimensions must be positive".into()));
        }
        if self.n_hidden > 0 && self.hidden_width == 0 {
            return Err(Error::Validation("hidden width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Validation(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }

    /// (rows, cols) of each weight matrix, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.n_hidden + 1);
        let mut prev = self.input_dim;
        for _ in 0..self.n_hidden {
            dims.push((self.hidden_width, prev));
            prev = self.hidden_width;
        }
        dims.push((self.output_dim, prev));
        dims
    }
}

/// Layered weight/bias stack with input standardization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: MlpArch,
    /// Per layer: (n_out x n_in).
    pub weights: Vec<Array2<f64>>,
    /// Per layer: n_out.
    pub biases: Vec<Array1<f64>>,
    /// Per-feature input mean, frozen at training time.
    pub input_mean: Array1<f64>,
    /// Per-feature input standard deviation (>= tiny), frozen at training time.
    pub input_std: Array1<f64>,
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Cached intermediates of a training-mode forward pass.
pub struct ForwardCache {
    /// Layer inputs: standardized batch, then each hidden activation.
    inputs: Vec<Array2<f64>>,
    /// Per hidden layer: combined relu'(z) * dropout factor.
    factors: Vec<Array2<f64>>,
    /// Network output.
    pub output: Array2<f64>,
}

impl Mlp {
    /// He-style uniform initialization: W ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
    /// biases zero. Deterministic for a fixed seed.
    pub fn init(arch: &MlpArch, seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (rows, cols) in arch.layer_dims() {
            let bound = (6.0 / cols as f64).sqrt();
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
            weights.push(Array2::from_shape_vec((rows, cols), data).expect("shape"));
            biases.push(Array1::zeros(rows));
        }
        Mlp {
            arch: *arch,
            weights,
            biases,
            input_mean: Array1::zeros(arch.input_dim),
            input_std: Array1::ones(arch.input_dim),
        }
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    /// Overwrite the input standardization statistics.
    pub fn set_normalization(&mut self, mean: Array1<f64>, std: Array1<f64>) {
        assert_eq!(mean.len(), self.arch.input_dim);
        assert_eq!(std.len(), self.arch.input_dim);
        self.input_mean = mean;
        self.input_std = std.mapv(|v| if v < 1e-12 { 1.0 } else { v });
    }

    fn standardize(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            row -= &self.input_mean;
            row /= &self.input_std;
        }
        out
    }

    /// Deterministic forward pass on a batch (rows = samples).
    pub fn forward_eval(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.arch.input_dim {
            return Err(Error::Dimension(format!(
                "input has {} features, network takes {}",
                x.ncols(),
                self.arch.input_dim
            )));
        }
        let mut a = self.standardize(x);
        for l in 0..self.weights.len() {
            let mut z = a.dot(&self.weights[l].t());
            z += &self.biases[l];
            a = if l + 1 < self.weights.len() {
                z.mapv_into(|v| v.max(0.0))
            } else {
                z
            };
        }
        Ok(a)
    }

    /// Single-sample eval-mode forward pass.
    pub fn forward_eval_slice(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("shape");
        self.forward_eval(&view)
            .expect("dimension checked by caller")
            .into_raw_vec_and_offset()
            .0
    }

    /// Training-mode forward pass: applies inverted dropout using `rng` and
    /// records everything backpropagation needs.
    pub fn forward_train(&self, x: &ArrayView2<f64>, rng: &mut ChaCha8Rng) -> Result<ForwardCache> {
        if x.ncols() != self.arch.input_dim {
            return Err(Error::Dimension(format!(
                "input has {} features, network takes {}",
                x.ncols(),
                self.arch.input_dim
            )));
        }
        let p = self.arch.dropout;
        let keep_scale = 1.0 / (1.0 - p);
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut factors = Vec::with_capacity(self.weights.len().saturating_sub(1));
        let mut a = self.standardize(x);
        for l in 0..self.weights.len() {
            inputs.push(a.clone());
            let mut z = a.dot(&self.weights[l].t());
            z += &self.biases[l];
            if l + 1 < self.weights.len() {
                // Combined factor relu'(z) * dropout scale, one mask draw per
                // activation in row-major order. The activation is exactly
                // z * factor: zero where relu cuts or the unit is dropped.
                let mut factor = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                if p > 0.0 {
                    for f in factor.iter_mut() {
                        if rng.gen::<f64>() < p {
                            *f = 0.0;
                        } else {
                            *f *= keep_scale;
                        }
                    }
                }
                a = z * &factor;
                factors.push(factor);
            } else {
                a = z;
            }
        }
        Ok(ForwardCache {
            inputs,
            factors,
            output: a,
        })
    }

    /// Exact gradients of the MSE loss for the recorded forward pass.
    ///
    /// `target` must have the same shape as the cached output. The loss is
    /// `(1/N) sum_i |y_i - t_i|^2` over the N batch rows.
    pub fn backward(&self, cache: &ForwardCache, target: &ArrayView2<f64>) -> Result<Gradients> {
        if target.shape() != cache.output.shape() {
            return Err(Error::Dimension(format!(
                "target shape {:?} vs output {:?}",
                target.shape(),
                cache.output.shape()
            )));
        }
        let n = cache.output.nrows() as f64;
        let mut grad_out = (&cache.output - target) * (2.0 / n);

        let l_count = self.weights.len();
        let mut dw: Vec<Array2<f64>> = Vec::with_capacity(l_count);
        let mut db: Vec<Array1<f64>> = Vec::with_capacity(l_count);
        for l in (0..l_count).rev() {
            // grad_out is dL/dz of this layer (output layer is linear).
            dw.push(grad_out.t().dot(&cache.inputs[l]));
            db.push(grad_out.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = grad_out.dot(&self.weights[l]);
                back *= &cache.factors[l - 1];
                grad_out = back;
            }
        }
        dw.reverse();
        db.reverse();
        Ok(Gradients { weights: dw, biases: db })
    }
}

/// Mean squared error: (1/N) sum over rows of the squared row norm.
pub fn loss_mse(pred: &ArrayView2<f64>, target: &ArrayView2<f64>) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::Dimension(format!(
            "prediction shape {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.nrows().max(1) as f64;
    let diff = pred - target;
    Ok(diff.iter().map(|v| v * v).sum::<f64>() / n)
}
