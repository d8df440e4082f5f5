//! Score-space regressors: a fully connected network trained by
//! backpropagation on mean squared error, and the linear baseline `t = B x`
//! solved in closed form.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Elu,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x >= 0.0 {
                    x
                } else {
                    libm::expm1(x)
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative at pre-activation `x`, given `y = apply(x)`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x >= 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_widths,
            output_dim,
            activation: Activation::Elu,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.contains(&0) {
            return Err(Error::BadConfig(format!(
                "network dimensions must be positive: input {}, hidden {:?}, output {}",
                self.input_dim, self.hidden_widths, self.output_dim
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden_widths);
        w.push(self.output_dim);
        w
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape::Network {
            input_dim: self.input_dim,
            hidden_widths: self.hidden_widths.clone(),
            output_dim: self.output_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out x in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl NetworkParams {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weights.cols())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.rows())
    }

    /// Number of scalars actually stored.
    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Checks that layer shapes chain and every value is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::ShapeMismatch("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.weights.rows() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i}: bias length {} for {} outputs",
                    l.bias.len(),
                    l.weights.rows()
                )));
            }
            if i > 0 && l.weights.cols() != self.layers[i - 1].weights.rows() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} expects {} inputs, previous layer has {} outputs",
                    l.weights.cols(),
                    self.layers[i - 1].weights.rows()
                )));
            }
            if !l.weights.is_finite() || !l.bias.iter().all(|b| b.is_finite()) {
                return Err(Error::NonFiniteFit);
            }
        }
        Ok(())
    }

    fn zeros_like(&self) -> NetworkParams {
        NetworkParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            activation: self.activation,
        }
    }

    /// Every scalar, layer by layer, weights before bias.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut k = 0;
        for l in &mut self.layers {
            for r in 0..l.weights.rows() {
                for x in l.weights.row_mut(r) {
                    f(k, x);
                    k += 1;
                }
            }
            for x in &mut l.bias {
                f(k, x);
                k += 1;
            }
        }
    }
}

/// Uniform weights on `[-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero biases.
pub fn init_network(spec: &NetworkSpec) -> Result<NetworkParams> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let widths = spec.widths();
    let layers = widths
        .windows(2)
        .map(|w| {
            let (fan_in, out) = (w[0], w[1]);
            let a = 1.0 / libm::sqrt(fan_in as f64);
            let data = (0..out * fan_in).map(|_| rng.random_range(-a..a)).collect();
            Layer {
                weights: Matrix::from_row_major(out, fan_in, data).expect("shape by construction"),
                bias: vec![0.0; out],
            }
        })
        .collect();
    Ok(NetworkParams {
        layers,
        activation: spec.activation,
    })
}

/// Pre-activations and activations of every layer for one input.
struct Trace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

fn run(params: &NetworkParams, input: &[f64]) -> Trace {
    let n = params.layers.len();
    let mut pre = Vec::with_capacity(n);
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    post.push(input.to_vec());
    for (i, l) in params.layers.iter().enumerate() {
        let mut z = l.weights.matvec(&post[i]);
        z.iter_mut().zip(&l.bias).for_each(|(v, b)| *v += b);
        let a = if i + 1 == n {
            z.clone()
        } else {
            z.iter().map(|&v| params.activation.apply(v)).collect()
        };
        pre.push(z);
        post.push(a);
    }
    Trace { pre, post }
}

/// Hidden layers use the network's activation; the output layer is linear.
pub fn forward(params: &NetworkParams, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != params.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "network expects {} inputs, got {}",
            params.input_dim(),
            input.len()
        )));
    }
    Ok(run(params, input).post.pop().unwrap_or_default())
}

fn check_batch(params: &NetworkParams, inputs: &Matrix, targets: &Matrix) -> Result<()> {
    if inputs.cols() != params.input_dim()
        || targets.cols() != params.output_dim()
        || inputs.rows() != targets.rows()
    {
        return Err(Error::ShapeMismatch(format!(
            "inputs {}x{} and targets {}x{} do not fit a {} -> {} network",
            inputs.rows(),
            inputs.cols(),
            targets.rows(),
            targets.cols(),
            params.input_dim(),
            params.output_dim()
        )));
    }
    Ok(())
}

/// Mean squared error over all samples and output coordinates.
pub fn loss(params: &NetworkParams, inputs: &Matrix, targets: &Matrix) -> Result<f64> {
    check_batch(params, inputs, targets)?;
    Ok(batch_loss(params, inputs, targets, &(0..inputs.rows()).collect::<Vec<_>>()))
}

fn batch_loss(params: &NetworkParams, inputs: &Matrix, targets: &Matrix, rows: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &i in rows {
        let out = run(params, inputs.row(i)).post.pop().unwrap_or_default();
        acc += out
            .iter()
            .zip(targets.row(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    acc / (rows.len() * params.output_dim()) as f64
}

/// Exact gradients of the batch loss, together with the loss itself.
pub fn gradients(params: &NetworkParams, inputs: &Matrix, targets: &Matrix) -> Result<(NetworkParams, f64)> {
    check_batch(params, inputs, targets)?;
    Ok(batch_gradients(params, inputs, targets, &(0..inputs.rows()).collect::<Vec<_>>()))
}

fn batch_gradients(params: &NetworkParams, inputs: &Matrix, targets: &Matrix, rows: &[usize]) -> (NetworkParams, f64) {
    let mut grad = params.zeros_like();
    let scale = 2.0 / (rows.len() * params.output_dim()) as f64;
    let mut sq = 0.0;
    let n = params.layers.len();
    for &i in rows {
        let tr = run(params, inputs.row(i));
        let mut delta: Vec<f64> = tr.post[n]
            .iter()
            .zip(targets.row(i))
            .map(|(a, b)| {
                sq += (a - b) * (a - b);
                scale * (a - b)
            })
            .collect();
        for li in (0..n).rev() {
            let layer = &params.layers[li];
            let g = &mut grad.layers[li];
            let a_in = &tr.post[li];
            for (r, d) in delta.iter().enumerate() {
                for (w, a) in g.weights.row_mut(r).iter_mut().zip(a_in) {
                    *w += d * a;
                }
                g.bias[r] += d;
            }
            if li > 0 {
                let mut back = vec![0.0; layer.weights.cols()];
                for (r, d) in delta.iter().enumerate() {
                    for (b, w) in back.iter_mut().zip(layer.weights.row(r)) {
                        *b += w * d;
                    }
                }
                for (k, b) in back.iter_mut().enumerate() {
                    *b *= params.activation.derivative(tr.pre[li - 1][k], tr.post[li][k]);
                }
                delta = back;
            }
        }
    }
    (grad, sq / (rows.len() * params.output_dim()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub patience: usize,
    pub validation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Defaults to `min(32, N)`.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub early_stop: Option<EarlyStop>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: None,
            learning_rate: 1e-2,
            optimizer: Optimizer::default(),
            early_stop: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::BadConfig(m));
        if self.batch_size == Some(0) {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if let Some(es) = self.early_stop {
            if !(0.0..=0.5).contains(&es.validation_fraction) {
                return bad(format!(
                    "validation_fraction must lie in [0, 0.5], got {}",
                    es.validation_fraction
                ));
            }
        }
        match self.optimizer {
            Optimizer::Momentum { beta } if !(0.0..1.0).contains(&beta) => {
                bad(format!("momentum beta must lie in [0, 1), got {beta}"))
            }
            Optimizer::Adam { beta1, beta2, eps }
                if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) =>
            {
                bad(format!("invalid adam parameters ({beta1}, {beta2}, {eps})"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// Epoch whose parameters were returned (early stopping only).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    fn new(kind: Optimizer, lr: f64, n: usize) -> Self {
        Self {
            kind,
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut NetworkParams, grad: &NetworkParams) {
        let g = grad.flat();
        self.t += 1;
        let lr = self.lr;
        match self.kind {
            Optimizer::Sgd => params.for_each_mut(|k, x| *x -= lr * g[k]),
            Optimizer::Momentum { beta } => {
                let m = &mut self.m;
                params.for_each_mut(|k, x| {
                    m[k] = beta * m[k] + g[k];
                    *x -= lr * m[k];
                });
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - libm::pow(beta1, self.t as f64);
                let c2 = 1.0 - libm::pow(beta2, self.t as f64);
                let (m, v) = (&mut self.m, &mut self.v);
                params.for_each_mut(|k, x| {
                    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                    v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                    let mh = m[k] / c1;
                    let vh = v[k] / c2;
                    *x -= lr * mh / (libm::sqrt(vh) + eps);
                });
            }
        }
    }
}

/// Mini-batch training from a seeded initialization. Batches are reshuffled
/// every epoch from a stream seeded by `config.seed`.
pub fn train_network(
    spec: &NetworkSpec,
    config: &TrainConfig,
    inputs: &Matrix,
    targets: &Matrix,
) -> Result<(NetworkParams, TrainingLog)> {
    config.validate()?;
    let mut params = init_network(spec)?;
    check_batch(&params, inputs, targets)?;
    let n = inputs.rows();
    if n < 2 {
        return Err(Error::TooFewSubjects { needed: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let (mut train, valid) = match config.early_stop {
        Some(es) if es.validation_fraction > 0.0 => {
            order.shuffle(&mut rng);
            let n_val = (libm::round(es.validation_fraction * n as f64) as usize).clamp(1, n - 1);
            let mut valid = order[..n_val].to_vec();
            let mut train = order[n_val..].to_vec();
            valid.sort_unstable();
            train.sort_unstable();
            (train, valid)
        }
        _ => (order, Vec::new()),
    };
    let batch = config.batch_size.unwrap_or(32).min(train.len()).max(1);
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, params.n_params());
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, usize, NetworkParams)> = None;
    let mut since_best = 0;
    for epoch in 0..config.epochs {
        train.shuffle(&mut rng);
        let mut acc = 0.0;
        for chunk in train.chunks(batch) {
            let (grad, l) = batch_gradients(&params, inputs, targets, chunk);
            acc += l * chunk.len() as f64;
            opt.step(&mut params, &grad);
        }
        let epoch_loss = acc / train.len() as f64;
        if !epoch_loss.is_finite() || !params.flat().iter().all(|x| x.is_finite()) {
            return Err(Error::DivergenceDetected { epoch });
        }
        log.train_loss.push(epoch_loss);
        if let Some(es) = config.early_stop.filter(|_| !valid.is_empty()) {
            let vl = batch_loss(&params, inputs, targets, &valid);
            if !vl.is_finite() {
                return Err(Error::DivergenceDetected { epoch });
            }
            log.validation_loss.push(vl);
            if best.as_ref().is_none_or(|b| vl < b.0) {
                best = Some((vl, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > es.patience {
                    log.stopped_early = true;
                    break;
                }
            }
        }
    }
    if let Some((_, epoch, p)) = best {
        log.best_epoch = Some(epoch);
        params = p;
    }
    Ok((params, log))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FflmParams {
    /// `P x L`.
    pub b: Matrix,
}

/// Least squares fit of `targets_i ~ B inputs_i`, ridge-penalized when
/// `ridge > 0`, minimal-norm when rank-deficient.
pub fn fit_fflm(inputs: &Matrix, targets: &Matrix, ridge: f64) -> Result<FflmParams> {
    if inputs.rows() == 0 {
        return Err(Error::TooFewSubjects { needed: 1, got: 0 });
    }
    let w = least_squares(inputs, targets, ridge)?;
    let b = w.transpose();
    if !b.is_finite() {
        return Err(Error::NonFiniteFit);
    }
    Ok(FflmParams { b })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelShape {
    Network {
        input_dim: usize,
        hidden_widths: Vec<usize>,
        output_dim: usize,
    },
    Fflm {
        input_dim: usize,
        output_dim: usize,
    },
}

/// Trainable parameter count: `sum (in * out + out)` over network layers,
/// `P * L` for the linear model.
pub fn count_params(shape: &ModelShape) -> usize {
    match shape {
        ModelShape::Network {
            input_dim,
            hidden_widths,
            output_dim,
        } => {
            let mut w = vec![*input_dim];
            w.extend(hidden_widths);
            w.push(*output_dim);
            w.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
        }
        ModelShape::Fflm { input_dim, output_dim } => input_dim * output_dim,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    Network(NetworkParams),
    Fflm(FflmParams),
}

impl Regressor {
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        match self {
            Regressor::Network(p) => forward(p, input),
            Regressor::Fflm(f) => {
                if input.len() != f.b.cols() {
                    return Err(Error::ShapeMismatch(format!(
                        "linear model expects {} inputs, got {}",
                        f.b.cols(),
                        input.len()
                    )));
                }
                Ok(f.b.matvec(input))
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Regressor::Network(p) => p.input_dim(),
            Regressor::Fflm(f) => f.b.cols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Regressor::Network(p) => p.output_dim(),
            Regressor::Fflm(f) => f.b.rows(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Regressor::Network(_) => "network",
            Regressor::Fflm(_) => "fflm",
        }
    }

    pub fn shape(&self) -> ModelShape {
        match self {
            Regressor::Network(p) => ModelShape::Network {
                input_dim: p.input_dim(),
                hidden_widths: p.layers[..p.layers.len() - 1].iter().map(|l| l.weights.rows()).collect(),
                output_dim: p.output_dim(),
            },
            Regressor::Fflm(f) => ModelShape::Fflm {
                input_dim: f.b.cols(),
                output_dim: f.b.rows(),
            },
        }
    }

    pub fn n_params(&self) -> usize {
        count_params(&self.shape())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
        let n = Normal::new(0.0, scale).unwrap();
        Matrix::from_row_major(r, c, (0..r * c).map(|_| n.sample(rng)).collect()).unwrap()
    }

    #[test]
    fn table_parameter_counts() {
        let nn = |l, p| count_params(&NetworkSpec::new(l, vec![16], p).shape());
        let lin = |l, p| count_params(&ModelShape::Fflm { input_dim: l, output_dim: p });
        assert_eq!(nn(11, 10), 362);
        assert_eq!(nn(27, 30), 958);
        assert_eq!(lin(11, 10), 110);
        assert_eq!(lin(27, 30), 810);
    }

    #[test]
    fn init_shapes_and_determinism() {
        let spec = NetworkSpec::new(11, vec![16], 10);
        let a = init_network(&spec).unwrap();
        assert_eq!(a, init_network(&spec).unwrap());
        assert_eq!(a.layers[0].weights.shape(), (16, 11));
        assert_eq!(a.layers[1].weights.shape(), (10, 16));
        assert_eq!(a.layers[0].bias.len(), 16);
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let bound = 1.0 / 11f64.sqrt();
        assert!(a.layers[0].weights.as_slice().iter().all(|w| w.abs() <= bound));
        assert_eq!(a.n_params(), count_params(&spec.shape()));
        assert!(init_network(&NetworkSpec::new(0, vec![4], 2)).is_err());
    }

    #[test]
    fn activation_values() {
        assert_eq!(Activation::Elu.apply(0.0), 0.0);
        assert_eq!(Activation::Elu.apply(1.0), 1.0);
        assert!((Activation::Elu.apply(-1.0) - (-0.6321205588285577)).abs() < 1e-15);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
    }

    #[test]
    fn forward_examples() {
        let mut zero = init_network(&NetworkSpec::new(3, vec![4], 2)).unwrap();
        zero.for_each_mut(|_, x| *x = 0.0);
        assert_eq!(forward(&zero, &[1.0, -5.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        let unit = NetworkParams {
            layers: vec![
                Layer { weights: Matrix::identity(1), bias: vec![0.0] },
                Layer { weights: Matrix::identity(1), bias: vec![0.0] },
            ],
            activation: Activation::Elu,
        };
        assert_eq!(forward(&unit, &[2.0]).unwrap(), vec![2.0]);
        assert!(matches!(forward(&unit, &[1.0, 2.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = init_network(&NetworkSpec::new(3, vec![5], 2)).unwrap();
        let x = random_matrix(&mut rng, 4, 3, 1.0);
        let rows: Vec<Vec<f64>> = (0..4).map(|i| forward(&p, x.row(i)).unwrap()).collect();
        let t = Matrix::from_rows(&rows).unwrap();
        let (g, l) = gradients(&p, &x, &t).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn last_bias_gradient_scales_with_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = init_network(&NetworkSpec::new(3, vec![5], 2)).unwrap();
        p.for_each_mut(|_, x| *x = 0.0);
        let x = random_matrix(&mut rng, 6, 3, 1.0);
        let t = random_matrix(&mut rng, 6, 2, 1.0);
        let t2 = Matrix::from_row_major(6, 2, t.as_slice().iter().map(|v| 2.0 * v).collect()).unwrap();
        let (g1, _) = gradients(&p, &x, &t).unwrap();
        let (g2, _) = gradients(&p, &x, &t2).unwrap();
        for (a, b) in g1.layers[1].bias.iter().zip(&g2.layers[1].bias) {
            assert!((b - 2.0 * a).abs() < 1e-15);
        }
    }

    /// Central finite differences over every parameter.
    fn finite_difference_error(spec: &NetworkSpec, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = init_network(spec).unwrap();
        let x = random_matrix(&mut rng, 5, spec.input_dim, 1.0);
        let t = random_matrix(&mut rng, 5, spec.output_dim, 1.0);
        let (g, _) = gradients(&p, &x, &t).unwrap();
        let analytic = g.flat();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..analytic.len() {
            let mut plus = p.clone();
            plus.for_each_mut(|j, v| if j == k { *v += h });
            let mut minus = p.clone();
            minus.for_each_mut(|j, v| if j == k { *v -= h });
            let fd = (loss(&plus, &x, &t).unwrap() - loss(&minus, &x, &t).unwrap()) / (2.0 * h);
            worst = worst.max((analytic[k] - fd).abs() / (1.0 + analytic[k].abs()));
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (i, act) in [Activation::Elu, Activation::Tanh].into_iter().enumerate() {
            let mut spec = NetworkSpec::new(8, vec![8, 8], 8);
            spec.activation = act;
            spec.seed = i as u64;
            assert!(finite_difference_error(&spec, 10 + i as u64) <= 1e-5);
        }
    }

    #[test]
    fn zero_targets_train_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 40, 4, 1.0);
        let t = Matrix::zeros(40, 3);
        let cfg = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let (p, log) = train_network(&NetworkSpec::new(4, vec![16], 3), &cfg, &x, &t).unwrap();
        assert!(loss(&p, &x, &t).unwrap() <= 1e-4);
        assert_eq!(log.train_loss.len(), 200);
    }

    #[test]
    fn linear_targets_fit_well() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_matrix(&mut rng, 200, 5, 1.0);
        let b0 = random_matrix(&mut rng, 4, 5, 0.5);
        let t = x.matmul(&b0.transpose()).unwrap();
        let mean = t.as_slice().iter().sum::<f64>() / t.as_slice().len() as f64;
        let var = t.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t.as_slice().len() as f64;
        let (p, _) = train_network(&NetworkSpec::new(5, vec![16], 4), &TrainConfig::default(), &x, &t).unwrap();
        let mse = loss(&p, &x, &t).unwrap();
        assert!(mse <= 1e-3 * var, "mse {mse} var {var}");
    }

    #[test]
    fn training_is_deterministic_and_early_stops() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 30, 3, 1.0);
        let t = random_matrix(&mut rng, 30, 2, 1.0);
        let cfg = TrainConfig {
            epochs: 300,
            early_stop: Some(EarlyStop { patience: 10, validation_fraction: 0.2 }),
            seed: 9,
            ..TrainConfig::default()
        };
        let spec = NetworkSpec::new(3, vec![8], 2);
        let a = train_network(&spec, &cfg, &x, &t).unwrap();
        let b = train_network(&spec, &cfg, &x, &t).unwrap();
        assert_eq!(a, b);
        let log = &a.1;
        assert!(log.stopped_early, "pure-noise targets should overfit");
        let best = log.best_epoch.unwrap();
        let min = log.validation_loss.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(log.validation_loss[best], min);
    }

    #[test]
    fn divergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_matrix(&mut rng, 20, 3, 100.0);
        let t = random_matrix(&mut rng, 20, 2, 100.0);
        let cfg = TrainConfig {
            epochs: 500,
            learning_rate: 10.0,
            optimizer: Optimizer::Sgd,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_network(&NetworkSpec::new(3, vec![8], 2), &cfg, &x, &t),
            Err(Error::DivergenceDetected { .. })
        ));
    }

    #[test]
    fn fflm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_matrix(&mut rng, 30, 4, 1.0);
        let zero = fit_fflm(&x, &Matrix::zeros(30, 3), 0.0).unwrap();
        assert!(zero.b.as_slice().iter().all(|&v| v == 0.0));

        let b0 = random_matrix(&mut rng, 3, 4, 1.0);
        let t = x.matmul(&b0.transpose()).unwrap();
        let fit = fit_fflm(&x, &t, 0.0).unwrap();
        // independent oracle: normal equations solved by LU
        let xn = x.to_na();
        let oracle = (xn.transpose() * &xn).lu().solve(&(xn.transpose() * t.to_na())).unwrap().transpose();
        let rel = (&fit.b.to_na() - &oracle).norm() / oracle.norm();
        assert!(rel < 1e-8, "{rel}");
        let rel0 = (&fit.b.to_na() - &b0.to_na()).norm() / b0.to_na().norm();
        assert!(rel0 < 1e-8);

        let single = fit_fflm(
            &Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            &Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(single.b, Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
    }

    fn ridge_objective(b: &Matrix, x: &Matrix, t: &Matrix, ridge: f64) -> f64 {
        let pred = x.matmul(&b.transpose()).unwrap();
        let sse: f64 = pred.as_slice().iter().zip(t.as_slice()).map(|(a, c)| (a - c) * (a - c)).sum();
        sse + ridge * b.as_slice().iter().map(|v| v * v).sum::<f64>()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn gradient_check_random_nets(seed in 0u64..100_000, l in 1usize..=8, h1 in 1usize..=8, h2 in 0usize..=8, p in 1usize..=8) {
            let hidden = if h2 == 0 { vec![h1] } else { vec![h1, h2] };
            let mut spec = NetworkSpec::new(l, hidden, p);
            spec.seed = seed;
            prop_assert!(finite_difference_error(&spec, seed ^ 0xabc) <= 1e-5);
        }

        #[test]
        fn fflm_is_locally_optimal(seed in 0u64..100_000, ridge in prop_oneof![Just(0.0), 1e-3f64..10.0]) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, 15, 3, 1.0);
            let t = random_matrix(&mut rng, 15, 2, 1.0);
            let fit = fit_fflm(&x, &t, ridge).unwrap();
            let base = ridge_objective(&fit.b, &x, &t, ridge);
            for k in 0..6 {
                for d in [1e-3, -1e-3] {
                    let mut b = fit.b.clone();
                    b[(k / 3, k % 3)] += d;
                    prop_assert!(ridge_objective(&b, &x, &t, ridge) >= base - 1e-12 * base.max(1.0));
                }
            }
        }

        #[test]
        fn count_matches_stored_scalars(l in 1usize..30, hidden in proptest::collection::vec(1usize..20, 0..3), p in 1usize..30) {
            let spec = NetworkSpec::new(l, hidden, p);
            prop_assert_eq!(init_network(&spec).unwrap().n_params(), count_params(&spec.shape()));
        }
    }
}
