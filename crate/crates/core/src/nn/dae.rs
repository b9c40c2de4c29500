use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};

use super::dense::{sigmoid, softplus, Dense};
use super::{flatten, stream_rng, TrainConfig};

/// Generator stream used by [`dae_train`] for batch order and corruption.
pub const DAE_STREAM: u64 = 1;

/// Zeroes `floor(gamma * n)` distinct coordinates drawn uniformly from `rng`.
pub fn corrupt<R: Rng + ?Sized>(x: &[f64], gamma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    corrupt_in_place(&mut out, gamma, rng)?;
    Ok(out)
}

pub(crate) fn corrupt_in_place<R: Rng + ?Sized>(x: &mut [f64], gamma: f64, rng: &mut R) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Argument(format!("corruption rate must lie in [0, 1), got {gamma}")));
    }
    // the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    let k = (gamma * x.len() as f64 + 1e-9).floor() as usize;
    if k > 0 {
        for i in index::sample(rng, x.len(), k) {
            x[i] = 0.0;
        }
    }
    Ok(())
}

/// Reconstruction cross-entropy `-sum(x ln z + (1 - x) ln(1 - z))`.
pub fn dae_loss(x: &[f64], z: &[f64]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(&x, &z)| -(x * z.ln() + (1.0 - x) * (1.0 - z).ln()))
        .sum()
}

/// One denoising autoencoder: `y = tanh(W x + b)`, `z = sigmoid(W' y + b')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeLayer {
    pub encoder: Dense,
    pub decoder: Dense,
}

impl DaeLayer {
    pub fn new<R: Rng + ?Sized>(n_in: usize, n_hidden: usize, rng: &mut R) -> Self {
        let encoder = Dense::glorot(n_in, n_hidden, rng);
        let decoder = Dense::glorot(n_hidden, n_in, rng);
        Self { encoder, decoder }
    }

    pub fn n_in(&self) -> usize {
        self.encoder.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.encoder.n_out
    }

    /// Hidden code mapped to `[0, 1]` as `(y + 1) / 2`, the input of the next
    /// layer in a stack.
    pub fn encode(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut a = vec![0.0; batch * self.n_hidden()];
        self.encoder.forward(x, batch, &mut a);
        for v in &mut a {
            *v = (v.tanh() + 1.0) * 0.5;
        }
        a
    }

    /// Reconstruction `z` of a batch.
    pub fn reconstruct(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let (_, mut logits) = self.forward(x, batch);
        for v in &mut logits {
            *v = sigmoid(*v);
        }
        logits
    }

    fn forward(&self, x: &[f64], batch: usize) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; batch * self.n_hidden()];
        self.encoder.forward(x, batch, &mut y);
        for v in &mut y {
            *v = v.tanh();
        }
        let mut logits = vec![0.0; batch * self.n_in()];
        self.decoder.forward(&y, batch, &mut logits);
        (y, logits)
    }

    /// Mean over the batch of the cross-entropy between `target` and the
    /// reconstruction of `input`.
    pub fn loss(&self, input: &[f64], target: &[f64], batch: usize) -> f64 {
        let (_, logits) = self.forward(input, batch);
        logit_cross_entropy(&logits, target) / batch as f64
    }

    /// Mean loss and its gradient with respect to every parameter.
    pub fn gradient(&self, input: &[f64], target: &[f64], batch: usize) -> (f64, DaeLayer) {
        let mut grad = DaeLayer {
            encoder: Dense::zeros(self.n_in(), self.n_hidden()),
            decoder: Dense::zeros(self.n_hidden(), self.n_in()),
        };
        let loss = self.gradient_into(input, target, batch, &mut grad);
        (loss, grad)
    }

    fn gradient_into(&self, input: &[f64], target: &[f64], batch: usize, grad: &mut DaeLayer) -> f64 {
        let (y, logits) = self.forward(input, batch);
        let loss = logit_cross_entropy(&logits, target) / batch as f64;
        let scale = 1.0 / batch as f64;
        let delta: Vec<f64> = logits
            .iter()
            .zip(target)
            .map(|(&l, &t)| (sigmoid(l) - t) * scale)
            .collect();
        grad.encoder.clear();
        grad.decoder.clear();
        let mut dy = vec![0.0; y.len()];
        self.decoder.backward(&y, &delta, batch, &mut grad.decoder, Some(&mut dy));
        for (d, y) in dy.iter_mut().zip(&y) {
            *d *= 1.0 - y * y;
        }
        self.encoder.backward(input, &dy, batch, &mut grad.encoder, None);
        loss
    }

    pub fn apply(&mut self, grad: &DaeLayer, lr: f64) {
        self.encoder.apply(&grad.encoder, lr);
        self.decoder.apply(&grad.decoder, lr);
    }

    pub fn is_finite(&self) -> bool {
        self.encoder.is_finite() && self.decoder.is_finite()
    }

    /// Parameters ordered encoder then decoder.
    pub fn parameter_count(&self) -> usize {
        self.encoder.parameter_count() + self.decoder.parameter_count()
    }

    pub fn param(&self, k: usize) -> f64 {
        let ne = self.encoder.parameter_count();
        if k < ne {
            self.encoder.param(k)
        } else {
            self.decoder.param(k - ne)
        }
    }

    pub fn param_mut(&mut self, k: usize) -> &mut f64 {
        let ne = self.encoder.parameter_count();
        if k < ne {
            self.encoder.param_mut(k)
        } else {
            self.decoder.param_mut(k - ne)
        }
    }
}

/// Summed `softplus(l) - t l`, the cross-entropy of `sigmoid(l)` against `t`.
fn logit_cross_entropy(logits: &[f64], target: &[f64]) -> f64 {
    logits.iter().zip(target).map(|(&l, &t)| softplus(l) - t * l).sum()
}

/// Trains one layer by mini-batch SGD on the denoising objective for
/// `cfg.pretrain_epochs` epochs. Returns the layer and the mean
/// reconstruction loss on the uncorrupted data after each epoch.
pub fn dae_train(layer: DaeLayer, data: &[Vec<f64>], cfg: &TrainConfig) -> Result<(DaeLayer, Vec<f64>)> {
    let flat = flatten(data, layer.n_in())?;
    train_flat(layer, &flat, data.len(), cfg, DAE_STREAM)
}

pub(crate) fn train_flat(
    mut layer: DaeLayer,
    data: &[f64],
    n: usize,
    cfg: &TrainConfig,
    stream: u64,
) -> Result<(DaeLayer, Vec<f64>)> {
    cfg.validate()?;
    if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Argument(format!("autoencoder inputs must lie in [0, 1], found {v}")));
    }
    if n == 0 {
        return Err(Error::Data("no training rows".into()));
    }
    let width = layer.n_in();
    let mut rng = stream_rng(cfg.seed, stream);
    let mut order: Vec<usize> = (0..n).collect();
    let mut input = Vec::with_capacity(cfg.batch_size * width);
    let mut target = Vec::with_capacity(cfg.batch_size * width);
    let mut grad = layer.clone();
    let mut trace = Vec::with_capacity(cfg.pretrain_epochs);
    for epoch in 1..=cfg.pretrain_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            input.clear();
            target.clear();
            for &i in chunk {
                let row = &data[i * width..(i + 1) * width];
                target.extend_from_slice(row);
                let start = input.len();
                input.extend_from_slice(row);
                corrupt_in_place(&mut input[start..], cfg.corruption, &mut rng)?;
            }
            layer.gradient_into(&input, &target, chunk.len(), &mut grad);
            layer.apply(&grad, cfg.learning_rate);
        }
        let loss = layer.loss(data, data, n);
        if !loss.is_finite() || !layer.is_finite() {
            return Err(Error::Divergence {
                epoch,
                what: format!("reconstruction loss {loss}"),
            });
        }
        trace.push(loss);
    }
    Ok((layer, trace))
}
