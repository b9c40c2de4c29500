use rand::seq::SliceRandom;

use crate::error::{Error, Result};

use super::dae::{train_flat, DaeLayer, DAE_STREAM};
use super::dense::{softmax_rows, Dense};
use super::{check_labels, flatten, stream_rng, Classifier, TrainConfig};

const INIT_STREAM: u64 = 0;
const FINETUNE_STREAM: u64 = 1000;

/// Stacked network: tanh encoders, each passing `(y + 1) / 2` to the next,
/// topped by a softmax layer.
///
/// `decoders` hold the reconstruction halves used by pretraining and are
/// dropped once the network is fine-tuned.
#[derive(Debug, Clone, PartialEq)]
pub struct SdaeModel {
    pub encoders: Vec<Dense>,
    pub decoders: Vec<Dense>,
    pub top: Dense,
}

/// Parameter gradients of an [`SdaeModel`] (decoders excluded).
#[derive(Debug, Clone)]
pub struct SdaeGradient {
    pub encoders: Vec<Dense>,
    pub top: Dense,
}

struct Activations {
    /// `hs[0]` is the input, `hs[k + 1]` the mapped output of encoder `k`.
    hs: Vec<Vec<f64>>,
    /// tanh outputs of every encoder.
    ys: Vec<Vec<f64>>,
    /// Softmax output.
    probs: Vec<f64>,
}

impl SdaeModel {
    /// Glorot-initialized network with the given hidden widths.
    pub fn new(input_width: usize, hidden: &[usize], n_classes: usize, seed: u64) -> Result<Self> {
        if input_width == 0 || hidden.contains(&0) {
            return Err(Error::Argument("layer widths must be positive".into()));
        }
        if n_classes < 2 {
            return Err(Error::Argument(format!("need at least 2 classes, got {n_classes}")));
        }
        let mut rng = stream_rng(seed, INIT_STREAM);
        let mut encoders = Vec::with_capacity(hidden.len());
        let mut decoders = Vec::with_capacity(hidden.len());
        let mut n_in = input_width;
        for &w in hidden {
            let layer = DaeLayer::new(n_in, w, &mut rng);
            encoders.push(layer.encoder);
            decoders.push(layer.decoder);
            n_in = w;
        }
        let top = Dense::glorot(n_in, n_classes, &mut rng);
        Ok(Self { encoders, decoders, top })
    }

    pub fn input_width(&self) -> usize {
        self.encoders.first().unwrap_or(&self.top).n_in
    }

    pub fn class_count(&self) -> usize {
        self.top.n_out
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.encoders.iter().map(|e| e.n_out).collect()
    }

    fn forward(&self, x: &[f64], batch: usize, targets: Option<&[usize]>) -> (Activations, f64) {
        let mut hs = vec![x.to_vec()];
        let mut ys = Vec::with_capacity(self.encoders.len());
        for enc in &self.encoders {
            let mut y = vec![0.0; batch * enc.n_out];
            enc.forward(hs.last().unwrap(), batch, &mut y);
            for v in &mut y {
                *v = v.tanh();
            }
            hs.push(y.iter().map(|v| (v + 1.0) * 0.5).collect());
            ys.push(y);
        }
        let mut probs = vec![0.0; batch * self.top.n_out];
        self.top.forward(hs.last().unwrap(), batch, &mut probs);
        let loss = softmax_rows(&mut probs, self.top.n_out, targets);
        (Activations { hs, ys, probs }, loss)
    }

    /// Mean softmax cross-entropy of the labelled rows.
    pub fn loss(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        check_labels(rows.len(), labels, self.class_count())?;
        let x = flatten(rows, self.input_width())?;
        Ok(self.forward(&x, rows.len(), Some(labels)).1 / rows.len() as f64)
    }

    /// Mean loss and its gradient over the labelled rows.
    pub fn gradient(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<(f64, SdaeGradient)> {
        check_labels(rows.len(), labels, self.class_count())?;
        let x = flatten(rows, self.input_width())?;
        Ok(self.gradient_flat(&x, labels))
    }

    fn gradient_flat(&self, x: &[f64], labels: &[usize]) -> (f64, SdaeGradient) {
        let mut grad = SdaeGradient::zeros_like(self);
        let loss = self.gradient_into(x, labels, &mut grad);
        (loss, grad)
    }

    /// Writes the gradient into `grad`, reusing its storage.
    fn gradient_into(&self, x: &[f64], labels: &[usize], grad: &mut SdaeGradient) -> f64 {
        let batch = labels.len();
        let (act, loss) = self.forward(x, batch, Some(labels));
        let scale = 1.0 / batch as f64;
        let k = self.top.n_out;
        let mut delta = act.probs;
        for (s, &t) in labels.iter().enumerate() {
            delta[s * k + t] -= 1.0;
        }
        for d in &mut delta {
            *d *= scale;
        }
        grad.clear();
        let depth = self.encoders.len();
        let mut dh = vec![0.0; act.hs[depth].len()];
        self.top
            .backward(&act.hs[depth], &delta, batch, &mut grad.top, (depth > 0).then_some(&mut dh[..]));
        for l in (0..depth).rev() {
            let mut da = dh;
            for (d, y) in da.iter_mut().zip(&act.ys[l]) {
                *d *= (1.0 - y * y) * 0.5;
            }
            let mut below = vec![0.0; if l > 0 { act.hs[l].len() } else { 0 }];
            self.encoders[l].backward(
                &act.hs[l],
                &da,
                batch,
                &mut grad.encoders[l],
                (l > 0).then_some(&mut below[..]),
            );
            dh = below;
        }
        loss * scale
    }

    fn apply(&mut self, grad: &SdaeGradient, lr: f64) {
        for (e, g) in self.encoders.iter_mut().zip(&grad.encoders) {
            e.apply(g, lr);
        }
        self.top.apply(&grad.top, lr);
    }

    fn is_finite(&self) -> bool {
        self.encoders.iter().all(Dense::is_finite) && self.top.is_finite()
    }

    /// Trainable parameters of the classifier: encoders in order, then the
    /// softmax layer.
    pub fn parameter_count(&self) -> usize {
        self.encoders.iter().map(Dense::parameter_count).sum::<usize>() + self.top.parameter_count()
    }

    pub fn param(&self, k: usize) -> f64 {
        let (layer, i) = self.locate(k);
        self.encoders.get(layer).unwrap_or(&self.top).param(i)
    }

    pub fn param_mut(&mut self, k: usize) -> &mut f64 {
        let (layer, i) = self.locate(k);
        match self.encoders.get_mut(layer) {
            Some(e) => e.param_mut(i),
            None => self.top.param_mut(i),
        }
    }

    fn locate(&self, mut k: usize) -> (usize, usize) {
        for (l, e) in self.encoders.iter().enumerate() {
            if k < e.parameter_count() {
                return (l, k);
            }
            k -= e.parameter_count();
        }
        (self.encoders.len(), k)
    }
}

impl SdaeGradient {
    fn zeros_like(m: &SdaeModel) -> Self {
        Self {
            encoders: m.encoders.iter().map(|e| Dense::zeros(e.n_in, e.n_out)).collect(),
            top: Dense::zeros(m.top.n_in, m.top.n_out),
        }
    }

    fn clear(&mut self) {
        for e in &mut self.encoders {
            e.clear();
        }
        self.top.clear();
    }

    pub fn param(&self, k: usize) -> f64 {
        let mut k = k;
        for e in &self.encoders {
            if k < e.parameter_count() {
                return e.param(k);
            }
            k -= e.parameter_count();
        }
        self.top.param(k)
    }
}

impl Classifier for SdaeModel {
    fn input_width(&self) -> usize {
        SdaeModel::input_width(self)
    }

    fn class_count(&self) -> usize {
        SdaeModel::class_count(self)
    }

    fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let x = flatten(rows, self.input_width())?;
        let (act, _) = self.forward(&x, rows.len(), None);
        Ok(act.probs.chunks(self.class_count()).map(<[f64]>::to_vec).collect())
    }
}

/// Greedy layer-wise denoising pretraining. Layer `k` learns to reconstruct
/// the mapped codes of layer `k - 1`; returns one loss trace per layer.
pub fn pretrain_stack(mut model: SdaeModel, data: &[Vec<f64>], cfg: &TrainConfig) -> Result<(SdaeModel, Vec<Vec<f64>>)> {
    cfg.validate()?;
    if model.decoders.len() != model.encoders.len() {
        return Err(Error::Argument("model has no decoders left to pretrain".into()));
    }
    let mut x = flatten(data, model.input_width())?;
    let n = data.len();
    let mut traces = Vec::with_capacity(model.encoders.len());
    for k in 0..model.encoders.len() {
        let layer = DaeLayer {
            encoder: std::mem::replace(&mut model.encoders[k], Dense::zeros(0, 0)),
            decoder: std::mem::replace(&mut model.decoders[k], Dense::zeros(0, 0)),
        };
        let (layer, trace) = train_flat(layer, &x, n, cfg, DAE_STREAM + k as u64)?;
        x = layer.encode(&x, n);
        model.encoders[k] = layer.encoder;
        model.decoders[k] = layer.decoder;
        traces.push(trace);
    }
    Ok((model, traces))
}

/// Supervised training of encoders and softmax layer together for
/// `cfg.finetune_epochs` epochs. Decoders are discarded. Returns the mean
/// mini-batch loss of each epoch.
pub fn fine_tune(
    mut model: SdaeModel,
    rows: &[Vec<f64>],
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<(SdaeModel, Vec<f64>)> {
    cfg.validate()?;
    check_labels(rows.len(), labels, model.class_count())?;
    model.decoders.clear();
    let width = model.input_width();
    let x = flatten(rows, width)?;
    let n = rows.len();
    let mut rng = stream_rng(cfg.seed, FINETUNE_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut bx = Vec::with_capacity(cfg.batch_size * width);
    let mut by = Vec::with_capacity(cfg.batch_size);
    let mut grad = SdaeGradient::zeros_like(&model);
    let mut trace = Vec::with_capacity(cfg.finetune_epochs);
    for epoch in 1..=cfg.finetune_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(&x[i * width..(i + 1) * width]);
                by.push(labels[i]);
            }
            total += model.gradient_into(&bx, &by, &mut grad) * chunk.len() as f64;
            model.apply(&grad, cfg.learning_rate);
        }
        let loss = total / n as f64;
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Divergence {
                epoch,
                what: format!("classification loss {loss}"),
            });
        }
        trace.push(loss);
    }
    Ok((model, trace))
}

/// A trained stacked network with its loss traces.
#[derive(Debug, Clone)]
pub struct SdaeTrained {
    pub model: SdaeModel,
    pub pretrain_losses: Vec<Vec<f64>>,
    pub finetune_losses: Vec<f64>,
}

/// Builds, pretrains and fine-tunes a stacked network.
pub fn sdae_train(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<SdaeTrained> {
    let width = rows.first().map(Vec::len).ok_or_else(|| Error::Data("no training rows".into()))?;
    let model = SdaeModel::new(width, hidden, n_classes, cfg.seed)?;
    let (model, pretrain_losses) = pretrain_stack(model, rows, cfg)?;
    let (model, finetune_losses) = fine_tune(model, rows, labels, cfg)?;
    Ok(SdaeTrained {
        model,
        pretrain_losses,
        finetune_losses,
    })
}

/// One-hidden-layer perceptron: the stacked network with a single layer and
/// no pretraining.
pub fn mlp_train(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    hidden_width: usize,
    cfg: &TrainConfig,
) -> Result<(SdaeModel, Vec<f64>)> {
    let cfg = TrainConfig {
        pretrain_epochs: 0,
        ..*cfg
    };
    let t = sdae_train(rows, labels, n_classes, &[hidden_width], &cfg)?;
    Ok((t.model, t.finetune_losses))
}
