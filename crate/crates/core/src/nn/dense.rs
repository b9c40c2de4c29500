use rand::Rng;

/// Fully connected affine map `out = W x + b` with `W` stored row-major as
/// `n_out x n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    /// Uniform weights in `+/- sqrt(6 / (n_in + n_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out).map(|_| rng.random_range(-limit..limit)).collect();
        Self {
            n_in,
            n_out,
            weights,
            bias: vec![0.0; n_out],
        }
    }

    #[inline]
    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.n_in..(o + 1) * self.n_in]
    }

    /// Pre-activations of a batch: `x` is `batch x n_in`, `out` is
    /// `batch x n_out`.
    pub fn forward(&self, x: &[f64], batch: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), batch * self.n_in);
        debug_assert_eq!(out.len(), batch * self.n_out);
        for o in 0..self.n_out {
            let w = self.row(o);
            let b = self.bias[o];
            for s in 0..batch {
                out[s * self.n_out + o] = b + dot(w, &x[s * self.n_in..(s + 1) * self.n_in]);
            }
        }
    }

    /// Accumulates parameter gradients for output deltas `delta`
    /// (`batch x n_out`) and, when requested, writes the input deltas
    /// (`batch x n_in`).
    pub fn backward(&self, x: &[f64], delta: &[f64], batch: usize, grad: &mut Dense, input_delta: Option<&mut [f64]>) {
        for o in 0..self.n_out {
            let gw = &mut grad.weights[o * self.n_in..(o + 1) * self.n_in];
            let mut gb = 0.0;
            for s in 0..batch {
                let d = delta[s * self.n_out + o];
                if d != 0.0 {
                    axpy(gw, d, &x[s * self.n_in..(s + 1) * self.n_in]);
                }
                gb += d;
            }
            grad.bias[o] += gb;
        }
        if let Some(dx) = input_delta {
            dx.fill(0.0);
            for o in 0..self.n_out {
                let w = self.row(o);
                for s in 0..batch {
                    let d = delta[s * self.n_out + o];
                    if d != 0.0 {
                        axpy(&mut dx[s * self.n_in..(s + 1) * self.n_in], d, w);
                    }
                }
            }
        }
    }

    /// `self -= lr * grad`.
    pub fn apply(&mut self, grad: &Dense, lr: f64) {
        axpy(&mut self.weights, -lr, &grad.weights);
        axpy(&mut self.bias, -lr, &grad.bias);
    }

    pub fn clear(&mut self) {
        self.weights.fill(0.0);
        self.bias.fill(0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Parameter `k` in the order weights (row-major) then biases.
    pub fn param_mut(&mut self, k: usize) -> &mut f64 {
        let nw = self.weights.len();
        if k < nw {
            &mut self.weights[k]
        } else {
            &mut self.bias[k - nw]
        }
    }

    pub fn param(&self, k: usize) -> f64 {
        let nw = self.weights.len();
        if k < nw {
            self.weights[k]
        } else {
            self.bias[k - nw]
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// In-place softmax of each `classes`-wide row; returns the summed
/// cross-entropy against `targets` when given.
pub(crate) fn softmax_rows(logits: &mut [f64], classes: usize, targets: Option<&[usize]>) -> f64 {
    let mut loss = 0.0;
    for (s, row) in logits.chunks_exact_mut(classes).enumerate() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let target_logit = targets.map(|t| row[t[s]]);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        if let Some(a) = target_logit {
            loss -= a - max - sum.ln();
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    loss
}
