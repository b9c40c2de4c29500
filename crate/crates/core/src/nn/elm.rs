use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

use super::dense::{softmax_rows, Dense};
use super::{check_labels, flatten, stream_rng, Classifier};

pub const DEFAULT_RIDGE: f64 = 1e-3;

/// Extreme learning machine: fixed random tanh layer, least-squares output.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    pub hidden: Dense,
    pub output: Dense,
}

impl ElmModel {
    pub fn input_width(&self) -> usize {
        self.hidden.n_in
    }

    pub fn class_count(&self) -> usize {
        self.output.n_out
    }

    /// tanh activations, `rows x hidden`.
    pub fn hidden_activations(&self, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let x = flatten(rows, self.input_width())?;
        let l = self.hidden.n_out;
        let mut a = vec![0.0; rows.len() * l];
        self.hidden.forward(&x, rows.len(), &mut a);
        Ok(DMatrix::from_row_iterator(rows.len(), l, a.into_iter().map(f64::tanh)))
    }

    /// Raw linear outputs, one row per input row.
    pub fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let h = self.hidden_activations(rows)?;
        let hv: Vec<f64> = h.transpose().as_slice().to_vec();
        let mut out = vec![0.0; rows.len() * self.class_count()];
        self.output.forward(&hv, rows.len(), &mut out);
        Ok(out)
    }
}

impl Classifier for ElmModel {
    fn input_width(&self) -> usize {
        ElmModel::input_width(self)
    }

    fn class_count(&self) -> usize {
        ElmModel::class_count(self)
    }

    /// Softmax of the least-squares scores. The argmax matches the raw
    /// scores; the values are only a normalized confidence.
    fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mut s = self.scores(rows)?;
        let k = self.class_count();
        softmax_rows(&mut s, k, None);
        Ok(s.chunks(k).map(<[f64]>::to_vec).collect())
    }
}

/// Draws the hidden layer from `seed` and solves the ridge-regularized least
/// squares problem against one-hot targets in closed form.
pub fn elm_train(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    hidden_width: usize,
    seed: u64,
    ridge: f64,
) -> Result<ElmModel> {
    check_labels(rows.len(), labels, n_classes)?;
    if hidden_width == 0 {
        return Err(Error::Argument("hidden width must be positive".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Argument(format!("ridge must be non-negative, got {ridge}")));
    }
    let n_in = rows[0].len();
    let mut rng = stream_rng(seed, 0);
    let mut hidden = Dense::zeros(n_in, hidden_width);
    for v in hidden.weights.iter_mut().chain(hidden.bias.iter_mut()) {
        *v = rng.random_range(-1.0..=1.0);
    }
    let mut model = ElmModel {
        hidden,
        output: Dense::zeros(hidden_width, n_classes),
    };
    let h = model.hidden_activations(rows)?;
    let t = DMatrix::from_fn(rows.len(), n_classes, |i, k| f64::from(u8::from(labels[i] == k)));
    let beta = ridge_solve(&h, &t, ridge)?;
    for o in 0..n_classes {
        for j in 0..hidden_width {
            model.output.weights[o * hidden_width + j] = beta[(j, o)];
        }
    }
    if !model.output.is_finite() {
        return Err(Error::Numerical("non-finite output weights".into()));
    }
    Ok(model)
}

/// `argmin |H B - T|^2 + ridge |B|^2`, through whichever normal system is
/// smaller.
fn ridge_solve(h: &DMatrix<f64>, t: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let (n, l) = h.shape();
    let primal = l <= n;
    let mut a = if primal { h.transpose() * h } else { h * h.transpose() };
    for i in 0..a.nrows() {
        a[(i, i)] += ridge;
    }
    let max_diag = a.diagonal().max();
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("normal matrix is not positive definite; use a positive ridge".into()))?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if !(min_pivot > max_diag * 1e-13) {
        return Err(Error::Numerical("normal matrix is singular; use a positive ridge".into()));
    }
    Ok(if primal {
        chol.solve(&(h.transpose() * t))
    } else {
        h.transpose() * chol.solve(t)
    })
}
