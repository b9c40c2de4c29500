//! Neural classifiers: denoising autoencoders, the stacked deep network built
//! from them, a one-hidden-layer MLP and an extreme learning machine.
//!
//! All training is single-threaded and reproducible from [`TrainConfig::seed`].
//! Inputs are expected in `[0, 1]` (see [`crate::features::Normalizer`]).

pub mod dae;
pub mod dense;
pub mod elm;
pub mod sdae;

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use dae::{corrupt, dae_loss, dae_train, DaeLayer};
pub use dense::Dense;
pub use elm::{elm_train, ElmModel, DEFAULT_RIDGE};
pub use sdae::{fine_tune, mlp_train, pretrain_stack, sdae_train, SdaeModel, SdaeTrained};

/// Candidate hidden widths for grid search.
pub const WIDTH_GRID: [usize; 4] = [20, 50, 200, 800];

/// Depth of the stacked network.
pub const SDAE_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Epochs of denoising pretraining per layer.
    pub pretrain_epochs: usize,
    /// Epochs of supervised training of the whole network.
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of input coordinates zeroed during pretraining.
    pub corruption: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pretrain_epochs: 50,
            finetune_epochs: 200,
            batch_size: 32,
            learning_rate: 0.001,
            corruption: 0.3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.corruption) {
            return Err(Error::Config(format!(
                "corruption must lie in [0, 1), got {}",
                self.corruption
            )));
        }
        Ok(())
    }
}

/// Independent generator for one purpose (`stream`) of a run seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A trained model that scores feature rows.
pub trait Classifier {
    fn input_width(&self) -> usize;

    fn class_count(&self) -> usize;

    /// One probability row per input row.
    fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>>;

    /// Most probable class per row, lowest id on ties.
    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(rows)?.iter().map(|p| argmax(p)).collect())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Row-major copy of `rows`, checking the width.
pub(crate) fn flatten(rows: &[Vec<f64>], width: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * width);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Argument(format!(
                "row {i} has {} features, model expects {width}",
                r.len()
            )));
        }
        out.extend_from_slice(r);
    }
    Ok(out)
}

pub(crate) fn check_labels(rows: usize, labels: &[usize], classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::Argument(format!("{rows} rows but {} labels", labels.len())));
    }
    if rows == 0 {
        return Err(Error::Data("no training rows".into()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Argument(format!("label {l} out of range for {classes} classes")));
    }
    Ok(())
}

/// Any trained classifier that can be written to a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Sdae(SdaeModel),
    Elm(ElmModel),
}

impl Classifier for Model {
    fn input_width(&self) -> usize {
        match self {
            Model::Sdae(m) => m.input_width(),
            Model::Elm(m) => m.input_width(),
        }
    }

    fn class_count(&self) -> usize {
        match self {
            Model::Sdae(m) => m.class_count(),
            Model::Elm(m) => m.class_count(),
        }
    }

    fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match self {
            Model::Sdae(m) => m.predict_proba(rows),
            Model::Elm(m) => m.predict_proba(rows),
        }
    }
}

impl Model {
    /// Text form. Values are printed in shortest round-trip decimal, so
    /// loading gives back the identical model.
    pub fn to_text(&self) -> String {
        let (tag, layers, classes, input): (&str, Vec<&Dense>, usize, usize) = match self {
            Model::Sdae(m) => (
                "SDAE1",
                m.encoders.iter().chain(std::iter::once(&m.top)).collect(),
                m.class_count(),
                m.input_width(),
            ),
            Model::Elm(m) => ("ELM1", vec![&m.hidden, &m.output], m.class_count(), m.input_width()),
        };
        let mut s = format!("{tag} {} {classes} {input}\n", layers.len() - 1);
        for d in layers {
            writeln!(s, "LAYER {} {}", d.n_in, d.n_out).unwrap();
            for o in 0..d.n_out {
                write_row(&mut s, d.row(o));
            }
            write_row(&mut s, &d.bias);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Format("empty model file".into()))?
            .split_whitespace()
            .collect();
        let [tag, n, classes, input] = header[..] else {
            return Err(Error::Format("model header needs 4 fields".into()));
        };
        let parse = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| Error::Format(format!("bad model header value {v:?}")))
        };
        let (n, classes, input) = (parse(n)?, parse(classes)?, parse(input)?);
        let mut layers = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            layers.push(read_layer(&mut lines)?);
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing data after last layer".into()));
        }
        let mut expected = input;
        for d in &layers {
            if d.n_in != expected {
                return Err(Error::Format(format!("layer expects {} inputs, previous gives {expected}", d.n_in)));
            }
            expected = d.n_out;
        }
        if expected != classes {
            return Err(Error::Format(format!("output layer has {expected} units for {classes} classes")));
        }
        let top = layers.pop().expect("at least one layer");
        match tag {
            "SDAE1" => Ok(Model::Sdae(SdaeModel {
                encoders: layers,
                decoders: Vec::new(),
                top,
            })),
            "ELM1" if layers.len() == 1 => Ok(Model::Elm(ElmModel {
                hidden: layers.pop().unwrap(),
                output: top,
            })),
            "ELM1" => Err(Error::Format("ELM model needs exactly one hidden layer".into())),
            other => Err(Error::Format(format!("unknown model tag {other:?}"))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn write_row(s: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s.push('\n');
}

fn read_layer<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Dense> {
    let head: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("missing LAYER line".into()))?
        .split_whitespace()
        .collect();
    let (n_in, n_out) = match head[..] {
        ["LAYER", a, b] => (
            a.parse::<usize>().map_err(|_| Error::Format(format!("bad layer size {a:?}")))?,
            b.parse::<usize>().map_err(|_| Error::Format(format!("bad layer size {b:?}")))?,
        ),
        _ => return Err(Error::Format("expected `LAYER <in> <out>`".into())),
    };
    let mut d = Dense::zeros(n_in, n_out);
    for o in 0..n_out {
        read_values(lines, &mut d.weights[o * n_in..(o + 1) * n_in])?;
    }
    read_values(lines, &mut d.bias)?;
    if !d.is_finite() {
        return Err(Error::Format("non-finite model parameter".into()));
    }
    Ok(d)
}

fn read_values<'a>(lines: &mut impl Iterator<Item = &'a str>, out: &mut [f64]) -> Result<()> {
    let line = lines.next().ok_or_else(|| Error::Format("model file truncated".into()))?;
    let mut n = 0;
    for tok in line.split_whitespace() {
        if n == out.len() {
            return Err(Error::Format(format!("expected {} values per line", out.len())));
        }
        out[n] = tok.parse().map_err(|_| Error::Format(format!("bad number {tok:?}")))?;
        n += 1;
    }
    if n != out.len() {
        return Err(Error::Truncated {
            expected: out.len(),
            found: n,
        });
    }
    Ok(())
}
