//! Confusion metrics, Cohen's kappa, stratified k-fold cross-validation and
//! exhaustive grid search over model parameters.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Normalizer};
use crate::nn::{elm_train, mlp_train, sdae_train, Classifier, Model, TrainConfig, DEFAULT_RIDGE, SDAE_DEPTH};

/// `counts[t * classes + p]` samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.classes).map(|p| self.get(truth, p)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, pred)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    /// Adds `other`'s counts, e.g. to pool folds.
    pub fn add(&mut self, other: &Self) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Argument("confusion matrices have different class counts".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Tallies predictions against truth for `classes` classes.
pub fn confusion(pred: &[usize], truth: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(Error::Argument(format!("label out of range for {classes} classes")));
        }
        cm.counts[t * classes + p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub accuracy: f64,
    /// Held-out accuracy of each fold; empty for a single evaluation.
    pub fold_accuracies: Vec<f64>,
}

/// Precision, recall and F1 of `positive`, overall accuracy and Cohen's
/// kappa. Ratios with a zero denominator are 0; kappa is 1 when chance
/// agreement is 1.
pub fn metrics(cm: &ConfusionMatrix, positive: usize) -> Result<MetricReport> {
    if positive >= cm.classes {
        return Err(Error::Argument(format!(
            "positive class {positive} out of range for {} classes",
            cm.classes
        )));
    }
    let n = cm.total();
    if n == 0 {
        return Err(Error::Data("empty confusion matrix".into()));
    }
    let tp = cm.get(positive, positive);
    let precision = ratio(tp, cm.col_sum(positive));
    let recall = ratio(tp, cm.row_sum(positive));
    Ok(MetricReport {
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
        kappa: kappa(cm),
        accuracy: cm.accuracy(),
        fold_accuracies: Vec::new(),
    })
}

fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn kappa(cm: &ConfusionMatrix) -> f64 {
    let n = cm.total() as f64;
    let po = cm.trace() as f64 / n;
    let pe = (0..cm.classes)
        .map(|i| cm.row_sum(i) as f64 * cm.col_sum(i) as f64)
        .sum::<f64>()
        / (n * n);
    if pe == 1.0 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

/// Precision, recall and F1 of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.classes)
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            ClassMetrics {
                precision,
                recall,
                f1: harmonic_mean(precision, recall),
            }
        })
        .collect()
}

/// Splits sample indices into `k` folds so that each class's members are
/// spread as evenly as possible. Members of each class are shuffled and
/// dealt round-robin, the deal continuing from class to class so fold sizes
/// stay balanced too. Each fold is sorted.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {k}")));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (class, m) in members.iter_mut().enumerate() {
        if m.is_empty() {
            continue;
        }
        if m.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} members, fewer than {k} folds",
                m.len()
            )));
        }
        m.shuffle(&mut rng);
        for &i in m.iter() {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Seed of the model trained on `fold`, the same for every grid cell.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

/// For each fold, fits normalization and a model on the other folds and
/// scores the held-out fold. Accuracy is the mean over folds; the other
/// metrics come from the pooled confusion matrix.
///
/// `train` receives normalized rows, labels, the class count and a seed.
pub fn cross_validate<C, F>(train: F, data: &FeatureMatrix, k: usize, seed: u64, positive: usize) -> Result<MetricReport>
where
    C: Classifier,
    F: Fn(&[Vec<f64>], &[usize], usize, u64) -> Result<C>,
{
    let folds = stratified_kfold(data.require_labels()?, k, seed)?;
    cross_validate_folds(train, data, &folds, seed, positive)
}

fn cross_validate_folds<C, F>(
    train: F,
    data: &FeatureMatrix,
    folds: &[Vec<usize>],
    seed: u64,
    positive: usize,
) -> Result<MetricReport>
where
    C: Classifier,
    F: Fn(&[Vec<f64>], &[usize], usize, u64) -> Result<C>,
{
    let labels = data.require_labels()?;
    let classes = data.class_count().max(positive + 1);
    let mut pooled = ConfusionMatrix::new(classes);
    let mut fold_accuracies = Vec::with_capacity(folds.len());
    let mut held_out = vec![false; data.len()];
    for (f, test) in folds.iter().enumerate() {
        held_out.fill(false);
        for &i in test {
            held_out[i] = true;
        }
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| !held_out[i]).collect();
        let norm = Normalizer::fit(train_idx.iter().map(|&i| &data.rows[i]))?;
        let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| norm.transform(&data.rows[i])).collect();
        let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let model = train(&train_rows, &train_labels, classes, fold_seed(seed, f))?;
        let test_rows: Vec<Vec<f64>> = test.iter().map(|&i| norm.transform(&data.rows[i])).collect();
        let test_labels: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        let cm = confusion(&model.predict(&test_rows)?, &test_labels, classes)?;
        fold_accuracies.push(cm.accuracy());
        pooled.add(&cm)?;
    }
    let mut report = metrics(&pooled, positive)?;
    report.accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    report.fold_accuracies = fold_accuracies;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sdae,
    Mlp,
    Elm,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sdae" => Ok(Self::Sdae),
            "mlp" => Ok(Self::Mlp),
            "elm" => Ok(Self::Elm),
            other => Err(Error::Config(format!("unknown model {other:?}; expected sdae, mlp or elm"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sdae => "sdae",
            Self::Mlp => "mlp",
            Self::Elm => "elm",
        }
    }
}

/// A model family with all of its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Hidden width, shared by every layer of the stacked network.
    pub width: usize,
    /// Number of hidden layers of the stacked network.
    pub depth: usize,
    pub train: TrainConfig,
    pub ridge: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            width: 50,
            depth: SDAE_DEPTH,
            train: TrainConfig::default(),
            ridge: DEFAULT_RIDGE,
        }
    }

    /// Sets one named parameter from text.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {name}")))
        }
        match name {
            "width" => self.width = num(name, value)?,
            "depth" => self.depth = num(name, value)?,
            "ridge" => self.ridge = num(name, value)?,
            "learning_rate" => self.train.learning_rate = num(name, value)?,
            "pretrain_epochs" => self.train.pretrain_epochs = num(name, value)?,
            "finetune_epochs" => self.train.finetune_epochs = num(name, value)?,
            "batch_size" => self.train.batch_size = num(name, value)?,
            "corruption" => self.train.corruption = num(name, value)?,
            other => return Err(Error::Config(format!("unknown model parameter {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.depth == 0 {
            return Err(Error::Config("width and depth must be positive".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Config(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        self.train.validate()
    }

    /// Trains this model on normalized rows.
    pub fn fit(&self, rows: &[Vec<f64>], labels: &[usize], classes: usize, seed: u64) -> Result<Model> {
        self.validate()?;
        let cfg = TrainConfig { seed, ..self.train };
        Ok(match self.kind {
            ModelKind::Sdae => Model::Sdae(sdae_train(rows, labels, classes, &vec![self.width; self.depth], &cfg)?.model),
            ModelKind::Mlp => Model::Sdae(mlp_train(rows, labels, classes, self.width, &cfg)?.0),
            ModelKind::Elm => Model::Elm(elm_train(rows, labels, classes, self.width, seed, self.ridge)?),
        })
    }
}

/// Candidate values per parameter name, in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSpec {
    pub params: Vec<(String, Vec<String>)>,
}

impl GridSpec {
    pub fn new(params: Vec<(String, Vec<String>)>) -> Result<Self> {
        let g = Self { params };
        g.validate()?;
        Ok(g)
    }

    /// A grid over hidden widths only, e.g. `WIDTH_GRID`.
    pub fn widths(widths: &[usize]) -> Self {
        Self {
            params: vec![("width".into(), widths.iter().map(usize::to_string).collect())],
        }
    }

    /// Parses `name = v1, v2, ...` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (name, values) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid line {}: expected `name = values`", n + 1)))?;
            let values: Vec<String> = values
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            params.push((name.trim().to_string(), values));
        }
        Self::new(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in &self.params {
            if values.is_empty() {
                return Err(Error::Config(format!("grid parameter {name:?} has no candidates")));
            }
            if self.params.iter().filter(|(n, _)| n == name).count() > 1 {
                return Err(Error::Config(format!("grid parameter {name:?} declared twice")));
            }
        }
        Ok(())
    }

    /// Cartesian product, first parameter varying slowest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for (name, values) in &self.params {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((name.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

fn describe(cell: &[(String, String)]) -> String {
    cell.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub params: Vec<(String, String)>,
    pub spec: ModelSpec,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    /// Index of the cell with the highest mean accuracy, first on ties.
    pub best: usize,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Scores every cell of `grid` applied on top of `base` by k-fold
/// cross-validation. All cells share the same folds and fold seeds.
pub fn grid_search(
    base: &ModelSpec,
    grid: &GridSpec,
    data: &FeatureMatrix,
    k: usize,
    seed: u64,
    positive: usize,
) -> Result<GridResult> {
    grid.validate()?;
    let folds = stratified_kfold(data.require_labels()?, k, seed)?;
    let mut cells: Vec<GridCell> = Vec::new();
    let mut best = 0;
    for params in grid.cells() {
        let mut spec = *base;
        for (n, v) in &params {
            spec.set(n, v)?;
        }
        spec.validate()?;
        let report = cross_validate_folds(|r, l, c, s| spec.fit(r, l, c, s), data, &folds, seed, positive)?;
        if !cells.is_empty() && report.accuracy > cells[best].report.accuracy {
            best = cells.len();
        }
        cells.push(GridCell { params, spec, report });
    }
    Ok(GridResult { cells, best })
}

/// Grid search followed by a fresh stratified cross-validation of the best
/// cell with a different fold assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub grid: GridResult,
    pub final_report: MetricReport,
}

impl Evaluation {
    pub fn best_spec(&self) -> &ModelSpec {
        &self.grid.best_cell().spec
    }
}

/// Seed of the confirming cross-validation that follows a grid search.
pub fn confirm_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_4E5B
}

pub fn evaluate(
    base: &ModelSpec,
    grid: &GridSpec,
    data: &FeatureMatrix,
    k: usize,
    seed: u64,
    positive: usize,
) -> Result<Evaluation> {
    let grid = grid_search(base, grid, data, k, seed, positive)?;
    let spec = grid.best_cell().spec;
    let final_report = cross_validate(|r, l, c, s| spec.fit(r, l, c, s), data, k, confirm_seed(seed), positive)?;
    Ok(Evaluation { grid, final_report })
}

pub const REPORT_HEADER: &str = "stage,model,params,fold_accuracies,mean_accuracy,precision,recall,f1,kappa";

/// One report line per grid cell (`grid`) and one for the confirming run
/// (`cv`).
pub fn report_rows(kind: ModelKind, eval: &Evaluation) -> Vec<String> {
    let mut rows: Vec<String> = eval
        .grid
        .cells
        .iter()
        .map(|c| report_row("grid", kind, &describe(&c.params), &c.report))
        .collect();
    rows.push(report_row("cv", kind, &describe(&eval.grid.best_cell().params), &eval.final_report));
    rows
}

pub fn report_row(stage: &str, kind: ModelKind, params: &str, r: &MetricReport) -> String {
    let mut s = format!("{stage},{},{params},", kind.name());
    for (i, a) in r.fold_accuracies.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        write!(s, "{a}").unwrap();
    }
    write!(s, ",{},{},{},{},{}", r.accuracy, r.precision, r.recall, r.f1, r.kappa).unwrap();
    s
}

pub fn report_csv<'a>(evaluations: impl IntoIterator<Item = (ModelKind, &'a Evaluation)>) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for (kind, e) in evaluations {
        for row in report_rows(kind, e) {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}
