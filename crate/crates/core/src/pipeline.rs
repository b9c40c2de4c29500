//! End-to-end run driven by a `key = value` configuration file:
//! segment, merge, extract features, evaluate classifiers, train the final
//! model and render the classified overlay.
//!
//! ```text
//! # scene: either a synthetic preset / spec file or three input files
//! synth = acceptance
//! output_dir = out
//! seed = 42
//! scale = 20
//! models = sdae, mlp, elm
//! grid.width = 20, 50, 200, 800
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{in_stage, Error, Result};
use crate::eval::{evaluate, report_csv, Evaluation, GridSpec, ModelKind, ModelSpec};
use crate::features::{extract_features, majority_classes, FeatureMatrix, FeatureParams, Normalizer};
use crate::nn::{Classifier, Model};
use crate::pnm::write_ppm;
use crate::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use crate::raster::{compute_ndvi, load_raster, MultiBandRaster};
use crate::segmentation::{adaptive_merge_small, fast_scan_partition, LabelMap, DEFAULT_INIT_THRESHOLD, DEFAULT_MIN_SIZE};
use crate::synth::{generate_scene, parse_classes_csv, SceneSpec, CLASS_DAMAGED, CLASS_INTACT};

pub const INITIAL_LABELS: &str = "initial_labels.pgm";
pub const MERGED_LABELS: &str = "merged_labels.pgm";
pub const FEATURES: &str = "features.csv";
pub const MODEL: &str = "model.txt";
pub const REPORT: &str = "report.csv";
pub const OVERLAY: &str = "overlay.ppm";

/// Where the scene comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    /// The built-in acceptance scene, generated with the run seed.
    Acceptance,
    /// A scene spec file.
    SpecFile(PathBuf),
    /// A raster with a truth partition and the class of each truth region.
    Files { raster: PathBuf, truth: PathBuf, classes: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: SceneSource,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threshold: f64,
    pub min_size: usize,
    pub scale: f64,
    pub weights: HeterogeneityWeights,
    pub texture_band: usize,
    pub red_band: usize,
    pub features: FeatureParams,
    /// Models to evaluate; the first one is trained on all data, saved and
    /// used for the overlay.
    pub models: Vec<ModelKind>,
    /// Hyperparameters shared by all models before grid overrides.
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub k: usize,
    pub positive_class: usize,
    pub intact_class: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            source: SceneSource::Acceptance,
            output_dir: PathBuf::from("out"),
            seed: 42,
            threshold: DEFAULT_INIT_THRESHOLD,
            min_size: DEFAULT_MIN_SIZE,
            scale: DEFAULT_SCALE,
            weights: HeterogeneityWeights::default(),
            texture_band: 3,
            red_band: 2,
            features: FeatureParams::default(),
            models: vec![ModelKind::Sdae, ModelKind::Mlp, ModelKind::Elm],
            model: ModelSpec::new(ModelKind::Sdae),
            grid: GridSpec::widths(&crate::nn::WIDTH_GRID),
            k: 5,
            positive_class: CLASS_DAMAGED,
            intact_class: CLASS_INTACT,
        }
    }
}

impl PipelineConfig {
    /// Parses a config; relative paths are taken relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        let mut grid = Vec::new();
        let (mut synth, mut input, mut truth, mut classes) = (None, None, None, None);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", n + 1)));
            }
            if let Some(param) = key.strip_prefix("grid.") {
                let values = value
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                grid.push((param.to_string(), values));
                continue;
            }
            let path = || base_dir.join(value);
            match key {
                "synth" => synth = Some(value.to_string()),
                "input" => input = Some(path()),
                "truth" => truth = Some(path()),
                "classes" => classes = Some(path()),
                "output_dir" => cfg.output_dir = path(),
                "seed" => cfg.seed = num(key, value)?,
                "threshold" => cfg.threshold = num(key, value)?,
                "min_size" => cfg.min_size = num(key, value)?,
                "scale" => cfg.scale = num(key, value)?,
                "w_spectral" => cfg.weights.spectral = num(key, value)?,
                "w_texture" => cfg.weights.texture = num(key, value)?,
                "w_shape" => cfg.weights.shape = num(key, value)?,
                "w_compactness" => cfg.weights.compactness = num(key, value)?,
                "w_smoothness" => cfg.weights.smoothness = num(key, value)?,
                "texture_band" => cfg.texture_band = num(key, value)?,
                "nir_band" => cfg.features.nir_band = num(key, value)?,
                "red_band" => cfg.red_band = num(key, value)?,
                "glcm_levels" => cfg.features.glcm_levels = num(key, value)?,
                "k" => cfg.k = num(key, value)?,
                "positive_class" => cfg.positive_class = num(key, value)?,
                "intact_class" => cfg.intact_class = num(key, value)?,
                "models" => {
                    cfg.models = value
                        .split(',')
                        .map(ModelKind::parse)
                        .collect::<Result<Vec<_>>>()?;
                }
                _ => cfg
                    .model
                    .set(key, value)
                    .map_err(|_| Error::Config(format!("line {}: unknown or invalid key {key:?} = {value:?}", n + 1)))?,
            }
        }
        cfg.source = match (synth, input, truth, classes) {
            (Some(s), None, None, None) if s == "acceptance" => SceneSource::Acceptance,
            (Some(s), None, None, None) => SceneSource::SpecFile(base_dir.join(s)),
            (None, Some(raster), Some(truth), Some(classes)) => SceneSource::Files { raster, truth, classes },
            (None, None, None, None) => SceneSource::Acceptance,
            _ => {
                return Err(Error::Config(
                    "give either `synth` or all of `input`, `truth` and `classes`".into(),
                ))
            }
        };
        if !grid.is_empty() {
            cfg.grid = GridSpec::new(grid)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Checks every invariant that can be checked without reading data.
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.threshold >= 0.0 && self.threshold <= std::f64::consts::PI) {
            return Err(Error::Config(format!("threshold must lie in [0, pi], got {}", self.threshold)));
        }
        if self.min_size == 0 {
            return Err(Error::Config("min_size must be positive".into()));
        }
        if !(self.scale >= 0.0) {
            return Err(Error::Config(format!("scale must be non-negative, got {}", self.scale)));
        }
        if self.features.glcm_levels < 2 {
            return Err(Error::Config("glcm_levels must be at least 2".into()));
        }
        if self.k < 2 {
            return Err(Error::Config("k must be at least 2".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models to evaluate".into()));
        }
        if self.positive_class == self.intact_class {
            return Err(Error::Config("positive_class and intact_class must differ".into()));
        }
        self.model.validate()?;
        self.grid.validate()?;
        for cell in self.grid.cells() {
            let mut spec = self.model;
            for (n, v) in &cell {
                spec.set(n, v)?;
            }
            spec.validate()?;
        }
        let mut inputs = Vec::new();
        match &self.source {
            SceneSource::Acceptance => {}
            SceneSource::SpecFile(p) => inputs.push(p),
            SceneSource::Files { raster, truth, classes } => inputs.extend([raster, truth, classes]),
        }
        for p in inputs {
            if !p.is_file() {
                return Err(Error::Config(format!("input {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

/// Raster, truth partition and class of each truth region.
pub fn load_scene(source: &SceneSource, seed: u64) -> Result<(MultiBandRaster, LabelMap, Vec<usize>)> {
    match source {
        SceneSource::Acceptance => {
            let s = generate_scene(&SceneSpec::acceptance(seed))?;
            Ok((s.raster, s.truth, s.classes))
        }
        SceneSource::SpecFile(p) => {
            let s = generate_scene(&SceneSpec::load(p)?)?;
            Ok((s.raster, s.truth, s.classes))
        }
        SceneSource::Files { raster, truth, classes } => {
            let r = load_raster(raster)?;
            let t = LabelMap::load_pgm(truth)?;
            let text = fs::read_to_string(classes).map_err(|e| Error::io(classes, e))?;
            let c = parse_classes_csv(&text)?;
            if c.len() != t.region_count() {
                return Err(Error::Data(format!(
                    "{} classes for {} truth regions",
                    c.len(),
                    t.region_count()
                )));
            }
            Ok((r, t, c))
        }
    }
}

/// Raster-scan over-segmentation followed by absorption of small regions.
pub fn segment(raster: &MultiBandRaster, threshold: f64, min_size: usize) -> Result<LabelMap> {
    let initial = fast_scan_partition(raster, threshold)?;
    adaptive_merge_small(&initial, raster, min_size)
}

/// Raw features of each superpixel, labelled by majority vote of the truth.
pub fn labelled_features(
    raster: &MultiBandRaster,
    superpixels: &LabelMap,
    truth: Option<(&LabelMap, &[usize])>,
    params: &FeatureParams,
    red_band: usize,
) -> Result<FeatureMatrix> {
    let ndvi = compute_ndvi(raster, params.nir_band, red_band)?;
    let mut m = extract_features(raster, superpixels, &ndvi, params)?;
    if let Some((t, classes)) = truth {
        m.labels = Some(majority_classes(superpixels, t, classes)?);
    }
    Ok(m)
}

/// Classified overlay: `positive` regions red, `intact` regions yellow,
/// everything else the `gray_band` rescaled to gray.
pub fn render_overlay(
    raster: &MultiBandRaster,
    labels: &LabelMap,
    region_classes: &[usize],
    gray_band: usize,
    positive: usize,
    intact: usize,
) -> Result<Vec<[u8; 3]>> {
    let band = raster.band_grid(gray_band)?;
    let (lo, hi) = band
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    Ok(labels
        .labels()
        .iter()
        .zip(band.values())
        .map(|(&l, &v)| match region_classes[l as usize] {
            c if c == positive => [255, 0, 0],
            c if c == intact => [255, 255, 0],
            _ => {
                let g = ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
                [g, g, g]
            }
        })
        .collect())
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub initial_regions: usize,
    pub merged_regions: usize,
    pub evaluations: Vec<(ModelKind, Evaluation)>,
    pub artifacts: Vec<PathBuf>,
}

/// Runs every stage. On failure the artifacts written so far are removed
/// and the error names the failing stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    let mut written = Vec::new();
    let result = run_stages(cfg, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

fn run_stages(cfg: &PipelineConfig, written: &mut Vec<PathBuf>) -> Result<PipelineSummary> {
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| in_stage("setup")(Error::io(out, e)))?;
    let mut emit = |name: &str, stage: &'static str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = out.join(name);
        written.push(p.clone());
        write(&p).map_err(in_stage(stage))
    };

    let (raster, truth, truth_classes) = load_scene(&cfg.source, cfg.seed).map_err(in_stage("load"))?;

    let initial = segment(&raster, cfg.threshold, cfg.min_size).map_err(in_stage("segment"))?;
    emit(INITIAL_LABELS, "segment", &|p| initial.save_pgm(p))?;

    let merged = merge_regions(&initial, &raster, &cfg.weights, cfg.scale, cfg.texture_band).map_err(in_stage("merge"))?;
    emit(MERGED_LABELS, "merge", &|p| merged.save_pgm(p))?;

    let features = labelled_features(&raster, &merged, Some((&truth, &truth_classes)), &cfg.features, cfg.red_band)
        .map_err(in_stage("features"))?;
    emit(FEATURES, "features", &|p| features.save_csv(p))?;

    let mut evaluations = Vec::with_capacity(cfg.models.len());
    for &kind in &cfg.models {
        let base = ModelSpec { kind, ..cfg.model };
        let e = evaluate(&base, &cfg.grid, &features, cfg.k, cfg.seed, cfg.positive_class).map_err(in_stage("eval"))?;
        evaluations.push((kind, e));
    }
    let report = report_csv(evaluations.iter().map(|(k, e)| (*k, e)));
    emit(REPORT, "eval", &|p| fs::write(p, &report).map_err(|e| Error::io(p, e)))?;

    let spec = *evaluations[0].1.best_spec();
    let norm = Normalizer::fit(&features.rows).map_err(in_stage("train"))?;
    let rows = norm.transform_rows(&features.rows);
    let labels = features.require_labels()?;
    let classes = features.class_count().max(cfg.positive_class + 1).max(cfg.intact_class + 1);
    let model = spec.fit(&rows, labels, classes, cfg.seed).map_err(in_stage("train"))?;
    emit(MODEL, "train", &|p| model.save(p))?;

    let predicted = model.predict(&rows).map_err(in_stage("predict"))?;
    let overlay = render_overlay(
        &raster,
        &merged,
        &predicted,
        cfg.features.nir_band,
        cfg.positive_class,
        cfg.intact_class,
    )
    .map_err(in_stage("predict"))?;
    emit(OVERLAY, "predict", &|p| write_ppm(p, raster.width(), raster.height(), &overlay))?;

    Ok(PipelineSummary {
        initial_regions: initial.region_count(),
        merged_regions: merged.region_count(),
        evaluations,
        artifacts: written.clone(),
    })
}

/// Loads a saved model and checks it against a feature width.
pub fn load_model_for(path: impl AsRef<Path>, width: usize) -> Result<Model> {
    let m = Model::load(path)?;
    if m.input_width() != width {
        return Err(Error::Data(format!(
            "model expects {} features, data has {width}",
            m.input_width()
        )));
    }
    Ok(m)
}
