#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quakeseg::eval::{ModelKind, ModelSpec};
use quakeseg::features::{FeatureMatrix, FeatureParams};
use quakeseg::pipeline::{labelled_features, segment};
use quakeseg::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use quakeseg::synth::{generate_scene, RegionSpec, Scene, SceneSpec, Texture};
use quakeseg::{BandGrid, LabelMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random cut positions splitting `0..len` into pieces of at least `min`.
fn cuts(rng: &mut ChaCha8Rng, len: usize, min: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < len {
        let rest = len - start;
        let size = if rest < 2 * min { rest } else { rng.random_range(min..=rest.min(4 * min)) };
        out.push((start, size));
        start += size;
    }
    out
}

/// A random rectangular tiling with random spectra, textures and noise.
pub fn random_scene_spec(seed: u64, width: usize, height: usize, bands: usize) -> SceneSpec {
    let mut rng = rng(seed);
    let rows = cuts(&mut rng, height, 4);
    let cols = cuts(&mut rng, width, 4);
    let mut regions = Vec::new();
    for &(row, nrows) in &rows {
        for &(col, ncols) in &cols {
            let texture = match rng.random_range(0..3) {
                0 => Texture::Flat,
                1 => Texture::Speckle {
                    amplitude: rng.random_range(0.0..0.5),
                },
                _ => Texture::Checkerboard {
                    period: rng.random_range(1..4),
                    amplitude: rng.random_range(0.0..0.3),
                },
            };
            regions.push(RegionSpec {
                row,
                col,
                rows: nrows,
                cols: ncols,
                class_id: rng.random_range(0..4),
                spectrum: (0..bands).map(|_| rng.random_range(0.05..1.0)).collect(),
                texture,
                noise_std: rng.random_range(0.0..0.03),
            });
        }
    }
    SceneSpec {
        width,
        height,
        bands,
        seed,
        regions,
    }
}

pub fn random_scene(seed: u64, width: usize, height: usize, bands: usize) -> Scene {
    generate_scene(&random_scene_spec(seed, width, height, bands)).unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BandGrid {
    BandGrid::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Random label map with `k` colors on a `w x h` grid, densely relabeled.
/// Regions need not be connected.
pub fn random_labels(rng: &mut ChaCha8Rng, w: usize, h: usize, k: u32) -> LabelMap {
    let raw: Vec<u32> = (0..w * h).map(|_| rng.random_range(0..k)).collect();
    LabelMap::relabel(w, h, &raw)
}

/// Raw, labelled superpixel features of the acceptance scene.
pub fn acceptance_features(seed: u64) -> FeatureMatrix {
    let scene = generate_scene(&SceneSpec::acceptance(seed)).unwrap();
    let initial = segment(&scene.raster, 0.08, 16).unwrap();
    let merged = merge_regions(&initial, &scene.raster, &HeterogeneityWeights::default(), DEFAULT_SCALE, 3).unwrap();
    labelled_features(
        &scene.raster,
        &merged,
        Some((&scene.truth, &scene.classes)),
        &FeatureParams::default(),
        2,
    )
    .unwrap()
}

/// Training setup used for the desk-scale experiment.
pub fn acceptance_spec(kind: ModelKind) -> ModelSpec {
    let mut spec = ModelSpec::new(kind);
    spec.train.pretrain_epochs = 20;
    spec.train.finetune_epochs = 100;
    spec.train.batch_size = 4;
    spec.train.learning_rate = 0.1;
    spec
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
