//! Extreme learning machine baseline: closed-form training at every width of
//! the grid, scored by 5-fold cross-validation.
//!
//! ```text
//! cargo run --release --example elm_baseline [ridge]
//! ```

use quakeseg::eval::cross_validate;
use quakeseg::features::FeatureParams;
use quakeseg::nn::{elm_train, DEFAULT_RIDGE, WIDTH_GRID};
use quakeseg::pipeline::{labelled_features, segment};
use quakeseg::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use quakeseg::synth::{generate_scene, SceneSpec, CLASS_DAMAGED};

fn main() -> quakeseg::Result<()> {
    let ridge: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_RIDGE);
    let scene = generate_scene(&SceneSpec::acceptance(42))?;
    let initial = segment(&scene.raster, 0.08, 16)?;
    let merged = merge_regions(&initial, &scene.raster, &HeterogeneityWeights::default(), DEFAULT_SCALE, 3)?;
    let data = labelled_features(&scene.raster, &merged, Some((&scene.truth, &scene.classes)), &FeatureParams::default(), 2)?;

    for width in WIDTH_GRID {
        let r = cross_validate(
            |rows, labels, classes, seed| elm_train(rows, labels, classes, width, seed, ridge),
            &data,
            5,
            42,
            CLASS_DAMAGED,
        )?;
        println!(
            "width {width:>3}: accuracy {:.3} f1 {:.3} kappa {:.3}",
            r.accuracy, r.f1, r.kappa
        );
    }
    Ok(())
}
