//! Segments the default scene and prints the per-superpixel feature table
//! with majority truth classes.
//!
//! ```text
//! cargo run --release --example extract_features [out.csv]
//! ```

use quakeseg::features::FeatureParams;
use quakeseg::pipeline::{labelled_features, segment};
use quakeseg::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use quakeseg::segmentation::{DEFAULT_INIT_THRESHOLD, DEFAULT_MIN_SIZE};
use quakeseg::synth::{generate_scene, SceneSpec, CLASS_NAMES};

fn main() -> quakeseg::Result<()> {
    let scene = generate_scene(&SceneSpec::acceptance(42))?;
    let initial = segment(&scene.raster, DEFAULT_INIT_THRESHOLD, DEFAULT_MIN_SIZE)?;
    let merged = merge_regions(&initial, &scene.raster, &HeterogeneityWeights::default(), DEFAULT_SCALE, 3)?;
    let params = FeatureParams::default();
    let m = labelled_features(&scene.raster, &merged, Some((&scene.truth, &scene.classes)), &params, 2)?;

    println!("{} superpixels x {} features", m.len(), m.width());
    println!("{}", m.names.join(" "));
    let labels = m.require_labels()?;
    for (row, &class) in m.rows.iter().zip(labels).take(8) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("{:<17} {}", CLASS_NAMES[class], cells.join(" "));
    }
    if let Some(path) = std::env::args().nth(1) {
        m.save_csv(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
