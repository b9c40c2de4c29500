//! Over-segments the default synthetic scene and merges it at a few scales.
//!
//! ```text
//! cargo run --release --example segment_scene [seed]
//! ```

use quakeseg::rag::{merge_regions, HeterogeneityWeights};
use quakeseg::segmentation::{adaptive_merge_small, fast_scan_partition, DEFAULT_INIT_THRESHOLD, DEFAULT_MIN_SIZE};
use quakeseg::synth::{generate_scene, SceneSpec};

fn main() -> quakeseg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let scene = generate_scene(&SceneSpec::acceptance(seed))?;
    println!("truth regions: {}", scene.truth.region_count());

    let initial = fast_scan_partition(&scene.raster, DEFAULT_INIT_THRESHOLD)?;
    println!("fast scan regions: {}", initial.region_count());
    let cleaned = adaptive_merge_small(&initial, &scene.raster, DEFAULT_MIN_SIZE)?;
    println!("after small-region merge (min {DEFAULT_MIN_SIZE} px): {}", cleaned.region_count());

    let weights = HeterogeneityWeights::default();
    for scale in [5.0, 10.0, 20.0, 40.0] {
        let merged = merge_regions(&cleaned, &scene.raster, &weights, scale, 3)?;
        println!("scale {scale:>4}: {} regions", merged.region_count());
    }
    Ok(())
}
