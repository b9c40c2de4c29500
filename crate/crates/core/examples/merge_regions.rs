//! Walks the region adjacency graph merge by merge, cheapest fusion first.
//!
//! ```text
//! cargo run --release --example merge_regions [scale]
//! ```

use quakeseg::rag::{HeterogeneityWeights, Rag};
use quakeseg::segmentation::{adaptive_merge_small, fast_scan_partition, DEFAULT_INIT_THRESHOLD, DEFAULT_MIN_SIZE};
use quakeseg::synth::{generate_scene, SceneSpec};

fn main() -> quakeseg::Result<()> {
    let scale: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40.0);
    let scene = generate_scene(&SceneSpec::acceptance(42))?;
    let initial = fast_scan_partition(&scene.raster, DEFAULT_INIT_THRESHOLD)?;
    let cleaned = adaptive_merge_small(&initial, &scene.raster, DEFAULT_MIN_SIZE)?;

    let mut graph = Rag::build(&cleaned, &scene.raster, 3, HeterogeneityWeights::default())?;
    println!("{} regions, {} edges", graph.region_count(), graph.edges().len());

    let mut merges = 0;
    while let Some((a, b)) = graph.step(scale) {
        merges += 1;
        if merges <= 5 {
            println!("merge {merges}: {a} + {b}, {} regions left", graph.region_count());
        }
    }
    let merged = graph.label_map();
    println!("{merges} merges at scale {scale}: {} regions", merged.region_count());
    Ok(())
}
