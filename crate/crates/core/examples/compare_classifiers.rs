//! Grid search plus stratified cross-validation of the stacked network, the
//! MLP and the ELM on features of the synthetic acceptance scene.
//!
//! ```text
//! cargo run --release --example compare_classifiers [pretrain_epochs finetune_epochs learning_rate batch_size]
//! ```

use std::time::Instant;

use quakeseg::eval::{evaluate, GridSpec, ModelKind, ModelSpec};
use quakeseg::features::FeatureParams;
use quakeseg::nn::WIDTH_GRID;
use quakeseg::pipeline::{labelled_features, segment};
use quakeseg::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use quakeseg::synth::{generate_scene, SceneSpec, CLASS_DAMAGED};

fn main() -> quakeseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());

    let scene = generate_scene(&SceneSpec::acceptance(42))?;
    let initial = segment(&scene.raster, 0.08, 16)?;
    let merged = merge_regions(&initial, &scene.raster, &HeterogeneityWeights::default(), DEFAULT_SCALE, 3)?;
    let params = FeatureParams::default();
    let data = labelled_features(&scene.raster, &merged, Some((&scene.truth, &scene.classes)), &params, 2)?;
    println!("{} superpixels, {} features", data.len(), data.width());

    let grid = GridSpec::widths(&WIDTH_GRID);
    for kind in [ModelKind::Sdae, ModelKind::Mlp, ModelKind::Elm] {
        let mut spec = ModelSpec::new(kind);
        spec.set("pretrain_epochs", &arg(0, "20"))?;
        spec.set("finetune_epochs", &arg(1, "100"))?;
        spec.set("learning_rate", &arg(2, "0.1"))?;
        spec.set("batch_size", &arg(3, "4"))?;
        let start = Instant::now();
        let e = evaluate(&spec, &grid, &data, 5, 42, CLASS_DAMAGED)?;
        for cell in &e.grid.cells {
            println!("  {:?} width {:>3}: accuracy {:.3}", kind, cell.spec.width, cell.report.accuracy);
        }
        let r = &e.final_report;
        println!(
            "{:?} best width {}: accuracy {:.3} precision {:.3} recall {:.3} f1 {:.3} kappa {:.3} ({:.1} s)",
            kind,
            e.best_spec().width,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.kappa,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
