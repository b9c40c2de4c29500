//! Layer-wise pretraining and fine-tuning of a stacked denoising autoencoder
//! on the scene features, with the reconstruction loss of each layer.
//!
//! ```text
//! cargo run --release --example train_sdae [width] [depth]
//! ```

use quakeseg::features::{FeatureParams, Normalizer};
use quakeseg::nn::{fine_tune, pretrain_stack, Classifier, Model, SdaeModel, TrainConfig};
use quakeseg::pipeline::{labelled_features, segment};
use quakeseg::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use quakeseg::synth::{generate_scene, SceneSpec};

fn main() -> quakeseg::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let width = args.first().copied().unwrap_or(20);
    let depth = args.get(1).copied().unwrap_or(5);

    let scene = generate_scene(&SceneSpec::acceptance(42))?;
    let initial = segment(&scene.raster, 0.08, 16)?;
    let merged = merge_regions(&initial, &scene.raster, &HeterogeneityWeights::default(), DEFAULT_SCALE, 3)?;
    let data = labelled_features(&scene.raster, &merged, Some((&scene.truth, &scene.classes)), &FeatureParams::default(), 2)?;
    let rows = Normalizer::fit(&data.rows)?.transform_rows(&data.rows);
    let labels = data.require_labels()?;

    let cfg = TrainConfig {
        pretrain_epochs: 20,
        finetune_epochs: 100,
        batch_size: 4,
        learning_rate: 0.1,
        seed: 42,
        ..Default::default()
    };
    let model = SdaeModel::new(data.width(), &vec![width; depth], data.class_count(), cfg.seed)?;
    let (model, traces) = pretrain_stack(model, &rows, &cfg)?;
    for (k, t) in traces.iter().enumerate() {
        println!("layer {}: reconstruction loss {:.4} -> {:.4}", k + 1, t[0], t[t.len() - 1]);
    }
    let (model, trace) = fine_tune(model, &rows, labels, &cfg)?;
    println!("fine-tune loss {:.4} -> {:.4}", trace[0], trace[trace.len() - 1]);

    let predicted = model.predict(&rows)?;
    let correct = predicted.iter().zip(labels).filter(|(p, t)| p == t).count();
    println!("training accuracy {correct}/{}", labels.len());
    println!("{} lines of model text", Model::Sdae(model).to_text().lines().count());
    Ok(())
}
