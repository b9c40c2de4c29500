//! Generates a synthetic scene, writes it to disk and reads the raster back.
//!
//! ```text
//! cargo run --example synth_scene [spec-file|acceptance] [out_dir]
//! ```

use std::path::PathBuf;

use quakeseg::synth::{classes_csv, generate_scene, SceneSpec, CLASS_NAMES};
use quakeseg::{compute_ndvi, load_raster, save_raster};

fn main() -> quakeseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec = match args.first().map(String::as_str) {
        None | Some("acceptance") => SceneSpec::acceptance(42),
        Some(path) => SceneSpec::load(path)?,
    };
    let out = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("out/synth"));
    std::fs::create_dir_all(&out).map_err(|e| quakeseg::Error::io(&out, e))?;

    let scene = generate_scene(&spec)?;
    save_raster(&scene.raster, out.join("scene.qras"))?;
    scene.truth.save_pgm(out.join("truth.pgm"))?;
    std::fs::write(out.join("classes.csv"), classes_csv(&scene.classes)).map_err(|e| quakeseg::Error::io(&out, e))?;

    let back = load_raster(out.join("scene.qras"))?;
    assert_eq!(back, scene.raster);
    println!("{}x{} px, {} bands, written to {}", back.width(), back.height(), back.bands(), out.display());
    for (id, name) in CLASS_NAMES.iter().enumerate() {
        let n = scene.classes.iter().filter(|&&c| c == id).count();
        println!("  {name}: {n} regions");
    }
    if back.bands() >= 4 {
        let ndvi = compute_ndvi(&back, 3, 2)?;
        let mean = ndvi.values().iter().sum::<f64>() / ndvi.values().len() as f64;
        println!("mean NDVI {mean:.3}");
    }
    Ok(())
}
