//! Runs every stage from a config file and lists the artifacts.
//!
//! ```text
//! cargo run --release --example full_pipeline [configs/quick.conf] [seed]
//! ```

use quakeseg::pipeline::{run_pipeline, PipelineConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().map(String::as_str).unwrap_or("configs/quick.conf");
    let result = PipelineConfig::load(path).and_then(|mut cfg| {
        if let Some(seed) = args.get(1).and_then(|s| s.parse().ok()) {
            cfg.seed = seed;
        }
        run_pipeline(&cfg)
    });
    match result {
        Ok(summary) => {
            println!("{} -> {} regions", summary.initial_regions, summary.merged_regions);
            for (kind, e) in &summary.evaluations {
                let r = &e.final_report;
                println!("{:<5} width {:>3}: accuracy {:.3} f1 {:.3}", kind.name(), e.best_spec().width, r.accuracy, r.f1);
            }
            for p in summary.artifacts {
                println!("  {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
