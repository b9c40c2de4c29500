use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quakeseg::eval::{evaluate, report_csv, GridSpec, ModelKind, ModelSpec};
use quakeseg::features::{FeatureMatrix, FeatureParams, DEFAULT_GLCM_LEVELS};
use quakeseg::pipeline::{labelled_features, run_pipeline, segment, PipelineConfig};
use quakeseg::rag::{merge_regions, HeterogeneityWeights, DEFAULT_SCALE};
use quakeseg::segmentation::{LabelMap, DEFAULT_INIT_THRESHOLD, DEFAULT_MIN_SIZE};
use quakeseg::synth::{classes_csv, generate_scene, parse_classes_csv, SceneSpec, CLASS_DAMAGED};
use quakeseg::{load_raster, save_raster, Error, Result};

#[derive(Parser)]
#[command(name = "quakeseg", version, about = "Superpixel building damage detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Over-segment a raster and absorb small regions.
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_INIT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_MIN_SIZE)]
        min_size: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Merge a label map on the region adjacency graph.
    Merge {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: f64,
        #[arg(long, default_value_t = 0.7)]
        wspec: f64,
        #[arg(long, default_value_t = 0.2)]
        wtex: f64,
        #[arg(long, default_value_t = 0.1)]
        wshape: f64,
        #[arg(long, default_value_t = 0.5)]
        wcompact: f64,
        #[arg(long, default_value_t = 3)]
        texture_band: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Per-region feature CSV.
    Features {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Truth partition (PGM) when --classes is given, otherwise a
        /// `region,class` CSV aligned with --labels.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// `region,class` CSV of the truth partition's regions.
        #[arg(long, requires = "truth")]
        classes: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        nir_band: usize,
        #[arg(long, default_value_t = 2)]
        red_band: usize,
        #[arg(long, default_value_t = DEFAULT_GLCM_LEVELS)]
        glcm_levels: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Grid search and stratified cross-validation of one model family.
    Eval {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: String,
        /// `name = v1, v2, ...` lines; defaults to the width grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = CLASS_DAMAGED)]
        positive_class: usize,
        /// Model parameter override, e.g. `--set learning_rate=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Generate a synthetic scene.
    Synth {
        /// Scene spec file, or `acceptance` for the built-in scene.
        #[arg(long)]
        spec: String,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_raster: PathBuf,
        #[arg(long)]
        out_truth: PathBuf,
        #[arg(long)]
        out_classes: PathBuf,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Segment {
            input,
            threshold,
            min_size,
            output,
        } => {
            let raster = load_raster(&input)?;
            let labels = segment(&raster, threshold, min_size)?;
            labels.save_pgm(&output)?;
            println!("{} regions", labels.region_count());
        }
        Command::Merge {
            input,
            labels,
            scale,
            wspec,
            wtex,
            wshape,
            wcompact,
            texture_band,
            output,
        } => {
            let weights = HeterogeneityWeights::new(wspec, wtex, wshape, wcompact, 1.0 - wcompact)?;
            let raster = load_raster(&input)?;
            let labels = LabelMap::load_pgm(&labels)?;
            let merged = merge_regions(&labels, &raster, &weights, scale, texture_band)?;
            merged.save_pgm(&output)?;
            println!("{} -> {} regions", labels.region_count(), merged.region_count());
        }
        Command::Features {
            input,
            labels,
            truth,
            classes,
            nir_band,
            red_band,
            glcm_levels,
            output,
        } => {
            let raster = load_raster(&input)?;
            let labels = LabelMap::load_pgm(&labels)?;
            let params = FeatureParams { nir_band, glcm_levels };
            let mut m = match (&truth, &classes) {
                (Some(t), Some(c)) => {
                    let truth = LabelMap::load_pgm(t)?;
                    let classes = parse_classes_csv(&read(c)?)?;
                    labelled_features(&raster, &labels, Some((&truth, &classes)), &params, red_band)?
                }
                _ => labelled_features(&raster, &labels, None, &params, red_band)?,
            };
            if let (Some(t), None) = (&truth, &classes) {
                let c = parse_classes_csv(&read(t)?)?;
                if c.len() != m.len() {
                    return Err(Error::Data(format!("{} classes for {} regions", c.len(), m.len())));
                }
                m.labels = Some(c);
            }
            m.save_csv(&output)?;
            println!("{} regions x {} features", m.len(), m.width());
        }
        Command::Eval {
            features,
            model,
            grid,
            k,
            seed,
            positive_class,
            set,
            report,
        } => {
            let kind = ModelKind::parse(&model)?;
            let mut spec = ModelSpec::new(kind);
            for kv in &set {
                let (key, value) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
                spec.set(key.trim(), value)?;
            }
            let grid = match grid {
                Some(p) => GridSpec::parse(&read(&p).map_err(|e| Error::Config(e.to_string()))?)?,
                None => GridSpec::widths(&quakeseg::nn::WIDTH_GRID),
            };
            let data = FeatureMatrix::load_csv(&features)?;
            let e = evaluate(&spec, &grid, &data, k, seed, positive_class)?;
            write(&report, &report_csv([(kind, &e)]))?;
            let r = &e.final_report;
            println!(
                "best {:?}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} kappa {:.4}",
                e.grid.best_cell().params,
                r.accuracy,
                r.precision,
                r.recall,
                r.f1,
                r.kappa
            );
        }
        Command::Synth {
            spec,
            seed,
            out_raster,
            out_truth,
            out_classes,
        } => {
            let mut spec = if spec == "acceptance" {
                SceneSpec::acceptance(seed.unwrap_or(42))
            } else {
                SceneSpec::load(&spec)?
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            let scene = generate_scene(&spec)?;
            save_raster(&scene.raster, &out_raster)?;
            scene.truth.save_pgm(&out_truth)?;
            write(&out_classes, &classes_csv(&scene.classes))?;
            println!("{} regions", scene.truth.region_count());
        }
        Command::Run { config, seed } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let summary = run_pipeline(&cfg)?;
            println!(
                "{} initial regions, {} merged regions",
                summary.initial_regions, summary.merged_regions
            );
            for (kind, e) in &summary.evaluations {
                let r = &e.final_report;
                println!(
                    "{}: accuracy {:.4} f1 {:.4} kappa {:.4}",
                    kind.name(),
                    r.accuracy,
                    r.f1,
                    r.kappa
                );
            }
            for p in &summary.artifacts {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
