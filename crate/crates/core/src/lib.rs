//! Superpixel-based building damage detection for multi-band imagery.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`segmentation`]: spectral-angle raster-scan over-segmentation and
//!    absorption of undersized regions.
//! 2. [`rag`]: region adjacency graph merging with a spectral / LBP texture /
//!    shape heterogeneity criterion.
//! 3. [`features`]: per-superpixel spectral, shape, GLCM texture and NDVI
//!    features with fold-local min-max normalization.
//! 4. [`nn`]: denoising autoencoders stacked into a deep classifier, plus MLP
//!    and extreme learning machine baselines.
//! 5. [`eval`]: confusion metrics, Cohen's kappa, stratified k-fold
//!    cross-validation and grid search.
//!
//! [`synth`] generates labelled scenes with known ground truth and
//! [`pipeline`] chains everything behind a single configuration file.

pub mod error;
pub mod eval;
pub mod features;
pub mod nn;
pub mod pipeline;
pub mod pnm;
pub mod rag;
pub mod raster;
pub mod segmentation;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{compute_ndvi, load_raster, save_raster, BandGrid, MultiBandRaster};
pub use segmentation::{adaptive_merge_small, fast_scan_partition, sam_angle, LabelMap};
