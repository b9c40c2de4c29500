//! Region adjacency graph merging under a combined spectral / texture /
//! shape heterogeneity criterion.

pub mod lbp;
mod merge;
pub mod stats;

pub use lbp::{lbp_code, lbp_code_map, lbp_histogram, texture_distance, LBP_BINS};
pub use merge::{merge_regions, Edge, Rag, DEFAULT_SCALE};
pub use stats::{compute_region_stats, BoundingBox, Moments, RegionStats};

use crate::error::{Error, Result};
use crate::segmentation::{angle_between, sam_angle};

/// Weights of the three heterogeneity terms and of the two shape sub-terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterogeneityWeights {
    pub spectral: f64,
    pub texture: f64,
    pub shape: f64,
    pub compactness: f64,
    pub smoothness: f64,
}

impl Default for HeterogeneityWeights {
    fn default() -> Self {
        Self {
            spectral: 0.7,
            texture: 0.2,
            shape: 0.1,
            compactness: 0.5,
            smoothness: 0.5,
        }
    }
}

impl HeterogeneityWeights {
    pub fn new(spectral: f64, texture: f64, shape: f64, compactness: f64, smoothness: f64) -> Result<Self> {
        let w = Self {
            spectral,
            texture,
            shape,
            compactness,
            smoothness,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.spectral, self.texture, self.shape, self.compactness, self.smoothness];
        if all.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Config(format!("heterogeneity weights must lie in [0, 1]: {self:?}")));
        }
        let top = self.spectral + self.texture + self.shape;
        if (top - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "spectral + texture + shape weights sum to {top}, expected 1"
            )));
        }
        let sub = self.compactness + self.smoothness;
        if (sub - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "compactness + smoothness weights sum to {sub}, expected 1"
            )));
        }
        Ok(())
    }
}

fn compactness(perimeter: f64, area: f64) -> f64 {
    perimeter / area.sqrt()
}

fn smoothness(perimeter: f64, bbox_perimeter: f64) -> f64 {
    perimeter / bbox_perimeter
}

/// Area-weighted increase of compactness and smoothness heterogeneity caused
/// by merging two adjacent regions sharing `shared_boundary` pixel edges.
pub fn shape_heterogeneity_delta(
    a: &RegionStats,
    b: &RegionStats,
    shared_boundary: u64,
    w_compact: f64,
    w_smooth: f64,
) -> Result<f64> {
    if shared_boundary == 0 {
        return Err(Error::Argument("regions are not adjacent".into()));
    }
    let merged_perimeter = (a.perimeter + b.perimeter - 2 * shared_boundary) as f64;
    let merged_area = (a.area + b.area) as f64;
    let merged_bbox = a.bbox.union(&b.bbox).perimeter() as f64;
    let weighted = |x: &RegionStats| {
        let (n, p) = (x.area as f64, x.perimeter as f64);
        (n * compactness(p, n), n * smoothness(p, x.bbox.perimeter() as f64))
    };
    let ((ca, sa), (cb, sb)) = (weighted(a), weighted(b));
    let compact = merged_area * compactness(merged_perimeter, merged_area) - ca - cb;
    let smooth = merged_area * smoothness(merged_perimeter, merged_bbox) - sa - sb;
    Ok(w_compact * compact + w_smooth * smooth)
}

fn normalized_histogram(h: &[u64]) -> Vec<f64> {
    let total: u64 = h.iter().sum();
    if total == 0 {
        vec![1.0 / h.len() as f64; h.len()]
    } else {
        h.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

/// Heterogeneity `h` of merging two adjacent regions: spectral angle of the
/// region means, chi-squared LBP distance and the shape increase divided by
/// the merged area (negative shape changes count as zero).
pub fn merge_cost(a: &RegionStats, b: &RegionStats, shared_boundary: u64, w: &HeterogeneityWeights) -> Result<f64> {
    let spectral = sam_angle(&a.mean(), &b.mean())?;
    cost_with_spectral(a, b, shared_boundary, w, spectral)
}

/// Same as [`merge_cost`] but total: an angle involving a zero mean spectrum
/// is taken as 0 when both are zero and pi/2 otherwise.
pub(crate) fn edge_cost(a: &RegionStats, b: &RegionStats, shared_boundary: u64, w: &HeterogeneityWeights) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    let spectral = angle_between(&ma, &mb).unwrap_or_else(|| {
        let za = ma.iter().all(|&x| x == 0.0);
        let zb = mb.iter().all(|&x| x == 0.0);
        if za && zb {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        }
    });
    cost_with_spectral(a, b, shared_boundary, w, spectral).expect("edges are adjacent")
}

fn cost_with_spectral(
    a: &RegionStats,
    b: &RegionStats,
    shared_boundary: u64,
    w: &HeterogeneityWeights,
    spectral: f64,
) -> Result<f64> {
    let texture = lbp::chi_square(
        normalized_histogram(&a.lbp_histogram).into_iter(),
        normalized_histogram(&b.lbp_histogram).into_iter(),
    );
    let delta = shape_heterogeneity_delta(a, b, shared_boundary, w.compactness, w.smoothness)?;
    let shape = delta.max(0.0) / (a.area + b.area) as f64;
    Ok(w.spectral * spectral + w.texture * texture + w.shape * shape)
}

/// Merge priority of an edge: heterogeneity scaled by the merged area. A
/// merge is accepted while this stays below `scale^2`.
pub fn fusion_value(a: &RegionStats, b: &RegionStats, cost: f64) -> f64 {
    (a.area + b.area) as f64 * cost
}
