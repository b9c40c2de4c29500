use crate::raster::MultiBandRaster;
use crate::segmentation::LabelMap;

use super::lbp::LBP_BINS;

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_row: usize,
    pub max_row: usize,
    pub min_col: usize,
    pub max_col: usize,
}

impl BoundingBox {
    pub fn of_pixel(row: usize, col: usize) -> Self {
        Self {
            min_row: row,
            max_row: row,
            min_col: col,
            max_col: col,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            min_row: self.min_row.min(other.min_row),
            max_row: self.max_row.max(other.max_row),
            min_col: self.min_col.min(other.min_col),
            max_col: self.max_col.max(other.max_col),
        }
    }

    pub fn rows(&self) -> usize {
        self.max_row - self.min_row + 1
    }

    pub fn cols(&self) -> usize {
        self.max_col - self.min_col + 1
    }

    pub fn perimeter(&self) -> usize {
        2 * (self.rows() + self.cols())
    }
}

/// Raw pixel-coordinate moments: sums of r, c, r^2, c^2 and r*c.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Moments {
    pub sum_r: u64,
    pub sum_c: u64,
    pub sum_rr: u64,
    pub sum_cc: u64,
    pub sum_rc: u64,
}

impl Moments {
    fn add_pixel(&mut self, row: usize, col: usize) {
        let (r, c) = (row as u64, col as u64);
        self.sum_r += r;
        self.sum_c += c;
        self.sum_rr += r * r;
        self.sum_cc += c * c;
        self.sum_rc += r * c;
    }

    fn combine(&self, o: &Self) -> Self {
        Self {
            sum_r: self.sum_r + o.sum_r,
            sum_c: self.sum_c + o.sum_c,
            sum_rr: self.sum_rr + o.sum_rr,
            sum_cc: self.sum_cc + o.sum_cc,
            sum_rc: self.sum_rc + o.sum_rc,
        }
    }

    /// Population covariance `(var_r, var_c, cov_rc)`, computed from exact
    /// integer sums.
    pub fn covariance(&self, area: u64) -> (f64, f64, f64) {
        let n = area as i128;
        let nn = (n * n) as f64;
        let var = |s: u64, ss: u64| (n * ss as i128 - (s as i128) * (s as i128)) as f64 / nn;
        let cov = (n * self.sum_rc as i128 - self.sum_r as i128 * self.sum_c as i128) as f64 / nn;
        (var(self.sum_r, self.sum_rr), var(self.sum_c, self.sum_cc), cov)
    }
}

/// Incrementally mergeable statistics of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats {
    pub area: u64,
    /// Per-band sum of values.
    pub sum: Vec<f64>,
    /// Per-band sum of squared values.
    pub sum_sq: Vec<f64>,
    /// Number of pixel edges separating the region from other regions or
    /// the image border.
    pub perimeter: u64,
    pub bbox: BoundingBox,
    /// LBP(8, 1) counts over pixels not on the image border.
    pub lbp_histogram: Vec<u64>,
    pub moments: Moments,
}

impl RegionStats {
    pub fn bands(&self) -> usize {
        self.sum.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.area as f64).collect()
    }

    pub fn lbp_mass(&self) -> u64 {
        self.lbp_histogram.iter().sum()
    }

    /// Exact statistics of the union of two adjacent regions that share
    /// `shared_boundary` pixel edges.
    pub fn combine(&self, other: &Self, shared_boundary: u64) -> Self {
        Self {
            area: self.area + other.area,
            sum: self.sum.iter().zip(&other.sum).map(|(a, b)| a + b).collect(),
            sum_sq: self.sum_sq.iter().zip(&other.sum_sq).map(|(a, b)| a + b).collect(),
            perimeter: self.perimeter + other.perimeter - 2 * shared_boundary,
            bbox: self.bbox.union(&other.bbox),
            lbp_histogram: self
                .lbp_histogram
                .iter()
                .zip(&other.lbp_histogram)
                .map(|(a, b)| a + b)
                .collect(),
            moments: self.moments.combine(&other.moments),
        }
    }
}

/// Statistics of every region in one pass over the image. `lbp_codes` is the
/// per-pixel LBP map (see [`super::lbp::lbp_code_map`]).
pub fn compute_region_stats(
    raster: &MultiBandRaster,
    labels: &LabelMap,
    lbp_codes: &[Option<u8>],
) -> Vec<RegionStats> {
    let (w, h, nb) = (labels.width(), labels.height(), raster.bands());
    let mut stats: Vec<Option<RegionStats>> = vec![None; labels.region_count()];
    let mut v = vec![0.0; nb];
    for r in 0..h {
        for c in 0..w {
            let idx = r * w + c;
            let l = labels.labels()[idx];
            raster.spectrum_into(idx, &mut v);
            let s = stats[l as usize].get_or_insert_with(|| RegionStats {
                area: 0,
                sum: vec![0.0; nb],
                sum_sq: vec![0.0; nb],
                perimeter: 0,
                bbox: BoundingBox::of_pixel(r, c),
                lbp_histogram: vec![0; LBP_BINS],
                moments: Moments::default(),
            });
            s.area += 1;
            for b in 0..nb {
                s.sum[b] += v[b];
                s.sum_sq[b] += v[b] * v[b];
            }
            s.bbox = s.bbox.union(&BoundingBox::of_pixel(r, c));
            s.moments.add_pixel(r, c);
            if let Some(code) = lbp_codes[idx] {
                s.lbp_histogram[code as usize] += 1;
            }
            let mut boundary = 4 - neighbor_count(w, h, r, c);
            crate::segmentation::for_each_neighbor(w, h, r, c, |n| {
                if labels.labels()[n] != l {
                    boundary += 1;
                }
            });
            s.perimeter += boundary as u64;
        }
    }
    stats
        .into_iter()
        .map(|s| s.expect("dense labels cover every region"))
        .collect()
}

fn neighbor_count(w: usize, h: usize, r: usize, c: usize) -> usize {
    (r > 0) as usize + (c > 0) as usize + (c + 1 < w) as usize + (r + 1 < h) as usize
}
