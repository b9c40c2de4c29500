//! Per-superpixel feature vectors.
//!
//! Column order for a raster with `B` bands (`2B + 10` columns):
//!
//! | columns | content |
//! |---|---|
//! | `mean_b0 .. mean_b{B-1}` | per-band mean |
//! | `var_b0 .. var_b{B-1}` | per-band population variance |
//! | `area`, `shape_index`, `length_width_ratio`, `rectangular_fit`, `roundness`, `density` | shape |
//! | `glcm_contrast`, `glcm_correlation`, `glcm_entropy` | NIR texture |
//! | `ndvi_mean` | vegetation index |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rag::{compute_region_stats, RegionStats};
use crate::raster::{BandGrid, MultiBandRaster};
use crate::segmentation::LabelMap;

pub const DEFAULT_GLCM_LEVELS: usize = 32;

/// Canonical feature column names.
pub fn feature_names(bands: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..bands).map(|b| format!("mean_b{b}")).collect();
    names.extend((0..bands).map(|b| format!("var_b{b}")));
    names.extend(
        [
            "area",
            "shape_index",
            "length_width_ratio",
            "rectangular_fit",
            "roundness",
            "density",
            "glcm_contrast",
            "glcm_correlation",
            "glcm_entropy",
            "ndvi_mean",
        ]
        .map(String::from),
    );
    names
}

fn check_region(labels: &LabelMap, region: u32) -> Result<()> {
    if region as usize >= labels.region_count() {
        return Err(Error::Argument(format!("unknown region id {region}")));
    }
    Ok(())
}

/// Population `(mean, variance)` per band over the pixels of one region.
pub fn spectral_stats(raster: &MultiBandRaster, labels: &LabelMap, region: u32) -> Result<Vec<(f64, f64)>> {
    check_region(labels, region)?;
    let pixels: Vec<usize> = labels
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == region)
        .map(|(i, _)| i)
        .collect();
    Ok(band_moments(raster, &pixels))
}

fn band_moments(raster: &MultiBandRaster, pixels: &[usize]) -> Vec<(f64, f64)> {
    (0..raster.bands())
        .map(|b| {
            let band = raster.band(b);
            // Welford
            let (mut mean, mut m2) = (0.0, 0.0);
            for (k, &idx) in pixels.iter().enumerate() {
                let x = band[idx] as f64;
                let delta = x - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (x - mean);
            }
            (mean, m2 / pixels.len() as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFeatures {
    pub area: f64,
    pub shape_index: f64,
    pub length_width_ratio: f64,
    pub rectangular_fit: f64,
    pub roundness: f64,
    pub density: f64,
}

/// Variance of a single unit pixel along one axis; eigenvalue floor.
const PIXEL_VARIANCE: f64 = 1.0 / 12.0;

pub fn shape_features(stats: &RegionStats) -> ShapeFeatures {
    let area = stats.area as f64;
    let perimeter = stats.perimeter as f64;
    let (var_r, var_c, cov) = stats.moments.covariance(stats.area);
    let half_trace = 0.5 * (var_r + var_c);
    let disc = (0.25 * (var_r - var_c).powi(2) + cov * cov).sqrt();
    let (l1, l2) = (half_trace + disc, (half_trace - disc).max(0.0));
    let (f1, f2) = (l1.max(PIXEL_VARIANCE), l2.max(PIXEL_VARIANCE));
    ShapeFeatures {
        area,
        shape_index: perimeter / (4.0 * area.sqrt()),
        length_width_ratio: (f1 / f2).sqrt(),
        rectangular_fit: area / (stats.bbox.rows() * stats.bbox.cols()) as f64,
        roundness: 4.0 * std::f64::consts::PI * area / (perimeter * perimeter),
        density: area.sqrt() / (1.0 + (var_r + var_c).sqrt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlcmFeatures {
    pub contrast: f64,
    pub correlation: f64,
    pub entropy: f64,
}

/// Offsets `(drow, dcol)` covering the four directions.
const GLCM_OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

/// Symmetric, normalized co-occurrence matrix (`levels x levels`, row-major)
/// of the quantized band over one region. Only pairs with both pixels in the
/// region count.
pub fn glcm_matrix(band: &BandGrid, labels: &LabelMap, region: u32, levels: usize) -> Result<Vec<f64>> {
    check_region(labels, region)?;
    if levels < 2 {
        return Err(Error::Argument(format!("need at least 2 gray levels, got {levels}")));
    }
    let (w, h) = (labels.width(), labels.height());
    let members: Vec<usize> = labels
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == region)
        .map(|(i, _)| i)
        .collect();
    let (lo, hi) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        let v = band.values()[i];
        (lo.min(v), hi.max(v))
    });
    let quantize = |v: f64| -> usize {
        if hi > lo {
            (((v - lo) / (hi - lo) * levels as f64) as usize).min(levels - 1)
        } else {
            0
        }
    };
    let mut counts = vec![0u64; levels * levels];
    let mut total = 0u64;
    for &idx in &members {
        let (r, c) = ((idx / w) as isize, (idx % w) as isize);
        let i = quantize(band.values()[idx]);
        for (dr, dc) in GLCM_OFFSETS {
            let (r2, c2) = (r + dr, c + dc);
            if r2 < 0 || c2 < 0 || r2 >= h as isize || c2 >= w as isize {
                continue;
            }
            let other = r2 as usize * w + c2 as usize;
            if labels.labels()[other] != region {
                continue;
            }
            let j = quantize(band.values()[other]);
            counts[i * levels + j] += 1;
            counts[j * levels + i] += 1;
            total += 2;
        }
    }
    if total == 0 {
        return Err(Error::Degenerate(format!(
            "region {region} has no co-occurrence pairs"
        )));
    }
    Ok(counts.iter().map(|&n| n as f64 / total as f64).collect())
}

/// Contrast, correlation and entropy of the region's GLCM.
pub fn glcm_features(band: &BandGrid, labels: &LabelMap, region: u32, levels: usize) -> Result<GlcmFeatures> {
    let p = glcm_matrix(band, labels, region, levels)?;
    Ok(glcm_statistics(&p, levels))
}

pub fn glcm_statistics(p: &[f64], levels: usize) -> GlcmFeatures {
    let mut contrast = 0.0;
    let mut entropy = 0.0;
    let mut mean = 0.0;
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            if v > 0.0 {
                let d = i as f64 - j as f64;
                contrast += v * d * d;
                entropy -= v * v.ln();
                mean += v * i as f64;
            }
        }
    }
    let mut variance = 0.0;
    let mut covariance = 0.0;
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            if v > 0.0 {
                let (di, dj) = (i as f64 - mean, j as f64 - mean);
                variance += v * di * di;
                covariance += v * di * dj;
            }
        }
    }
    // symmetric matrix: both marginals share mean and variance
    let correlation = if variance > 0.0 { covariance / variance } else { 0.0 };
    GlcmFeatures {
        contrast,
        correlation,
        entropy,
    }
}

/// Feature rows, one per region in id order, with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub region_ids: Vec<u32>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    /// Labels, or an argument error for unlabeled data.
    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Argument("feature matrix has no class labels".into()))
    }

    pub fn class_count(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |&m| m + 1)
    }

    /// Writes the matrix as CSV: `region,<features...>[,class]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("region");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        if self.labels.is_some() {
            out.push_str(",class");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            write!(out, "{}", self.region_ids[i]).unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            if let Some(labels) = &self.labels {
                write!(out, ",{}", labels[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Format("empty feature CSV".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        if header.first() != Some(&"region") {
            return Err(Error::Format("feature CSV must start with a region column".into()));
        }
        let has_class = header.last() == Some(&"class");
        let end = if has_class { header.len() - 1 } else { header.len() };
        let names: Vec<String> = header[1..end].iter().map(|s| s.to_string()).collect();
        let (mut region_ids, mut rows, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {}",
                    ln + 1,
                    fields.len(),
                    header.len()
                )));
            }
            let bad = |f: &str| Error::Format(format!("row {}: cannot parse {f:?}", ln + 1));
            region_ids.push(fields[0].parse().map_err(|_| bad(fields[0]))?);
            let row = fields[1..end]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(f)))
                .collect::<Result<Vec<_>>>()?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {} has a non-finite feature", ln + 1)));
            }
            rows.push(row);
            if has_class {
                labels.push(fields[end].parse().map_err(|_| bad(fields[end]))?);
            }
        }
        Ok(Self {
            names,
            region_ids,
            rows,
            labels: has_class.then_some(labels),
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Per-column min-max scaling fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Vec<f64>>) -> Result<Self> {
        let mut iter = rows.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Argument("cannot fit normalization on zero rows".into()))?;
        let (mut min, mut max) = (first.clone(), first.clone());
        for row in iter {
            for (k, &v) in row.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Maps into `[0, 1]`, clamping out-of-range values; constant columns map
    /// to 0.5.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| {
                let (lo, hi) = (self.min[k], self.max[k]);
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect()
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    /// Band used for the co-occurrence texture.
    pub nir_band: usize,
    pub glcm_levels: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            nir_band: 3,
            glcm_levels: DEFAULT_GLCM_LEVELS,
        }
    }
}

/// Raw (unnormalized) features of every region.
pub fn extract_features(
    raster: &MultiBandRaster,
    labels: &LabelMap,
    ndvi: &BandGrid,
    params: &FeatureParams,
) -> Result<FeatureMatrix> {
    let (w, h) = (labels.width(), labels.height());
    if raster.width() != w || raster.height() != h || ndvi.width() != w || ndvi.height() != h {
        return Err(Error::Argument("raster, labels and NDVI dimensions differ".into()));
    }
    let nir = raster.band_grid(params.nir_band)?;
    let stats = compute_region_stats(raster, labels, &vec![None; w * h]);
    let pixels = labels.region_pixels();
    let mut rows = Vec::with_capacity(labels.region_count());
    for (region, members) in pixels.iter().enumerate() {
        let region = region as u32;
        let moments = band_moments(raster, members);
        let mut row: Vec<f64> = moments.iter().map(|m| m.0).collect();
        row.extend(moments.iter().map(|m| m.1));
        let s = shape_features(&stats[region as usize]);
        row.extend([s.area, s.shape_index, s.length_width_ratio, s.rectangular_fit, s.roundness, s.density]);
        let g = match glcm_features(&nir, labels, region, params.glcm_levels) {
            Ok(g) => g,
            Err(Error::Degenerate(_)) => GlcmFeatures {
                contrast: 0.0,
                correlation: 0.0,
                entropy: 0.0,
            },
            Err(e) => return Err(e),
        };
        row.extend([g.contrast, g.correlation, g.entropy]);
        let ndvi_mean = members.iter().map(|&i| ndvi.values()[i]).sum::<f64>() / members.len() as f64;
        row.push(ndvi_mean);
        rows.push(row);
    }
    Ok(FeatureMatrix {
        names: feature_names(raster.bands()),
        region_ids: (0..labels.region_count() as u32).collect(),
        rows,
        labels: None,
    })
}

/// Extracts features, attaches optional per-region classes and normalizes
/// with bounds fitted on all rows.
pub fn build_feature_matrix(
    raster: &MultiBandRaster,
    labels: &LabelMap,
    ndvi: &BandGrid,
    truth: Option<&[usize]>,
    params: &FeatureParams,
) -> Result<(FeatureMatrix, Normalizer)> {
    let mut m = extract_features(raster, labels, ndvi, params)?;
    if let Some(t) = truth {
        if t.len() != m.len() {
            return Err(Error::Argument(format!(
                "{} class labels for {} regions",
                t.len(),
                m.len()
            )));
        }
        m.labels = Some(t.to_vec());
    }
    let norm = Normalizer::fit(&m.rows)?;
    m.rows = norm.transform_rows(&m.rows);
    Ok((m, norm))
}

/// Class of each superpixel by majority vote of the truth classes of its
/// pixels; ties go to the smaller class id.
pub fn majority_classes(superpixels: &LabelMap, truth: &LabelMap, truth_classes: &[usize]) -> Result<Vec<usize>> {
    if superpixels.width() != truth.width() || superpixels.height() != truth.height() {
        return Err(Error::Argument("superpixel and truth maps differ in size".into()));
    }
    if truth_classes.len() != truth.region_count() {
        return Err(Error::Argument(format!(
            "{} truth classes for {} truth regions",
            truth_classes.len(),
            truth.region_count()
        )));
    }
    let n_classes = truth_classes.iter().max().map_or(0, |&m| m + 1);
    let mut votes = vec![0usize; superpixels.region_count() * n_classes];
    for (s, t) in superpixels.labels().iter().zip(truth.labels()) {
        votes[*s as usize * n_classes + truth_classes[*t as usize]] += 1;
    }
    Ok(votes
        .chunks(n_classes)
        .map(|v| {
            let best = *v.iter().max().unwrap();
            v.iter().position(|&x| x == best).unwrap()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::lbp_code_map;

    fn stats_of(w: usize, h: usize, labels: Vec<u32>) -> Vec<RegionStats> {
        let raster = MultiBandRaster::from_fn(w, h, 1, |_, _, _| 1.0).unwrap();
        let labels = LabelMap::from_labels(w, h, labels).unwrap();
        compute_region_stats(&raster, &labels, &lbp_code_map(&raster.band_grid(0).unwrap()))
    }

    #[test]
    fn single_pixel_shape() {
        let s = shape_features(&stats_of(1, 1, vec![0])[0]);
        assert_eq!(s.area, 1.0);
        assert_eq!(s.shape_index, 1.0);
        assert_eq!(s.length_width_ratio, 1.0);
        assert_eq!(s.rectangular_fit, 1.0);
        assert!((s.roundness - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn squares_have_unit_shape_index() {
        for n in 1..6 {
            let s = shape_features(&stats_of(n, n, vec![0; n * n])[0]);
            assert!((s.shape_index - 1.0).abs() < 1e-15);
            assert_eq!(s.rectangular_fit, 1.0);
            assert!((s.length_width_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_eight_rectangle() {
        // row variance 1/4, column variance 63/12, perimeter 20
        let s = shape_features(&stats_of(8, 2, vec![0; 16])[0]);
        assert_eq!(s.area, 16.0);
        assert!((s.shape_index - 1.25).abs() < 1e-15);
        assert!((s.length_width_ratio - 21f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.rectangular_fit, 1.0);
        assert!((s.roundness - 4.0 * std::f64::consts::PI * 16.0 / 400.0).abs() < 1e-12);
        assert!((s.density - 4.0 / (1.0 + 5.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn two_point_variance() {
        let raster = MultiBandRaster::new(2, 1, 1, vec![1.0, 3.0]).unwrap();
        let labels = LabelMap::from_labels(2, 1, vec![0, 0]).unwrap();
        assert_eq!(spectral_stats(&raster, &labels, 0).unwrap(), vec![(2.0, 1.0)]);
        assert!(spectral_stats(&raster, &labels, 1).is_err());
    }

    #[test]
    fn constant_region_glcm_is_zero() {
        let band = BandGrid::new(3, 3, vec![2.0; 9]).unwrap();
        let labels = LabelMap::from_labels(3, 3, vec![0; 9]).unwrap();
        let g = glcm_features(&band, &labels, 0, 8).unwrap();
        assert_eq!((g.contrast, g.correlation, g.entropy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_pixel_glcm_is_degenerate() {
        let band = BandGrid::new(2, 1, vec![1.0, 2.0]).unwrap();
        let labels = LabelMap::from_labels(2, 1, vec![0, 1]).unwrap();
        assert!(matches!(glcm_features(&band, &labels, 0, 8), Err(Error::Degenerate(_))));
    }

    #[test]
    fn uniform_glcm_entropy_is_log_k() {
        let levels = 4;
        let mut p = vec![0.0; 16];
        for k in [0, 5, 10, 15, 3, 12] {
            p[k] = 1.0 / 6.0;
        }
        let g = glcm_statistics(&p, levels);
        assert!((g.entropy - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn normalization_rules() {
        let rows = vec![vec![2.0, 5.0], vec![6.0, 5.0]];
        let n = Normalizer::fit(&rows).unwrap();
        assert_eq!(n.transform(&[4.0, 5.0]), vec![0.5, 0.5]);
        assert_eq!(n.transform(&[8.0, 1.0]), vec![1.0, 0.5]);
        assert_eq!(n.transform(&[-1.0, 9.0]), vec![0.0, 0.5]);
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix {
            names: vec!["a".into(), "b".into()],
            region_ids: vec![0, 1],
            rows: vec![vec![0.1, 1e-300], vec![std::f64::consts::PI, -2.5]],
            labels: Some(vec![1, 0]),
        };
        assert_eq!(FeatureMatrix::from_csv(&m.to_csv()).unwrap(), m);
    }

    #[test]
    fn majority_vote() {
        let sp = LabelMap::from_labels(4, 1, vec![0, 0, 0, 1]).unwrap();
        let truth = LabelMap::from_labels(4, 1, vec![0, 1, 1, 1]).unwrap();
        assert_eq!(majority_classes(&sp, &truth, &[2, 0]).unwrap(), vec![0, 0]);
    }
}
