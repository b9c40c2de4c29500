//! Local binary patterns and histogram distances.

use crate::error::{Error, Result};
use crate::raster::BandGrid;
use crate::segmentation::LabelMap;

pub const LBP_BINS: usize = 256;

/// Circular LBP code with `neighbors` samples on a circle of `radius`
/// pixels. Sample `p` sits at angle `2*pi*p/neighbors`, counter-clockwise
/// from east; off-grid positions are bilinearly interpolated. Bit `p` is set
/// when the sample is `>=` the centre.
pub fn lbp_code(band: &BandGrid, row: usize, col: usize, neighbors: usize, radius: f64) -> Result<u32> {
    if neighbors == 0 || neighbors > 32 {
        return Err(Error::Argument(format!("neighbor count {neighbors} outside 1..=32")));
    }
    if !(radius > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {radius}")));
    }
    let margin = radius.ceil() as usize;
    if row < margin || col < margin || row + margin >= band.height() || col + margin >= band.width() {
        return Err(Error::Argument(format!(
            "pixel ({row}, {col}) is within {margin} px of the border"
        )));
    }
    let center = band.get(row, col);
    let mut code = 0u32;
    for p in 0..neighbors {
        let theta = 2.0 * std::f64::consts::PI * p as f64 / neighbors as f64;
        let x = snap(col as f64 + radius * theta.cos());
        let y = snap(row as f64 - radius * theta.sin());
        if sample(band, y, x) >= center {
            code |= 1 << p;
        }
    }
    Ok(code)
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

fn sample(band: &BandGrid, y: f64, x: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (c0, r0) = (x0 as usize, y0 as usize);
    let row_value = |r: usize| {
        let a = band.get(r, c0);
        if fx == 0.0 {
            a
        } else {
            a + fx * (band.get(r, c0 + 1) - a)
        }
    };
    let top = row_value(r0);
    if fy == 0.0 {
        top
    } else {
        top + fy * (row_value(r0 + 1) - top)
    }
}

/// LBP(8, 1) code of every pixel, `None` on the one-pixel border.
pub fn lbp_code_map(band: &BandGrid) -> Vec<Option<u8>> {
    let (w, h) = (band.width(), band.height());
    let mut out = vec![None; w * h];
    if w < 3 || h < 3 {
        return out;
    }
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let code = lbp_code(band, r, c, 8, 1.0).expect("interior pixel");
            out[r * w + c] = Some(code as u8);
        }
    }
    out
}

/// LBP(8, 1) histogram of one region. Pixels on the image border are not
/// evaluable; a region with no evaluable pixel gets the uniform histogram.
pub fn lbp_histogram(band: &BandGrid, labels: &LabelMap, region: u32) -> Result<Vec<f64>> {
    if band.width() != labels.width() || band.height() != labels.height() {
        return Err(Error::Argument("band and label map dimensions differ".into()));
    }
    if region as usize >= labels.region_count() {
        return Err(Error::Argument(format!("unknown region id {region}")));
    }
    let (w, h) = (band.width(), band.height());
    let mut hist = vec![0.0; LBP_BINS];
    let mut total = 0usize;
    for r in 1..h.saturating_sub(1) {
        for c in 1..w.saturating_sub(1) {
            if labels.get(r, c) == region {
                hist[lbp_code(band, r, c, 8, 1.0)? as usize] += 1.0;
                total += 1;
            }
        }
    }
    if total == 0 {
        hist.fill(1.0);
    }
    Ok(hist)
}

/// Half the chi-squared distance between L1-normalized histograms.
pub fn texture_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument("histograms differ in length".into()));
    }
    let (ta, tb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if !(ta > 0.0) || !(tb > 0.0) {
        return Err(Error::Degenerate("histogram with zero mass".into()));
    }
    Ok(chi_square(a.iter().map(|x| x / ta), b.iter().map(|x| x / tb)))
}

pub(crate) fn chi_square(pa: impl Iterator<Item = f64>, pb: impl Iterator<Item = f64>) -> f64 {
    const EPS: f64 = 1e-12;
    0.5 * pa
        .zip(pb)
        .map(|(x, y)| {
            let d = x - y;
            d * d / (x + y + EPS)
        })
        .sum::<f64>()
}
