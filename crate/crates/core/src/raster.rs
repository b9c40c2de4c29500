//! Multi-band rasters and the QRAS container.
//!
//! A QRAS file is an ASCII header line `QRAS1 <width> <height> <bands>\n`
//! followed by `width * height * bands` little-endian IEEE-754 `f32` values,
//! band-sequential (all of band 0 in row-major order, then band 1, ...).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

const QRAS_MAGIC: &str = "QRAS1";

/// A `bands x height x width` grid of finite reflectance values.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBandRaster {
    width: usize,
    height: usize,
    bands: usize,
    values: Vec<f32>,
}

impl MultiBandRaster {
    /// Builds a raster from band-sequential values.
    pub fn new(width: usize, height: usize, bands: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::Argument(format!(
                "raster dimensions must be positive, got {width}x{height}x{bands}"
            )));
        }
        let expected = width * height * bands;
        if values.len() != expected {
            return Err(Error::Truncated {
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at payload index {pos}")));
        }
        Ok(Self {
            width,
            height,
            bands,
            values,
        })
    }

    /// Builds a raster by evaluating `f(band, row, col)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height * bands);
        for b in 0..bands {
            for r in 0..height {
                for c in 0..width {
                    values.push(f(b, r, c));
                }
            }
        }
        Self::new(width, height, bands, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, band: usize, row: usize, col: usize) -> f32 {
        self.values[(band * self.height + row) * self.width + col]
    }

    /// All samples of one band in row-major order.
    pub fn band(&self, band: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.values[band * n..(band + 1) * n]
    }

    /// Spectral vector of the pixel at linear index `idx` (row-major).
    pub fn spectrum_into(&self, idx: usize, out: &mut [f64]) {
        let n = self.pixel_count();
        for (b, o) in out.iter_mut().enumerate() {
            *o = self.values[b * n + idx] as f64;
        }
    }

    /// One band as a `BandGrid` of `f64`.
    pub fn band_grid(&self, band: usize) -> Result<BandGrid> {
        if band >= self.bands {
            return Err(Error::Argument(format!(
                "band index {band} out of range for {} bands",
                self.bands
            )));
        }
        Ok(BandGrid {
            width: self.width,
            height: self.height,
            values: self.band(band).iter().map(|&v| v as f64).collect(),
        })
    }
}

/// A single real value per pixel (NDVI, a band copy, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct BandGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl BandGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument("band grid dimensions must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::Truncated {
                expected: width * height,
                found: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<MultiBandRaster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_qras(&bytes)
}

pub fn decode_qras(bytes: &[u8]) -> Result<MultiBandRaster> {
    let newline = bytes
        .iter()
        .take(256)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing QRAS header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Format("QRAS header is not ASCII".into()))?;
    let mut fields = header.split(' ');
    if fields.next() != Some(QRAS_MAGIC) {
        return Err(Error::Format(format!("bad magic in header {header:?}")));
    }
    let mut dim = |name: &str| -> Result<usize> {
        fields
            .next()
            .ok_or_else(|| Error::Format(format!("header missing {name}")))?
            .parse::<usize>()
            .map_err(|_| Error::Format(format!("header field {name} is not an integer")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let bands = dim("bands")?;
    if fields.next().is_some() {
        return Err(Error::Format(format!("trailing fields in header {header:?}")));
    }
    if width == 0 || height == 0 || bands == 0 {
        return Err(Error::Format(format!(
            "zero dimension in header {width}x{height}x{bands}"
        )));
    }

    let payload = &bytes[newline + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bands))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if payload.len() != expected * 4 {
        return Err(Error::Truncated {
            expected,
            found: payload.len() / 4,
        });
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    MultiBandRaster::new(width, height, bands, values)
}

pub fn save_raster(raster: &MultiBandRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::with_capacity(1 << 20, file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(
            out,
            "{QRAS_MAGIC} {} {} {}",
            raster.width, raster.height, raster.bands
        )?;
        let mut buf = Vec::with_capacity(4 * 65536);
        for chunk in raster.values.chunks(65536) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Per-pixel `(NIR - RED) / (NIR + RED)`, with 0 where the denominator is 0.
pub fn compute_ndvi(raster: &MultiBandRaster, nir_index: usize, red_index: usize) -> Result<BandGrid> {
    for (name, idx) in [("nir", nir_index), ("red", red_index)] {
        if idx >= raster.bands() {
            return Err(Error::Argument(format!(
                "{name} band index {idx} out of range for {} bands",
                raster.bands()
            )));
        }
    }
    let values = raster
        .band(nir_index)
        .iter()
        .zip(raster.band(red_index))
        .map(|(&nir, &red)| {
            let (nir, red) = (nir as f64, red as f64);
            let sum = nir + red;
            if sum == 0.0 {
                0.0
            } else {
                ((nir - red) / sum).clamp(-1.0, 1.0)
            }
        })
        .collect();
    BandGrid::new(raster.width(), raster.height(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny() -> MultiBandRaster {
        MultiBandRaster::new(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn decodes_row_major_values() {
        let mut bytes = b"QRAS1 2 2 1\n".to_vec();
        for v in [0.0f32, 1.0, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let r = decode_qras(&bytes).unwrap();
        assert_eq!(r, tiny());
        assert_eq!(r.get(0, 1, 0), 2.0);
    }

    #[test]
    fn short_payload_is_truncation() {
        let mut bytes = b"QRAS1 2 2 1\n".to_vec();
        for v in [0.0f32, 1.0, 2.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            decode_qras(&bytes),
            Err(Error::Truncated { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn bad_headers_are_format_errors() {
        for header in ["QRAS2 2 2 1\n", "QRAS1 2 2\n", "QRAS1 a 2 1\n", "QRAS1 2 2 1 7\n", "no newline"] {
            assert!(matches!(decode_qras(header.as_bytes()), Err(Error::Format(_))), "{header}");
        }
    }

    #[test]
    fn non_finite_payload_is_data_error() {
        let mut bytes = b"QRAS1 1 1 1\n".to_vec();
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_qras(&bytes), Err(Error::Data(_))));
    }

    #[test]
    fn zero_bands_rejected_by_constructor() {
        assert!(MultiBandRaster::new(2, 2, 0, vec![]).is_err());
    }

    #[test]
    fn ndvi_examples() {
        let r = MultiBandRaster::new(3, 1, 2, vec![0.2, 0.4, 0.0, 0.6, 0.4, 0.0]).unwrap();
        let ndvi = compute_ndvi(&r, 1, 0).unwrap();
        assert!((ndvi.get(0, 0) - 0.5).abs() < 1e-7);
        assert_eq!(ndvi.get(0, 1), 0.0);
        assert_eq!(ndvi.get(0, 2), 0.0);
        assert!(matches!(compute_ndvi(&r, 2, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.qras");
        let r = MultiBandRaster::from_fn(5, 3, 2, |b, r, c| (b * 100 + r * 10 + c) as f32 * 0.1).unwrap();
        save_raster(&r, &path).unwrap();
        assert_eq!(load_raster(&path).unwrap(), r);
    }

    proptest! {
        #[test]
        fn ndvi_bounded_and_scale_invariant(
            nir in 0.0f32..1000.0, red in 0.0f32..1000.0, scale in 0.5f32..4.0
        ) {
            let a = MultiBandRaster::new(1, 1, 2, vec![red, nir]).unwrap();
            let b = MultiBandRaster::new(1, 1, 2, vec![red * scale, nir * scale]).unwrap();
            let va = compute_ndvi(&a, 1, 0).unwrap().get(0, 0);
            let vb = compute_ndvi(&b, 1, 0).unwrap().get(0, 0);
            prop_assert!((-1.0..=1.0).contains(&va));
            prop_assert!((va - vb).abs() < 1e-6);
        }
    }
}
