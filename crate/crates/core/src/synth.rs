//! Seeded synthetic scenes with known region boundaries and classes.
//!
//! Texture modulation is multiplicative and shared by all bands, so it
//! changes brightness but not spectral direction: damaged and intact
//! buildings have the same spectrum and differ only in texture.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::MultiBandRaster;
use crate::segmentation::LabelMap;

pub const CLASS_INTACT: usize = 0;
pub const CLASS_DAMAGED: usize = 1;
pub const CLASS_VEGETATION: usize = 2;
pub const CLASS_ROAD: usize = 3;

pub const CLASS_NAMES: [&str; 4] = ["intact_building", "damaged_building", "vegetation", "road"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Texture {
    Flat,
    /// Alternating `1 +/- amplitude` gain on `period`-pixel squares.
    Checkerboard { period: usize, amplitude: f64 },
    /// Independent per-pixel gain `1 + amplitude * u`, `u ~ U(-1, 1)`.
    Speckle { amplitude: f64 },
}

impl Texture {
    fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Spec(format!("bad texture parameter {t:?}")))
        };
        match parts.as_slice() {
            ["flat"] => Ok(Texture::Flat),
            ["speckle", a] => Ok(Texture::Speckle { amplitude: num(a)? }),
            ["checkerboard", p, a] => Ok(Texture::Checkerboard {
                period: p
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad checkerboard period {p:?}")))?,
                amplitude: num(a)?,
            }),
            _ => Err(Error::Spec(format!("unknown texture {s:?}"))),
        }
    }
}

/// One axis-aligned rectangle of the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
    pub class_id: usize,
    pub spectrum: Vec<f64>,
    pub texture: Texture,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub seed: u64,
    pub regions: Vec<RegionSpec>,
}

/// A generated scene: raster, truth partition and class of each truth region.
#[derive(Debug, Clone)]
pub struct Scene {
    pub raster: MultiBandRaster,
    pub truth: LabelMap,
    pub classes: Vec<usize>,
}

impl SceneSpec {
    /// The default 256x256, 4-band (blue, green, red, NIR) scene: an 8x8
    /// grid of 32 px cells. Buildings sit on one parity of the grid, half
    /// intact (flat) and half damaged (speckled); the other parity is split
    /// between vegetation and road.
    pub fn acceptance(seed: u64) -> Self {
        const GRID: usize = 8;
        const CELL: usize = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce_e5ce);
        let mut building_cells = Vec::new();
        let mut ground_cells = Vec::new();
        for gr in 0..GRID {
            for gc in 0..GRID {
                if (gr + gc) % 2 == 1 {
                    building_cells.push((gr, gc));
                } else {
                    ground_cells.push((gr, gc));
                }
            }
        }
        let mut building_classes: Vec<usize> = (0..building_cells.len())
            .map(|i| if i < building_cells.len() / 2 { CLASS_DAMAGED } else { CLASS_INTACT })
            .collect();
        building_classes.shuffle(&mut rng);
        let mut ground_classes: Vec<usize> = (0..ground_cells.len())
            .map(|i| if i < ground_cells.len() / 2 { CLASS_VEGETATION } else { CLASS_ROAD })
            .collect();
        ground_classes.shuffle(&mut rng);

        let mut class_of = vec![0; GRID * GRID];
        for (cell, class) in building_cells.iter().zip(&building_classes) {
            class_of[cell.0 * GRID + cell.1] = *class;
        }
        for (cell, class) in ground_cells.iter().zip(&ground_classes) {
            class_of[cell.0 * GRID + cell.1] = *class;
        }

        let mut regions = Vec::with_capacity(GRID * GRID);
        for gr in 0..GRID {
            for gc in 0..GRID {
                let class_id = class_of[gr * GRID + gc];
                let (base, texture): ([f64; 4], Texture) = match class_id {
                    CLASS_INTACT => ([0.20, 0.25, 0.32, 0.40], Texture::Flat),
                    CLASS_DAMAGED => ([0.20, 0.25, 0.32, 0.40], Texture::Speckle { amplitude: 0.4 }),
                    CLASS_VEGETATION => ([0.04, 0.08, 0.05, 0.45], Texture::Speckle { amplitude: 0.1 }),
                    _ => ([0.35, 0.30, 0.25, 0.20], Texture::Flat),
                };
                let spectrum = base
                    .iter()
                    .map(|v| v * (1.0 + 0.05 * rng.random_range(-1.0..1.0)))
                    .collect();
                regions.push(RegionSpec {
                    row: gr * CELL,
                    col: gc * CELL,
                    rows: CELL,
                    cols: CELL,
                    class_id,
                    spectrum,
                    texture,
                    noise_std: 0.01,
                });
            }
        }
        Self {
            width: GRID * CELL,
            height: GRID * CELL,
            bands: 4,
            seed,
            regions,
        }
    }

    /// Parses the line-oriented `key = value` format. Recognized keys:
    /// `width`, `height`, `bands`, `seed`, `preset` (only `acceptance`) and
    /// repeated `region` lines of the form
    /// `row col rows cols class=<id> spectrum=<v,v,..> texture=<t> noise=<std>`
    /// where `<t>` is `flat`, `speckle:<amp>` or `checkerboard:<period>:<amp>`.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut width, mut height, mut bands, mut seed) = (None, None, None, 0u64);
        let mut preset = None;
        let mut regions = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Spec(format!("line {}: expected key = value", ln + 1)))?;
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Spec(format!("line {}: bad integer {v:?}", ln + 1)))
            };
            match key {
                "width" => width = Some(int(value)?),
                "height" => height = Some(int(value)?),
                "bands" => bands = Some(int(value)?),
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| Error::Spec(format!("line {}: bad seed {value:?}", ln + 1)))?
                }
                "preset" => preset = Some(value.to_string()),
                "region" => regions.push(parse_region(value).map_err(|e| match e {
                    Error::Spec(m) => Error::Spec(format!("line {}: {m}", ln + 1)),
                    other => other,
                })?),
                other => return Err(Error::Spec(format!("line {}: unknown key {other:?}", ln + 1))),
            }
        }
        if let Some(p) = preset {
            if p != "acceptance" {
                return Err(Error::Spec(format!("unknown preset {p:?}")));
            }
            if !regions.is_empty() {
                return Err(Error::Spec("preset and explicit regions are exclusive".into()));
            }
            return Ok(Self::acceptance(seed));
        }
        let spec = Self {
            width: width.ok_or_else(|| Error::Spec("missing width".into()))?,
            height: height.ok_or_else(|| Error::Spec("missing height".into()))?,
            bands: bands.ok_or_else(|| Error::Spec("missing bands".into()))?,
            seed,
            regions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Region index of every pixel, or a spec error when the rectangles do not
    /// tile the scene exactly.
    fn coverage(&self) -> Result<Vec<u32>> {
        if self.width == 0 || self.height == 0 || self.bands == 0 {
            return Err(Error::Spec("scene dimensions must be positive".into()));
        }
        let mut owner = vec![u32::MAX; self.width * self.height];
        for (i, reg) in self.regions.iter().enumerate() {
            if reg.rows == 0 || reg.cols == 0 || reg.row + reg.rows > self.height || reg.col + reg.cols > self.width {
                return Err(Error::Spec(format!("region {i} lies outside the scene")));
            }
            for r in reg.row..reg.row + reg.rows {
                for c in reg.col..reg.col + reg.cols {
                    let slot = &mut owner[r * self.width + c];
                    if *slot != u32::MAX {
                        return Err(Error::Spec(format!("regions {} and {i} overlap at ({r}, {c})", *slot)));
                    }
                    *slot = i as u32;
                }
            }
        }
        if let Some(idx) = owner.iter().position(|&o| o == u32::MAX) {
            return Err(Error::Spec(format!(
                "pixel ({}, {}) is not covered by any region",
                idx / self.width,
                idx % self.width
            )));
        }
        Ok(owner)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, reg) in self.regions.iter().enumerate() {
            if reg.spectrum.len() != self.bands {
                return Err(Error::Spec(format!(
                    "region {i} spectrum has {} values for {} bands",
                    reg.spectrum.len(),
                    self.bands
                )));
            }
            if reg.spectrum.iter().any(|v| !v.is_finite()) {
                return Err(Error::Spec(format!("region {i} spectrum is not finite")));
            }
            if !(reg.noise_std >= 0.0) || !reg.noise_std.is_finite() {
                return Err(Error::Spec(format!("region {i} noise std must be >= 0")));
            }
        }
        self.coverage().map(|_| ())
    }
}

fn parse_region(value: &str) -> Result<RegionSpec> {
    let mut tokens = value.split_whitespace();
    let mut geometry = [0usize; 4];
    for g in geometry.iter_mut() {
        let t = tokens
            .next()
            .ok_or_else(|| Error::Spec("region needs row col rows cols".into()))?;
        *g = t.parse().map_err(|_| Error::Spec(format!("bad region coordinate {t:?}")))?;
    }
    let (mut class_id, mut spectrum, mut texture, mut noise_std) = (None, None, Texture::Flat, 0.0);
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::Spec(format!("expected attribute=value, found {t:?}")))?;
        match k {
            "class" => class_id = Some(v.parse().map_err(|_| Error::Spec(format!("bad class {v:?}")))?),
            "spectrum" => {
                spectrum = Some(
                    v.split(',')
                        .map(|x| x.parse::<f64>().map_err(|_| Error::Spec(format!("bad spectrum value {x:?}"))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "texture" => texture = Texture::parse(v)?,
            "noise" => noise_std = v.parse().map_err(|_| Error::Spec(format!("bad noise {v:?}")))?,
            other => return Err(Error::Spec(format!("unknown region attribute {other:?}"))),
        }
    }
    Ok(RegionSpec {
        row: geometry[0],
        col: geometry[1],
        rows: geometry[2],
        cols: geometry[3],
        class_id: class_id.ok_or_else(|| Error::Spec("region without class".into()))?,
        spectrum: spectrum.ok_or_else(|| Error::Spec("region without spectrum".into()))?,
        texture,
        noise_std,
    })
}

/// Renders the scene: `pixel = mean * texture_gain + N(0, noise_std)`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let owner = spec.coverage()?;
    let (w, h, nb) = (spec.width, spec.height, spec.bands);
    let mut values = vec![0f32; w * h * nb];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for reg in &spec.regions {
        let noise = Normal::new(0.0, reg.noise_std).map_err(|e| Error::Spec(e.to_string()))?;
        for r in reg.row..reg.row + reg.rows {
            for c in reg.col..reg.col + reg.cols {
                let gain = match reg.texture {
                    Texture::Flat => 1.0,
                    Texture::Checkerboard { period, amplitude } => {
                        let p = period.max(1);
                        if ((r - reg.row) / p + (c - reg.col) / p) % 2 == 0 {
                            1.0 + amplitude
                        } else {
                            1.0 - amplitude
                        }
                    }
                    Texture::Speckle { amplitude } => 1.0 + amplitude * rng.random_range(-1.0..=1.0),
                };
                for b in 0..nb {
                    let mut v = reg.spectrum[b] * gain;
                    if reg.noise_std > 0.0 {
                        v += noise.sample(&mut rng);
                    }
                    values[(b * h + r) * w + c] = v as f32;
                }
            }
        }
    }
    Ok(Scene {
        raster: MultiBandRaster::new(w, h, nb, values)?,
        truth: LabelMap::from_labels(w, h, owner)?,
        classes: spec.regions.iter().map(|r| r.class_id).collect(),
    })
}

/// `region,class` CSV of the truth classes.
pub fn classes_csv(classes: &[usize]) -> String {
    let mut out = String::from("region,class\n");
    for (i, c) in classes.iter().enumerate() {
        out.push_str(&format!("{i},{c}\n"));
    }
    out
}

/// Parses a `region,class` CSV into a dense per-region class vector.
pub fn parse_classes_csv(text: &str) -> Result<Vec<usize>> {
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (r, c) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("classes line {}: expected region,class", ln + 1)))?;
        let bad = || Error::Format(format!("classes line {}: {line:?}", ln + 1));
        pairs.push((
            r.trim().parse::<usize>().map_err(|_| bad())?,
            c.trim().parse::<usize>().map_err(|_| bad())?,
        ));
    }
    let n = pairs.len();
    let mut out = vec![None; n];
    for (r, c) in pairs {
        let slot = out
            .get_mut(r)
            .ok_or_else(|| Error::Format(format!("region id {r} out of range for {n} rows")))?;
        if slot.replace(c).is_some() {
            return Err(Error::Format(format!("duplicate region id {r}")));
        }
    }
    Ok(out.into_iter().map(|c| c.expect("ids are dense")).collect())
}
