//! Initial over-segmentation: a raster-scan partition driven by spectral
//! angles, followed by absorption of undersized regions.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pnm;
use crate::raster::MultiBandRaster;

/// Per-pixel region ids forming a dense partition into 4-connected regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    regions: usize,
}

impl LabelMap {
    /// Wraps labels after checking the partition, density and connectivity
    /// invariants.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::Argument(format!(
                "label buffer of length {} does not match {width}x{height}",
                labels.len()
            )));
        }
        let regions = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let map = Self {
            width,
            height,
            labels,
            regions,
        };
        map.check_invariants()?;
        Ok(map)
    }

    /// Relabels arbitrary region ids densely, in order of first appearance in
    /// row-major order. Connectivity is the caller's responsibility.
    pub fn relabel(width: usize, height: usize, raw: &[u32]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = remap.len() as u32;
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Self {
            width,
            height,
            labels,
            regions: remap.len(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn region_count(&self) -> usize {
        self.regions
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Pixel indices (row-major) of every region, each list sorted.
    pub fn region_pixels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.regions];
        for (idx, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(idx);
        }
        out
    }

    pub fn region_areas(&self) -> Vec<usize> {
        let mut out = vec![0; self.regions];
        for &l in &self.labels {
            out[l as usize] += 1;
        }
        out
    }

    /// Verifies total partition, dense labels and 4-connectivity.
    pub fn check_invariants(&self) -> Result<()> {
        let (w, h) = (self.width, self.height);
        if self.labels.len() != w * h {
            return Err(Error::Data("label buffer has wrong length".into()));
        }
        let areas = self.region_areas_checked()?;
        if let Some(missing) = areas.iter().position(|&a| a == 0) {
            return Err(Error::Data(format!("labels are not dense: id {missing} unused")));
        }
        let mut seen = vec![false; w * h];
        let mut visited_regions = vec![false; self.regions];
        let mut queue = VecDeque::new();
        for start in 0..w * h {
            if seen[start] {
                continue;
            }
            let label = self.labels[start];
            if visited_regions[label as usize] {
                return Err(Error::Data(format!("region {label} is not 4-connected")));
            }
            visited_regions[label as usize] = true;
            seen[start] = true;
            queue.push_back(start);
            while let Some(idx) = queue.pop_front() {
                let (r, c) = (idx / w, idx % w);
                for_each_neighbor(w, h, r, c, |n| {
                    if !seen[n] && self.labels[n] == label {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                });
            }
        }
        Ok(())
    }

    fn region_areas_checked(&self) -> Result<Vec<usize>> {
        let mut out = vec![0; self.regions];
        for &l in &self.labels {
            let slot = out
                .get_mut(l as usize)
                .ok_or_else(|| Error::Data(format!("label {l} out of range")))?;
            *slot += 1;
        }
        Ok(out)
    }

    /// Writes the map as a 16-bit binary PGM.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.regions > u16::MAX as usize + 1 {
            return Err(Error::Data(format!(
                "{} regions do not fit in a 16-bit PGM",
                self.regions
            )));
        }
        let samples: Vec<u16> = self.labels.iter().map(|&l| l as u16).collect();
        pnm::write_pgm16(path, self.width, self.height, &samples)
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let (w, h, samples) = pnm::read_pgm(path)?;
        Self::from_labels(w, h, samples.into_iter().map(u32::from).collect())
    }
}

#[inline]
pub(crate) fn for_each_neighbor(w: usize, h: usize, r: usize, c: usize, mut f: impl FnMut(usize)) {
    if r > 0 {
        f((r - 1) * w + c);
    }
    if c > 0 {
        f(r * w + c - 1);
    }
    if c + 1 < w {
        f(r * w + c + 1);
    }
    if r + 1 < h {
        f((r + 1) * w + c);
    }
}

/// Spectral angle `acos(<a,b> / (|a| |b|))` in radians.
pub fn sam_angle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "spectral vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    angle_between(a, b).ok_or_else(|| Error::Degenerate("zero spectral vector".into()))
}

/// Angle between two equally long vectors, `None` if either is zero.
#[inline]
pub(crate) fn angle_between(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb).sqrt()).clamp(-1.0, 1.0).acos())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Union-find over region ids, union by size with path halving.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    pub(crate) fn new() -> Self {
        Self {
            parent: Vec::new(),
            size: Vec::new(),
        }
    }

    pub(crate) fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        id
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns `(root, absorbed)`.
    pub(crate) fn union(&mut self, a: u32, b: u32) -> (u32, u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return (ra, rb);
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        (ra, rb)
    }
}

pub const DEFAULT_INIT_THRESHOLD: f64 = 0.08;
pub const DEFAULT_MIN_SIZE: usize = 16;

/// Raster-scan partition. Each pixel is compared with the running mean
/// spectrum of the region on its left and the region above it; it joins the
/// closer one when that angle is within `init_threshold` (left wins ties),
/// and when both qualify the two regions are united. Otherwise the pixel
/// opens a new region. All-zero pixels join the Euclidean-nearest candidate.
pub fn fast_scan_partition(raster: &MultiBandRaster, init_threshold: f64) -> Result<LabelMap> {
    if !(init_threshold > 0.0) {
        return Err(Error::Argument(format!(
            "init_threshold must be positive, got {init_threshold}"
        )));
    }
    let (w, h, nb) = (raster.width(), raster.height(), raster.bands());
    let mut sets = DisjointSet::new();
    // per-set spectral sums, indexed by set id; only roots are meaningful
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut raw = vec![0u32; w * h];
    let mut v = vec![0.0; nb];
    let mut mean = vec![0.0; nb];

    for r in 0..h {
        for c in 0..w {
            let idx = r * w + c;
            raster.spectrum_into(idx, &mut v);
            let left = (c > 0).then(|| sets.find(raw[idx - 1]));
            let up = (r > 0).then(|| sets.find(raw[idx - w]));
            let mut candidates: [Option<u32>; 2] = [left, up];
            if left.is_some() && left == up {
                candidates[1] = None;
            }

            let zero_pixel = v.iter().all(|&x| x == 0.0);
            let target = if zero_pixel {
                let mut best: Option<(f64, u32)> = None;
                for cand in candidates.iter().flatten() {
                    let s = &sums[*cand as usize * nb..(*cand as usize + 1) * nb];
                    let n = counts[*cand as usize] as f64;
                    for (m, x) in mean.iter_mut().zip(s) {
                        *m = x / n;
                    }
                    let d = squared_distance(&v, &mean);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, *cand));
                    }
                }
                best.map(|(_, id)| id)
            } else {
                let mut qualifying: [Option<(f64, u32)>; 2] = [None, None];
                for (slot, cand) in qualifying.iter_mut().zip(candidates) {
                    if let Some(id) = cand {
                        let s = &sums[id as usize * nb..(id as usize + 1) * nb];
                        if let Some(a) = angle_between(&v, s) {
                            if a <= init_threshold {
                                *slot = Some((a, id));
                            }
                        }
                    }
                }
                match qualifying {
                    [Some((_, l)), Some((_, u))] => {
                        let (root, absorbed) = sets.union(l, u);
                        merge_sums(&mut sums, &mut counts, nb, root, absorbed);
                        Some(root)
                    }
                    [Some((_, l)), None] => Some(l),
                    [None, Some((_, u))] => Some(u),
                    [None, None] => None,
                }
            };

            let id = match target {
                Some(id) => id,
                None => {
                    let id = sets.make_set();
                    sums.extend(std::iter::repeat_n(0.0, nb));
                    counts.push(0);
                    id
                }
            };
            let s = &mut sums[id as usize * nb..(id as usize + 1) * nb];
            for (acc, x) in s.iter_mut().zip(&v) {
                *acc += x;
            }
            counts[id as usize] += 1;
            raw[idx] = id;
        }
    }

    for l in raw.iter_mut() {
        *l = sets.find(*l);
    }
    Ok(LabelMap::relabel(w, h, &raw))
}

fn merge_sums(sums: &mut [f64], counts: &mut [u64], nb: usize, root: u32, absorbed: u32) {
    if root == absorbed {
        return;
    }
    let (root, absorbed) = (root as usize, absorbed as usize);
    for b in 0..nb {
        sums[root * nb + b] += sums[absorbed * nb + b];
    }
    counts[root] += counts[absorbed];
}

/// Absorbs every region smaller than `min_size` pixels into the 4-adjacent
/// neighbor with the closest mean spectrum, smallest regions first, until no
/// undersized region remains or only one region is left.
pub fn adaptive_merge_small(labels: &LabelMap, raster: &MultiBandRaster, min_size: usize) -> Result<LabelMap> {
    let (w, h, nb) = (labels.width(), labels.height(), raster.bands());
    if raster.width() != w || raster.height() != h {
        return Err(Error::Argument("label map and raster dimensions differ".into()));
    }
    let n_regions = labels.region_count();
    let mut area = labels.region_areas();
    let mut sums = vec![0.0; n_regions * nb];
    let mut v = vec![0.0; nb];
    for (idx, &l) in labels.labels().iter().enumerate() {
        raster.spectrum_into(idx, &mut v);
        for (acc, x) in sums[l as usize * nb..(l as usize + 1) * nb].iter_mut().zip(&v) {
            *acc += x;
        }
    }
    let mut adjacency: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n_regions];
    for r in 0..h {
        for c in 0..w {
            let a = labels.get(r, c);
            if c + 1 < w {
                let b = labels.get(r, c + 1);
                if a != b {
                    adjacency[a as usize].insert(b);
                    adjacency[b as usize].insert(a);
                }
            }
            if r + 1 < h {
                let b = labels.get(r + 1, c);
                if a != b {
                    adjacency[a as usize].insert(b);
                    adjacency[b as usize].insert(a);
                }
            }
        }
    }

    let mut owner: Vec<u32> = (0..n_regions as u32).collect();
    let mut alive = n_regions;
    let mut heap: BinaryHeap<Reverse<(usize, u32)>> = (0..n_regions as u32)
        .filter(|&id| area[id as usize] < min_size)
        .map(|id| Reverse((area[id as usize], id)))
        .collect();
    let mut mean_a = vec![0.0; nb];
    let mut mean_b = vec![0.0; nb];

    while let Some(Reverse((a, small))) = heap.pop() {
        if alive <= 1 {
            break;
        }
        let s = small as usize;
        if owner[s] != small || area[s] != a {
            continue;
        }
        let target = {
            for (m, x) in mean_a.iter_mut().zip(&sums[s * nb..(s + 1) * nb]) {
                *m = x / area[s] as f64;
            }
            let mut best: Option<((u8, f64), u32)> = None;
            for &n in &adjacency[s] {
                let nu = n as usize;
                for (m, x) in mean_b.iter_mut().zip(&sums[nu * nb..(nu + 1) * nb]) {
                    *m = x / area[nu] as f64;
                }
                let key = match angle_between(&mean_a, &mean_b) {
                    Some(angle) => (0u8, angle),
                    None => (1u8, squared_distance(&mean_a, &mean_b)),
                };
                if best.is_none_or(|(bk, _)| key < bk) {
                    best = Some((key, n));
                }
            }
            match best {
                Some((_, t)) => t,
                None => continue,
            }
        };
        let t = target as usize;
        area[t] += area[s];
        area[s] = 0;
        for b in 0..nb {
            sums[t * nb + b] += sums[s * nb + b];
        }
        owner[s] = target;
        let neighbors = std::mem::take(&mut adjacency[s]);
        for n in neighbors {
            if n == target {
                continue;
            }
            adjacency[n as usize].remove(&small);
            adjacency[n as usize].insert(target);
            adjacency[t].insert(n);
        }
        adjacency[t].remove(&small);
        alive -= 1;
        if area[t] < min_size {
            heap.push(Reverse((area[t], target)));
        }
    }

    let resolve = |mut id: u32| {
        while owner[id as usize] != id {
            id = owner[id as usize];
        }
        id
    };
    let raw: Vec<u32> = labels.labels().iter().map(|&l| resolve(l)).collect();
    Ok(LabelMap::relabel(w, h, &raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn raster(w: usize, h: usize, bands: usize, f: impl Fn(usize, usize, usize) -> f32) -> MultiBandRaster {
        MultiBandRaster::from_fn(w, h, bands, f).unwrap()
    }

    #[test]
    fn sam_examples() {
        assert!(sam_angle(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().abs() < 1e-7);
        assert!((sam_angle(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((sam_angle(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!(matches!(sam_angle(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Degenerate(_))));
        assert!(matches!(sam_angle(&[1.0], &[1.0, 0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn constant_image_is_one_region() {
        let r = raster(7, 5, 3, |b, _, _| 0.1 + b as f32);
        let l = fast_scan_partition(&r, 0.01).unwrap();
        assert_eq!(l.region_count(), 1);
    }

    #[test]
    fn orthogonal_halves_split_at_boundary() {
        let r = raster(4, 4, 2, |b, _, c| if (c < 2) == (b == 0) { 1.0 } else { 0.0 });
        let l = fast_scan_partition(&r, 0.1).unwrap();
        assert_eq!(l.region_count(), 2);
        for row in 0..4 {
            assert_eq!(l.get(row, 0), 0);
            assert_eq!(l.get(row, 1), 0);
            assert_eq!(l.get(row, 2), 1);
            assert_eq!(l.get(row, 3), 1);
        }
    }

    #[test]
    fn threshold_pi_gives_one_region() {
        let r = raster(6, 6, 3, |b, row, c| ((b * 7 + row * 3 + c * 5) % 11) as f32);
        assert_eq!(fast_scan_partition(&r, PI).unwrap().region_count(), 1);
    }

    #[test]
    fn non_positive_threshold_rejected() {
        let r = raster(2, 2, 1, |_, _, _| 1.0);
        assert!(fast_scan_partition(&r, 0.0).is_err());
    }

    #[test]
    fn both_candidates_qualifying_are_united() {
        // a U shape: the bottom row bridges two columns that started apart
        let r = raster(3, 2, 2, |b, row, c| match (row, c) {
            (0, 1) => [0.0, 1.0][b],
            _ => [1.0, 0.0][b],
        });
        let l = fast_scan_partition(&r, 0.1).unwrap();
        assert_eq!(l.region_count(), 2);
        assert_eq!(l.get(0, 0), l.get(0, 2));
        l.check_invariants().unwrap();
    }

    #[test]
    fn isolated_pixel_goes_to_spectrally_closer_neighbor() {
        // left column spectrum (1,0), right two columns (0,1); centre pixel leans right
        let r = raster(3, 3, 2, |b, row, c| {
            if (row, c) == (1, 1) {
                [0.3, 1.0][b]
            } else if c == 0 {
                [1.0, 0.0][b]
            } else {
                [0.0, 1.0][b]
            }
        });
        let init = fast_scan_partition(&r, 0.05).unwrap();
        assert_eq!(init.region_count(), 3);
        let merged = adaptive_merge_small(&init, &r, 2).unwrap();
        assert_eq!(merged.region_count(), 2);
        assert_eq!(merged.get(1, 1), merged.get(1, 2));
        assert_ne!(merged.get(1, 1), merged.get(1, 0));
    }

    #[test]
    fn min_size_one_is_identity() {
        let r = raster(6, 5, 2, |b, row, c| ((b + row * c) % 3) as f32 + 0.5);
        let l = fast_scan_partition(&r, 0.05).unwrap();
        assert_eq!(adaptive_merge_small(&l, &r, 1).unwrap(), l);
    }

    #[test]
    fn invariant_checker_rejects_bad_maps() {
        assert!(LabelMap::from_labels(3, 1, vec![0, 1, 0]).is_err());
        assert!(LabelMap::from_labels(2, 1, vec![0, 2]).is_err());
        assert!(LabelMap::from_labels(2, 1, vec![1, 0]).is_ok());
    }

    proptest! {
        #[test]
        fn sam_symmetric_and_scale_invariant(
            a in proptest::collection::vec(0.01f64..10.0, 4),
            b in proptest::collection::vec(0.01f64..10.0, 4),
            s in 0.1f64..100.0,
        ) {
            let ab = sam_angle(&a, &b).unwrap();
            prop_assert_eq!(ab, sam_angle(&b, &a).unwrap());
            prop_assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&ab));
            let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
            prop_assert!(sam_angle(&a, &scaled).unwrap() < 1e-6);
        }

        #[test]
        fn partitions_are_valid(
            vals in proptest::collection::vec(0u8..4, 64),
            thr in 0.01f64..1.5,
            min_size in 1usize..12,
        ) {
            let r = raster(8, 8, 3, |b, row, c| (vals[row * 8 + c] as usize * (b + 1) % 5) as f32);
            let l = fast_scan_partition(&r, thr).unwrap();
            l.check_invariants().unwrap();
            let m = adaptive_merge_small(&l, &r, min_size).unwrap();
            m.check_invariants().unwrap();
            if m.region_count() > 1 {
                prop_assert!(m.region_areas().iter().all(|&a| a >= min_size));
            }
        }
    }
}
