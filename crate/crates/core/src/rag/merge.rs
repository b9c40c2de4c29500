use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::raster::MultiBandRaster;
use crate::segmentation::LabelMap;

use super::lbp::lbp_code_map;
use super::stats::{compute_region_stats, RegionStats};
use super::{edge_cost, fusion_value, HeterogeneityWeights};

pub const DEFAULT_SCALE: f64 = 20.0;

/// An adjacency between two live regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Number of pixel edges the two regions share.
    pub shared: u64,
    /// Heterogeneity `h` of merging the pair.
    pub cost: f64,
    /// `h` scaled by the merged area; the merge priority.
    pub fusion: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    fusion: f64,
    a: u32,
    b: u32,
    version_a: u32,
    version_b: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fusion
            .total_cmp(&other.fusion)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.version_a.cmp(&other.version_a))
            .then(self.version_b.cmp(&other.version_b))
    }
}

/// Region adjacency graph over a label map. Node ids are the labels of the
/// initial partition; a merged region keeps the smaller of the two ids.
#[derive(Debug, Clone)]
pub struct Rag {
    width: usize,
    height: usize,
    initial: Vec<u32>,
    weights: HeterogeneityWeights,
    nodes: Vec<Option<RegionStats>>,
    edges: Vec<BTreeMap<u32, Edge>>,
    owner: Vec<u32>,
    version: Vec<u32>,
    queue: BinaryHeap<Reverse<Candidate>>,
    alive: usize,
}

impl Rag {
    /// Builds the graph; LBP histograms are taken on `texture_band`.
    pub fn build(
        labels: &LabelMap,
        raster: &MultiBandRaster,
        texture_band: usize,
        weights: HeterogeneityWeights,
    ) -> Result<Self> {
        weights.validate()?;
        let (w, h) = (labels.width(), labels.height());
        if raster.width() != w || raster.height() != h {
            return Err(Error::Argument("label map and raster dimensions differ".into()));
        }
        let codes = lbp_code_map(&raster.band_grid(texture_band)?);
        let stats = compute_region_stats(raster, labels, &codes);
        let n = stats.len();

        let mut shared: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); n];
        let mut touch = |a: u32, b: u32| {
            if a != b {
                *shared[a as usize].entry(b).or_insert(0) += 1;
                *shared[b as usize].entry(a).or_insert(0) += 1;
            }
        };
        for r in 0..h {
            for c in 0..w {
                let a = labels.get(r, c);
                if c + 1 < w {
                    touch(a, labels.get(r, c + 1));
                }
                if r + 1 < h {
                    touch(a, labels.get(r + 1, c));
                }
            }
        }

        let mut rag = Self {
            width: w,
            height: h,
            initial: labels.labels().to_vec(),
            weights,
            nodes: stats.into_iter().map(Some).collect(),
            edges: vec![BTreeMap::new(); n],
            owner: (0..n as u32).collect(),
            version: vec![0; n],
            queue: BinaryHeap::new(),
            alive: n,
        };
        for (a, neighbors) in shared.iter().enumerate() {
            for (&b, &count) in neighbors {
                if (a as u32) < b {
                    let edge = rag.evaluate(a as u32, b, count);
                    rag.edges[a].insert(b, edge);
                    rag.edges[b as usize].insert(a as u32, edge);
                    rag.push(a as u32, b, edge.fusion);
                }
            }
        }
        Ok(rag)
    }

    fn evaluate(&self, a: u32, b: u32, shared: u64) -> Edge {
        let sa = self.nodes[a as usize].as_ref().expect("live node");
        let sb = self.nodes[b as usize].as_ref().expect("live node");
        let cost = edge_cost(sa, sb, shared, &self.weights);
        Edge {
            shared,
            cost,
            fusion: fusion_value(sa, sb, cost),
        }
    }

    fn push(&mut self, a: u32, b: u32, fusion: f64) {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.queue.push(Reverse(Candidate {
            fusion,
            a,
            b,
            version_a: self.version[a as usize],
            version_b: self.version[b as usize],
        }));
    }

    pub fn region_count(&self) -> usize {
        self.alive
    }

    pub fn weights(&self) -> &HeterogeneityWeights {
        &self.weights
    }

    pub fn stats(&self, id: u32) -> Option<&RegionStats> {
        self.nodes.get(id as usize).and_then(Option::as_ref)
    }

    /// Ids of the live regions in increasing order.
    pub fn live_regions(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|_| i as u32))
    }

    /// All edges as `(a, b, edge)` with `a < b`.
    pub fn edges(&self) -> Vec<(u32, u32, Edge)> {
        let mut out = Vec::new();
        for (a, m) in self.edges.iter().enumerate() {
            for (&b, e) in m.range(a as u32 + 1..) {
                out.push((a as u32, b, *e));
            }
        }
        out
    }

    /// The globally cheapest edge `(a, b, fusion)`, ties broken by `(a, b)`.
    pub fn cheapest(&mut self) -> Option<(u32, u32, f64)> {
        while let Some(Reverse(c)) = self.queue.peek().copied() {
            let valid = self.nodes[c.a as usize].is_some()
                && self.nodes[c.b as usize].is_some()
                && self.version[c.a as usize] == c.version_a
                && self.version[c.b as usize] == c.version_b;
            if valid {
                return Some((c.a, c.b, c.fusion));
            }
            self.queue.pop();
        }
        None
    }

    /// Merges `b` into `a` and refreshes the costs of every edge touching
    /// the merged region.
    pub fn merge(&mut self, a: u32, b: u32) -> Result<()> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let shared = self
            .edges
            .get(a as usize)
            .and_then(|m| m.get(&b))
            .ok_or_else(|| Error::Argument(format!("regions {a} and {b} are not adjacent")))?
            .shared;
        let sb = self.nodes[b as usize].take().expect("adjacent nodes are live");
        let sa = self.nodes[a as usize].take().expect("adjacent nodes are live");
        self.nodes[a as usize] = Some(sa.combine(&sb, shared));
        self.owner[b as usize] = a;
        self.version[a as usize] += 1;
        self.alive -= 1;

        let from_b = std::mem::take(&mut self.edges[b as usize]);
        self.edges[a as usize].remove(&b);
        for (n, e) in from_b {
            if n == a {
                continue;
            }
            self.edges[n as usize].remove(&b);
            let entry = self.edges[a as usize].entry(n).or_insert(Edge {
                shared: 0,
                cost: 0.0,
                fusion: 0.0,
            });
            entry.shared += e.shared;
        }
        let neighbors: Vec<(u32, u64)> = self.edges[a as usize].iter().map(|(&n, e)| (n, e.shared)).collect();
        for (n, shared) in neighbors {
            let edge = self.evaluate(a, n, shared);
            self.edges[a as usize].insert(n, edge);
            self.edges[n as usize].insert(a, edge);
            self.push(a, n, edge.fusion);
        }
        Ok(())
    }

    /// Performs one greedy merge if the cheapest fusion value is below
    /// `scale^2`. Returns the merged pair.
    pub fn step(&mut self, scale: f64) -> Option<(u32, u32)> {
        let threshold = scale * scale;
        let (a, b, fusion) = self.cheapest()?;
        if fusion < threshold {
            self.merge(a, b).expect("queued edges are adjacent");
            Some((a, b))
        } else {
            None
        }
    }

    pub fn merge_until(&mut self, scale: f64) {
        while self.alive > 1 && self.step(scale).is_some() {}
    }

    fn resolve(&self, mut id: u32) -> u32 {
        while self.owner[id as usize] != id {
            id = self.owner[id as usize];
        }
        id
    }

    /// Current node id of every pixel.
    pub fn node_labels(&self) -> Vec<u32> {
        let mut cache: Vec<Option<u32>> = vec![None; self.owner.len()];
        self.initial
            .iter()
            .map(|&l| *cache[l as usize].get_or_insert_with(|| self.resolve(l)))
            .collect()
    }

    /// Current partition, densely relabeled.
    pub fn label_map(&self) -> LabelMap {
        LabelMap::relabel(self.width, self.height, &self.node_labels())
    }
}

/// Greedy merging: repeatedly merges the pair with the smallest fusion value
/// while it is below `scale^2`.
pub fn merge_regions(
    labels: &LabelMap,
    raster: &MultiBandRaster,
    weights: &HeterogeneityWeights,
    scale: f64,
    texture_band: usize,
) -> Result<LabelMap> {
    if !(scale >= 0.0) {
        return Err(Error::Argument(format!("scale must be non-negative, got {scale}")));
    }
    let mut rag = Rag::build(labels, raster, texture_band, *weights)?;
    rag.merge_until(scale);
    Ok(rag.label_map())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks() -> (MultiBandRaster, LabelMap) {
        // four 3x3 quadrants; the two top ones share a spectrum
        let raster = MultiBandRaster::from_fn(6, 6, 2, |b, r, c| match (r < 3, c < 3) {
            (true, _) => [0.4, 0.8][b],
            (false, true) => [0.9, 0.1][b],
            (false, false) => [0.5, 0.5][b],
        })
        .unwrap();
        let labels: Vec<u32> = (0..36)
            .map(|i| {
                let (r, c) = (i / 6, i % 6);
                (r / 3 * 2 + c / 3) as u32
            })
            .collect();
        (raster, LabelMap::from_labels(6, 6, labels).unwrap())
    }

    #[test]
    fn zero_scale_is_identity() {
        let (raster, labels) = blocks();
        let out = merge_regions(&labels, &raster, &HeterogeneityWeights::default(), 0.0, 1).unwrap();
        assert_eq!(out, labels);
    }

    #[test]
    fn infinite_scale_gives_one_region() {
        let (raster, labels) = blocks();
        let out = merge_regions(&labels, &raster, &HeterogeneityWeights::default(), f64::INFINITY, 1).unwrap();
        assert_eq!(out.region_count(), 1);
    }

    #[test]
    fn identical_spectra_merge_first() {
        let (raster, labels) = blocks();
        let mut rag = Rag::build(&labels, &raster, 1, HeterogeneityWeights::default()).unwrap();
        assert_eq!(rag.edges().len(), 4);
        let (a, b, _) = rag.cheapest().unwrap();
        assert_eq!((a, b), (0, 1));
        rag.merge(a, b).unwrap();
        assert_eq!(rag.region_count(), 3);
        let edges = rag.edges();
        assert_eq!(edges.len(), 3);
        let shared: Vec<u64> = edges.iter().map(|e| e.2.shared).collect();
        assert_eq!(shared, vec![3, 3, 3]);
    }

    #[test]
    fn merging_non_adjacent_regions_fails() {
        let (raster, labels) = blocks();
        let mut rag = Rag::build(&labels, &raster, 1, HeterogeneityWeights::default()).unwrap();
        assert!(rag.merge(0, 3).is_err());
    }
}
