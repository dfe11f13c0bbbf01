//! Evaluation metrics for projected clouds.
//!
//! - average silhouette over labeled points (Euclidean distances);
//! - total variation estimated on a k-nearest-neighbor graph: the minimum,
//!   over base points, of the sum of squared shortest-path distances to all
//!   other points, and its ratio to a baseline cloud;
//! - mean squared displacement between paired clouds;
//! - a single-pass radius-neighbor outlier filter.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::math;

pub const DEFAULT_GRAPH_NEIGHBORS: usize = 20;
pub const DEFAULT_FILTER_RADIUS: f64 = 6.0;
pub const DEFAULT_FILTER_MIN_NEIGHBORS: usize = 25;

/// Mean silhouette `s_i = (b_i - a_i) / max(a_i, b_i)`; members of singleton
/// clusters score 0.
pub fn avg_silhouette(cloud: &PointCloud) -> Result<f64> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::LabelError("cloud carries no labels".into()))?;
    silhouette_scores(cloud, labels).map(|s| s.iter().sum::<f64>() / s.len() as f64)
}

/// Per-point silhouette values.
pub fn silhouette_scores(cloud: &PointCloud, labels: &[i64]) -> Result<Vec<f64>> {
    if labels.len() != cloud.len() {
        return Err(Error::LabelError(alloc::format!(
            "{} labels for {} points",
            labels.len(),
            cloud.len()
        )));
    }
    // Dense cluster ids in label order.
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    if ids.len() < 2 {
        return Err(Error::LabelError(alloc::format!(
            "need at least 2 distinct labels, found {}",
            ids.len()
        )));
    }
    let cluster: Vec<usize> = labels.iter().map(|l| ids[l]).collect();
    let mut sizes = vec![0usize; ids.len()];
    for &c in &cluster {
        sizes[c] += 1;
    }

    let n = cloud.len();
    let mut sums = vec![0.0; ids.len()];
    let scores = (0..n)
        .map(|i| {
            let own = cluster[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            let p = cloud.point(i);
            for j in 0..n {
                if j != i {
                    sums[cluster[j]] += math::sqrt(math::dist_sq(p, cloud.point(j)));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = sums
                .iter()
                .zip(&sizes)
                .enumerate()
                .filter(|(c, _)| *c != own)
                .map(|(_, (s, &m))| s / m as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores)
}

/// Symmetrized k-nearest-neighbor graph with Euclidean edge weights, as
/// adjacency lists sorted by neighbor index. Ties in distance are broken by
/// the smaller index.
pub fn knn_graph(cloud: &PointCloud, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = cloud.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        cand.clear();
        let p = cloud.point(i);
        cand.extend((0..n).filter(|&j| j != i).map(|j| (math::dist_sq(p, cloud.point(j)), j)));
        let k = k.min(cand.len());
        if k == 0 {
            continue;
        }
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, by_dist);
        for &(d2, j) in &cand[..k] {
            let w = math::sqrt(d2);
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
    }
    for list in &mut adj {
        list.sort_by_key(|e| e.0);
        list.dedup_by_key(|e| e.0);
    }
    adj
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance.
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sum of squared shortest-path distances from `source`, abandoned (returns
/// `None`) as soon as it reaches `cutoff`. Vertices are settled in order of
/// distance, so the partial sum only grows.
fn squared_path_sum(adj: &[Vec<(usize, f64)>], source: usize, cutoff: f64, dist: &mut [f64]) -> Option<f64> {
    dist.iter_mut().for_each(|d| *d = f64::INFINITY);
    let mut settled = vec![false; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry(0.0, source));
    let mut total = 0.0;
    while let Some(HeapEntry(d, u)) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        total += d * d;
        if total >= cutoff {
            return None;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapEntry(nd, v));
            }
        }
    }
    Some(total)
}

/// Connected components as vertex lists, each sorted, in order of their
/// smallest vertex.
fn components(adj: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < comp.len() {
            let u = comp[head];
            head += 1;
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Graph-geodesic total variation of a cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicVariation {
    /// `min_j Σ_i g(x_j, x_i)²` over the evaluated component.
    pub value: f64,
    /// Index of a minimizing base point.
    pub base: usize,
    /// Whether the kNN graph was connected. When it was not, only the
    /// largest component (ties: the one with the smallest vertex) is used.
    pub connected: bool,
    pub component_size: usize,
}

pub fn geodesic_variation(cloud: &PointCloud, k: usize) -> Result<GeodesicVariation> {
    if cloud.is_empty() {
        return Err(Error::InvalidCloud("geodesic variation of an empty cloud".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("neighbor count must be positive".into()));
    }
    let adj = knn_graph(cloud, k);
    let comps = components(&adj);
    let connected = comps.len() == 1;
    let largest = comps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let members = &comps[largest];

    let mut dist = vec![f64::INFINITY; cloud.len()];
    let mut best = f64::INFINITY;
    let mut base = members[0];
    for &j in members {
        if let Some(total) = squared_path_sum(&adj, j, best, &mut dist) {
            if total < best {
                best = total;
                base = j;
            }
        }
    }
    Ok(GeodesicVariation {
        value: best,
        base,
        connected,
        component_size: members.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropVariation {
    pub ratio: f64,
    pub variation: GeodesicVariation,
}

/// Geodesic variation of `cloud` divided by `baseline_total`.
pub fn prop_variation(cloud: &PointCloud, baseline_total: f64, k: usize) -> Result<PropVariation> {
    if !(baseline_total > 0.0) || !baseline_total.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!(
            "baseline variation must be positive, got {baseline_total}"
        )));
    }
    let variation = geodesic_variation(cloud, k)?;
    Ok(PropVariation {
        ratio: variation.value / baseline_total,
        variation,
    })
}

/// `(1/n) Σ ‖x_i - x̂_i‖²`.
pub fn mse(original: &PointCloud, projected: &PointCloud) -> Result<f64> {
    if original.len() != projected.len() || original.dim() != projected.dim() {
        return Err(Error::ShapeMismatch {
            expected: (original.len(), original.dim()),
            found: (projected.len(), projected.dim()),
        });
    }
    if original.is_empty() {
        return Err(Error::InvalidCloud("mean squared error of empty clouds".into()));
    }
    let total: f64 = original
        .points()
        .zip(projected.points())
        .map(|(a, b)| math::dist_sq(a, b))
        .sum();
    Ok(total / original.len() as f64)
}

/// Number of other points within `r` of each point.
pub fn neighbor_counts(cloud: &PointCloud, r: f64) -> Vec<usize> {
    let r2 = r * r;
    (0..cloud.len())
        .map(|i| {
            let p = cloud.point(i);
            cloud
                .points()
                .enumerate()
                .filter(|(j, q)| *j != i && math::dist_sq(p, q) <= r2)
                .count()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: PointCloud,
    /// Indices (into the input) of the points kept.
    pub kept_indices: Vec<usize>,
    /// Indices of the points removed, ascending.
    pub removed: Vec<usize>,
}

/// Keeps points with at least `min_neighbors` other points within `r`.
/// Counts are taken once on the input; removal is not iterated.
pub fn outlier_filter(cloud: &PointCloud, r: f64, min_neighbors: usize) -> Result<FilterOutcome> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("radius must be positive, got {r}")));
    }
    let counts = if min_neighbors == 0 {
        vec![0; cloud.len()]
    } else {
        neighbor_counts(cloud, r)
    };
    let (kept_indices, removed): (Vec<usize>, Vec<usize>) =
        (0..cloud.len()).partition(|&i| counts[i] >= min_neighbors);
    Ok(FilterOutcome {
        kept: cloud.select(&kept_indices),
        kept_indices,
        removed,
    })
}

/// Which cloud the variation ratio at each level is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariationMode {
    /// Against the original (embedded) cloud.
    #[default]
    Cumulative,
    /// Against the next-higher level; the first level against the original.
    Stepwise,
}

impl VariationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cumulative => "cumulative",
            Self::Stepwise => "stepwise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub d: usize,
    pub avg_silhouette: Option<f64>,
    pub prop_variation: f64,
    pub mse: f64,
    /// Whether the kNN graph of this level was connected.
    pub graph_connected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub mode: VariationMode,
    pub graph_neighbors: usize,
    /// Variation of the original cloud.
    pub original_variation: f64,
    pub original_connected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricOptions {
    pub graph_neighbors: usize,
    pub mode: VariationMode,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            graph_neighbors: DEFAULT_GRAPH_NEIGHBORS,
            mode: VariationMode::Cumulative,
        }
    }
}

/// Metric rows for a sequence of levels, given in descending `d`.
///
/// Silhouettes are computed when `labels` is given.
pub fn metric_report(
    original: &PointCloud,
    levels: &[(usize, &PointCloud)],
    labels: Option<&[i64]>,
    options: MetricOptions,
) -> Result<MetricReport> {
    if levels.windows(2).any(|w| w[0].0 <= w[1].0) {
        return Err(Error::InvalidArgument("levels must be in strictly descending d".into()));
    }
    let k = options.graph_neighbors;
    let base = geodesic_variation(original, k)?;
    let mut previous = base.value;
    let mut rows = Vec::with_capacity(levels.len());
    for &(d, cloud) in levels {
        let baseline = match options.mode {
            VariationMode::Cumulative => base.value,
            VariationMode::Stepwise => previous,
        };
        let prop = prop_variation(cloud, baseline, k)?;
        previous = prop.variation.value;
        let avg_silhouette = match labels {
            Some(l) => {
                let s = silhouette_scores(cloud, l)?;
                Some(s.iter().sum::<f64>() / s.len() as f64)
            }
            None => None,
        };
        rows.push(MetricRow {
            d,
            avg_silhouette,
            prop_variation: prop.ratio,
            mse: mse(original, cloud)?,
            graph_connected: prop.variation.connected,
        });
    }
    Ok(MetricReport {
        rows,
        mode: options.mode,
        graph_neighbors: k,
        original_variation: base.value,
        original_connected: base.connected,
    })
}
