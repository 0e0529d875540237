//! Multi-layer pivot hierarchy whose layers hold exact GRNGs and whose
//! bottom layer is the RNG of every inserted point.
//!
//! Layer 0 is the coarsest; the last layer has radius 0 and contains every
//! point. Membership is nested: a pivot of layer `l` is also a pivot of every
//! finer layer, and is its own child there at distance 0.

mod config;
mod locate;
mod snapshot;
mod update;
mod validate;

use std::sync::Arc;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::metric::Metric;
use crate::stats::{StageCounts, StageStats};

pub use config::{
    estimate_diameter, HierarchyConfig, RadiiSchedule, StageToggles, DEFAULT_DECAY,
    DEFAULT_K_BUDGET,
};
pub use snapshot::SNAPSHOT_VERSION;
pub use validate::{ValidationReport, Violation, ViolationKind, DEFAULT_AUDIT_CAP};

pub(crate) const ABSENT: u32 = u32::MAX;

/// One pivot's record in one layer.
#[derive(Debug, Clone)]
pub struct PivotEntry {
    pub(crate) id: u32,
    /// Insert episode that created the entry.
    pub(crate) joined_at: u64,
    /// Sorted by id.
    pub(crate) neighbors: Vec<(u32, f64)>,
    /// Covering pivots one layer up, with distances.
    pub(crate) parents: Vec<(u32, f64)>,
    /// Covered pivots one layer down, with distances.
    pub(crate) children: Vec<(u32, f64)>,
    /// Sorted coarse-layer pivots that survived the virtual-pivot test when
    /// this entry was inserted.
    pub(crate) coarse_nbrs: Vec<u32>,
    /// `mu[t]`, `t >= own layer`: upper bound on `μ̄(y) + d(self, y)` over
    /// layer-`t` descendants `y`, where `μ̄(y)` is y's longest link.
    pub(crate) mu: Vec<f64>,
    /// `reach[t]`, `t >= own layer`: upper bound on the distance to any
    /// layer-`t` descendant. Exact for the next layer down.
    pub(crate) reach: Vec<f64>,
}

impl PivotEntry {
    fn new(id: u32, joined_at: u64, layers: usize) -> Self {
        PivotEntry {
            id,
            joined_at,
            neighbors: Vec::new(),
            parents: Vec::new(),
            children: Vec::new(),
            coarse_nbrs: Vec::new(),
            mu: vec![f64::NEG_INFINITY; layers],
            reach: vec![f64::NEG_INFINITY; layers],
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn joined_at(&self) -> u64 {
        self.joined_at
    }

    pub fn neighbors(&self) -> &[(u32, f64)] {
        &self.neighbors
    }

    pub fn parents(&self) -> &[(u32, f64)] {
        &self.parents
    }

    pub fn children(&self) -> &[(u32, f64)] {
        &self.children
    }

    pub fn coarse_neighbors(&self) -> &[u32] {
        &self.coarse_nbrs
    }

    /// Largest link length, or `None` for an isolated pivot.
    pub fn longest_link(&self) -> Option<f64> {
        self.neighbors.iter().map(|&(_, d)| d).reduce(f64::max)
    }

    /// Stored largest child distance of this entry in layer `layer`
    /// (`None` in the bottom layer).
    pub fn delta_max(&self, layer: usize) -> Option<f64> {
        self.reach.get(layer + 1).copied().filter(|v| v.is_finite())
    }

    /// Stored bound on this pivot's own longest link.
    pub fn bar_mu_max(&self, layer: usize) -> f64 {
        self.mu[layer]
    }

    /// Stored bound on `μ̄(y) + d(self, y)` over layer-`t` descendants.
    pub fn mu_max(&self, t: usize) -> f64 {
        self.mu[t]
    }

    /// Stored bound on the distance to layer-`t` descendants.
    pub fn reach(&self, t: usize) -> f64 {
        self.reach[t]
    }

    /// Neighbor lists are kept sorted by id.
    #[inline]
    pub(crate) fn link_len(&self, other: u32) -> Option<f64> {
        self.neighbors
            .binary_search_by_key(&other, |e| e.0)
            .ok()
            .map(|i| self.neighbors[i].1)
    }

    pub(crate) fn add_link(&mut self, other: u32, d: f64) {
        if let Err(i) = self.neighbors.binary_search_by_key(&other, |e| e.0) {
            self.neighbors.insert(i, (other, d));
        }
    }

    pub(crate) fn remove_link(&mut self, other: u32) {
        if let Ok(i) = self.neighbors.binary_search_by_key(&other, |e| e.0) {
            self.neighbors.remove(i);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub(crate) radius: f64,
    pub(crate) entries: Vec<PivotEntry>,
    /// Point id to entry index, `ABSENT` when the point is not a pivot here.
    pub(crate) slot: Vec<u32>,
}

impl Layer {
    fn new(radius: f64) -> Self {
        Layer {
            radius,
            entries: Vec::new(),
            slot: Vec::new(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.slot.get(id as usize).is_some_and(|&s| s != ABSENT)
    }

    #[inline]
    pub fn get(&self, id: u32) -> Option<&PivotEntry> {
        match self.slot.get(id as usize) {
            Some(&s) if s != ABSENT => Some(&self.entries[s as usize]),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn entry(&self, id: u32) -> &PivotEntry {
        &self.entries[self.slot[id as usize] as usize]
    }

    #[inline]
    pub(crate) fn entry_mut(&mut self, id: u32) -> &mut PivotEntry {
        let s = self.slot[id as usize] as usize;
        &mut self.entries[s]
    }

    pub fn entries(&self) -> &[PivotEntry] {
        &self.entries
    }

    /// Pivot ids in insertion order.
    pub fn members(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().map(|e| e.neighbors.len()).sum::<usize>() / 2
    }
}

/// Survivors after each of stages 1 to 6 while locating one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Survivors {
    pub layer: usize,
    pub counts: [usize; 6],
}

impl Survivors {
    pub fn is_monotone(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] >= w[1])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InsertReport {
    pub id: u32,
    /// Layers the point joined, coarsest first; always ends with the bottom.
    pub joined: Vec<usize>,
    /// Bottom-layer links created, as sorted `(u, v)` pairs with `u < v`.
    pub added: Vec<(u32, u32)>,
    /// Bottom-layer links removed because the new point lies in their lune.
    pub removed: Vec<(u32, u32)>,
    /// Links removed in coarser layers.
    pub removed_coarse: usize,
    pub survivors: Vec<Survivors>,
    pub stats: StageCounts,
}

impl InsertReport {
    /// Coarsest layer reached, if the point became a pivot above the bottom.
    pub fn promoted_to(&self) -> Option<usize> {
        let bottom = *self.joined.last()?;
        self.joined.first().copied().filter(|&l| l < bottom)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Sorted ids of the query's RNG neighbors.
    pub neighbors: Vec<u32>,
    pub survivors: Vec<Survivors>,
    pub stats: StageCounts,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildReport {
    /// `order[i]` is the dataset id inserted i-th, which is also the
    /// hierarchy id it received.
    pub order: Vec<u32>,
    /// Distance evaluations per insert, in insertion order.
    pub per_insert: Vec<u64>,
    /// Setup plus every insert.
    pub totals: StageCounts,
    pub promotions: usize,
}

pub struct Hierarchy {
    pub(crate) config: HierarchyConfig,
    pub(crate) radii: Vec<f64>,
    pub(crate) points: Dataset,
    pub(crate) layers: Vec<Layer>,
    /// Full distance table among top-layer pivots, indexed by entry slot.
    pub(crate) top_pairs: Vec<Vec<f64>>,
    pub(crate) metric: Arc<dyn Metric>,
    pub(crate) stats: Arc<StageStats>,
    pub(crate) episode: u64,
}

impl std::fmt::Debug for Hierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hierarchy")
            .field("radii", &self.radii)
            .field("points", &self.points.len())
            .field("pivots", &self.layers.iter().map(Layer::len).collect::<Vec<_>>())
            .finish()
    }
}

impl Hierarchy {
    /// Empty hierarchy. The radii must resolve without data, i.e. be
    /// explicit or carry a top radius.
    pub fn new(config: HierarchyConfig, metric: Arc<dyn Metric>, dim: usize) -> Result<Self> {
        let radii = config.resolve_radii(None, metric.as_ref(), &mut StageCounts::default())?;
        Ok(Self::with_radii(config, radii, metric, dim))
    }

    pub(crate) fn with_radii(
        config: HierarchyConfig,
        radii: Vec<f64>,
        metric: Arc<dyn Metric>,
        dim: usize,
    ) -> Self {
        Hierarchy {
            config,
            layers: radii.iter().map(|&r| Layer::new(r)).collect(),
            radii,
            points: Dataset::new(dim),
            top_pairs: Vec::new(),
            metric,
            stats: Arc::new(StageStats::new()),
            episode: 0,
        }
    }

    /// Inserts the dataset in id order, so hierarchy ids equal dataset ids.
    pub fn build(data: &Dataset, config: HierarchyConfig, metric: Arc<dyn Metric>) -> Result<(Self, BuildReport)> {
        let order: Vec<u32> = (0..data.len() as u32).collect();
        Self::build_ordered(data, &order, config, metric)
    }

    /// Inserts `data` in the given order. Use [`BuildReport::order`] to map
    /// hierarchy ids back to dataset ids.
    pub fn build_ordered(
        data: &Dataset,
        order: &[u32],
        config: HierarchyConfig,
        metric: Arc<dyn Metric>,
    ) -> Result<(Self, BuildReport)> {
        let mut seen = vec![false; data.len()];
        for &i in order {
            match seen.get_mut(i as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::InvalidInput(format!("bad insertion order entry {i}"))),
            }
        }
        let mut setup = StageCounts::default();
        let radii = config.resolve_radii(Some(data), metric.as_ref(), &mut setup)?;
        let mut h = Self::with_radii(config, radii, metric, data.dim());
        if !setup.is_empty() {
            h.stats.flush_external(&setup);
        }
        let mut report = BuildReport {
            order: order.to_vec(),
            per_insert: Vec::with_capacity(order.len()),
            totals: setup,
            promotions: 0,
        };
        for &i in order {
            let r = h.insert(data.point(i))?;
            report.per_insert.push(r.stats.total());
            report.totals.merge(&r.stats);
            if r.promoted_to().is_some() {
                report.promotions += 1;
            }
        }
        Ok((h, report))
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    /// Changes which pruning stages run from now on.
    pub fn set_stages(&mut self, stages: StageToggles) {
        self.config.stages = stages;
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn bottom(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &Dataset {
        &self.points
    }

    pub fn metric(&self) -> &Arc<dyn Metric> {
        &self.metric
    }

    pub fn stats(&self) -> &Arc<StageStats> {
        &self.stats
    }

    /// Layer `l`'s links as a graph over all point ids.
    pub fn layer_graph(&self, l: usize) -> UndirectedGraph {
        let layer = &self.layers[l];
        UndirectedGraph::from_edges(
            self.points.len(),
            layer
                .entries
                .iter()
                .flat_map(|e| e.neighbors.iter().map(move |&(y, _)| (e.id, y))),
        )
    }

    /// The RNG of every inserted point.
    pub fn rng(&self) -> UndirectedGraph {
        self.layer_graph(self.bottom())
    }

    /// Entry of `id` in layer `l`.
    pub fn entry(&self, l: usize, id: u32) -> Option<&PivotEntry> {
        self.layers.get(l)?.get(id)
    }

    /// Overwrites a stored δmax so that the audit has something to find.
    /// Test support only.
    #[doc(hidden)]
    pub fn corrupt_delta_max(&mut self, l: usize, id: u32, value: f64) -> bool {
        if l + 1 >= self.layers.len() || !self.layers[l].contains(id) {
            return false;
        }
        self.layers[l].entry_mut(id).reach[l + 1] = value;
        true
    }
}
