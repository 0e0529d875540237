//! Versioned JSON persistence. Bounds are not stored; they are rebuilt from
//! the stored distances on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Hierarchy, HierarchyConfig, Layer, PivotEntry, ABSENT};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::{Metric, MetricKind};
use crate::stats::StageStats;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    metric: String,
    config: HierarchyConfig,
    radii: Vec<f64>,
    episode: u64,
    points: Dataset,
    top_pairs: Vec<Vec<f64>>,
    layers: Vec<Vec<EntrySnap>>,
}

#[derive(Serialize, Deserialize)]
struct EntrySnap {
    id: u32,
    joined_at: u64,
    neighbors: Vec<(u32, f64)>,
    parents: Vec<(u32, f64)>,
    children: Vec<(u32, f64)>,
    coarse: Vec<u32>,
}

impl Hierarchy {
    pub fn to_json(&self) -> Result<String> {
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            metric: self.metric.name().to_string(),
            config: self.config.clone(),
            radii: self.radii.clone(),
            episode: self.episode,
            points: self.points.clone(),
            top_pairs: self.top_pairs.clone(),
            layers: self
                .layers
                .iter()
                .map(|layer| {
                    layer
                        .entries
                        .iter()
                        .map(|e| EntrySnap {
                            id: e.id,
                            joined_at: e.joined_at,
                            neighbors: e.neighbors.clone(),
                            parents: e.parents.clone(),
                            children: e.children.clone(),
                            coarse: e.coarse_nbrs.clone(),
                        })
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string(&snap)?)
    }

    /// Restores a hierarchy and audits it. The metric defaults to the one
    /// named in the snapshot.
    pub fn from_json(text: &str, metric: Option<Arc<dyn Metric>>) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        let metric = match metric {
            Some(m) => m,
            None => MetricKind::from_str(&snap.metric)?.shared(),
        };
        if metric.name() != snap.metric {
            return Err(Error::Snapshot(format!(
                "snapshot uses {}, got {}",
                snap.metric,
                metric.name()
            )));
        }
        if snap.layers.len() != snap.radii.len() || snap.radii.is_empty() {
            return Err(Error::Snapshot("layer count does not match radii".into()));
        }
        super::config::check_radii(&snap.radii).map_err(|e| Error::Snapshot(e.to_string()))?;
        let n = snap.points.len();
        let depth = snap.radii.len();
        let mut layers = Vec::with_capacity(depth);
        for (l, entries) in snap.layers.into_iter().enumerate() {
            let mut layer = Layer::new(snap.radii[l]);
            layer.slot = vec![ABSENT; n];
            for e in entries {
                let ids = std::iter::once(e.id)
                    .chain(e.neighbors.iter().map(|x| x.0))
                    .chain(e.parents.iter().map(|x| x.0))
                    .chain(e.children.iter().map(|x| x.0))
                    .chain(e.coarse.iter().copied());
                for id in ids {
                    if id as usize >= n {
                        return Err(Error::Snapshot(format!("id {id} out of range")));
                    }
                }
                if layer.slot[e.id as usize] != ABSENT {
                    return Err(Error::Snapshot(format!("id {} repeated in layer {l}", e.id)));
                }
                layer.slot[e.id as usize] = layer.entries.len() as u32;
                let mut entry = PivotEntry::new(e.id, e.joined_at, depth);
                entry.neighbors = e.neighbors;
                entry.neighbors.sort_unstable_by_key(|x| x.0);
                entry.parents = e.parents;
                entry.children = e.children;
                entry.coarse_nbrs = e.coarse;
                layer.entries.push(entry);
            }
            layers.push(layer);
        }
        let mut h = Hierarchy {
            config: snap.config,
            radii: snap.radii,
            points: snap.points,
            layers,
            top_pairs: snap.top_pairs,
            metric,
            stats: Arc::new(StageStats::new()),
            episode: snap.episode,
        };
        h.check_references()?;
        h.recompute_bounds();
        let report = h.validate_with_cap(0);
        if let Some(v) = report.violations.first() {
            return Err(Error::Snapshot(format!(
                "{} violations, first: {v}",
                report.violations.len()
            )));
        }
        Ok(h)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        w.write_all(self.to_json()?.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, metric: Option<Arc<dyn Metric>>) -> Result<Self> {
        let path = path.as_ref();
        let mut text = String::new();
        std::io::Read::read_to_string(
            &mut BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?),
            &mut text,
        )
        .map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, metric)
    }

    /// Parents, children and links must name pivots of the right layers
    /// before anything walks them.
    fn check_references(&self) -> Result<()> {
        let depth = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            for e in &layer.entries {
                let ok = e.neighbors.iter().all(|x| layer.contains(x.0))
                    && e.parents.iter().all(|x| l > 0 && self.layers[l - 1].contains(x.0))
                    && e.children.iter().all(|x| l + 1 < depth && self.layers[l + 1].contains(x.0))
                    && e.coarse_nbrs.iter().all(|&x| l > 0 && self.layers[l - 1].contains(x));
                if !ok {
                    return Err(Error::Snapshot(format!("dangling reference at {} in layer {l}", e.id)));
                }
            }
        }
        let m = self.layers[0].len();
        if self.top_pairs.len() != m || self.top_pairs.iter().any(|r| r.len() != m) {
            return Err(Error::Snapshot("top pair table has the wrong shape".into()));
        }
        Ok(())
    }

    /// Rebuilds every reach and μ bound bottom-up from stored child
    /// distances and link lengths. No metric calls.
    pub fn recompute_bounds(&mut self) {
        let depth = self.layers.len();
        for l in (0..depth).rev() {
            let (upper, lower) = self.layers.split_at_mut(l + 1);
            let layer = &mut upper[l];
            let below = lower.first();
            for e in &mut layer.entries {
                e.reach = vec![f64::NEG_INFINITY; depth];
                e.mu = vec![f64::NEG_INFINITY; depth];
                e.reach[l] = 0.0;
                e.mu[l] = e.longest_link().unwrap_or(f64::NEG_INFINITY);
                if let Some(below) = below {
                    for &(c, d) in &e.children {
                        let ce = below.entry(c);
                        for t in l + 1..depth {
                            e.reach[t] = e.reach[t].max(d + ce.reach[t]);
                            e.mu[t] = e.mu[t].max(d + ce.mu[t]);
                        }
                    }
                }
            }
        }
    }
}
