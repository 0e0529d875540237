//! Instrumented distance evaluation scoped to one insert or search episode.

use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::dataset::DataPoint;
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::stats::{Stage, StageCounts, StageStats};

/// Counts every inner evaluation against a `(layer, stage)` tag and memoizes
/// distances for the lifetime of one episode.
///
/// Query distances are keyed by point id, other pairs by the unordered id
/// pair. With the cache disabled every request is re-evaluated, and the
/// keys seen are still tracked for [`is_known_query`](Self::is_known_query).
pub struct CountedMetric {
    inner: Arc<dyn Metric>,
    stats: Arc<StageStats>,
    cache_enabled: bool,
    query_cache: FxHashMap<u32, f64>,
    pair_cache: FxHashMap<u64, f64>,
    known_query: FxHashSet<u32>,
    known_pair: FxHashSet<u64>,
    delta: StageCounts,
    evaluations: u64,
}

#[inline]
fn pair_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

impl CountedMetric {
    pub fn new(inner: Arc<dyn Metric>, stats: Arc<StageStats>, cache_enabled: bool) -> Self {
        CountedMetric {
            inner,
            stats,
            cache_enabled,
            query_cache: FxHashMap::default(),
            pair_cache: FxHashMap::default(),
            known_query: FxHashSet::default(),
            known_pair: FxHashSet::default(),
            delta: StageCounts::default(),
            evaluations: 0,
        }
    }

    #[inline]
    fn evaluate(&mut self, a: &[f64], b: &[f64], layer: usize, stage: Stage) -> f64 {
        self.stats.record_evaluation();
        self.evaluations += 1;
        self.delta.add(layer, stage, 1);
        self.inner.distance(a, b)
    }

    /// Distance from the episode's query to point `id`.
    #[inline]
    pub fn query(&mut self, id: u32, q: &[f64], x: &[f64], layer: usize, stage: Stage) -> f64 {
        if self.cache_enabled {
            if let Some(&d) = self.query_cache.get(&id) {
                return d;
            }
            let d = self.evaluate(q, x, layer, stage);
            self.query_cache.insert(id, d);
            d
        } else {
            self.known_query.insert(id);
            self.evaluate(q, x, layer, stage)
        }
    }

    /// One counted evaluation with no memo, for callers that keep their own.
    #[inline]
    pub fn eval(&mut self, a: &[f64], b: &[f64], layer: usize, stage: Stage) -> f64 {
        self.evaluate(a, b, layer, stage)
    }

    /// Distance between two stored points.
    #[inline]
    pub fn pair(
        &mut self,
        a_id: u32,
        a: &[f64],
        b_id: u32,
        b: &[f64],
        layer: usize,
        stage: Stage,
    ) -> f64 {
        let key = pair_key(a_id, b_id);
        if self.cache_enabled {
            if let Some(&d) = self.pair_cache.get(&key) {
                return d;
            }
            let d = self.evaluate(a, b, layer, stage);
            self.pair_cache.insert(key, d);
            d
        } else {
            self.known_pair.insert(key);
            self.evaluate(a, b, layer, stage)
        }
    }

    /// Checked distance between two data points, memoized by id pair.
    pub fn distance(&mut self, a: &DataPoint, b: &DataPoint, layer: usize, stage: Stage) -> Result<f64> {
        if a.coords.len() != b.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: a.coords.len(),
                got: b.coords.len(),
            });
        }
        Ok(self.pair(a.id, a.coords, b.id, b.coords, layer, stage))
    }

    pub fn is_known_query(&self, id: u32) -> bool {
        self.query_cache.contains_key(&id) || self.known_query.contains(&id)
    }

    /// Cached pair distance, without evaluating.
    #[inline]
    pub fn peek_pair(&self, a: u32, b: u32) -> Option<f64> {
        self.pair_cache.get(&pair_key(a, b)).copied()
    }

    pub fn is_known_pair(&self, a: u32, b: u32) -> bool {
        let key = pair_key(a, b);
        self.pair_cache.contains_key(&key) || self.known_pair.contains(&key)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn delta(&self) -> &StageCounts {
        &self.delta
    }

    /// Ends the episode: flushes counts into the shared table and clears
    /// every memo. Returns the episode's counts.
    pub fn finish(&mut self) -> StageCounts {
        let delta = std::mem::take(&mut self.delta);
        self.stats.flush(&delta);
        self.query_cache.clear();
        self.pair_cache.clear();
        self.known_query.clear();
        self.known_pair.clear();
        self.evaluations = 0;
        delta
    }
}
