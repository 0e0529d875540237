//! Distance-computation accounting keyed by (layer, stage).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Which part of the algorithm asked for a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    Oracle,
    ParentScan,
    Setup,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::S1,
        Stage::S2,
        Stage::S3,
        Stage::S4,
        Stage::S5,
        Stage::S6,
        Stage::S7,
        Stage::Oracle,
        Stage::ParentScan,
        Stage::Setup,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::S1 => "S1",
            Stage::S2 => "S2",
            Stage::S3 => "S3",
            Stage::S4 => "S4",
            Stage::S5 => "S5",
            Stage::S6 => "S6",
            Stage::S7 => "S7",
            Stage::Oracle => "oracle",
            Stage::ParentScan => "parent-scan",
            Stage::Setup => "setup",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A plain table of counts, e.g. the delta of one episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    cells: BTreeMap<(usize, Stage), u64>,
}

impl StageCounts {
    pub fn add(&mut self, layer: usize, stage: Stage, n: u64) {
        if n > 0 {
            *self.cells.entry((layer, stage)).or_insert(0) += n;
        }
    }

    pub fn get(&self, layer: usize, stage: Stage) -> u64 {
        self.cells.get(&(layer, stage)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    /// Sum over all layers for one stage.
    pub fn stage_total(&self, stage: Stage) -> u64 {
        self.cells
            .iter()
            .filter(|((_, s), _)| *s == stage)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Stage, u64)> + '_ {
        self.cells.iter().map(|(&(l, s), &n)| (l, s, n))
    }

    pub fn merge(&mut self, other: &StageCounts) {
        for (l, s, n) in other.iter() {
            self.add(l, s, n);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Shared, thread-safe accumulator of distance counts.
///
/// Episodes record locally and flush once when they finish, so concurrent
/// searches never lose updates. `evaluations` is bumped on every inner
/// metric call and is the reference the cell table must reconcile with.
#[derive(Debug, Default)]
pub struct StageStats {
    table: Mutex<StageCounts>,
    evaluations: AtomicU64,
    episodes: AtomicU64,
}

impl StageStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> StageCounts {
        self.table.lock().expect("stats lock poisoned").clone()
    }

    pub fn total(&self) -> u64 {
        self.table.lock().expect("stats lock poisoned").total()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::SeqCst)
    }

    pub fn episodes(&self) -> u64 {
        self.episodes.load(Ordering::SeqCst)
    }

    pub(crate) fn record_evaluation(&self) {
        self.evaluations.fetch_add(1, Ordering::SeqCst);
    }

    pub(crate) fn flush(&self, delta: &StageCounts) {
        self.table.lock().expect("stats lock poisoned").merge(delta);
        self.episodes.fetch_add(1, Ordering::SeqCst);
    }

    /// Records evaluations made outside a [`CountedMetric`](crate::counted::CountedMetric),
    /// such as diameter sampling.
    pub(crate) fn flush_external(&self, delta: &StageCounts) {
        self.evaluations.fetch_add(delta.total(), Ordering::SeqCst);
        self.flush(delta);
    }

    pub fn reset(&self) {
        *self.table.lock().expect("stats lock poisoned") = StageCounts::default();
        self.evaluations.store(0, Ordering::SeqCst);
        self.episodes.store(0, Ordering::SeqCst);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn concurrent_flushes_lose_nothing() {
        let stats = Arc::new(StageStats::new());
        let handles: Vec<_> = (0..8)
            .map(|t| {
                let stats = Arc::clone(&stats);
                std::thread::spawn(move || {
                    for _ in 0..500 {
                        let mut delta = StageCounts::default();
                        delta.add(t % 3, Stage::S4, 2);
                        stats.record_evaluation();
                        stats.record_evaluation();
                        stats.flush(&delta);
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(stats.total(), 8000);
        assert_eq!(stats.evaluations(), 8000);
        assert_eq!(stats.episodes(), 4000);
    }
}
