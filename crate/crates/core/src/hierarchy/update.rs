//! Insertion: localization, promotion, link invalidation and bound upkeep.

use std::collections::BTreeSet;

use rustc_hash::{FxHashMap, FxHashSet};

use super::locate::{locate, Episode, LayerPlan};
use super::{Hierarchy, InsertReport, PivotEntry, SearchResult, ABSENT};
use crate::error::{Error, Result};
use crate::stats::Stage;

#[derive(Clone, Copy)]
pub(crate) enum Bound {
    Mu,
    Reach,
}

impl Hierarchy {
    /// RNG neighbors `q` would have if it were inserted. Read-only.
    pub fn search(&self, q: &[f64]) -> Result<SearchResult> {
        let mut ep = Episode::new(self, q);
        let located = locate(self, &mut ep);
        let stats = ep.metric.finish();
        let plans = located?;
        Ok(SearchResult {
            neighbors: plans.last().map(|p| p.nbrs.iter().map(|e| e.0).collect()).unwrap_or_default(),
            survivors: plans.iter().filter_map(|p| p.survivors).collect(),
            stats,
        })
    }

    /// Adds `q`, keeping every layer's GRNG exact. Returns the new id.
    pub fn insert(&mut self, q: &[f64]) -> Result<InsertReport> {
        if q.len() != self.dim() || q.is_empty() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: q.len() });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let mut ep = Episode::new(self, q);
        if self.is_empty() {
            let id = self.points.push(q)?;
            let all: Vec<usize> = (0..self.layers.len()).collect();
            self.attach(id, &all, &[]);
            self.top_pairs.push(vec![0.0]);
            self.finish_bounds(id, &all, &[]);
            self.episode += 1;
            return Ok(InsertReport {
                id,
                joined: all,
                added: Vec::new(),
                removed: Vec::new(),
                removed_coarse: 0,
                survivors: Vec::new(),
                stats: ep.metric.finish(),
            });
        }
        let plans = match locate(self, &mut ep) {
            Ok(p) => p,
            Err(e) => {
                ep.metric.finish();
                return Err(e);
            }
        };

        let bottom = self.bottom();
        let mut joined = Vec::new();
        let mut join = false;
        for l in 0..=bottom {
            join = join || l == bottom || plans[l + 1].covering.is_empty();
            if join {
                joined.push(l);
            }
        }

        let mut removed = Vec::new();
        let mut removed_coarse = 0;
        for &l in &joined {
            let cut = self.threatened_links(&mut ep, l);
            for &(a, b) in &cut {
                self.unlink(l, a, b);
            }
            if l == bottom {
                removed = cut.into_iter().collect();
            } else {
                removed_coarse += cut.len();
            }
        }

        let id = self.points.push(q)?;
        if joined[0] == 0 {
            let top = &self.layers[0];
            let row: Vec<f64> = top.entries.iter().map(|e| ep.dq[&e.id]).collect();
            for (r, &d) in self.top_pairs.iter_mut().zip(&row) {
                r.push(d);
            }
            let mut own = row;
            own.push(0.0);
            self.top_pairs.push(own);
        }
        self.attach(id, &joined, &plans);
        self.finish_bounds(id, &joined, &plans);
        self.episode += 1;

        Ok(InsertReport {
            id,
            added: plans[bottom].nbrs.iter().map(|&(y, _)| (y, id)).collect(),
            joined,
            removed,
            removed_coarse,
            survivors: plans.iter().filter_map(|p| p.survivors).collect(),
            stats: ep.metric.finish(),
        })
    }

    /// Creates the new point's entries, links, parents and children.
    fn attach(&mut self, id: u32, joined: &[usize], plans: &[LayerPlan]) {
        let layers = self.layers.len();
        for layer in &mut self.layers {
            layer.slot.push(ABSENT);
        }
        let first = joined[0];
        for &l in joined {
            let mut e = PivotEntry::new(id, self.episode, layers);
            if let Some(plan) = plans.get(l) {
                e.neighbors = plan.nbrs.clone();
                e.coarse_nbrs = plan.coarse.clone();
                if l > 0 {
                    e.parents = plan.covering.clone();
                }
            }
            if l > first {
                e.parents.push((id, 0.0));
            }
            let layer = &mut self.layers[l];
            layer.slot[id as usize] = layer.entries.len() as u32;
            layer.entries.push(e);
            for i in 0..layer.entry(id).neighbors.len() {
                let (y, d) = layer.entry(id).neighbors[i];
                layer.entry_mut(y).add_link(id, d);
            }
            if l > 0 {
                let parents = self.layers[l].entry(id).parents.clone();
                for (p, d) in parents {
                    self.layers[l - 1].entry_mut(p).children.push((id, d));
                }
            }
        }
    }

    /// Raises reach and μ bounds for the new entries and for neighbors whose
    /// longest link grew.
    fn finish_bounds(&mut self, id: u32, joined: &[usize], plans: &[LayerPlan]) {
        for &t in joined {
            self.raise(Bound::Reach, t, t, vec![(id, 0.0)]);
            let mut seeds: Vec<(u32, f64)> = Vec::new();
            if let Some(plan) = plans.get(t) {
                seeds.extend(plan.nbrs.iter().copied());
                if let Some(m) = plan.nbrs.iter().map(|e| e.1).reduce(f64::max) {
                    seeds.push((id, m));
                }
            }
            if !seeds.is_empty() {
                self.raise(Bound::Mu, t, t, seeds);
            }
        }
    }

    /// Lifts `bound[t]` of the given layer-`start` entries to at least the
    /// paired values, then pushes `value + d(parent, child)` up the parents.
    pub(crate) fn raise(&mut self, kind: Bound, t: usize, start: usize, seeds: Vec<(u32, f64)>) {
        let mut cur: FxHashMap<u32, f64> = FxHashMap::default();
        for (id, v) in seeds {
            let e = cur.entry(id).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
        let mut l = start;
        loop {
            let mut next: FxHashMap<u32, f64> = FxHashMap::default();
            let layer = &mut self.layers[l];
            for (id, v) in cur {
                let e = layer.entry_mut(id);
                let slot = match kind {
                    Bound::Mu => &mut e.mu[t],
                    Bound::Reach => &mut e.reach[t],
                };
                if *slot >= v {
                    continue;
                }
                *slot = v;
                for &(p, d) in &e.parents {
                    let n = next.entry(p).or_insert(f64::NEG_INFINITY);
                    *n = n.max(v + d);
                }
            }
            if l == 0 || next.is_empty() {
                break;
            }
            l -= 1;
            cur = next;
        }
    }

    fn unlink(&mut self, l: usize, a: u32, b: u32) {
        let layer = &mut self.layers[l];
        layer.entry_mut(a).remove_link(b);
        layer.entry_mut(b).remove_link(a);
    }

    /// S7: existing layer-`f` links whose lune holds the new point. Domains
    /// are skipped when the query is beyond their μ bound.
    fn threatened_links(&self, ep: &mut Episode, f: usize) -> BTreeSet<(u32, u32)> {
        let shrink = 3.0 * self.radii[f];
        let fine = &self.layers[f];
        let mut cut = BTreeSet::new();
        let mut check = |ep: &mut Episode, x: u32, dqx: f64| {
            for &(y, len) in &fine.entry(x).neighbors {
                let thr = len - shrink;
                if dqx < thr && ep.dq(self, y, f, Stage::S7) < thr {
                    cut.insert((x.min(y), x.max(y)));
                }
            }
        };
        if !self.config.stages.s7 {
            for e in &fine.entries {
                let dqx = ep.dq(self, e.id, f, Stage::S7);
                check(ep, e.id, dqx);
            }
            return cut;
        }
        let mut stack: Vec<(usize, u32)> = self.layers[0].entries.iter().map(|e| (0, e.id)).collect();
        let mut visited: FxHashSet<(usize, u32)> = stack.iter().copied().collect();
        let mut checked: FxHashSet<u32> = FxHashSet::default();
        while let Some((l, p)) = stack.pop() {
            let pe = self.layers[l].entry(p);
            let dqp = ep.dq(self, p, f, Stage::S7);
            if dqp >= pe.mu[f] - shrink {
                continue;
            }
            if checked.insert(p) {
                check(ep, p, dqp);
            }
            if l == f {
                continue;
            }
            let below = &self.layers[l + 1];
            for &(c, dpc) in &pe.children {
                if visited.contains(&(l + 1, c)) || dqp - dpc >= below.entry(c).mu[f] - shrink {
                    continue;
                }
                visited.insert((l + 1, c));
                stack.push((l + 1, c));
            }
        }
        cut
    }
}
