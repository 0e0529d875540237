//! Read-only localization of a new point's neighbors in every layer.
//! Shared by search and insert.

use rustc_hash::{FxHashMap, FxHashSet};

use super::{Hierarchy, Survivors};
use crate::counted::CountedMetric;
use crate::error::{Error, Result};
use crate::stats::Stage;

/// Per-episode distance state: distances from the query, and a list of the
/// ids they were computed for.
pub(crate) struct Episode<'q> {
    pub q: &'q [f64],
    pub metric: CountedMetric,
    pub dq: FxHashMap<u32, f64>,
    pub known: Vec<u32>,
}

/// Fine points with a parent among `ids`: the candidate set a stage leaves
/// behind, in the same unit as the later stages.
fn covered(coarse: &super::Layer, ids: &[u32]) -> usize {
    let mut seen = FxHashSet::default();
    for &p in ids {
        seen.extend(coarse.entry(p).children.iter().map(|c| c.0));
    }
    seen.len()
}

/// What localization found in one layer.
#[derive(Debug, Default, Clone)]
pub(crate) struct LayerPlan {
    /// GRNG neighbors of the query in this layer, sorted by id.
    pub nbrs: Vec<(u32, f64)>,
    /// Coarse pivots that passed the virtual-pivot test, sorted.
    pub coarse: Vec<u32>,
    /// Coarse pivots whose domain holds the query's domain in this layer.
    pub covering: Vec<(u32, f64)>,
    pub survivors: Option<Survivors>,
}

impl<'q> Episode<'q> {
    pub fn new(h: &Hierarchy, q: &'q [f64]) -> Self {
        Episode {
            q,
            metric: CountedMetric::new(h.metric.clone(), h.stats.clone(), h.config.cache),
            dq: FxHashMap::with_capacity_and_hasher(1024, Default::default()),
            known: Vec::with_capacity(1024),
        }
    }

    #[inline]
    pub fn dq(&mut self, h: &Hierarchy, id: u32, layer: usize, stage: Stage) -> f64 {
        if let Some(&d) = self.dq.get(&id) {
            return d;
        }
        let d = self.metric.eval(self.q, h.points.point(id), layer, stage);
        self.dq.insert(id, d);
        self.known.push(id);
        d
    }

    /// Distance between stored points when it is available for free.
    #[inline]
    pub fn peek_pd(&self, h: &Hierarchy, a: u32, b: u32, layer: usize) -> Option<f64> {
        if a == b {
            return Some(0.0);
        }
        let top = &h.layers[0];
        if top.contains(a) && top.contains(b) {
            return Some(h.top_pairs[top.slot[a as usize] as usize][top.slot[b as usize] as usize]);
        }
        if let Some(e) = h.layers[layer].get(a) {
            if let Some(d) = e.link_len(b) {
                return Some(d);
            }
            if let Some(&(_, d)) = e.parents.iter().find(|p| p.0 == b) {
                return Some(d);
            }
        }
        if let Some(e) = h.layers[layer].get(b) {
            if let Some(&(_, d)) = e.parents.iter().find(|p| p.0 == a) {
                return Some(d);
            }
        }
        self.metric.peek_pair(a, b)
    }

    #[inline]
    pub fn pd(&mut self, h: &Hierarchy, a: u32, b: u32, layer: usize, stage: Stage) -> f64 {
        match self.peek_pd(h, a, b, layer) {
            Some(d) => d,
            None => self
                .metric
                .pair(a, h.points.point(a), b, h.points.point(b), layer, stage),
        }
    }

    /// Known query distances of layer-`l` members, nearest first.
    fn known_sorted(&self, h: &Hierarchy, l: usize) -> Vec<(f64, u32)> {
        let layer = &h.layers[l];
        let mut v: Vec<(f64, u32)> = self
            .known
            .iter()
            .filter(|&&id| layer.contains(id))
            .map(|&id| (self.dq[&id], id))
            .collect();
        v.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    }

    fn duplicate(&self) -> Option<u32> {
        self.known.iter().copied().find(|id| self.dq[id] == 0.0)
    }
}

/// Neighbors of the query in every layer, coarsest first.
pub(crate) fn locate(h: &Hierarchy, ep: &mut Episode) -> Result<Vec<LayerPlan>> {
    if h.is_empty() {
        return Err(Error::EmptyHierarchy);
    }
    if ep.q.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: ep.q.len() });
    }
    let mut plans = vec![locate_top(h, ep)];
    for f in 1..h.layers.len() {
        let plan = locate_fine(h, ep, f, &plans[f - 1]);
        plans.push(plan);
    }
    if let Some(existing) = ep.duplicate() {
        return Err(Error::Duplicate { existing });
    }
    Ok(plans)
}

/// Top layer: every pivot is measured and the pair table settles the rest.
fn locate_top(h: &Hierarchy, ep: &mut Episode) -> LayerPlan {
    let top = &h.layers[0];
    let rho = top.radius;
    let mut order: Vec<(f64, u32)> = top
        .entries
        .iter()
        .map(|e| (ep.dq(h, e.id, 0, Stage::ParentScan), e.id))
        .collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut nbrs = Vec::new();
    for &(dj, j) in &order {
        let t = dj - 3.0 * rho;
        let sj = top.slot[j as usize] as usize;
        let blocked = order
            .iter()
            .take_while(|&&(dk, _)| dk < t)
            .any(|&(_, k)| k != j && h.top_pairs[top.slot[k as usize] as usize][sj] < t);
        if !blocked {
            nbrs.push((j, dj));
        }
    }
    nbrs.sort_unstable_by_key(|e| e.0);
    LayerPlan { nbrs, ..Default::default() }
}

fn locate_fine(h: &Hierarchy, ep: &mut Episode, f: usize, up: &LayerPlan) -> LayerPlan {
    let c = f - 1;
    let rc = h.radii[c];
    let rho = h.radii[f];
    let toggles = h.config.stages;
    let coarse = &h.layers[c];
    let fine = &h.layers[f];

    let covering: Vec<(u32, f64)> = up
        .nbrs
        .iter()
        .copied()
        .filter(|&(_, d)| d <= rc - rho)
        .collect();

    // S1: coarse candidates shared by the GRNG neighborhoods of every covering pivot
    let candidates: Vec<u32> = if toggles.s1 {
        let mut cand: Vec<u32> = up.nbrs.iter().map(|e| e.0).collect();
        for &(p, _) in &covering {
            let pe = coarse.entry(p);
            cand.retain(|&j| j == p || pe.link_len(j).is_some());
        }
        cand
    } else {
        let ids = coarse.members();
        for &id in &ids {
            ep.dq(h, id, f, Stage::S1);
        }
        ids
    };
    let n1 = covered(coarse, &candidates);

    // S2: Q as a virtual pivot of the fine radius against the coarse layer
    let mut virt: Vec<u32> = if toggles.s2 {
        let blockers = ep.known_sorted(h, c);
        let mut out = Vec::with_capacity(candidates.len());
        for &j in &candidates {
            let dj = ep.dq[&j];
            let tq = dj - (rc + 2.0 * rho);
            let tj = dj - (2.0 * rc + rho);
            let mut blocked = false;
            if tq > 0.0 && tj > 0.0 {
                for &(dk, k) in &blockers {
                    if dk >= tq {
                        break;
                    }
                    if k == j || (dk - dj).abs() >= tj {
                        continue;
                    }
                    if ep.pd(h, k, j, c, Stage::S2) < tj {
                        blocked = true;
                        break;
                    }
                }
            }
            if !blocked {
                out.push(j);
            }
        }
        out
    } else {
        candidates
    };
    virt.sort_unstable();
    let n2 = covered(coarse, &virt);

    // S3: children of surviving coarse pivots, filtered by parent and
    // mirror-image membership
    let items: Vec<u32> = if toggles.s3 {
        let mut seen = FxHashSet::default();
        let mut items = Vec::new();
        for &p in &virt {
            for &(x, _) in &coarse.entry(p).children {
                if !seen.insert(x) {
                    continue;
                }
                let xe = fine.entry(x);
                if xe.parents.iter().any(|(pp, _)| virt.binary_search(pp).is_err()) {
                    continue;
                }
                let mirrored = covering.iter().all(|&(pi, _)| {
                    pi == x
                        || coarse.entry(pi).joined_at >= xe.joined_at
                        || xe.coarse_nbrs.binary_search(&pi).is_ok()
                });
                if mirrored {
                    items.push(x);
                }
            }
        }
        items.sort_unstable();
        items
    } else {
        fine.members()
    };
    // Nearest-looking children first; a child whose lower bound already
    // lets a measured link block it is dropped unmeasured.
    let items: Vec<u32> = if toggles.s3 {
        let mut order: Vec<(f64, u32)> = items
            .into_iter()
            .map(|x| {
                let lb = fine.entry(x)
                    .parents
                    .iter()
                    .map(|&(p, d)| ep.dq[&p] - d)
                    .fold(0.0, f64::max);
                (lb, x)
            })
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut kept = Vec::with_capacity(order.len());
        for (lb, x) in order {
            let t = lb - 3.0 * rho;
            let blocked = t > 0.0
                && fine.entry(x).neighbors.iter().any(|&(y, len)| {
                    len < t && ep.dq.get(&y).is_some_and(|&dy| dy < t)
                });
            if !blocked {
                ep.dq(h, x, f, Stage::S3);
                kept.push(x);
            }
        }
        kept
    } else {
        items
    };
    let n3 = items.len();

    let mut ranked: Vec<(f64, u32)> = items.iter().map(|&x| (ep.dq(h, x, f, Stage::S3), x)).collect();
    ranked.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut near_coarse: Vec<(f64, u32)> = up.nbrs.iter().map(|&(id, d)| (d, id)).collect();
    near_coarse.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut counts = [n1, n2, n3, 0, 0, 0];
    let mut nbrs = Vec::new();
    let mut pending = Vec::new();
    for &x in &items {
        let d = ep.dq[&x];
        let t = d - 3.0 * rho;
        if t <= 0.0 {
            nbrs.push((x, d));
            continue;
        }
        if toggles.s4 && blocked_by_coarse(h, ep, f, &near_coarse, x, d, t) {
            continue;
        }
        counts[3] += 1;
        if toggles.s5 && blocked_nearby(h, ep, f, &ranked, x, d, t) {
            continue;
        }
        counts[4] += 1;
        pending.push((x, d, t));
    }
    counts[3] += nbrs.len();
    counts[4] += nbrs.len();

    // S6: one range query around Q serves every remaining candidate
    if let Some(tmax) = pending.iter().map(|p| p.2).reduce(f64::max) {
        let ball = ball_around_query(h, ep, f, tmax);
        for (x, d, t) in pending {
            let mut blocked = false;
            for &(dk, k) in &ball {
                if dk >= t {
                    break;
                }
                if k != x && (dk - d).abs() < t && ep.pd(h, k, x, f, Stage::S6) < t {
                    blocked = true;
                    break;
                }
            }
            if !blocked {
                nbrs.push((x, d));
            }
        }
    }
    counts[5] = nbrs.len();
    nbrs.sort_unstable_by_key(|e| e.0);
    LayerPlan {
        nbrs,
        coarse: virt,
        covering,
        survivors: Some(Survivors { layer: f, counts }),
    }
}

/// S4: pivots inside the lune of `(Q, x)` among x's measured links, then
/// among Q's coarse GRNG neighbors (which are fine pivots too).
fn blocked_by_coarse(
    h: &Hierarchy,
    ep: &mut Episode,
    f: usize,
    near: &[(f64, u32)],
    x: u32,
    d: f64,
    t: f64,
) -> bool {
    let xe = h.layers[f].entry(x);
    // links of x whose far end is already measured from Q cost nothing
    for &(y, len) in &xe.neighbors {
        if len < t && ep.dq.get(&y).is_some_and(|&dy| dy < t) {
            return true;
        }
    }
    let parents = &xe.parents;
    for &(dk, k) in near {
        if dk >= t {
            break;
        }
        if k == x {
            continue;
        }
        let mut lb = (dk - d).abs();
        for &(p, dpx) in parents {
            if let Some(dkp) = ep.peek_pd(h, k, p, f - 1) {
                lb = lb.max(dkp - dpx);
            }
        }
        if lb >= t {
            continue;
        }
        if ep.pd(h, k, x, f, Stage::S4) < t {
            return true;
        }
    }
    false
}

/// S5: x's graph neighbors nearest first, then the other candidates in
/// order of their distance from Q. Each pass is capped by the k budget.
fn blocked_nearby(
    h: &Hierarchy,
    ep: &mut Episode,
    f: usize,
    ranked: &[(f64, u32)],
    x: u32,
    d: f64,
    t: f64,
) -> bool {
    let budget = h.config.k_budget;
    let mut local: Vec<(f64, u32)> = h.layers[f]
        .entry(x)
        .neighbors
        .iter()
        .filter(|&&(_, len)| len < t)
        .map(|&(y, len)| (len, y))
        .collect();
    local.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, y) in local.iter().take(budget) {
        if ep.dq(h, y, f, Stage::S5) < t {
            return true;
        }
    }
    let mut tested = 0;
    for &(dk, k) in ranked {
        if dk >= t || tested >= budget {
            break;
        }
        if k == x || (dk - d).abs() >= t {
            continue;
        }
        tested += 1;
        if ep.pd(h, k, x, f, Stage::S5) < t {
            return true;
        }
    }
    false
}

/// Layer-`f` pivots closer to Q than `radius`, nearest first. Domains are
/// skipped whole when their reach bound puts them out of range; with the
/// stage off every pivot is measured.
fn ball_around_query(h: &Hierarchy, ep: &mut Episode, f: usize, radius: f64) -> Vec<(f64, u32)> {
    let mut ball = Vec::new();
    if !h.config.stages.s6 {
        for e in &h.layers[f].entries {
            let d = ep.dq(h, e.id, f, Stage::S6);
            if d < radius {
                ball.push((d, e.id));
            }
        }
    } else {
        let mut stack: Vec<(usize, u32)> = h.layers[0].entries.iter().map(|e| (0, e.id)).collect();
        let mut visited: FxHashSet<(usize, u32)> = FxHashSet::default();
        let mut taken: FxHashSet<u32> = FxHashSet::default();
        while let Some((l, p)) = stack.pop() {
            let pe = h.layers[l].entry(p);
            let dqp = ep.dq(h, p, f, Stage::S6);
            if dqp - pe.reach[f] >= radius {
                continue;
            }
            if dqp < radius && taken.insert(p) {
                ball.push((dqp, p));
            }
            if l == f {
                continue;
            }
            let below = &h.layers[l + 1];
            for &(c, dpc) in &pe.children {
                if dqp - dpc - below.entry(c).reach[f] >= radius || !visited.insert((l + 1, c)) {
                    continue;
                }
                stack.push((l + 1, c));
            }
        }
    }
    ball.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ball
}
