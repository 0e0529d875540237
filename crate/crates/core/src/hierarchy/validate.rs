//! Invariant audit against recomputed distances and brute-force GRNGs.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use super::config::check_radii;
use super::Hierarchy;
use crate::graph::UndirectedGraph;
use crate::oracle::brute_grng_uniform;
use crate::stats::{Stage, StageCounts};

/// Layers larger than this skip the brute-force edge comparison.
pub const DEFAULT_AUDIT_CAP: usize = 2000;

const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Radii,
    Nesting,
    Coverage,
    ParentLink,
    ChildLink,
    DeltaMax,
    ReachBound,
    MuBound,
    Adjacency,
    CoarseNeighbors,
    EdgeSet,
    PairTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub layer: usize,
    pub id: Option<u32>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} in layer {}", self.kind, self.layer)?;
        if let Some(id) = self.id {
            write!(f, " at {id}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Layers whose edge sets were compared with a brute-force GRNG.
    pub audited_layers: Vec<usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SLACK * a.abs().max(b.abs()).max(1.0)
}

struct Audit<'h> {
    h: &'h Hierarchy,
    evals: AtomicU64,
}

impl Audit<'_> {
    fn d(&self, a: u32, b: u32) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.h.metric.distance(self.h.points.point(a), self.h.points.point(b))
    }
}

impl Hierarchy {
    pub fn validate(&self) -> ValidationReport {
        self.validate_with_cap(DEFAULT_AUDIT_CAP)
    }

    /// Full audit. Distances it evaluates are booked under the oracle stage.
    pub fn validate_with_cap(&self, audit_cap: usize) -> ValidationReport {
        let audit = Audit { h: self, evals: AtomicU64::new(0) };
        let mut out = Vec::new();
        let mut audited = Vec::new();
        self.check_structure(&audit, &mut out);
        if out.is_empty() {
            self.check_bounds(&audit, &mut out);
        }
        for l in 0..self.layers.len() {
            let members = self.layers[l].members();
            if members.len() > audit_cap {
                continue;
            }
            audited.push(l);
            let sub = self.points.select(&members);
            let n = sub.len() as u64;
            let local = brute_grng_uniform(&sub, self.layers[l].radius, self.metric.as_ref())
                .expect("uniform radius is valid");
            audit.evals.fetch_add(n * n, Ordering::Relaxed);
            let mine = self.layer_graph(l);
            let truth = UndirectedGraph::from_edges(
                mine.node_count(),
                local.edges().map(|(u, v)| (members[u as usize], members[v as usize])),
            );
            let diff = mine.diff(&truth);
            if !diff.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::EdgeSet,
                    layer: l,
                    id: None,
                    detail: format!("{} extra, {} missing; first extra {:?}, first missing {:?}",
                        diff.extra.len(), diff.missing.len(), diff.extra.first(), diff.missing.first()),
                });
            }
        }
        let evals = audit.evals.load(Ordering::Relaxed);
        if evals > 0 {
            let mut c = StageCounts::default();
            c.add(0, Stage::Oracle, evals);
            self.stats.flush_external(&c);
        }
        ValidationReport { violations: out, audited_layers: audited }
    }

    fn check_structure(&self, a: &Audit, out: &mut Vec<Violation>) {
        let mut v = |kind, layer, id: Option<u32>, detail: String| {
            out.push(Violation { kind, layer, id, detail })
        };
        if let Err(e) = check_radii(&self.radii) {
            v(ViolationKind::Radii, 0, None, e.to_string());
        }
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.radius != self.radii[l] {
                v(ViolationKind::Radii, l, None, format!("radius {} vs {}", layer.radius, self.radii[l]));
            }
            if layer.slot.len() != self.points.len() {
                v(ViolationKind::Nesting, l, None, "slot table out of date".into());
                continue;
            }
            for (s, e) in layer.entries.iter().enumerate() {
                let id = Some(e.id);
                if layer.slot[e.id as usize] as usize != s {
                    v(ViolationKind::Nesting, l, id, "slot mismatch".into());
                }
                if l < last && !self.layers[l + 1].contains(e.id) {
                    v(ViolationKind::Nesting, l, id, "missing from the next layer".into());
                }
                if l == 0 && !e.parents.is_empty() {
                    v(ViolationKind::ParentLink, l, id, "top pivot with parents".into());
                }
                if l > 0 && e.parents.is_empty() {
                    v(ViolationKind::Coverage, l, id, "no parent".into());
                }
                for &(p, d) in &e.parents {
                    let Some(pe) = self.layers[l - 1].get(p) else {
                        v(ViolationKind::ParentLink, l, id, format!("parent {p} not a pivot above"));
                        continue;
                    };
                    let truth = a.d(p, e.id);
                    if !close(d, truth) {
                        v(ViolationKind::ParentLink, l, id, format!("stored {d} vs {truth} to {p}"));
                    }
                    if truth > self.radii[l - 1] - self.radii[l] {
                        v(ViolationKind::Coverage, l, id, format!("parent {p} at {truth}"));
                    }
                    if !pe.children.iter().any(|c| c.0 == e.id) {
                        v(ViolationKind::ChildLink, l - 1, Some(p), format!("{} missing from children", e.id));
                    }
                }
                if l == last && !e.children.is_empty() {
                    v(ViolationKind::ChildLink, l, id, "bottom pivot with children".into());
                }
                for &(c, _) in &e.children {
                    match self.layers.get(l + 1).and_then(|below| below.get(c)) {
                        Some(ce) if ce.parents.iter().any(|p| p.0 == e.id) => {}
                        _ => v(ViolationKind::ChildLink, l, id, format!("child {c} does not point back")),
                    }
                }
                if e.neighbors.windows(2).any(|w| w[0].0 >= w[1].0) {
                    v(ViolationKind::Adjacency, l, id, "links not sorted by id".into());
                }
                let mut seen = std::collections::HashSet::new();
                for &(y, d) in &e.neighbors {
                    if y == e.id || !seen.insert(y) {
                        v(ViolationKind::Adjacency, l, id, format!("self or repeated link {y}"));
                        continue;
                    }
                    match layer.get(y).and_then(|ye| ye.link_len(e.id)) {
                        Some(back) if back == d => {}
                        _ => v(ViolationKind::Adjacency, l, id, format!("link to {y} not mirrored")),
                    }
                    if e.id < y {
                        let truth = a.d(e.id, y);
                        if !close(d, truth) {
                            v(ViolationKind::Adjacency, l, id, format!("link {y} stored {d} vs {truth}"));
                        }
                    }
                }
                if l > 0 {
                    if e.coarse_nbrs.windows(2).any(|w| w[0] >= w[1]) {
                        v(ViolationKind::CoarseNeighbors, l, id, "not sorted".into());
                    }
                    for &p in &e.coarse_nbrs {
                        match self.layers[l - 1].get(p) {
                            Some(pe) if pe.joined_at < e.joined_at => {}
                            _ => v(ViolationKind::CoarseNeighbors, l, id, format!("{p} was not a pivot above")),
                        }
                    }
                }
            }
        }
        let bottom = &self.layers[last];
        if bottom.len() != self.points.len() {
            v(ViolationKind::Nesting, last, None, "bottom layer misses points".into());
        }
        let top = &self.layers[0];
        if self.top_pairs.len() != top.len() || self.top_pairs.iter().any(|r| r.len() != top.len()) {
            v(ViolationKind::PairTable, 0, None, "table shape".into());
        } else {
            for (i, ei) in top.entries.iter().enumerate() {
                for (j, ej) in top.entries.iter().enumerate().skip(i + 1) {
                    let d = self.top_pairs[i][j];
                    if d != self.top_pairs[j][i] || !close(d, a.d(ei.id, ej.id)) {
                        v(ViolationKind::PairTable, 0, Some(ei.id), format!("entry for {}", ej.id));
                    }
                }
            }
        }
    }

    /// δmax exactness and conservativeness of the reach and μ bounds,
    /// against descendant sets walked from scratch.
    fn check_bounds(&self, a: &Audit, out: &mut Vec<Violation>) {
        let layers = self.layers.len();
        let found: Vec<Violation> = (0..layers)
            .into_par_iter()
            .flat_map_iter(|l| {
                self.layers[l].entries.par_iter().flat_map_iter(move |e| {
                    let mut bad = Vec::new();
                    let mut frontier = vec![e.id];
                    for t in l..layers {
                        if t > l {
                            let mut next: Vec<u32> = frontier
                                .iter()
                                .flat_map(|&p| self.layers[t - 1].entry(p).children.iter().map(|c| c.0))
                                .collect();
                            next.sort_unstable();
                            next.dedup();
                            frontier = next;
                        }
                        let mut reach = f64::NEG_INFINITY;
                        let mut mu = f64::NEG_INFINITY;
                        for &y in &frontier {
                            let d = a.d(e.id, y);
                            reach = reach.max(d);
                            if let Some(m) = self.layers[t].entry(y).longest_link() {
                                mu = mu.max(m + d);
                            }
                        }
                        let (sr, sm) = (e.reach[t], e.mu[t]);
                        if t == l + 1 && !close(sr, reach) {
                            bad.push(Violation {
                                kind: ViolationKind::DeltaMax,
                                layer: l,
                                id: Some(e.id),
                                detail: format!("stored {sr}, recomputed {reach}"),
                            });
                        } else if sr < reach - SLACK * reach.abs().max(1.0) {
                            bad.push(Violation {
                                kind: ViolationKind::ReachBound,
                                layer: l,
                                id: Some(e.id),
                                detail: format!("layer {t}: stored {sr} below {reach}"),
                            });
                        }
                        if sm < mu - SLACK * mu.abs().max(1.0) {
                            bad.push(Violation {
                                kind: ViolationKind::MuBound,
                                layer: l,
                                id: Some(e.id),
                                detail: format!("layer {t}: stored {sm} below {mu}"),
                            });
                        }
                    }
                    bad.into_iter()
                })
                .collect::<Vec<_>>()
                .into_iter()
            })
            .collect();
        out.extend(found);
    }
}
