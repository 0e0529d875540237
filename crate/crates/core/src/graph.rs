//! Canonical undirected edge sets used to compare proximity graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

/// Undirected simple graph on nodes `0..n`, edges stored as `(u, v)` with `u < v`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UndirectedGraph {
    n: usize,
    edges: BTreeSet<(u32, u32)>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DegreeStats {
    pub nodes: usize,
    pub edges: usize,
    /// `2|E| / n`.
    pub average: f64,
    pub min: usize,
    pub max: usize,
    /// degree -> number of nodes with that degree
    pub histogram: BTreeMap<usize, usize>,
}

/// Edges present in one graph but not the other.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EdgeDiff {
    pub extra: Vec<(u32, u32)>,
    pub missing: Vec<(u32, u32)>,
}

impl EdgeDiff {
    pub fn is_empty(&self) -> bool {
        self.extra.is_empty() && self.missing.is_empty()
    }
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        UndirectedGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut g = UndirectedGraph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Adds `{u, v}`; self-loops are ignored. Returns whether the edge is new.
    pub fn add_edge(&mut self, u: u32, v: u32) -> bool {
        if u == v {
            return false;
        }
        debug_assert!((u.max(v) as usize) < self.n, "edge endpoint out of range");
        self.edges.insert(canonical(u, v))
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        self.edges.contains(&canonical(u, v))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter().copied()
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        adj
    }

    pub fn is_subset_of(&self, other: &UndirectedGraph) -> bool {
        self.edges.is_subset(&other.edges)
    }

    pub fn diff(&self, reference: &UndirectedGraph) -> EdgeDiff {
        EdgeDiff {
            extra: self.edges.difference(&reference.edges).copied().collect(),
            missing: reference.edges.difference(&self.edges).copied().collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components() <= 1
    }

    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.n;
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let mut deg = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut histogram = BTreeMap::new();
        for &d in &deg {
            *histogram.entry(d).or_insert(0) += 1;
        }
        DegreeStats {
            nodes: self.n,
            edges: self.edges.len(),
            average: if self.n == 0 {
                0.0
            } else {
                2.0 * self.edges.len() as f64 / self.n as f64
            },
            min: deg.iter().copied().min().unwrap_or(0),
            max: deg.iter().copied().max().unwrap_or(0),
            histogram,
        }
    }

    /// One `u v` line per edge, `u < v`, lexicographically sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 12);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edge_list(n: usize, text: &str) -> Option<Self> {
        let mut g = UndirectedGraph::new(n);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let u: u32 = it.next()?.parse().ok()?;
            let v: u32 = it.next()?.parse().ok()?;
            if u.max(v) as usize >= n {
                return None;
            }
            g.add_edge(u, v);
        }
        Some(g)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.n,
            "edges": self.edges.iter().map(|&(u, v)| [u, v]).collect::<Vec<_>>(),
            "degree": self.degree_stats(),
        })
    }

    /// Relabels node `i` as `map[i]`.
    pub fn relabel(&self, map: &[u32]) -> UndirectedGraph {
        UndirectedGraph::from_edges(
            self.n,
            self.edges
                .iter()
                .map(|&(u, v)| (map[u as usize], map[v as usize])),
        )
    }
}

#[inline]
fn canonical(u: u32, v: u32) -> (u32, u32) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_and_dedup() {
        let g = UndirectedGraph::from_edges(3, [(1, 0), (0, 1), (2, 2), (2, 1)]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(g.is_connected());
        assert_eq!(g.to_edge_list(), "0 1\n1 2\n");
    }

    #[test]
    fn components_and_diff() {
        let a = UndirectedGraph::from_edges(4, [(0, 1), (2, 3)]);
        let b = UndirectedGraph::from_edges(4, [(0, 1), (1, 2)]);
        assert_eq!(a.components(), 2);
        let d = a.diff(&b);
        assert_eq!(d.extra, vec![(2, 3)]);
        assert_eq!(d.missing, vec![(1, 2)]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = UndirectedGraph::from_edges(5, [(4, 0), (1, 3), (0, 2)]);
        let back = UndirectedGraph::from_edge_list(5, &g.to_edge_list()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn degree_histogram() {
        let g = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]);
        let s = g.degree_stats();
        assert_eq!(s.histogram.get(&1), Some(&2));
        assert_eq!(s.histogram.get(&2), Some(&1));
        assert!((s.average - 4.0 / 3.0).abs() < 1e-15);
    }
}
