//! Definition-level constructions of RNG, GRNG, GG, MST and kNN.
//!
//! These recompute every distance from scratch and never touch the
//! hierarchy's caches, so they can serve as ground truth for it.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::metric::Metric;

/// Strict generalized-lune membership from precomputed distances: the
/// candidate `k` is inside G-lune(`i`, `j`) iff both thresholds are beaten.
/// With zero radii this is the RNG lune.
#[inline]
pub fn in_glune(d_ki: f64, d_kj: f64, d_ij: f64, r_i: f64, r_j: f64) -> bool {
    d_ki < d_ij - (2.0 * r_i + r_j) && d_kj < d_ij - (r_i + 2.0 * r_j)
}

/// `x3` lies strictly inside lune(`x1`, `x2`): `max(d(x3,x1), d(x3,x2)) < d(x1,x2)`.
pub fn lune_contains(x1: &[f64], x2: &[f64], x3: &[f64], metric: &dyn Metric) -> bool {
    let d12 = metric.distance(x1, x2);
    metric.distance(x3, x1).max(metric.distance(x3, x2)) < d12
}

/// A point acting as pivot with its domain radius.
#[derive(Debug, Clone, Copy)]
pub struct PivotRef<'a> {
    pub coords: &'a [f64],
    pub radius: f64,
}

/// `pk` lies strictly inside the generalized lune of `(pi, ri)` and `(pj, rj)`.
pub fn glune_contains(pk: &[f64], pi: PivotRef<'_>, pj: PivotRef<'_>, metric: &dyn Metric) -> bool {
    let dij = metric.distance(pi.coords, pj.coords);
    in_glune(
        metric.distance(pk, pi.coords),
        metric.distance(pk, pj.coords),
        dij,
        pi.radius,
        pj.radius,
    )
}

fn sorted_row(dataset: &Dataset, i: u32, metric: &dyn Metric) -> (Vec<f64>, Vec<u32>) {
    let pi = dataset.point(i);
    let row: Vec<f64> = dataset.iter().map(|p| metric.distance(pi, p.coords)).collect();
    let mut order: Vec<u32> = (0..dataset.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        row[a as usize]
            .partial_cmp(&row[b as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    (row, order)
}

/// Shared skeleton for the empty-neighborhood graphs whose blockers must be
/// strictly closer to `i` than `j` is: scan `i`'s neighbors nearest first.
fn empty_region_graph<F>(dataset: &Dataset, metric: &dyn Metric, blocks: F) -> UndirectedGraph
where
    F: Fn(f64, f64, f64) -> bool + Sync,
{
    let n = dataset.len();
    let edges: Vec<(u32, u32)> = (0..n as u32)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (row, order) = sorted_row(dataset, i, metric);
            let blocks = &blocks;
            (i + 1..n as u32).filter_map(move |j| {
                let dij = row[j as usize];
                let pj = dataset.point(j);
                for &k in &order {
                    let dik = row[k as usize];
                    if dik >= dij {
                        break;
                    }
                    if k == i || k == j {
                        continue;
                    }
                    let djk = metric.distance(pj, dataset.point(k));
                    if blocks(dik, djk, dij) {
                        return None;
                    }
                }
                Some((i, j))
            })
        })
        .collect();
    UndirectedGraph::from_edges(n, edges)
}

/// Exact RNG: `(i, j)` is an edge iff no third point lies in lune(`i`, `j`).
pub fn brute_rng(dataset: &Dataset, metric: &dyn Metric) -> UndirectedGraph {
    empty_region_graph(dataset, metric, |dik, djk, dij| dik.max(djk) < dij)
}

/// Exact Gabriel graph: `(i, j)` is an edge iff no `k` has
/// `d²(k,i) + d²(k,j) < d²(i,j)`. Points on the sphere do not block.
pub fn brute_gg(dataset: &Dataset, metric: &dyn Metric) -> UndirectedGraph {
    empty_region_graph(dataset, metric, |dik, djk, dij| {
        dik * dik + djk * djk < dij * dij
    })
}

/// Exact GRNG of pivots with per-pivot radii, via the full distance matrix.
pub fn brute_grng(pivots: &Dataset, radii: &[f64], metric: &dyn Metric) -> Result<UndirectedGraph> {
    let m = pivots.len();
    if radii.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} radii for {} pivots",
            radii.len(),
            m
        )));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::InvalidInput(format!("negative radius {r}")));
    }
    let matrix: Vec<Vec<f64>> = (0..m as u32)
        .into_par_iter()
        .map(|i| {
            let pi = pivots.point(i);
            pivots.iter().map(|p| metric.distance(pi, p.coords)).collect()
        })
        .collect();
    let edges: Vec<(u32, u32)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let matrix = &matrix;
            (i + 1..m).filter_map(move |j| {
                let dij = matrix[i][j];
                let blocked = (0..m).any(|k| {
                    k != i
                        && k != j
                        && in_glune(matrix[k][i], matrix[k][j], dij, radii[i], radii[j])
                });
                (!blocked).then_some((i as u32, j as u32))
            })
        })
        .collect();
    Ok(UndirectedGraph::from_edges(m, edges))
}

/// GRNG with one radius shared by every pivot.
pub fn brute_grng_uniform(pivots: &Dataset, radius: f64, metric: &dyn Metric) -> Result<UndirectedGraph> {
    brute_grng(pivots, &vec![radius; pivots.len()], metric)
}

/// Minimum spanning tree by Prim's algorithm over the full distance matrix.
/// Equal weights are broken by the smaller `(u, v)` pair, which makes the
/// tree unique.
pub fn brute_mst(dataset: &Dataset, metric: &dyn Metric) -> UndirectedGraph {
    let n = dataset.len();
    let mut g = UndirectedGraph::new(n);
    if n < 2 {
        return g;
    }
    // best[v] = (weight, lo, hi) of the lightest edge from the tree to v
    let key = |w: f64, a: u32, b: u32| (w, a.min(b), a.max(b));
    let less = |x: &(f64, u32, u32), y: &(f64, u32, u32)| {
        x.0.partial_cmp(&y.0)
            .unwrap_or(Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
            == Ordering::Less
    };
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<(f64, u32, u32)>> = vec![None; n];
    in_tree[0] = true;
    let p0 = dataset.point(0);
    for (v, slot) in best.iter_mut().enumerate().skip(1) {
        *slot = Some(key(metric.distance(p0, dataset.point(v as u32)), 0, v as u32));
    }
    for _ in 1..n {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if let Some(b) = &best[v] {
                if pick.is_none_or(|p| less(b, best[p].as_ref().unwrap())) {
                    pick = Some(v);
                }
            }
        }
        let v = pick.expect("graph is complete");
        let (_, a, b) = best[v].unwrap();
        g.add_edge(a, b);
        in_tree[v] = true;
        let pv = dataset.point(v as u32);
        for u in 0..n {
            if in_tree[u] {
                continue;
            }
            let cand = key(metric.distance(pv, dataset.point(u as u32)), v as u32, u as u32);
            if less(&cand, best[u].as_ref().unwrap()) {
                best[u] = Some(cand);
            }
        }
    }
    g
}

/// Directed `k` nearest neighbors of every point, nearest first, ties by id.
pub fn brute_knn(dataset: &Dataset, metric: &dyn Metric, k: usize) -> Result<Vec<Vec<u32>>> {
    let n = dataset.len();
    if k >= n.max(1) {
        return Err(Error::InvalidInput(format!("k = {k} must be below N = {n}")));
    }
    Ok((0..n as u32)
        .into_par_iter()
        .map(|i| {
            let (_, order) = sorted_row(dataset, i, metric);
            order.into_iter().filter(|&j| j != i).take(k).collect()
        })
        .collect())
}

/// Undirected union of the kNN lists.
pub fn knn_graph(dataset: &Dataset, metric: &dyn Metric, k: usize) -> Result<UndirectedGraph> {
    let lists = brute_knn(dataset, metric, k)?;
    Ok(UndirectedGraph::from_edges(
        dataset.len(),
        lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&j| (i as u32, j))),
    ))
}

/// RNG neighbors that a new point `q` would have in `RNG(S ∪ {q})`,
/// as sorted ids of `dataset`.
pub fn rng_neighbors_of(dataset: &Dataset, q: &[f64], metric: &dyn Metric) -> Vec<u32> {
    let dq: Vec<f64> = dataset.iter().map(|p| metric.distance(q, p.coords)).collect();
    let mut order: Vec<u32> = (0..dataset.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        dq[a as usize]
            .partial_cmp(&dq[b as usize])
            .unwrap_or(Ordering::Equal)
    });
    (0..dataset.len() as u32)
        .into_par_iter()
        .filter(|&x| {
            let dqx = dq[x as usize];
            let px = dataset.point(x);
            for &k in &order {
                if dq[k as usize] >= dqx {
                    break;
                }
                if k != x && metric.distance(px, dataset.point(k)) < dqx {
                    return false;
                }
            }
            true
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::L2;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::from_rows(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn square() -> Dataset {
        Dataset::from_rows(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn lune_midpoint_and_outside() {
        assert!(lune_contains(&[0.0], &[2.0], &[1.0], &L2));
        assert!(!lune_contains(&[0.0], &[2.0], &[3.0], &L2));
    }

    #[test]
    fn lune_boundary_does_not_block() {
        // d(x3, x1) == d(x1, x2) exactly
        assert!(!lune_contains(&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0], &L2));
    }

    #[test]
    fn glune_direct_substitution() {
        // d(pi,pj)=10, r=1: thresholds 7 and 7; d(pk,pi)=5, d(pk,pj)=6
        assert!(in_glune(5.0, 6.0, 10.0, 1.0, 1.0));
        assert!(!in_glune(7.0, 6.0, 10.0, 1.0, 1.0));
    }

    #[test]
    fn glune_infeasible_with_large_radii() {
        // thresholds 4 and 4, but d(pk,pi) + d(pk,pj) >= 10
        for a in 0..=100 {
            let dki = a as f64 / 10.0;
            let dkj = 10.0 - dki;
            assert!(!in_glune(dki, dkj, 10.0, 2.0, 2.0));
        }
    }

    #[test]
    fn glune_zero_radius_is_lune() {
        let pts = [[0.0, 0.0], [2.0, 0.5], [1.0, 0.2], [3.0, 3.0], [1.0, 1.5]];
        for a in &pts {
            for b in &pts {
                for c in &pts {
                    let zero_i = PivotRef { coords: a, radius: 0.0 };
                    let zero_j = PivotRef { coords: b, radius: 0.0 };
                    assert_eq!(
                        glune_contains(c, zero_i, zero_j, &L2),
                        lune_contains(a, b, c, &L2)
                    );
                }
            }
        }
    }

    #[test]
    fn collinear_rng_gg_mst() {
        let ds = line(&[0.0, 1.0, 2.0]);
        let expect = UndirectedGraph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(brute_rng(&ds, &L2), expect);
        assert_eq!(brute_gg(&ds, &L2), expect);
        assert_eq!(brute_mst(&ds, &L2), expect);
    }

    #[test]
    fn square_rng_has_sides_only() {
        let g = brute_rng(&square(), &L2);
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            vec![(0, 1), (0, 3), (1, 2), (2, 3)]
        );
    }

    #[test]
    fn gg_sphere_does_not_block() {
        // 15² + 20² == 25² exactly: the third point sits on the sphere
        let ds = Dataset::from_rows(vec![vec![0.0, 0.0], vec![25.0, 0.0], vec![9.0, 12.0]]).unwrap();
        assert_eq!(brute_gg(&ds, &L2).edge_count(), 3);
        assert_eq!(brute_rng(&ds, &L2).edge_count(), 2);
    }

    #[test]
    fn mst_ties_broken_lexicographically() {
        // every side of the square weighs 1: (0,1), (0,3), (1,2) win
        let g = brute_mst(&square(), &L2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 3), (1, 2)]);
    }

    #[test]
    fn knn_rejects_large_k() {
        assert!(brute_knn(&line(&[0.0, 1.0]), &L2, 2).is_err());
        assert_eq!(brute_knn(&line(&[0.0, 1.0, 3.0]), &L2, 1).unwrap(), vec![vec![1], vec![0], vec![1]]);
    }

    #[test]
    fn grng_validates_radii() {
        assert!(brute_grng(&line(&[0.0, 1.0]), &[0.0], &L2).is_err());
        assert!(brute_grng(&line(&[0.0, 1.0]), &[0.0, -1.0], &L2).is_err());
    }

    #[test]
    fn neighbors_of_new_point() {
        let ds = line(&[0.0, 1.0, 2.0]);
        assert_eq!(rng_neighbors_of(&ds, &[1.5], &L2), vec![1, 2]);
        assert_eq!(rng_neighbors_of(&ds, &[5.0], &L2), vec![2]);
    }
}
