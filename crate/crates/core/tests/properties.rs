use proptest::prelude::*;

use grng::hierarchy::{Hierarchy, HierarchyConfig, RadiiSchedule};
use grng::oracle::{brute_grng_uniform, brute_rng};
use grng::{Dataset, MetricKind, L1, L2};

/// Points on a small integer grid: many exact ties on lune boundaries.
fn grid_points(max_n: usize, dim: usize, side: i32) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(0..side, dim), 1..max_n).prop_map(|rows| {
        let rows = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
        Dataset::from_rows(rows).unwrap().dedup().0
    })
}

fn radii() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..3.0, 0..3).prop_map(|mut r| {
        r.sort_by(|a, b| b.total_cmp(a));
        r.dedup();
        r.push(0.0);
        r
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn grid_builds_are_exact(data in grid_points(70, 2, 8), radii in radii(), order_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<u32> = (0..data.len() as u32).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(order_seed));
        let cfg = HierarchyConfig { radii: RadiiSchedule::explicit(radii), ..Default::default() };
        let (h, report) = Hierarchy::build_ordered(&data, &order, cfg, MetricKind::L2.shared()).unwrap();
        prop_assert_eq!(h.rng().relabel(&report.order), brute_rng(&data, &L2));
        for l in 0..h.layer_count() {
            let members = h.layer(l).members();
            let pivots = h.points().select(&members);
            let expect = brute_grng_uniform(&pivots, h.radii()[l], &L2).unwrap();
            let got = grng::UndirectedGraph::from_edges(
                members.len(),
                h.layer_graph(l).edges().map(|(u, v)| {
                    let a = members.binary_search(&u).unwrap() as u32;
                    let b = members.binary_search(&v).unwrap() as u32;
                    (a, b)
                }),
            );
            prop_assert_eq!(got, expect, "layer {}", l);
        }
        prop_assert!(h.validate().is_clean());
    }

    #[test]
    fn l1_grid_builds_are_exact(data in grid_points(50, 3, 5), radii in radii()) {
        let cfg = HierarchyConfig { radii: RadiiSchedule::explicit(radii), ..Default::default() };
        let (h, _) = Hierarchy::build(&data, cfg, MetricKind::L1.shared()).unwrap();
        prop_assert_eq!(h.rng(), brute_rng(&data, &L1));
    }

    #[test]
    fn search_matches_insert(data in grid_points(60, 2, 10), q in prop::collection::vec(0i32..10, 2)) {
        let q: Vec<f64> = q.into_iter().map(|v| f64::from(v) + 0.5).collect();
        let (mut h, _) = Hierarchy::build(&data, HierarchyConfig::default(), MetricKind::L2.shared()).unwrap();
        let found = h.search(&q).unwrap().neighbors;
        let added: Vec<u32> = h.insert(&q).unwrap().added.iter().map(|e| e.0).collect();
        prop_assert_eq!(found, added);
    }
}
