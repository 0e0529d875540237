//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Runs without the libtest harness so the lines
//! always reach the console.

use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use grng::datagen::{generate, queries, GenSpec};
use grng::hierarchy::{BuildReport, Hierarchy, HierarchyConfig, StageToggles};
use grng::metric::{Probe, L2};
use grng::oracle::{brute_gg, brute_grng_uniform, brute_mst, brute_rng, knn_graph, rng_neighbors_of};
use grng::stats::Stage;
use grng::{Dataset, Metric as _, UndirectedGraph};

/// Every hierarchy run records whether its counters matched an independent
/// call count.
#[derive(Default)]
struct Ledger {
    runs: Mutex<Vec<(String, u64, u64, u64)>>,
}

impl Ledger {
    fn record(&self, label: &str, h: &Hierarchy, probe: &Probe<L2>) {
        let row = (label.to_string(), h.stats().total(), h.stats().evaluations(), probe.calls());
        self.runs.lock().unwrap().push(row);
    }
}

struct Probed {
    h: Hierarchy,
    report: BuildReport,
    probe: Arc<Probe<L2>>,
}

fn build_probed(data: &Dataset, order: Option<&[u32]>, cfg: HierarchyConfig, ledger: &Ledger, label: &str) -> Probed {
    let probe = Arc::new(Probe::new(L2));
    let (h, report) = match order {
        Some(o) => Hierarchy::build_ordered(data, o, cfg, probe.clone()),
        None => Hierarchy::build(data, cfg, probe.clone()),
    }
    .expect("build");
    ledger.record(label, &h, &probe);
    Probed { h, report, probe }
}

fn listed(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", items.join(" "))
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn exactness(ledger: &Ledger) -> Outcome {
    let mut cases = Vec::new();
    for n in [200, 1000, 2000] {
        for dim in [2, 4, 6] {
            for clustered in [false, true] {
                for seed in 0..5 {
                    cases.push((n, dim, clustered, seed));
                }
            }
        }
    }
    let bad: Vec<String> = cases
        .par_iter()
        .filter_map(|&(n, dim, clustered, seed)| {
            let spec = if clustered { GenSpec::clustered(n, dim, seed) } else { GenSpec::uniform(n, dim, seed) };
            let data = generate(&spec).unwrap();
            let label = format!("{}:{n}:{dim}@{seed}", spec.kind.label());
            let run = build_probed(&data, None, HierarchyConfig::default(), ledger, &label);
            let diff = run.h.rng().diff(&brute_rng(&data, &L2));
            (!diff.is_empty()).then(|| format!("{label} +{} -{}", diff.extra.len(), diff.missing.len()))
        })
        .collect();
    outcome(
        bad.is_empty(),
        format!("{}/{} builds match brute_rng exactly{}", cases.len() - bad.len(), cases.len(), listed(&bad)),
    )
}

fn prefix_exactness(ledger: &Ledger) -> Outcome {
    let data = generate(&GenSpec::uniform(300, 2, 11)).unwrap();
    let cfg = HierarchyConfig::with_radii(vec![0.4, 0.1, 0.025, 0.0]);
    let probe = Arc::new(Probe::new(L2));
    let mut h = Hierarchy::new(cfg, probe.clone(), 2).unwrap();
    let mut first_bad = None;
    for i in 0..data.len() as u32 {
        h.insert(data.point(i)).unwrap();
        let prefix = data.select(&(0..=i).collect::<Vec<_>>());
        if h.rng() != brute_rng(&prefix, &L2) && first_bad.is_none() {
            first_bad = Some(i);
        }
    }
    ledger.record("prefix", &h, &probe);
    match first_bad {
        None => outcome(true, "300/300 prefixes equal brute_rng".into()),
        Some(i) => outcome(false, format!("prefix ending at insertion {i} differs")),
    }
}

fn search_exactness(ledger: &Ledger) -> Outcome {
    let data = generate(&GenSpec::uniform(1000, 4, 12)).unwrap();
    let run = build_probed(&data, None, HierarchyConfig::default(), ledger, "search-base");
    let q = queries(&data, 100, 13).unwrap();
    let mut exact = 0;
    for i in 0..q.len() as u32 {
        let got = run.h.search(q.point(i)).unwrap().neighbors;
        if got == rng_neighbors_of(&data, q.point(i), &L2) {
            exact += 1;
        }
    }
    ledger.record("search", &run.h, &run.probe);
    outcome(exact == 100, format!("{exact}/100 queries equal the oracle on S plus Q"))
}

fn grng_properties() -> Outcome {
    let data = generate(&GenSpec::uniform(200, 2, 14)).unwrap();
    let radii = [0.0, 0.01, 0.02, 0.04];
    let graphs: Vec<UndirectedGraph> = radii.iter().map(|&r| brute_grng_uniform(&data, r, &L2).unwrap()).collect();
    let nested = graphs.windows(2).all(|w| w[0].is_subset_of(&w[1]));
    let rng_equal = graphs[0] == brute_rng(&data, &L2);
    let mut dmax = 0.0f64;
    for a in data.iter() {
        for b in data.iter() {
            dmax = dmax.max(L2.distance(a.coords, b.coords));
        }
    }
    let r = dmax / 6.0 * (1.0 + 1e-9);
    let n = data.len();
    let complete = brute_grng_uniform(&data, r, &L2).unwrap().edge_count() == n * (n - 1) / 2;
    let sizes: Vec<usize> = graphs.iter().map(UndirectedGraph::edge_count).collect();
    outcome(
        nested && rng_equal && complete,
        format!("edges {sizes:?} nested={nested} r0_is_rng={rng_equal} complete_above_dmax/6={complete}"),
    )
}

fn subset_chain() -> Outcome {
    let bad: Vec<u64> = (0..20u64)
        .into_par_iter()
        .filter(|&seed| {
            let data = generate(&GenSpec::uniform(200, 2, 100 + seed)).unwrap();
            let nn = knn_graph(&data, &L2, 1).unwrap();
            let mst = brute_mst(&data, &L2);
            let rng = brute_rng(&data, &L2);
            let gg = brute_gg(&data, &L2);
            let grng_connected = [0.01, 0.02, 0.04]
                .iter()
                .all(|&r| brute_grng_uniform(&data, r, &L2).unwrap().is_connected());
            let ok = nn.is_subset_of(&mst)
                && mst.is_subset_of(&rng)
                && rng.is_subset_of(&gg)
                && rng.is_connected()
                && grng_connected;
            !ok
        })
        .collect();
    let bad: Vec<String> = bad.iter().map(|s| format!("seed {s}")).collect();
    outcome(bad.is_empty(), format!("{}/20 instances satisfy 1NN, MST, RNG, GG nesting and connectivity{}", 20 - bad.len(), listed(&bad)))
}

fn pruning_safety(ledger: &Ledger) -> Outcome {
    let stages = [Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::S5, Stage::S6, Stage::S7];
    let instances = [GenSpec::uniform(500, 2, 15), GenSpec::clustered(500, 3, 16), GenSpec::uniform(500, 4, 17)];
    let mut failures = Vec::new();
    let mut stats_moved = 0;
    let mut runs = 0;
    for spec in &instances {
        let data = generate(spec).unwrap();
        let cfg = HierarchyConfig::with_layers(3);
        let base = build_probed(&data, None, cfg.clone(), ledger, "toggle-base");
        let layers: Vec<UndirectedGraph> = (0..base.h.layer_count()).map(|l| base.h.layer_graph(l)).collect();
        for stage in stages {
            let cfg = HierarchyConfig { stages: StageToggles::without(stage), ..cfg.clone() };
            let run = build_probed(&data, None, cfg, ledger, "toggle");
            runs += 1;
            let same = (0..run.h.layer_count()).all(|l| run.h.layer_graph(l) == layers[l]);
            if !same {
                failures.push(format!("{} without {stage}", spec.kind.label()));
            }
            if run.report.totals != base.report.totals {
                stats_moved += 1;
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{}/{runs} single-stage-off builds keep every layer's edges; counters differ in {stats_moved}{}",
            runs - failures.len(),
            listed(&failures)
        ),
    )
}

fn scaling(ledger: &Ledger) -> Outcome {
    let mut means = Vec::new();
    let mut n = 1600;
    while n <= 102_400 {
        let data = generate(&GenSpec::uniform(n, 2, 18)).unwrap();
        let run = build_probed(&data, None, HierarchyConfig::default(), ledger, "scaling");
        let q = queries(&data, 200, 19).unwrap();
        let total: u64 = (0..q.len() as u32).map(|i| run.h.search(q.point(i)).unwrap().stats.total()).sum();
        ledger.record("scaling-search", &run.h, &run.probe);
        means.push((n, total as f64 / q.len() as f64));
        n *= 2;
    }
    let ratios: Vec<f64> = means.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let last = means.last().unwrap().1;
    let pass = ratios.iter().all(|&r| r < 1.6) && (300.0..=2500.0).contains(&last);
    let shown: Vec<String> = means.iter().map(|(n, m)| format!("{n}:{m:.1}")).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    outcome(pass, format!("mean search distances {} worst ratio per doubling {worst:.3}", shown.join(" ")))
}

fn degree() -> Outcome {
    let data = generate(&GenSpec::uniform(10_000, 2, 20)).unwrap();
    let avg2 = brute_rng(&data, &L2).degree_stats().average;
    let by_dim: Vec<f64> = (2..=6)
        .map(|d| brute_rng(&generate(&GenSpec::uniform(5000, d, 21)).unwrap(), &L2).degree_stats().average)
        .collect();
    let monotone = by_dim.windows(2).all(|w| w[0] <= w[1]);
    let shown: Vec<String> = by_dim.iter().map(|a| format!("{a:.3}")).collect();
    outcome(
        (2.2..=2.8).contains(&avg2) && monotone,
        format!("2-D N=10000 average degree {avg2:.4}; d=2..6 at N=5000: {}", shown.join(" ")),
    )
}

fn order_invariance(ledger: &Ledger) -> Outcome {
    let data = generate(&GenSpec::uniform(500, 2, 22)).unwrap();
    let mut graphs = Vec::new();
    let mut pivots = Vec::new();
    for seed in [1u64, 2] {
        let mut order: Vec<u32> = (0..data.len() as u32).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let run = build_probed(&data, Some(&order), HierarchyConfig::default(), ledger, "order");
        // hierarchy id i holds dataset row order[i]
        graphs.push(run.h.rng().relabel(&run.report.order));
        pivots.push(run.h.layer(0).len());
    }
    outcome(
        graphs[0] == graphs[1] && graphs[0] == brute_rng(&data, &L2),
        format!("bottom edge sets identical across two orders ({} edges, top pivots {pivots:?})", graphs[0].edge_count()),
    )
}

fn conservation(ledger: &Ledger) -> Outcome {
    let runs = ledger.runs.lock().unwrap();
    let bad: Vec<String> = runs
        .iter()
        .filter(|(_, counted, evals, calls)| counted != evals || evals != calls)
        .map(|r| r.0.clone())
        .collect();
    let total: u64 = runs.iter().map(|r| r.3).sum();
    outcome(
        !runs.is_empty() && bad.is_empty(),
        format!("{}/{} runs reconcile ({total} distance calls){}", runs.len() - bad.len(), runs.len(), listed(&bad)),
    )
}

fn main() -> ExitCode {
    let ledger = Arc::new(Ledger::default());
    let start = Instant::now();
    let report = |id: usize, name: &str, o: &Outcome, t: Instant| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id} {name}: {} ({:.1}s)", o.detail, t.elapsed().as_secs_f64());
        o.pass
    };
    // Builds are serial, so the long scaling run overlaps with the rest.
    let scaling_run = {
        let ledger = ledger.clone();
        std::thread::spawn(move || {
            let t = Instant::now();
            let o = scaling(&ledger);
            (o, t)
        })
    };
    let mut results: Vec<(usize, &str, bool)> = Vec::new();
    type Check = fn(&Ledger) -> Outcome;
    let checks: [(usize, &str, Check); 8] = [
        (1, "exactness", exactness),
        (2, "prefix exactness", prefix_exactness),
        (3, "search exactness", search_exactness),
        (4, "GRNG properties", |_| grng_properties()),
        (5, "subset chain", |_| subset_chain()),
        (6, "pruning safety", pruning_safety),
        (8, "degree statistic", |_| degree()),
        (10, "order invariance", order_invariance),
    ];
    for (id, name, f) in checks {
        let t = Instant::now();
        let o = f(&ledger);
        results.push((id, name, report(id, name, &o, t)));
    }
    let (o, t) = scaling_run.join().expect("scaling thread");
    results.push((7, "scaling", report(7, "scaling", &o, t)));
    let t = Instant::now();
    let o = conservation(&ledger);
    results.push((9, "counter conservation", report(9, "counter conservation", &o, t)));

    results.sort_by_key(|r| r.0);
    println!("summary after {:.0}s:", start.elapsed().as_secs_f64());
    for (id, name, pass) in &results {
        println!("  criterion {id:>2} {:<22} {}", name, if *pass { "PASS" } else { "FAIL" });
    }
    if results.iter().all(|r| r.2) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
