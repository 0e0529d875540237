//! Experiment drivers behind the command-line tool: build, search, sweep and
//! graph export, each producing a serializable report.
//!
//! Oracle checks always run on a separate metric instance, so they never show
//! up in a hierarchy's counters.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{DegreeStats, UndirectedGraph};
use crate::hierarchy::{Hierarchy, HierarchyConfig, RadiiSchedule};
use crate::metric::{Metric, MetricKind};
use crate::oracle;
use crate::stats::{Stage, StageCounts};

/// Largest N the O(N³) oracles accept unless overridden.
pub const DEFAULT_ORACLE_CAP: usize = 5000;

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub source: String,
    pub n: usize,
    pub dim: usize,
}

impl DatasetInfo {
    pub fn of(source: impl Into<String>, data: &Dataset) -> Self {
        DatasetInfo {
            source: source.into(),
            n: data.len(),
            dim: data.dim(),
        }
    }
}

/// One `(layer, stage, count)` cell.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct StageRow {
    pub layer: usize,
    pub stage: String,
    pub count: u64,
}

fn rows(counts: &StageCounts) -> Vec<StageRow> {
    counts
        .iter()
        .map(|(layer, stage, count)| StageRow {
            layer,
            stage: stage.label().to_string(),
            count,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub construction_distances: u64,
    pub per_point: f64,
    pub promotions: usize,
    pub stages: Vec<StageRow>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub queries: usize,
    /// Queries equal to a stored point; reported and skipped.
    pub duplicates: Vec<usize>,
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
    /// Whether recorded candidate counts never grew from one stage to the next.
    pub survivors_monotone: bool,
    pub stages: Vec<StageRow>,
    pub seconds: f64,
    /// Neighbor sets, in query order; empty for skipped queries.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub neighbors: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleSummary {
    pub extra: usize,
    pub missing: usize,
    /// Queries whose neighbor set disagreed with the oracle.
    pub failed_queries: usize,
    /// A few offending edges or query indices, for the error message.
    pub sample: Vec<String>,
    pub seconds: f64,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.extra == 0 && self.missing == 0 && self.failed_queries == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub dataset: DatasetInfo,
    pub metric: String,
    pub config: HierarchyConfig,
    pub radii: Vec<f64>,
    pub pivots: Vec<usize>,
    pub edges: usize,
    pub average_degree: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    /// Sum of every counter cell in the hierarchy's accumulator.
    pub counted: u64,
    /// Inner metric evaluations; equals `counted` when bookkeeping is sound.
    pub evaluations: u64,
}

impl BenchReport {
    fn describe(h: &Hierarchy, dataset: DatasetInfo) -> Self {
        let rng = h.rng();
        BenchReport {
            dataset,
            metric: h.metric().name().to_string(),
            config: h.config().clone(),
            radii: h.radii().to_vec(),
            pivots: h.layers().iter().map(|l| l.len()).collect(),
            edges: rng.edge_count(),
            average_degree: rng.degree_stats().average,
            build: None,
            search: None,
            oracle: None,
            counted: h.stats().total(),
            evaluations: h.stats().evaluations(),
        }
    }

    pub fn oracle_passed(&self) -> bool {
        self.oracle.as_ref().is_none_or(OracleSummary::passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-stage counters as CSV: `phase,layer,stage,count`.
    pub fn write_stats_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "phase,layer,stage,count")?;
        let phases = [
            ("build", self.build.as_ref().map(|b| &b.stages)),
            ("search", self.search.as_ref().map(|s| &s.stages)),
        ];
        for (phase, stages) in phases {
            for r in stages.into_iter().flatten() {
                writeln!(w, "{phase},{},{},{}", r.layer, r.stage, r.count)?;
            }
        }
        Ok(())
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Config(format!(
            "oracle refused: N = {n} exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

/// Builds a hierarchy and reports on it. With `oracle_cap` set, the bottom
/// layer is compared against the brute-force RNG.
pub fn run_build(
    data: &Dataset,
    source: &str,
    config: HierarchyConfig,
    metric: MetricKind,
    oracle_cap: Option<usize>,
) -> Result<(Hierarchy, BenchReport)> {
    if let Some(cap) = oracle_cap {
        check_cap(data.len(), cap)?;
    }
    let start = Instant::now();
    let (h, build) = Hierarchy::build(data, config, metric.shared())?;
    let seconds = start.elapsed().as_secs_f64();
    let mut report = BenchReport::describe(&h, DatasetInfo::of(source, data));
    let construction = build.totals.total();
    report.build = Some(BuildSummary {
        construction_distances: construction,
        per_point: if data.is_empty() { 0.0 } else { construction as f64 / data.len() as f64 },
        promotions: build.promotions,
        stages: rows(&build.totals),
        seconds,
    });
    if oracle_cap.is_some() {
        let start = Instant::now();
        let reference = oracle::brute_rng(h.points(), metric.instance().as_ref());
        let diff = h.rng().diff(&reference);
        let sample = diff
            .extra
            .iter()
            .map(|e| format!("+{e:?}"))
            .chain(diff.missing.iter().map(|e| format!("-{e:?}")))
            .take(10)
            .collect();
        report.oracle = Some(OracleSummary {
            extra: diff.extra.len(),
            missing: diff.missing.len(),
            failed_queries: 0,
            sample,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((h, report))
}

/// Runs every query concurrently against `h`. Queries that duplicate a
/// stored point are listed and skipped.
pub fn run_search(
    h: &Hierarchy,
    source: &str,
    queries: &Dataset,
    oracle_cap: Option<usize>,
    keep_neighbors: bool,
) -> Result<BenchReport> {
    if let Some(cap) = oracle_cap {
        check_cap(h.len() + 1, cap)?;
    }
    let start = Instant::now();
    let results: Vec<Result<crate::hierarchy::SearchResult>> = (0..queries.len() as u32)
        .into_par_iter()
        .map(|i| h.search(queries.point(i)))
        .collect();
    let seconds = start.elapsed().as_secs_f64();

    let mut duplicates = Vec::new();
    let mut costs = Vec::new();
    let mut totals = StageCounts::default();
    let mut monotone = true;
    let mut neighbors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(res) => {
                costs.push(res.stats.total());
                totals.merge(&res.stats);
                monotone &= res.survivors.iter().all(|s| s.is_monotone());
                neighbors.push(res.neighbors);
            }
            Err(Error::Duplicate { .. }) => {
                duplicates.push(i);
                neighbors.push(Vec::new());
            }
            Err(e) => return Err(e),
        }
    }
    let oracle = oracle_cap.map(|_| search_oracle(h, queries, &neighbors, &duplicates));

    let mut sorted = costs.clone();
    sorted.sort_unstable();
    let pct = |p: f64| -> u64 {
        if sorted.is_empty() {
            return 0;
        }
        let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
        sorted[idx]
    };
    let mut report = BenchReport::describe(h, DatasetInfo::of(source, h.points()));
    report.search = Some(SearchSummary {
        queries: queries.len(),
        mean: if costs.is_empty() {
            0.0
        } else {
            costs.iter().sum::<u64>() as f64 / costs.len() as f64
        },
        p50: pct(0.5),
        p90: pct(0.9),
        p99: pct(0.99),
        max: sorted.last().copied().unwrap_or(0),
        duplicates,
        survivors_monotone: monotone,
        stages: rows(&totals),
        seconds,
        neighbors: if keep_neighbors { neighbors } else { Vec::new() },
    });
    report.oracle = oracle;
    Ok(report)
}

fn search_oracle(h: &Hierarchy, queries: &Dataset, got: &[Vec<u32>], skipped: &[usize]) -> OracleSummary {
    let start = Instant::now();
    let metric = oracle_metric(h);
    let failed: Vec<usize> = (0..queries.len())
        .into_par_iter()
        .filter(|i| skipped.binary_search(i).is_err())
        .filter(|&i| oracle::rng_neighbors_of(h.points(), queries.point(i as u32), metric.as_ref()) != got[i])
        .collect();
    OracleSummary {
        extra: 0,
        missing: 0,
        failed_queries: failed.len(),
        sample: failed.iter().take(10).map(|i| format!("query {i}")).collect(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// A fresh, uncounted instance of the hierarchy's metric.
fn oracle_metric(h: &Hierarchy) -> Box<dyn Metric> {
    match h.metric().name().parse::<MetricKind>() {
        Ok(kind) => kind.instance(),
        Err(_) => Box::new(ArcMetric(h.metric().clone())),
    }
}

struct ArcMetric(Arc<dyn Metric>);

impl Metric for ArcMetric {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.0.distance(a, b)
    }

    fn name(&self) -> &'static str {
        self.0.name()
    }
}

/// One configuration of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub seed: u64,
    pub layers: usize,
    pub pivots: Vec<usize>,
    pub radii: Vec<f64>,
    pub construction_distances: u64,
    pub per_point: f64,
    /// Construction totals per stage, in [`Stage::ALL`] order.
    pub by_stage: Vec<u64>,
    pub search_mean: Option<f64>,
    pub edges: usize,
    pub average_degree: f64,
    pub build_seconds: f64,
}

/// Builds `data` once per schedule (and per seed, which only moves the
/// diameter sample), optionally timing searches for `queries`.
pub fn run_sweep(
    data: &Dataset,
    schedules: &[RadiiSchedule],
    seeds: &[u64],
    base: &HierarchyConfig,
    metric: MetricKind,
    queries: Option<&Dataset>,
) -> Result<Vec<SweepRow>> {
    let mut out = Vec::new();
    for schedule in schedules {
        for &seed in seeds {
            let config = HierarchyConfig {
                radii: schedule.clone(),
                seed,
                ..base.clone()
            };
            let (h, report) = run_build(data, "sweep", config, metric, None)?;
            let build = report.build.expect("build summary");
            let totals = h.stats().snapshot();
            let search_mean = match queries {
                Some(q) => run_search(&h, "sweep", q, None, false)?.search.map(|s| s.mean),
                None => None,
            };
            out.push(SweepRow {
                label: schedule_label(schedule),
                seed,
                layers: report.radii.len(),
                pivots: report.pivots,
                radii: report.radii,
                construction_distances: build.construction_distances,
                per_point: build.per_point,
                by_stage: Stage::ALL.iter().map(|&s| totals.stage_total(s)).collect(),
                search_mean,
                edges: report.edges,
                average_degree: report.average_degree,
                build_seconds: build.seconds,
            });
        }
    }
    Ok(out)
}

pub fn schedule_label(s: &RadiiSchedule) -> String {
    match s {
        RadiiSchedule::Explicit { radii } => {
            let parts: Vec<String> = radii.iter().map(|r| r.to_string()).collect();
            format!("radii={}", parts.join(":"))
        }
        RadiiSchedule::Geometric { layers, decay, top } => match top {
            Some(t) => format!("layers={layers} decay={decay} top={t}"),
            None => format!("layers={layers} decay={decay}"),
        },
        RadiiSchedule::Spacing { factor, decay } => format!("spacing={factor} decay={decay}"),
    }
}

pub fn write_sweep_csv(rows: &[SweepRow], w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "label,seed,layers,pivots,radii,construction_distances,per_point")?;
    for s in Stage::ALL {
        write!(w, ",{}", s.label())?;
    }
    writeln!(w, ",search_mean,edges,average_degree,build_seconds")?;
    let join = |v: Vec<String>| v.join(":");
    for r in rows {
        write!(
            w,
            "\"{}\",{},{},{},{},{},{:.6}",
            r.label,
            r.seed,
            r.layers,
            join(r.pivots.iter().map(|p| p.to_string()).collect()),
            join(r.radii.iter().map(|p| p.to_string()).collect()),
            r.construction_distances,
            r.per_point
        )?;
        for n in &r.by_stage {
            write!(w, ",{n}")?;
        }
        let mean = r.search_mean.map_or(String::new(), |m| format!("{m:.6}"));
        writeln!(w, ",{mean},{},{:.6},{:.3}", r.edges, r.average_degree, r.build_seconds)?;
    }
    Ok(())
}

/// The four classical graphs of one dataset, smallest first.
#[derive(Debug, Clone)]
pub struct GraphSet {
    pub knn: UndirectedGraph,
    pub mst: UndirectedGraph,
    pub rng: UndirectedGraph,
    pub gg: UndirectedGraph,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphsReport {
    pub dataset: DatasetInfo,
    pub metric: String,
    pub knn: DegreeStats,
    pub mst: DegreeStats,
    pub rng: DegreeStats,
    pub gg: DegreeStats,
    /// 1-NN ⊆ MST ⊆ RNG ⊆ GG
    pub chain_holds: bool,
    pub rng_connected: bool,
}

/// Brute-force 1-NN graph, MST, RNG and GG. Refused above `cap` points.
pub fn run_graphs(data: &Dataset, source: &str, metric: MetricKind, cap: usize) -> Result<(GraphSet, GraphsReport)> {
    check_cap(data.len(), cap)?;
    let m = metric.instance();
    let knn = if data.len() < 2 {
        UndirectedGraph::new(data.len())
    } else {
        oracle::knn_graph(data, m.as_ref(), 1)?
    };
    let set = GraphSet {
        mst: oracle::brute_mst(data, m.as_ref()),
        rng: oracle::brute_rng(data, m.as_ref()),
        gg: oracle::brute_gg(data, m.as_ref()),
        knn,
    };
    let report = GraphsReport {
        dataset: DatasetInfo::of(source, data),
        metric: metric.name().to_string(),
        knn: set.knn.degree_stats(),
        mst: set.mst.degree_stats(),
        rng: set.rng.degree_stats(),
        gg: set.gg.degree_stats(),
        chain_holds: set.knn.is_subset_of(&set.mst)
            && set.mst.is_subset_of(&set.rng)
            && set.rng.is_subset_of(&set.gg),
        rng_connected: set.rng.is_connected(),
    };
    Ok((set, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, queries, GenSpec};

    #[test]
    fn build_report_reconciles() {
        let data = generate(&GenSpec::uniform(400, 2, 1)).unwrap();
        let (_, r) = run_build(&data, "t", HierarchyConfig::with_layers(2), MetricKind::L2, Some(DEFAULT_ORACLE_CAP)).unwrap();
        assert!(r.oracle_passed());
        assert_eq!(r.counted, r.evaluations);
        assert_eq!(r.build.unwrap().construction_distances, r.counted);
    }

    #[test]
    fn search_skips_duplicates() {
        let data = generate(&GenSpec::uniform(200, 2, 2)).unwrap();
        let (h, _) = run_build(&data, "t", HierarchyConfig::default(), MetricKind::L2, None).unwrap();
        let mut q = queries(&data, 5, 3).unwrap();
        q.push(data.point(7)).unwrap();
        let r = run_search(&h, "t", &q, Some(DEFAULT_ORACLE_CAP), true).unwrap();
        let s = r.search.as_ref().unwrap();
        assert_eq!(s.duplicates, vec![5]);
        assert!(r.oracle_passed());
        assert_eq!(r.counted, r.evaluations);
    }

    #[test]
    fn oracle_cap_refuses() {
        let data = generate(&GenSpec::uniform(50, 2, 2)).unwrap();
        assert!(run_graphs(&data, "t", MetricKind::L2, 10).is_err());
        assert!(run_build(&data, "t", HierarchyConfig::default(), MetricKind::L2, Some(10)).is_err());
    }

    #[test]
    fn sweep_csv_has_one_row_per_config() {
        let data = generate(&GenSpec::uniform(300, 2, 4)).unwrap();
        let schedules = [RadiiSchedule::layers(2), RadiiSchedule::layers(3)];
        let rows = run_sweep(&data, &schedules, &[0, 1], &HierarchyConfig::default(), MetricKind::L2, None).unwrap();
        let mut out = Vec::new();
        write_sweep_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 5);
    }
}
