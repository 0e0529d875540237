//! Where the distance computations go: per-layer, per-stage counts for a
//! build and for a batch of searches, and what each pruning stage saves.

use grng::datagen::{generate, queries, GenSpec};
use grng::hierarchy::StageToggles;
use grng::stats::Stage;
use grng::{Hierarchy, HierarchyConfig, MetricKind};

fn main() -> grng::Result<()> {
    let data = generate(&GenSpec::uniform(4000, 2, 5))?;
    let cfg = HierarchyConfig::with_layers(3);
    let (h, build) = Hierarchy::build(&data, cfg.clone(), MetricKind::L2.shared())?;

    println!("build, {} distances", build.totals.total());
    for (layer, stage, n) in build.totals.iter() {
        println!("  layer {layer} {stage:<12} {n:>9}");
    }

    let q = queries(&data, 100, 6)?;
    let before = h.stats().snapshot();
    for i in 0..q.len() as u32 {
        h.search(q.point(i))?;
    }
    let after = h.stats().snapshot();
    println!("100 searches, {} distances", after.total() - before.total());
    for (layer, stage, n) in after.iter() {
        let d = n - before.get(layer, stage);
        if d > 0 {
            println!("  layer {layer} {stage:<12} {d:>9}");
        }
    }
    // counters match the metric's own call count
    assert_eq!(h.stats().total(), h.stats().evaluations());

    println!("cost with one stage switched off:");
    for stage in [Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::S5, Stage::S6, Stage::S7] {
        let cfg = HierarchyConfig { stages: StageToggles::without(stage), ..cfg.clone() };
        let (off, r) = Hierarchy::build(&data, cfg, MetricKind::L2.shared())?;
        assert_eq!(off.rng(), h.rng());
        println!("  without {stage}: {:>9} ({:+.1}%)", r.totals.total(), pct(r.totals.total(), build.totals.total()));
    }
    Ok(())
}

fn pct(a: u64, b: u64) -> f64 {
    100.0 * (a as f64 - b as f64) / b as f64
}
