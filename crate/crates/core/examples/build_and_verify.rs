//! Build a hierarchy over random points and check it against brute force.
//!
//!     cargo run --release --example build_and_verify -- 2000 3

use grng::datagen::{generate, GenSpec};
use grng::oracle::brute_rng;
use grng::{Hierarchy, HierarchyConfig, MetricKind, L2};

fn main() -> grng::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |a| a.parse().expect("N"));
    let dim: usize = args.next().map_or(2, |a| a.parse().expect("dim"));

    let data = generate(&GenSpec::uniform(n, dim, 7))?;
    let (h, report) = Hierarchy::build(&data, HierarchyConfig::default(), MetricKind::L2.shared())?;

    println!("radii  {:?}", h.radii());
    println!("pivots {:?}", h.layers().iter().map(|l| l.len()).collect::<Vec<_>>());
    println!(
        "{} distances to build, {:.1} per point, {} promotions",
        report.totals.total(),
        report.totals.total() as f64 / n as f64,
        report.promotions
    );

    let diff = h.rng().diff(&brute_rng(&data, &L2));
    println!("vs brute force: +{} -{}", diff.extra.len(), diff.missing.len());
    let audit = h.validate();
    println!("audit: {} violations", audit.violations.len());
    Ok(())
}
