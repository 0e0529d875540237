//! Construction cost as the layer count grows, the pattern a sweep over
//! pivot counts reveals: one coarse layer must stay large, more layers
//! share the work.

use grng::bench::{run_sweep, write_sweep_csv};
use grng::datagen::{generate, queries, GenSpec};
use grng::hierarchy::RadiiSchedule;
use grng::{HierarchyConfig, MetricKind};

fn main() -> grng::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(10_000, |a| a.parse().expect("N"));
    let data = generate(&GenSpec::uniform(n, 2, 10))?;
    let q = queries(&data, 100, 11)?;
    let schedules: Vec<RadiiSchedule> = (1..=5).map(RadiiSchedule::layers).chain([RadiiSchedule::spacing()]).collect();
    let rows = run_sweep(&data, &schedules, &[0], &HierarchyConfig::default(), MetricKind::L2, Some(&q))?;
    for r in &rows {
        println!(
            "{:<28} pivots {:<28} build/pt {:>8.1} search {:>8.1}",
            r.label,
            format!("{:?}", r.pivots),
            r.per_point,
            r.search_mean.unwrap_or(0.0)
        );
    }
    write_sweep_csv(&rows, &mut std::io::stdout()).expect("stdout");
    Ok(())
}
