//! 1-NN graph, minimum spanning tree, RNG and Gabriel graph of one point
//! set. Each is a subgraph of the next.

use grng::bench::{run_graphs, DEFAULT_ORACLE_CAP};
use grng::datagen::{generate, GenSpec};
use grng::MetricKind;

fn main() -> grng::Result<()> {
    for dim in 2..=6 {
        let data = generate(&GenSpec::uniform(1000, dim, 4))?;
        let (graphs, report) = run_graphs(&data, "uniform", MetricKind::L2, DEFAULT_ORACLE_CAP)?;
        println!(
            "d={dim}: 1nn {:>4} mst {:>4} rng {:>4} gg {:>5} edges, rng degree {:.3}, chain {}",
            graphs.knn.edge_count(),
            graphs.mst.edge_count(),
            graphs.rng.edge_count(),
            graphs.gg.edge_count(),
            report.rng.average,
            report.chain_holds
        );
    }
    Ok(())
}
