//! The generalized RNG of 200 points as the pivot radius grows: edge sets
//! are nested, radius 0 gives the RNG, and past a sixth of the largest
//! distance every pair is linked.

use grng::datagen::{generate, GenSpec};
use grng::oracle::{brute_grng_uniform, brute_rng};
use grng::{Metric, L2};

fn main() -> grng::Result<()> {
    let data = generate(&GenSpec::uniform(200, 2, 3))?;
    let mut dmax = 0.0f64;
    for a in data.iter() {
        for b in data.iter() {
            dmax = dmax.max(L2.distance(a.coords, b.coords));
        }
    }

    let mut prev = None;
    for r in [0.0, 0.01, 0.02, 0.04, 0.08, 0.16, dmax / 6.0 * 1.001] {
        let g = brute_grng_uniform(&data, r, &L2)?;
        let nested = prev.as_ref().is_none_or(|p: &grng::UndirectedGraph| p.is_subset_of(&g));
        println!(
            "r = {r:.4}  edges {:>5}  avg degree {:>6.2}  nested {nested}",
            g.edge_count(),
            g.degree_stats().average
        );
        prev = Some(g);
    }
    println!("complete graph has {} edges", 200 * 199 / 2);
    println!("r = 0 is the RNG: {}", brute_grng_uniform(&data, 0.0, &L2)? == brute_rng(&data, &L2));
    Ok(())
}
