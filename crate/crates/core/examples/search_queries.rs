//! Ask for the RNG neighbors a new point would get, without inserting it,
//! then insert it and compare.

use grng::datagen::{generate, queries, GenSpec};
use grng::{Hierarchy, HierarchyConfig, MetricKind};

fn main() -> grng::Result<()> {
    let data = generate(&GenSpec::clustered(5000, 3, 1))?;
    let (mut h, _) = Hierarchy::build(&data, HierarchyConfig::default(), MetricKind::L2.shared())?;
    let q = queries(&data, 5, 2)?;

    for i in 0..q.len() as u32 {
        let found = h.search(q.point(i))?;
        println!(
            "query {i}: neighbors {:?} after {} distances",
            found.neighbors,
            found.stats.total()
        );
        for s in &found.survivors {
            println!("    layer {} candidates by stage {:?}", s.layer, s.counts);
        }
    }

    // search agrees with what insert would link
    let predicted = h.search(q.point(0))?.neighbors;
    let inserted = h.insert(q.point(0))?;
    let linked: Vec<u32> = inserted.added.iter().map(|e| e.0).collect();
    assert_eq!(predicted, linked);
    println!("insert linked {} to {linked:?}", inserted.id);

    // a stored point is refused
    match h.search(data.point(3)) {
        Err(e) => println!("duplicate query: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
