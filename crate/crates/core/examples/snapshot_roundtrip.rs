//! Save a hierarchy, load it back, and keep inserting.

use grng::datagen::{generate, GenSpec};
use grng::oracle::brute_rng;
use grng::{Hierarchy, HierarchyConfig, MetricKind, L2};

fn main() -> grng::Result<()> {
    let data = generate(&GenSpec::uniform(3000, 2, 8))?;
    let half = data.select(&(0..1500).collect::<Vec<_>>());
    let (h, _) = Hierarchy::build(&half, HierarchyConfig::default(), MetricKind::L2.shared())?;

    let path = std::env::temp_dir().join("grng-snapshot.json");
    h.save(&path)?;
    println!("saved {} points to {} ({} bytes)", h.len(), path.display(), std::fs::metadata(&path).map_or(0, |m| m.len()));

    // loading re-derives the bounds and audits the result
    let mut back = Hierarchy::load(&path, None)?;
    assert_eq!(back.rng(), h.rng());
    for i in 1500..3000 {
        back.insert(data.point(i))?;
    }
    println!("after resuming: exact = {}", back.rng() == brute_rng(&data, &L2));
    std::fs::remove_file(&path).ok();
    Ok(())
}
