//! Seeded synthetic point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::dataset::{coord_key, Dataset};
use crate::error::{Error, Result};

/// Side length of the generation cube `[-1, 1]^d`.
pub const SIDE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenKind {
    UniformCube,
    GaussianClusters {
        clusters: usize,
        /// Standard deviation per coordinate.
        sigma: f64,
        /// Share of points drawn uniformly instead of from a cluster.
        outlier_fraction: f64,
    },
}

impl GenKind {
    pub fn clustered() -> Self {
        GenKind::GaussianClusters {
            clusters: 10,
            sigma: 0.02 * SIDE,
            outlier_fraction: 0.01,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GenKind::UniformCube => "uniform",
            GenKind::GaussianClusters { .. } => "clustered",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(GenKind::UniformCube),
            "clustered" | "gaussian" => Ok(GenKind::clustered()),
            other => Err(Error::Config(format!("unknown distribution `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn uniform(n: usize, dim: usize, seed: u64) -> Self {
        GenSpec { kind: GenKind::UniformCube, n, dim, seed }
    }

    pub fn clustered(n: usize, dim: usize, seed: u64) -> Self {
        GenSpec { kind: GenKind::clustered(), n, dim, seed }
    }

    /// Parses `kind:n:dim`, e.g. `uniform:1000:2`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::Config(format!("expected kind:n:dim, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(GenSpec {
            kind: GenKind::parse(parts[0])?,
            n: parts[1].parse().map_err(|_| bad())?,
            dim: parts[2].parse().map_err(|_| bad())?,
            seed,
        })
    }
}

/// Draws `spec.n` distinct points. Exact duplicates are re-drawn, so the
/// output never trips duplicate detection.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    if spec.dim == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = SIDE / 2.0;
    let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..spec.dim).map(|_| rng.gen_range(-half..half)).collect()
    };
    let mut ds = Dataset::new(spec.dim);
    let mut seen: FxHashSet<Vec<u64>> = FxHashSet::default();
    match &spec.kind {
        GenKind::UniformCube => {
            while ds.len() < spec.n {
                let row = uniform(&mut rng);
                if seen.insert(coord_key(&row)) {
                    ds.push(&row)?;
                }
            }
        }
        GenKind::GaussianClusters { clusters, sigma, outlier_fraction } => {
            if *clusters == 0 || !(*sigma > 0.0) || !(0.0..=1.0).contains(outlier_fraction) {
                return Err(Error::Config(format!("bad cluster parameters {:?}", spec.kind)));
            }
            let centers: Vec<Vec<f64>> = (0..*clusters).map(|_| uniform(&mut rng)).collect();
            let noise = Normal::new(0.0, *sigma).map_err(|e| Error::Config(e.to_string()))?;
            while ds.len() < spec.n {
                let row = if rng.gen_bool(*outlier_fraction) {
                    uniform(&mut rng)
                } else {
                    let c = &centers[rng.gen_range(0..*clusters)];
                    c.iter().map(|&x| x + noise.sample(&mut rng)).collect()
                };
                if seen.insert(coord_key(&row)) {
                    ds.push(&row)?;
                }
            }
        }
    }
    Ok(ds)
}

/// Uniform queries that are not in `base`.
pub fn queries(base: &Dataset, count: usize, seed: u64) -> Result<Dataset> {
    let spec = GenSpec::uniform(count + base.len().min(8), base.dim(), seed ^ 0x9e37_79b9_7f4a_7c15);
    let pool = generate(&spec)?;
    let taken: FxHashSet<Vec<u64>> = base.iter().map(|p| coord_key(p.coords)).collect();
    let mut out = Dataset::new(base.dim());
    for p in pool.iter() {
        if out.len() == count {
            break;
        }
        if !taken.contains(&coord_key(p.coords)) {
            out.push(p.coords)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_source_text() {
        assert_eq!(GenSpec::parse("uniform:1000:2", 4).unwrap(), GenSpec::uniform(1000, 2, 4));
        assert_eq!(GenSpec::parse("clustered:50:3", 0).unwrap().kind, GenKind::clustered());
        assert!(GenSpec::parse("uniform:10", 0).is_err());
        assert!(GenSpec::parse("cube:10:2", 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&GenSpec::uniform(50, 3, 7)).unwrap();
        let b = generate(&GenSpec::uniform(50, 3, 7)).unwrap();
        let c = generate(&GenSpec::uniform(50, 3, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn clustered_points_are_distinct() {
        let ds = generate(&GenSpec::clustered(500, 2, 1)).unwrap();
        assert_eq!(ds.len(), 500);
        assert!(ds.dedup().1.removed.is_empty());
    }

    #[test]
    fn uniform_stays_in_cube() {
        let ds = generate(&GenSpec::uniform(200, 4, 2)).unwrap();
        assert!(ds.iter().all(|p| p.coords.iter().all(|x| (-1.0..1.0).contains(x))));
    }
}
