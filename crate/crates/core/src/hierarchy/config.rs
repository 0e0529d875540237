use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::stats::{Stage, StageCounts};

pub const DEFAULT_K_BUDGET: usize = 25;
pub const DEFAULT_DECAY: f64 = 0.25;
const DIAMETER_SAMPLES: usize = 64;
const NN_SAMPLES: usize = 32;

/// Per-layer pivot radii, coarsest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiiSchedule {
    /// Used verbatim; must be strictly decreasing and end in 0.
    Explicit { radii: Vec<f64> },
    /// `top * decay^l` for every layer but the last, which gets 0. Without a
    /// `top`, half of a sampled diameter estimate is used.
    Geometric {
        top: Option<f64>,
        decay: f64,
        layers: usize,
    },
    /// Anchored at the bottom: the finest nonzero radius is `factor` times
    /// a sampled median nearest-neighbor distance, each coarser layer divides
    /// by `decay`, and layers stop below half the diameter. Layer count grows
    /// with N.
    Spacing { factor: f64, decay: f64 },
}

impl RadiiSchedule {
    pub fn layers(layers: usize) -> Self {
        RadiiSchedule::Geometric {
            top: None,
            decay: DEFAULT_DECAY,
            layers,
        }
    }

    pub fn spacing() -> Self {
        RadiiSchedule::Spacing {
            factor: 2.0,
            decay: DEFAULT_DECAY,
        }
    }

    pub fn explicit(radii: Vec<f64>) -> Self {
        RadiiSchedule::Explicit { radii }
    }
}

impl Default for RadiiSchedule {
    fn default() -> Self {
        RadiiSchedule::spacing()
    }
}

/// Switches for the pruning stages. A disabled stage falls back to an
/// exhaustive check, so only the distance counts change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageToggles {
    pub s1: bool,
    pub s2: bool,
    pub s3: bool,
    pub s4: bool,
    pub s5: bool,
    pub s6: bool,
    pub s7: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            s1: true,
            s2: true,
            s3: true,
            s4: true,
            s5: true,
            s6: true,
            s7: true,
        }
    }
}

impl StageToggles {
    /// Everything on except `stage`.
    pub fn without(stage: Stage) -> Self {
        let mut t = StageToggles::default();
        match stage {
            Stage::S1 => t.s1 = false,
            Stage::S2 => t.s2 = false,
            Stage::S3 => t.s3 = false,
            Stage::S4 => t.s4 = false,
            Stage::S5 => t.s5 = false,
            Stage::S6 => t.s6 = false,
            Stage::S7 => t.s7 = false,
            _ => {}
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub radii: RadiiSchedule,
    /// Neighbor budget for the graph walk in stage 5.
    pub k_budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub stages: StageToggles,
    /// Memoize pair distances within an episode.
    #[serde(default = "yes")]
    pub cache: bool,
}

fn yes() -> bool {
    true
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            radii: RadiiSchedule::default(),
            k_budget: DEFAULT_K_BUDGET,
            seed: 0,
            stages: StageToggles::default(),
            cache: true,
        }
    }
}

impl HierarchyConfig {
    pub fn with_radii(radii: Vec<f64>) -> Self {
        HierarchyConfig {
            radii: RadiiSchedule::explicit(radii),
            ..Default::default()
        }
    }

    pub fn with_layers(layers: usize) -> Self {
        HierarchyConfig {
            radii: RadiiSchedule::layers(layers),
            ..Default::default()
        }
    }

    /// Concrete radii. Estimating the diameter costs distance evaluations,
    /// which are added to `setup` under [`Stage::Setup`].
    pub fn resolve_radii(
        &self,
        data: Option<&Dataset>,
        metric: &dyn Metric,
        setup: &mut StageCounts,
    ) -> Result<Vec<f64>> {
        if self.k_budget == 0 {
            return Err(Error::Config("k budget must be at least 1".into()));
        }
        let radii = match &self.radii {
            RadiiSchedule::Explicit { radii } => radii.clone(),
            RadiiSchedule::Geometric { top, decay, layers } => {
                if *layers == 0 {
                    return Err(Error::Config("at least one layer is required".into()));
                }
                if !(*decay > 0.0 && *decay < 1.0) {
                    return Err(Error::Config(format!("decay {decay} outside (0, 1)")));
                }
                let top = match top {
                    Some(t) => *t,
                    None if *layers == 1 => 0.0,
                    None => {
                        let data = data.ok_or_else(|| {
                            Error::Config("top radius needed when no data is available".into())
                        })?;
                        0.5 * estimate_diameter(data, metric, self.seed, setup)
                    }
                };
                let mut r: Vec<f64> = (0..layers - 1).map(|l| top * decay.powi(l as i32)).collect();
                r.push(0.0);
                r
            }
            RadiiSchedule::Spacing { factor, decay } => {
                if !(*decay > 0.0 && *decay < 1.0) {
                    return Err(Error::Config(format!("decay {decay} outside (0, 1)")));
                }
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::Config(format!("spacing factor {factor} must be positive")));
                }
                let data = data.ok_or_else(|| {
                    Error::Config("spacing schedule needs the data up front".into())
                })?;
                spacing_radii(data, metric, *factor, *decay, self.seed, setup)
            }
        };
        check_radii(&radii)?;
        Ok(radii)
    }
}

fn spacing_radii(
    data: &Dataset,
    metric: &dyn Metric,
    factor: f64,
    decay: f64,
    seed: u64,
    setup: &mut StageCounts,
) -> Vec<f64> {
    let diam = estimate_diameter(data, metric, seed, setup);
    let nn = estimate_nn_distance(data, metric, seed, setup);
    let cap = 0.5 * diam;
    let mut r = vec![0.0];
    let mut next = factor * nn;
    while next > 0.0 && next <= cap {
        r.push(next);
        next /= decay;
    }
    r.reverse();
    r
}

/// Median nearest-neighbor distance of a few random points, each measured
/// against the whole dataset.
pub fn estimate_nn_distance(
    data: &Dataset,
    metric: &dyn Metric,
    seed: u64,
    setup: &mut StageCounts,
) -> f64 {
    let n = data.len();
    if n < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6e);
    let mut nn: Vec<f64> = (0..NN_SAMPLES.min(n))
        .map(|_| {
            let a = rng.gen_range(0..n as u32);
            let pa = data.point(a);
            (0..n as u32)
                .filter(|&b| b != a)
                .map(|b| metric.distance(pa, data.point(b)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    setup.add(0, Stage::Setup, (nn.len() * (n - 1)) as u64);
    nn.sort_unstable_by(f64::total_cmp);
    nn[nn.len() / 2]
}

pub(crate) fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.last() != Some(&0.0) {
        return Err(Error::Config(format!("finest radius must be 0, got {radii:?}")));
    }
    if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Config(format!("radii must be finite and non-negative: {radii:?}")));
    }
    if radii.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Config(format!("radii must strictly decrease: {radii:?}")));
    }
    Ok(())
}

/// Largest distance seen in a few short farthest-point walks. A scale
/// estimate, not a bound.
pub fn estimate_diameter(
    data: &Dataset,
    metric: &dyn Metric,
    seed: u64,
    setup: &mut StageCounts,
) -> f64 {
    let n = data.len();
    if n < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut evals = 0u64;
    for _ in 0..DIAMETER_SAMPLES.min(n) {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        // walk to the farthest point from a random sample, twice
        let mut far = a;
        for _ in 0..2 {
            let pf = data.point(far);
            let mut next = far;
            let mut dmax = 0.0;
            for _ in 0..8 {
                let c = rng.gen_range(0..n as u32);
                let d = metric.distance(pf, data.point(c));
                evals += 1;
                if d > dmax {
                    dmax = d;
                    next = c;
                }
            }
            best = best.max(dmax);
            far = next;
        }
        best = best.max(metric.distance(data.point(a), data.point(b)));
        evals += 1;
    }
    setup.add(0, Stage::Setup, evals);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::L2;

    #[test]
    fn geometric_schedule() {
        let cfg = HierarchyConfig {
            radii: RadiiSchedule::Geometric { top: Some(1.0), decay: 0.5, layers: 4 },
            ..Default::default()
        };
        let r = cfg.resolve_radii(None, &L2, &mut StageCounts::default()).unwrap();
        assert_eq!(r, vec![1.0, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn rejects_bad_radii() {
        for bad in [vec![], vec![0.5], vec![0.1, 0.2, 0.0], vec![0.0, 0.0], vec![-1.0, 0.0]] {
            assert!(HierarchyConfig::with_radii(bad).resolve_radii(None, &L2, &mut StageCounts::default()).is_err());
        }
        let mut cfg = HierarchyConfig::with_radii(vec![0.0]);
        cfg.k_budget = 0;
        assert!(cfg.resolve_radii(None, &L2, &mut StageCounts::default()).is_err());
    }

    #[test]
    fn sampled_diameter_is_counted() {
        let ds = crate::datagen::generate(&crate::datagen::GenSpec::uniform(300, 2, 1)).unwrap();
        let mut setup = StageCounts::default();
        let r = HierarchyConfig::with_layers(3).resolve_radii(Some(&ds), &L2, &mut setup).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0] > 0.5 && r[0] <= 8f64.sqrt() / 2.0);
        assert!(setup.get(0, Stage::Setup) > 0);
    }

    #[test]
    fn spacing_schedule_deepens_with_n() {
        let layers = |n| {
            let ds = crate::datagen::generate(&crate::datagen::GenSpec::uniform(n, 2, 3)).unwrap();
            let mut setup = StageCounts::default();
            let r = HierarchyConfig::default().resolve_radii(Some(&ds), &L2, &mut setup).unwrap();
            // finest nonzero radius near the grid spacing
            let fine = r[r.len() - 2];
            let s = 2.0 / (n as f64).sqrt();
            assert!(fine > 0.5 * s && fine < 2.0 * s, "{fine} vs {s}");
            r.len()
        };
        assert!(layers(400) < layers(25_600));
        assert!(HierarchyConfig::default().resolve_radii(None, &L2, &mut StageCounts::default()).is_err());
    }
}
