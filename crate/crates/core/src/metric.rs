//! Metric abstraction and the two shipped vector metrics.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Error;

/// A distance function over coordinate slices.
///
/// Implementations are expected to satisfy identity, symmetry and the
/// triangle inequality; every pruning rule in the hierarchy relies on the
/// latter. [`verify_metric_axioms`] spot-checks a metric on sampled data.
pub trait Metric: Send + Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;

    fn name(&self) -> &'static str;
}

/// Euclidean distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct L2;

impl Metric for L2 {
    #[inline]
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn name(&self) -> &'static str {
        "l2"
    }
}

/// Manhattan distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct L1;

impl Metric for L1 {
    #[inline]
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    fn name(&self) -> &'static str {
        "l1"
    }
}

/// Metric selector used by the CLI, snapshots and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    L2,
    L1,
}

impl MetricKind {
    pub fn instance(self) -> Box<dyn Metric> {
        match self {
            MetricKind::L2 => Box::new(L2),
            MetricKind::L1 => Box::new(L1),
        }
    }

    pub fn shared(self) -> std::sync::Arc<dyn Metric> {
        match self {
            MetricKind::L2 => std::sync::Arc::new(L2),
            MetricKind::L1 => std::sync::Arc::new(L1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::L2 => "l2",
            MetricKind::L1 => "l1",
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(MetricKind::L2),
            "l1" | "manhattan" => Ok(MetricKind::L1),
            _ => Err(Error::UnknownMetric(s.to_string())),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Wraps a metric and counts every evaluation, independently of any
/// [`StageStats`](crate::stats::StageStats) bookkeeping.
pub struct Probe<M> {
    inner: M,
    calls: AtomicU64,
}

impl<M: Metric> Probe<M> {
    pub fn new(inner: M) -> Self {
        Probe {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<M: Metric> Metric for Probe<M> {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.distance(a, b)
    }

    fn name(&self) -> &'static str {
        self.inner.name()
    }
}

impl<M: Metric + ?Sized> Metric for std::sync::Arc<M> {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        (**self).distance(a, b)
    }

    fn name(&self) -> &'static str {
        (**self).name()
    }
}

impl<M: Metric + ?Sized> Metric for Box<M> {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        (**self).distance(a, b)
    }

    fn name(&self) -> &'static str {
        (**self).name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxiomViolation {
    /// `d(x, y) = 0` for distinct coordinates, or `d(x, x) != 0`.
    Identity { x: u32, y: u32, distance: f64 },
    Symmetry { x: u32, y: u32, forward: f64, backward: f64 },
    Triangle { x: u32, y: u32, z: u32, direct: f64, detour: f64 },
    Negative { x: u32, y: u32, distance: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct AxiomReport {
    pub samples: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `samples` random triples from `dataset` and checks the metric
/// axioms on each. Every violation is reported with its offending ids.
pub fn verify_metric_axioms(
    metric: &dyn Metric,
    dataset: &Dataset,
    samples: usize,
    seed: u64,
) -> AxiomReport {
    let mut report = AxiomReport {
        samples,
        violations: Vec::new(),
    };
    let n = dataset.len();
    if n == 0 {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = rng.gen_range(0..n) as u32;
        let y = rng.gen_range(0..n) as u32;
        let z = rng.gen_range(0..n) as u32;
        let (px, py, pz) = (dataset.point(x), dataset.point(y), dataset.point(z));

        let self_d = metric.distance(px, px);
        if self_d != 0.0 {
            report.violations.push(AxiomViolation::Identity {
                x,
                y: x,
                distance: self_d,
            });
        }
        let dxy = metric.distance(px, py);
        let dyx = metric.distance(py, px);
        if dxy < 0.0 {
            report.violations.push(AxiomViolation::Negative {
                x,
                y,
                distance: dxy,
            });
        }
        if dxy != dyx {
            report.violations.push(AxiomViolation::Symmetry {
                x,
                y,
                forward: dxy,
                backward: dyx,
            });
        }
        if x != y && dxy == 0.0 && px != py {
            report.violations.push(AxiomViolation::Identity { x, y, distance: dxy });
        }
        let dxz = metric.distance(px, pz);
        let dyz = metric.distance(py, pz);
        // Relative slack for rounding in the summed detour.
        let detour = dxy + dyz;
        if dxz > detour * (1.0 + 1e-12) + f64::EPSILON {
            report.violations.push(AxiomViolation::Triangle {
                x,
                y,
                z,
                direct: dxz,
                detour,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_three_four_five() {
        assert_eq!(L2.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn l1_identity() {
        assert_eq!(L1.distance(&[1.0, 1.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("l2".parse::<MetricKind>().unwrap(), MetricKind::L2);
        assert_eq!("L1".parse::<MetricKind>().unwrap(), MetricKind::L1);
        assert!("cosine".parse::<MetricKind>().is_err());
    }

    struct Signed;

    impl Metric for Signed {
        fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
            a[0] - b[0]
        }
        fn name(&self) -> &'static str {
            "signed"
        }
    }

    #[test]
    fn antisymmetric_function_is_reported() {
        let ds = Dataset::from_rows(vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]]).unwrap();
        let report = verify_metric_axioms(&Signed, &ds, 200, 1);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, AxiomViolation::Symmetry { .. })));
    }

    #[test]
    fn l2_has_no_violations() {
        let ds = crate::datagen::generate(&crate::datagen::GenSpec::uniform(200, 3, 5)).unwrap();
        let report = verify_metric_axioms(&L2, &ds, 1000, 9);
        assert!(report.is_clean(), "{:?}", report.violations);
    }
}
