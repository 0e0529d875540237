//! Exact relative neighborhood graphs in metric spaces, built incrementally
//! through a hierarchy of generalized RNGs over pivots.
//!
//! ```
//! use grng::datagen::{generate, GenSpec};
//! use grng::hierarchy::{Hierarchy, HierarchyConfig};
//! use grng::metric::MetricKind;
//! use grng::oracle::brute_rng;
//!
//! let data = generate(&GenSpec::uniform(300, 2, 7)).unwrap();
//! let (h, _) = Hierarchy::build(&data, HierarchyConfig::with_layers(3), MetricKind::L2.shared()).unwrap();
//! assert_eq!(h.rng(), brute_rng(&data, &grng::metric::L2));
//! ```

pub mod bench;
pub mod counted;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod hierarchy;
pub mod io;
pub mod metric;
pub mod oracle;
pub mod stats;

pub use dataset::{DataPoint, Dataset};
pub use error::{Error, Result};
pub use graph::UndirectedGraph;
pub use hierarchy::{Hierarchy, HierarchyConfig};
pub use metric::{Metric, MetricKind, L1, L2};
