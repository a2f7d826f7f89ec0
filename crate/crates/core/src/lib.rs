//! Community detection for geo-located social networks.
//!
//! The crate scores partitions with Newman-Girvan modularity and with
//! spatially-near (SN) modularity, which divides each community's modularity
//! term by `1 + agg_i (d(i, x_c) / σ)²`, and optimizes them with:
//!
//! * [`louvain::run_louvain`]: two-phase Louvain for either objective, with
//!   singleton re-isolation and an optional geographic join constraint;
//! * [`snic::run_snic`]: repeated Louvain-SN under a shrinking span
//!   constraint, keeping the best partition seen;
//! * [`oracle::oracle_best`]: exhaustive search for graphs of up to 12 nodes.
//!
//! ```
//! use snmod::{GeoGraph, GeoPoint, Partition, SnParams};
//! use snmod::louvain::{run_louvain, EngineConfig, Objective};
//!
//! let here = GeoPoint { lat: 40.0, lon: -74.0 };
//! let there = GeoPoint { lat: 41.0, lon: -74.0 };
//! let g = GeoGraph::from_edges(
//!     vec![here, here, here, there, there, there],
//!     [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 1.0)],
//! )?;
//! let params = SnParams::new(50.0)?;
//! let out = run_louvain(&g, Objective::Sn(params), &EngineConfig::default())?;
//! assert_eq!(out.partition, Partition::from_labels(&[0, 0, 0, 1, 1, 1]));
//! assert!((out.score - 5.0 / 14.0).abs() < 1e-12);
//! # Ok::<(), snmod::Error>(())
//! ```

pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod load;
pub mod louvain;
pub mod metrics;
pub mod oracle;
pub mod partition;
pub mod sampler;
pub mod snic;
pub mod sweep;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{GeoPoint, Metric};
pub use graph::{GeoGraph, NodeId};
pub use metrics::{Aggregation, SnParams};
pub use partition::Partition;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/modularity.md")]
    mod modularity {}
    #[doc = include_str!("../../../book/src/sn_modularity.md")]
    mod sn_modularity {}
    #[doc = include_str!("../../../book/src/louvain.md")]
    mod louvain {}
    #[doc = include_str!("../../../book/src/snic.md")]
    mod snic {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
