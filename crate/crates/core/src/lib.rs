//! Clustering by local Gaussian estimation.
//!
//! The pipeline indexes the points in a bulk-loaded R-tree, seeds candidate
//! centroids on a lattice of pitch `d_s`, moves each to the mean of its local
//! window while deleting colliding weaker candidates, fits a covariance to
//! every surviving window with a self-consistent density-weighted estimate,
//! and finally assigns each point to the cluster under which it is most
//! likely. Optional filters drop low-density, bottom-percentile and
//! ambiguous points.
//!
//! ```
//! use locgauss::{run, ClusterConfig, PointSet};
//!
//! let rows: Vec<[f64; 2]> = (0..200)
//!     .map(|i| {
//!         let t = i as f64 * 0.7;
//!         let base = if i % 2 == 0 { 0.0 } else { 10.0 };
//!         [base + t.sin(), t.cos()]
//!     })
//!     .collect();
//! let points = PointSet::from_rows(&rows).unwrap();
//! let out = run(&points, &ClusterConfig::new(4.0)).unwrap();
//! assert_eq!(out.models.len(), 2);
//! ```

pub mod assignment;
pub mod centroid;
pub mod covariance;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod points;
pub mod spatial_index;
pub mod testkit;

pub use assignment::{FilterDrops, FilterParams, Labeling};
pub use centroid::{Centroid, SeedParams};
pub use covariance::{DensityForm, FitParams, GaussianModel};
pub use error::{Error, Result};
pub use io::ModelArtifact;
pub use pipeline::{run, suggest_ds, ClusterConfig, Clustering, RunReport, RunSummary};
pub use points::{AxisBox, Bounds, PointSet};
pub use spatial_index::SpatialIndex;
