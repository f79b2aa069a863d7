//! Scaling harness: runs the pipeline on growing synthetic blob sets and
//! tabulates per-step wall time.

use std::fmt::Write as _;

use locgauss::pipeline::Step;
use locgauss::testkit::polygon_blobs;
use locgauss::{run, ClusterConfig, PointSet, Result};

/// Blob layout shared by every size in a scaling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub clusters: usize,
    pub k: usize,
    /// Distance between neighbouring blob centers.
    pub spacing: f64,
    pub std: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            clusters: 5,
            k: 2,
            spacing: 10.0,
            std: 1.0,
        }
    }
}

impl Geometry {
    /// Just under half the center spacing.
    pub fn default_ds(&self) -> f64 {
        0.45 * self.spacing
    }

    pub fn dataset(&self, seed: u64, n: usize) -> Result<PointSet> {
        polygon_blobs(seed, n, self.clusters, self.k, self.spacing, self.std).map(|(p, _)| p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub clusters: usize,
    /// Milliseconds per step in pipeline order.
    pub step_ms: [f64; 6],
}

impl ScalingRow {
    pub fn total_ms(&self) -> f64 {
        self.step_ms.iter().sum()
    }
}

pub const STEPS: [Step; 6] = [
    Step::Index,
    Step::Seed,
    Step::Converge,
    Step::Fit,
    Step::Assign,
    Step::Filter,
];

/// Runs the pipeline once per size.
pub fn scaling_run(
    sizes: &[usize],
    geometry: &Geometry,
    config: &ClusterConfig,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    sizes
        .iter()
        .map(|&n| {
            let points = geometry.dataset(seed, n)?;
            let out = run(&points, config)?;
            Ok(ScalingRow {
                n,
                clusters: out.models.len(),
                step_ms: STEPS.map(|s| out.report.millis(s)),
            })
        })
        .collect()
}

pub fn to_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from(
        "n,clusters,index_ms,seed_ms,converge_ms,fit_ms,assign_ms,filter_ms,total_ms\n",
    );
    for r in rows {
        write!(out, "{},{}", r.n, r.clusters).unwrap();
        for ms in r.step_ms {
            write!(out, ",{ms:.3}").unwrap();
        }
        writeln!(out, ",{:.3}", r.total_ms()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scaling_table() {
        let g = Geometry::default();
        let cfg = ClusterConfig::new(g.default_ds()).with_threads(1);
        let rows = scaling_run(&[500, 1000], &g, &cfg, 3).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.clusters == 5));
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("500,5,"));
    }
}
