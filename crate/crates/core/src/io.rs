//! Point ingestion, label export and the JSON model artifact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::Labeling;
use crate::covariance::GaussianModel;
use crate::error::{Error, Result};
use crate::pipeline::{ClusterConfig, Clustering, RunSummary};
use crate::points::PointSet;

/// Supported point file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// One point per line, comma separated, optional header line.
    Csv,
    /// An array of equal-length numeric arrays.
    Json,
}

impl Format {
    /// Picks JSON for a `.json` extension and CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_points(path: &Path, format: Format) -> Result<PointSet> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    match format {
        Format::Csv => parse_csv(&text),
        Format::Json => parse_json(&text),
    }
}

/// Parses CSV points. A first line containing any non-numeric cell is
/// treated as a header. Reported row numbers are 1-based file lines.
pub fn parse_csv(text: &str) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut k = None;
    let mut coords = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(n as u64 + 1, |p| p.line()) as usize;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse().ok()).collect();
        if n == 0 && parsed.iter().any(Option::is_none) {
            continue;
        }
        let expected = *k.get_or_insert(parsed.len());
        if parsed.len() != expected {
            return Err(Error::RaggedRow {
                row: line,
                expected,
                found: parsed.len(),
            });
        }
        for (column, value) in parsed.into_iter().enumerate() {
            let v = value.ok_or_else(|| Error::NonNumeric {
                row: line,
                column: column + 1,
                cell: record[column].to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: line,
                    column: column + 1,
                });
            }
            coords.push(v);
        }
    }
    match k {
        Some(k) => PointSet::from_flat(k, coords),
        None => Err(Error::EmptyInput),
    }
}

/// Parses a JSON array of arrays. Reported row numbers are 1-based.
pub fn parse_json(text: &str) -> Result<PointSet> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text)?;
    let first = rows.first().ok_or(Error::EmptyInput)?;
    let k = first.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: k,
                found: row.len(),
            });
        }
    }
    PointSet::from_rows(&rows)
}

/// Writes points as CSV with an `x0,x1,...` header.
pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..points.dim()).map(|a| format!("x{a}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in points.iter() {
        for (a, v) in p.iter().enumerate() {
            if a > 0 {
                out.push(',');
            }
            write!(out, "{}", fmt_f64(*v)).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders labels as `point_id,cluster_id,p_value`, dropped points as `-1`.
pub fn labels_csv(labeling: &Labeling) -> String {
    assert!(!labeling.is_empty(), "labeling covers at least one point");
    let mut out = String::from("point_id,cluster_id,p_value\n");
    for (i, label) in labeling.to_signed().into_iter().enumerate() {
        writeln!(out, "{i},{label},{}", fmt_f64(labeling.winning_density(i))).unwrap();
    }
    out
}

pub fn write_labels(path: &Path, labeling: &Labeling) -> Result<()> {
    fs::write(path, labels_csv(labeling)).map_err(io_err(path))
}

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

/// One cluster of a saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactCluster {
    pub id: usize,
    pub mu: Vec<f64>,
    /// Row-major `K × K`.
    pub sigma: Vec<f64>,
    pub local_count: usize,
    pub centroid_converged: bool,
    pub sigma_converged: bool,
}

/// Serializable fitted model: clusters, configuration and run counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub k: usize,
    pub clusters: Vec<ArtifactCluster>,
    pub config: ClusterConfig,
    pub summary: RunSummary,
}

impl ModelArtifact {
    pub fn from_clustering(result: &Clustering, config: &ClusterConfig) -> Self {
        let summary = result.report.summary.clone();
        let clusters = result
            .models
            .iter()
            .zip(&summary.cluster_stats)
            .enumerate()
            .map(|(id, (m, s))| ArtifactCluster {
                id,
                mu: m.mu().iter().copied().collect(),
                sigma: m.sigma().transpose().iter().copied().collect(),
                local_count: s.local_count,
                centroid_converged: s.centroid_converged,
                sigma_converged: s.sigma_converged,
            })
            .collect();
        ModelArtifact {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            k: summary.dim,
            clusters,
            config: config.clone(),
            summary,
        }
    }

    /// Rebuilds the Gaussian models in cluster id order.
    pub fn models(&self) -> Result<Vec<GaussianModel>> {
        self.clusters
            .iter()
            .map(|c| {
                if c.mu.len() != self.k || c.sigma.len() != self.k * self.k {
                    return Err(Error::Artifact(format!(
                        "cluster {} does not match dimension {}",
                        c.id, self.k
                    )));
                }
                GaussianModel::new(
                    c.mu.clone(),
                    DMatrix::from_row_slice(self.k, self.k, &c.sigma),
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        if artifact.schema_version > ARTIFACT_SCHEMA_VERSION {
            return Err(Error::Artifact(format!(
                "schema version {} is newer than supported {}",
                artifact.schema_version, ARTIFACT_SCHEMA_VERSION
            )));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_plain_rows() {
        let p = parse_csv("1.0,2.0\n3.0,4.0").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn csv_header_is_skipped() {
        let p = parse_csv("x,y\n1,2").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.point(0), &[1.0, 2.0]);
    }

    #[test]
    fn csv_errors_carry_location() {
        let err = parse_csv("1,2\n3").unwrap_err();
        assert!(matches!(
            err,
            Error::RaggedRow {
                row: 2,
                expected: 2,
                found: 1
            }
        ));
        assert_eq!(err.to_string(), "ragged row 2: expected 2 columns, found 1");
        let err = parse_csv("1,2\n3,abc").unwrap_err();
        assert!(matches!(
            err,
            Error::NonNumeric {
                row: 2,
                column: 2,
                ..
            }
        ));
        assert!(matches!(parse_csv(""), Err(Error::EmptyInput)));
        assert!(matches!(parse_csv("a,b\n"), Err(Error::EmptyInput)));
        assert!(matches!(
            parse_csv("1,2\nnan,3"),
            Err(Error::NonFinite { row: 2, column: 1 })
        ));
    }

    #[test]
    fn json_rows() {
        let p = parse_json("[[1, 2, 3], [4, 5, 6]]").unwrap();
        assert_eq!((p.len(), p.dim()), (2, 3));
        assert!(matches!(
            parse_json("[[1,2],[3]]"),
            Err(Error::RaggedRow { row: 2, .. })
        ));
        assert!(matches!(parse_json("[]"), Err(Error::EmptyInput)));
        assert!(matches!(parse_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn labels_render_dropped_as_minus_one() {
        let mut l = Labeling::from_densities(2, vec![0.1, 0.2, 0.3, 0.05, 0.4, 0.4]);
        crate::assignment::filter_pvalue(&mut l, 0.25);
        let csv = labels_csv(&l);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "point_id,cluster_id,p_value");
        assert!(lines[1].starts_with("0,-1,2.0000000000000001e-1"));
        assert!(lines[2].starts_with("1,0,"));
        assert!(lines[3].starts_with("2,0,"));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let l = Labeling::from_densities(1, vec![1.0]);
        let err = write_labels(Path::new("/nonexistent-dir/labels.csv"), &l).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
