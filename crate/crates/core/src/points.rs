//! Point storage and per-feature bounds.

use crate::error::{Error, Result};

/// `n` feature vectors of dimension `k`, stored row-major.
///
/// Row order defines point ids: the point built from row `i` has id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    k: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from rows, rejecting ragged or non-finite input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let k = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != k {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: k,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(k, coords)
    }

    /// Builds a point set from a row-major buffer of `n * k` coordinates.
    pub fn from_flat(k: usize, coords: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroDimension);
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if coords.len() % k != 0 {
            return Err(Error::RaggedRow {
                row: coords.len() / k,
                expected: k,
                found: coords.len() % k,
            });
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / k,
                column: pos % k,
            });
        }
        Ok(PointSet { k, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.k
    }

    /// Always false: construction rejects empty input.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.k..(id + 1) * self.k]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.k)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Exact per-axis minimum and maximum.
    pub fn bounds(&self) -> Bounds {
        let mut min = self.point(0).to_vec();
        let mut max = min.clone();
        for p in self.iter().skip(1) {
            for a in 0..self.k {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        Bounds { min, max }
    }

    /// Returns a copy with every point shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: offset.len(),
            });
        }
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, v)| v + offset[i % self.k])
            .collect();
        Self::from_flat(self.k, coords)
    }
}

/// Axis-aligned extent of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Bounds {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn span(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub(crate) fn include(&mut self, p: &[f64]) {
        for (a, &v) in p.iter().enumerate() {
            self.min[a] = self.min[a].min(v);
            self.max[a] = self.max[a].max(v);
        }
    }
}

/// Closed axis-aligned cube: `p` is inside iff `|p[a] - center[a]| <= half_width` on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    center: Vec<f64>,
    half_width: f64,
}

impl AxisBox {
    pub fn new(center: Vec<f64>, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid(
                "half_width",
                format!("must be positive and finite, got {half_width}"),
            ));
        }
        if center.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("center", "coordinates must be finite"));
        }
        Ok(AxisBox { center, half_width })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(&self.center)
            .all(|(v, c)| (v - c).abs() <= self.half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_of_small_set() {
        let ps = PointSet::from_rows(&[[0.0, 0.0], [1.0, 2.0], [-1.0, 3.0]]).unwrap();
        assert_eq!(ps.len(), 3);
        let b = ps.bounds();
        assert_eq!(b.min, vec![-1.0, 0.0]);
        assert_eq!(b.max, vec![1.0, 3.0]);
    }

    #[test]
    fn single_point_has_degenerate_bounds() {
        let ps = PointSet::from_rows(&[[5.0]]).unwrap();
        let b = ps.bounds();
        assert_eq!(b.min, vec![5.0]);
        assert_eq!(b.max, vec![5.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(
            PointSet::from_rows(&empty),
            Err(Error::EmptyInput)
        ));
        let err = PointSet::from_rows(&[vec![1.0, 2.0], vec![3.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, column: 1 }));
        let err = PointSet::from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { row: 1, .. }));
        assert!(matches!(
            PointSet::from_flat(0, vec![]),
            Err(Error::ZeroDimension)
        ));
    }

    #[test]
    fn closed_box_includes_boundary() {
        let b = AxisBox::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(b.contains(&[1.0, -1.0]));
        assert!(!b.contains(&[1.0 + 1e-12, 0.0]));
        assert!(AxisBox::new(vec![0.0], 0.0).is_err());
    }
}
