//! Straight-line index loops, kept deliberately close to the formulas.
#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::covariance::DensityForm;
use crate::points::{AxisBox, PointSet};

/// Linear scan with the closed-box predicate; ascending ids.
pub fn brute_force_range(points: &PointSet, query: &AxisBox) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        let p = points.point(i);
        let mut inside = true;
        for a in 0..p.len() {
            if (p[a] - query.center()[a]).abs() > query.half_width() {
                inside = false;
            }
        }
        if inside {
            out.push(i);
        }
    }
    out
}

pub fn brute_force_count(points: &PointSet, query: &AxisBox) -> usize {
    brute_force_range(points, query).len()
}

/// Lower Cholesky factor of an SPD matrix, or `None`.
pub fn cholesky_lower(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = a.len();
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Determinant and inverse by Gauss–Jordan elimination with partial pivoting.
fn det_and_inverse(a: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        if pivot != col {
            m.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for j in 0..k {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..k {
            if row != col {
                let f = m[row][col];
                for j in 0..k {
                    m[row][j] -= f * m[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    (det, inv)
}

/// Gaussian density evaluated from scratch: determinant and inverse by
/// elimination, quadratic form by explicit double sum.
pub fn naive_density(x: &[f64], mu: &[f64], sigma: &[Vec<f64>], form: DensityForm) -> f64 {
    let k = x.len();
    let (det, inv) = det_and_inverse(sigma);
    let mut q = 0.0;
    for m in 0..k {
        for n in 0..k {
            q += (x[m] - mu[m]) * inv[m][n] * (x[n] - mu[n]);
        }
    }
    match form {
        DensityForm::Standard => (-0.5 * q).exp() / ((2.0 * PI).powi(k as i32) * det).sqrt(),
        DensityForm::PaperLiteral => (-q).exp() / (2.0 * PI * det).sqrt(),
    }
}

/// Plain covariance about `mu` by direct summation.
pub fn naive_plain_cov(points: &PointSet, members: &[usize], mu: &[f64]) -> Vec<Vec<f64>> {
    let k = mu.len();
    let mut s = vec![vec![0.0; k]; k];
    for m in 0..k {
        for n in 0..k {
            for &i in members {
                let x = points.point(i);
                s[m][n] += (x[m] - mu[m]) * (x[n] - mu[n]);
            }
            s[m][n] /= members.len() as f64;
        }
    }
    s
}

/// Density-weighted covariance by direct double loop.
pub fn naive_weighted_cov(
    points: &PointSet,
    members: &[usize],
    mu: &[f64],
    sigma_input: &[Vec<f64>],
    form: DensityForm,
) -> Vec<Vec<f64>> {
    let k = mu.len();
    let densities: Vec<f64> = members
        .iter()
        .map(|&i| naive_density(points.point(i), mu, sigma_input, form))
        .collect();
    let total: f64 = densities.iter().sum();
    let mut s = vec![vec![0.0; k]; k];
    for m in 0..k {
        for n in 0..k {
            for (slot, &i) in members.iter().enumerate() {
                let x = points.point(i);
                s[m][n] += densities[slot] / total * (x[m] - mu[m]) * (x[n] - mu[n]);
            }
        }
    }
    s
}

fn pairs(n: usize) -> f64 {
    n as f64 * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index over points labeled in both labelings.
///
/// Two single-cluster labelings agree perfectly and score 1.
pub fn adjusted_rand(a: &[Option<usize>], b: &[Option<usize>]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings cover different point counts");
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    let mut n = 0;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            *table.entry((*x, *y)).or_default() += 1;
            *rows.entry(*x).or_default() += 1;
            *cols.entry(*y).or_default() += 1;
            n += 1;
        }
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let row_sum: f64 = rows.values().map(|&c| pairs(c)).sum();
    let col_sum: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = row_sum * col_sum / pairs(n);
    let max_index = 0.5 * (row_sum + col_sum);
    if max_index == expected {
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}
