//! Synthetic data and independent oracles for tests and benchmarks.
//!
//! Repo rule: nothing in this module may call into `spatial_index`,
//! `centroid`, `covariance` or `assignment`. Oracles are straight-line
//! re-implementations so that a shared bug cannot hide on both sides of a
//! comparison. Only the plain data types (`PointSet`, `AxisBox`) are shared.
//!
//! Random streams come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded via
//! `seed_from_u64`. A uniform draw is `(next_u64 >> 11) * 2^-53`; normal
//! draws use the Box–Muller transform on two uniforms, emitting the cosine
//! branch first and the sine branch on the following call.

mod oracle;

pub use oracle::{
    adjusted_rand, brute_force_count, brute_force_range, cholesky_lower, naive_density,
    naive_plain_cov, naive_weighted_cov,
};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Deterministic, platform-independent random source.
#[derive(Debug, Clone)]
pub struct TestRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// One Gaussian blob to sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub mean: Vec<f64>,
    /// Covariance, row-major nested.
    pub sigma: Vec<Vec<f64>>,
    pub count: usize,
}

impl BlobSpec {
    /// Blob with covariance `std² · I`.
    pub fn isotropic(mean: Vec<f64>, std: f64, count: usize) -> Self {
        let k = mean.len();
        let sigma = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { std * std } else { 0.0 })
                    .collect()
            })
            .collect();
        BlobSpec { mean, sigma, count }
    }
}

/// Samples every blob in order and returns the points with their blob index.
pub fn gen_blobs(seed: u64, specs: &[BlobSpec]) -> Result<(PointSet, Vec<usize>)> {
    let k = specs.first().ok_or(Error::EmptyInput)?.mean.len();
    let mut rng = TestRng::new(seed);
    let mut coords = Vec::new();
    let mut truth = Vec::new();
    for (label, spec) in specs.iter().enumerate() {
        if spec.mean.len() != k || spec.sigma.len() != k || spec.sigma.iter().any(|r| r.len() != k)
        {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: spec.mean.len(),
            });
        }
        if spec.count == 0 {
            return Err(Error::invalid("count", "blob must have at least one point"));
        }
        let l = cholesky_lower(&spec.sigma).ok_or(Error::NotPositiveDefinite)?;
        let mut z = vec![0.0; k];
        for _ in 0..spec.count {
            z.iter_mut().for_each(|v| *v = rng.normal());
            for (row, m) in l.iter().zip(&spec.mean) {
                let offset: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                coords.push(m + offset);
            }
            truth.push(label);
        }
    }
    Ok((PointSet::from_flat(k, coords)?, truth))
}

/// Centers of `n` blobs: a regular polygon with side `spacing` in the first
/// two axes (a line when `k == 1` or `n == 2`), remaining axes zero.
pub fn polygon_centers(n: usize, k: usize, spacing: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut c = vec![0.0; k];
            if k == 1 || n <= 2 {
                c[0] = i as f64 * spacing;
            } else {
                let radius = spacing / (2.0 * (std::f64::consts::PI / n as f64).sin());
                let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                c[0] = radius * angle.cos();
                c[1] = radius * angle.sin();
            }
            c
        })
        .collect()
}

/// `total` points split evenly over isotropic blobs on [`polygon_centers`].
pub fn polygon_blobs(
    seed: u64,
    total: usize,
    clusters: usize,
    k: usize,
    spacing: f64,
    std: f64,
) -> Result<(PointSet, Vec<usize>)> {
    let specs: Vec<BlobSpec> = polygon_centers(clusters, k, spacing)
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let count = total / clusters + usize::from(i < total % clusters);
            BlobSpec::isotropic(c, std, count)
        })
        .collect();
    gen_blobs(seed, &specs)
}

/// `n` points uniform in `[lo, hi]^k`.
pub fn uniform_points(seed: u64, n: usize, k: usize, lo: f64, hi: f64) -> PointSet {
    let mut rng = TestRng::new(seed);
    let coords = (0..n * k).map(|_| rng.uniform_in(lo, hi)).collect();
    PointSet::from_flat(k, coords).expect("n and k are positive")
}

/// Mean of the given rows.
pub fn sample_mean(points: &PointSet, ids: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; points.dim()];
    for &i in ids {
        for (a, v) in points.point(i).iter().enumerate() {
            m[a] += v;
        }
    }
    m.iter_mut().for_each(|v| *v /= ids.len() as f64);
    m
}
