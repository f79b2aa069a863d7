//! Gaussian cluster models and the self-consistent weighted covariance fit.
//!
//! The fit starts from the plain covariance of a centroid's local window and
//! repeatedly re-estimates it with every point weighted by its density under
//! the damped previous estimate, until the estimate stops moving.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Initial regularization scale; multiplied by ten until factorization succeeds.
pub const RIDGE_START: f64 = 1e-8;
const RIDGE_STEPS: usize = 40;

/// Which normalization and exponent the density uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityForm {
    /// `(2π)^{-K/2} |Σ|^{-1/2} exp(-½ dᵀ Σ⁻¹ d)`.
    #[default]
    Standard,
    /// `(2π|Σ|)^{-1/2} exp(-dᵀ Σ⁻¹ d)` for every K, without the ½ in the exponent.
    PaperLiteral,
}

impl std::str::FromStr for DensityForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(DensityForm::Standard),
            "paper-literal" | "paper_literal" | "literal" => Ok(DensityForm::PaperLiteral),
            other => Err(Error::invalid(
                "density_form",
                format!("expected `standard` or `paper-literal`, got `{other}`"),
            )),
        }
    }
}

/// A fitted Gaussian: mean, SPD covariance and cached inverse, determinant
/// and normalizers.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    sigma_det: f64,
    norm_standard: f64,
    norm_literal: f64,
    /// Diagonal loading added to make `sigma` factorizable, zero if none.
    ridge: f64,
}

impl GaussianModel {
    /// Builds a model, adding `λ·tr(Σ)/K·I` with escalating `λ` if `sigma`
    /// is not positive-definite. A zero-trace matrix is loaded with `λ·I`.
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let k = mu.len();
        if k == 0 {
            return Err(Error::ZeroDimension);
        }
        if sigma.nrows() != k || sigma.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: sigma.nrows(),
            });
        }
        if sigma.iter().any(|v| !v.is_finite()) || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let mut sigma = symmetrized(sigma);
        let mut ridge = 0.0;
        let chol = match sigma.clone().cholesky() {
            Some(c) => c,
            None => {
                let trace = sigma.trace();
                let scale = if trace > 0.0 { trace / k as f64 } else { 1.0 };
                let base = sigma.clone();
                let mut lambda = RIDGE_START;
                let mut found = None;
                for _ in 0..RIDGE_STEPS {
                    let candidate = &base + DMatrix::identity(k, k) * (lambda * scale);
                    if let Some(c) = candidate.clone().cholesky() {
                        sigma = candidate;
                        ridge = lambda * scale;
                        found = Some(c);
                        break;
                    }
                    lambda *= 10.0;
                }
                found.ok_or(Error::NotPositiveDefinite)?
            }
        };
        let sigma_det = chol.l().diagonal().iter().map(|d| d * d).product::<f64>();
        if !(sigma_det > 0.0 && sigma_det.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let sigma_inv = symmetrized(chol.inverse());
        let norm_standard = ((2.0 * PI).powi(k as i32) * sigma_det).sqrt().recip();
        let norm_literal = (2.0 * PI * sigma_det).sqrt().recip();
        Ok(GaussianModel {
            mu: DVector::from_vec(mu),
            sigma,
            sigma_inv,
            sigma_det,
            norm_standard,
            norm_literal,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn sigma_det(&self) -> f64 {
        self.sigma_det
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn norm_const(&self, form: DensityForm) -> f64 {
        match form {
            DensityForm::Standard => self.norm_standard,
            DensityForm::PaperLiteral => self.norm_literal,
        }
    }

    /// `(x-μ)ᵀ Σ⁻¹ (x-μ)`.
    #[inline]
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let k = self.dim();
        let mut q = 0.0;
        for m in 0..k {
            let dm = x[m] - self.mu[m];
            let row: f64 = x
                .iter()
                .zip(self.mu.iter())
                .enumerate()
                .map(|(n, (xn, un))| self.sigma_inv[(m, n)] * (xn - un))
                .sum();
            q += dm * row;
        }
        q
    }

    /// Density of `x` under this model.
    #[inline]
    pub fn density(&self, x: &[f64], form: DensityForm) -> f64 {
        let q = self.mahalanobis_sq(x);
        match form {
            DensityForm::Standard => self.norm_standard * (-0.5 * q).exp(),
            DensityForm::PaperLiteral => self.norm_literal * (-q).exp(),
        }
    }
}

/// Free-function form of [`GaussianModel::density`].
pub fn density(x: &[f64], model: &GaussianModel, form: DensityForm) -> f64 {
    model.density(x, form)
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    let mut out = m;
    for i in 0..k {
        for j in i + 1..k {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Accumulates `Σ w_i d_i d_iᵀ` over the upper triangle, then mirrors it.
fn weighted_outer(
    members: &[usize],
    points: &PointSet,
    mu: &[f64],
    mut weight: impl FnMut(usize) -> f64,
) -> DMatrix<f64> {
    let k = mu.len();
    let mut acc = DMatrix::zeros(k, k);
    let mut d = vec![0.0; k];
    for (slot, &id) in members.iter().enumerate() {
        let w = weight(slot);
        for ((di, x), m) in d.iter_mut().zip(points.point(id)).zip(mu) {
            *di = x - m;
        }
        for m in 0..k {
            let wd = w * d[m];
            for n in m..k {
                acc[(m, n)] += wd * d[n];
            }
        }
    }
    for m in 0..k {
        for n in 0..m {
            acc[(m, n)] = acc[(n, m)];
        }
    }
    acc
}

/// Sample covariance about `mu` with the `1/N_c` normalization.
pub fn covariance_plain(members: &[usize], points: &PointSet, mu: &[f64]) -> DMatrix<f64> {
    assert!(!members.is_empty(), "covariance of an empty window");
    let inv_n = 1.0 / members.len() as f64;
    weighted_outer(members, points, mu, |_| inv_n)
}

/// Covariance with each member weighted by its normalized density.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCovariance {
    pub sigma: DMatrix<f64>,
    pub weights: Vec<f64>,
    /// Every density underflowed; uniform weights were used instead.
    pub uniform_fallback: bool,
}

/// Covariance about `mu` with `w_i = P(x_i) / Σ_j P(x_j)`, densities taken
/// under `input`.
pub fn covariance_weighted(
    members: &[usize],
    points: &PointSet,
    mu: &[f64],
    input: &GaussianModel,
    form: DensityForm,
) -> WeightedCovariance {
    assert!(!members.is_empty(), "covariance of an empty window");
    let mut weights: Vec<f64> = members
        .iter()
        .map(|&id| input.density(points.point(id), form))
        .collect();
    let total: f64 = weights.iter().sum();
    let uniform_fallback = !(total > 0.0 && total.is_finite());
    if uniform_fallback {
        weights.fill(1.0 / members.len() as f64);
    } else {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let sigma = weighted_outer(members, points, mu, |slot| weights[slot]);
    WeightedCovariance {
        sigma,
        weights,
        uniform_fallback,
    }
}

/// Parameters of the self-consistent covariance loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    /// Stop when the largest elementwise change falls below this.
    pub epsilon: f64,
    pub max_iter: usize,
    pub density_form: DensityForm,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            epsilon: 0.01,
            max_iter: 50,
            density_form: DensityForm::Standard,
        }
    }
}

impl FitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon_sigma", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter_sigma", "must be at least 1"));
        }
        Ok(())
    }
}

/// A fitted model with loop diagnostics.
#[derive(Debug, Clone)]
pub struct CovarianceFit {
    pub model: GaussianModel,
    /// Weighted re-estimates performed.
    pub iterations: usize,
    pub converged: bool,
    /// Single-point window: the model is the regularization floor.
    pub degenerate: bool,
    /// Some iteration fell back to uniform weights.
    pub weight_fallback: bool,
    /// Largest elementwise change per iteration.
    pub trace: Vec<f64>,
}

/// Self-consistent weighted covariance of a local window.
///
/// `Σ⁰` is the plain covariance and `Σ¹ = Σ⁰`. Each step forms the damped
/// input `½(Σᵗ + Σᵗ⁻¹)`, re-weights the members by their densities under
/// it and stops once every element of the new estimate is within
/// `epsilon` of the input.
pub fn fit_covariance(
    members: &[usize],
    points: &PointSet,
    mu: &[f64],
    params: &FitParams,
) -> Result<CovarianceFit> {
    params.validate()?;
    if members.is_empty() {
        return Err(Error::invalid("members", "window is empty"));
    }
    let k = mu.len();
    if members.len() == 1 {
        return Ok(CovarianceFit {
            model: GaussianModel::new(mu.to_vec(), DMatrix::zeros(k, k))?,
            iterations: 0,
            converged: true,
            degenerate: true,
            weight_fallback: false,
            trace: Vec::new(),
        });
    }

    let mut prev = covariance_plain(members, points, mu);
    let mut current = prev.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut weight_fallback = false;
    let mut trace = Vec::new();
    while iterations < params.max_iter {
        let input = (&current + &prev) * 0.5;
        let input_model = GaussianModel::new(mu.to_vec(), input.clone())?;
        let next = covariance_weighted(members, points, mu, &input_model, params.density_form);
        iterations += 1;
        weight_fallback |= next.uniform_fallback;
        let change = next
            .sigma
            .iter()
            .zip(input.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        trace.push(change);
        prev = current;
        current = next.sigma;
        if change < params.epsilon {
            converged = true;
            break;
        }
    }

    Ok(CovarianceFit {
        model: GaussianModel::new(mu.to_vec(), current)?,
        iterations,
        converged,
        degenerate: false,
        weight_fallback,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn density_at_mean_of_unit_gaussian() {
        let m = GaussianModel::new(vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let std = m.density(&[0.0, 0.0], DensityForm::Standard);
        let lit = m.density(&[0.0, 0.0], DensityForm::PaperLiteral);
        assert!((std - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((lit - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((std - 0.1591549).abs() < 1e-7);
        assert!((lit - 0.3989423).abs() < 1e-7);
    }

    #[test]
    fn inverse_times_sigma_is_identity() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let m = GaussianModel::new(vec![0.0; 3], sigma.clone()).unwrap();
        let prod = m.sigma_inv() * &sigma;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).abs() < 1e-10);
            }
        }
        assert!((m.sigma_det() - sigma.determinant()).abs() < 1e-12);
        assert_eq!(m.ridge(), 0.0);
    }

    #[test]
    fn singular_sigma_is_regularized() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let m = GaussianModel::new(vec![0.0, 0.0], sigma).unwrap();
        assert!(m.ridge() > 0.0);
        assert!(m.sigma().clone().cholesky().is_some());

        let zero = GaussianModel::new(vec![1.0], DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(zero.sigma()[(0, 0)], RIDGE_START);
    }

    #[test]
    fn plain_covariance_of_a_cross() {
        let p = ps(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        let s = covariance_plain(&[0, 1, 2, 3], &p, &[0.0, 0.0]);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let single = covariance_plain(&[0], &p, &[1.0, 0.0]);
        assert_eq!(single, DMatrix::zeros(2, 2));
    }

    #[test]
    fn symmetric_pair_gets_equal_weights() {
        let p = ps(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let input = GaussianModel::new(vec![0.0, 0.0], DMatrix::identity(2, 2) * 3.0).unwrap();
        let w = covariance_weighted(&[0, 1], &p, &[0.0, 0.0], &input, DensityForm::Standard);
        assert_eq!(w.weights, vec![0.5, 0.5]);
        assert_eq!(
            w.sigma,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        );
        assert!(!w.uniform_fallback);
    }

    #[test]
    fn underflow_falls_back_to_uniform_weights() {
        let p = ps(&[&[1e3], &[-2e3]]);
        let input = GaussianModel::new(vec![0.0], DMatrix::identity(1, 1) * 1e-4).unwrap();
        let w = covariance_weighted(&[0, 1], &p, &[0.0], &input, DensityForm::Standard);
        assert!(w.uniform_fallback);
        assert_eq!(w.weights, vec![0.5, 0.5]);
        assert_eq!(w.sigma, covariance_plain(&[0, 1], &p, &[0.0]));
    }

    #[test]
    fn symmetric_1d_pair_is_a_fixed_point() {
        let p = ps(&[&[-1.0], &[1.0]]);
        let fit = fit_covariance(&[0, 1], &p, &[0.0], &FitParams::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 2);
        assert_eq!(fit.model.sigma()[(0, 0)], 1.0);
    }

    #[test]
    fn single_member_gives_the_regularization_floor() {
        let p = ps(&[&[2.0, 3.0]]);
        let fit = fit_covariance(&[0], &p, &[2.0, 3.0], &FitParams::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.model.sigma(), &(DMatrix::identity(2, 2) * RIDGE_START));
    }

    #[test]
    fn non_converged_fit_is_flagged_not_fatal() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.37).sin() * 3.0])
            .collect();
        let p = PointSet::from_rows(&rows).unwrap();
        let ids: Vec<usize> = (0..50).collect();
        let params = FitParams {
            epsilon: 1e-12,
            max_iter: 2,
            ..FitParams::default()
        };
        let fit = fit_covariance(&ids, &p, &[0.0], &params).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
        assert_eq!(fit.trace.len(), 2);
    }

    #[test]
    fn density_form_parses() {
        assert_eq!(
            "standard".parse::<DensityForm>().unwrap(),
            DensityForm::Standard
        );
        assert_eq!(
            "paper-literal".parse::<DensityForm>().unwrap(),
            DensityForm::PaperLiteral
        );
        assert!("gauss".parse::<DensityForm>().is_err());
    }
}
