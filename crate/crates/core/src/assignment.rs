//! Maximum-density assignment and post-clustering quality filters.

use rayon::prelude::*;

use crate::covariance::{DensityForm, GaussianModel};
use crate::error::{Error, Result};
use crate::points::PointSet;

/// Per-point cluster labels plus the density of every point under every model.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    /// `None` marks a point dropped by a filter.
    labels: Vec<Option<usize>>,
    /// Row-major `n × clusters`.
    densities: Vec<f64>,
    clusters: usize,
}

impl Labeling {
    /// Builds a labeling from precomputed densities, labeling each point by argmax.
    pub fn from_densities(clusters: usize, densities: Vec<f64>) -> Self {
        assert!(clusters > 0 && densities.len() % clusters == 0);
        let labels = densities
            .chunks_exact(clusters)
            .map(|row| Some(argmax(row)))
            .collect();
        Labeling {
            labels,
            densities,
            clusters,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, point: usize) -> Option<usize> {
        self.labels[point]
    }

    /// Densities of `point` under each cluster.
    pub fn densities(&self, point: usize) -> &[f64] {
        &self.densities[point * self.clusters..(point + 1) * self.clusters]
    }

    /// Density under the argmax cluster, whether or not the point was dropped.
    pub fn winning_density(&self, point: usize) -> f64 {
        let row = self.densities(point);
        row[argmax(row)]
    }

    pub fn dropped(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Labels as integers with `-1` for dropped points.
    pub fn to_signed(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| l.map_or(-1, |c| c as i64))
            .collect()
    }
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = c;
        }
    }
    best
}

/// Labels every point with the cluster of highest density.
pub fn assign_all(
    points: &PointSet,
    models: &[GaussianModel],
    form: DensityForm,
) -> Result<Labeling> {
    if models.is_empty() {
        return Err(Error::NoClusters);
    }
    if let Some(m) = models.iter().find(|m| m.dim() != points.dim()) {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: m.dim(),
        });
    }
    let c = models.len();
    let mut densities = vec![0.0; points.len() * c];
    densities
        .par_chunks_mut(c)
        .zip(points.as_flat().par_chunks(points.dim()))
        .for_each(|(row, x)| {
            for (slot, model) in row.iter_mut().zip(models) {
                *slot = model.density(x, form);
            }
        });
    Ok(Labeling::from_densities(c, densities))
}

/// Drops points whose winning density is below `l_p`. Returns the drop count.
pub fn filter_pvalue(labeling: &mut Labeling, l_p: f64) -> usize {
    let mut dropped = 0;
    for i in 0..labeling.len() {
        if let Some(c) = labeling.labels[i] {
            if labeling.densities(i)[c] < l_p {
                labeling.labels[i] = None;
                dropped += 1;
            }
        }
    }
    dropped
}

/// Number of members the percent filter removes from a cluster of `members`.
///
/// The tiny offset keeps products such as `0.29 * 100` from flooring to 28.
pub fn percent_drop_count(l_pct: f64, members: usize) -> usize {
    ((l_pct * members as f64) + 1e-9).floor() as usize
}

/// Per cluster, drops the `floor(l_pct · N_c)` lowest-density members.
/// Equal densities drop the lower point id first. Returns the drop count.
pub fn filter_percent(labeling: &mut Labeling, l_pct: f64) -> usize {
    let mut by_cluster: Vec<Vec<usize>> = vec![Vec::new(); labeling.clusters];
    for (i, l) in labeling.labels.iter().enumerate() {
        if let Some(c) = *l {
            by_cluster[c].push(i);
        }
    }
    let mut dropped = 0;
    for (c, mut members) in by_cluster.into_iter().enumerate() {
        let cut = percent_drop_count(l_pct, members.len()).min(members.len());
        if cut == 0 {
            continue;
        }
        // Stable sort over ascending ids keeps the id tie-break.
        members.sort_by(|&a, &b| labeling.densities(a)[c].total_cmp(&labeling.densities(b)[c]));
        for &i in &members[..cut] {
            labeling.labels[i] = None;
        }
        dropped += cut;
    }
    dropped
}

/// `P1 / (P1 + P2)` for the two largest densities of a row; `1` when the
/// runner-up is zero and `0.5` when both are.
pub fn separation_ratio(row: &[f64]) -> f64 {
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for &p in row {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    if first == 0.0 {
        0.5
    } else {
        first / (first + second)
    }
}

/// Drops points whose separation ratio is below `l_s`. A single-cluster
/// labeling is left untouched. Returns the drop count.
pub fn filter_separation(labeling: &mut Labeling, l_s: f64) -> usize {
    if labeling.clusters < 2 {
        return 0;
    }
    let mut dropped = 0;
    for i in 0..labeling.len() {
        if labeling.labels[i].is_some() && separation_ratio(labeling.densities(i)) < l_s {
            labeling.labels[i] = None;
            dropped += 1;
        }
    }
    dropped
}

/// Optional thresholds of the three filters; `None` disables a filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterParams {
    pub l_p: Option<f64>,
    pub l_pct: Option<f64>,
    pub l_s: Option<f64>,
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.l_p {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("l_p", "must be a finite value >= 0"));
            }
        }
        if let Some(v) = self.l_pct {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid("l_pct", "must lie in [0, 1)"));
            }
        }
        if let Some(v) = self.l_s {
            if !(0.5..=1.0).contains(&v) {
                return Err(Error::invalid("l_s", "must lie in [0.5, 1]"));
            }
        }
        Ok(())
    }
}

/// Drop counts per filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FilterDrops {
    pub pvalue: usize,
    pub percent: usize,
    pub separation: usize,
}

/// Applies the enabled filters in the order density, percent, separation.
pub fn apply_filters(labeling: &mut Labeling, params: &FilterParams) -> FilterDrops {
    FilterDrops {
        pvalue: params.l_p.map_or(0, |v| filter_pvalue(labeling, v)),
        percent: params.l_pct.map_or(0, |v| filter_percent(labeling, v)),
        separation: params.l_s.map_or(0, |v| filter_separation(labeling, v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn unit(mu: Vec<f64>) -> GaussianModel {
        let k = mu.len();
        GaussianModel::new(mu, DMatrix::identity(k, k)).unwrap()
    }

    #[test]
    fn nearest_equal_covariance_model_wins() {
        let p = PointSet::from_rows(&[[1.0, 0.0]]).unwrap();
        let l = assign_all(
            &p,
            &[unit(vec![0.0, 0.0]), unit(vec![4.0, 0.0])],
            DensityForm::Standard,
        )
        .unwrap();
        assert_eq!(l.label(0), Some(0));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let p = PointSet::from_rows(&[[2.0, 0.0]]).unwrap();
        let models = [unit(vec![4.0, 0.0]), unit(vec![0.0, 0.0])];
        let l = assign_all(&p, &models, DensityForm::Standard).unwrap();
        assert_eq!(l.label(0), Some(0));
        assert_eq!(l.densities(0)[0], l.densities(0)[1]);
    }

    #[test]
    fn assign_requires_models() {
        let p = PointSet::from_rows(&[[0.0]]).unwrap();
        assert!(matches!(
            assign_all(&p, &[], DensityForm::Standard),
            Err(Error::NoClusters)
        ));
    }

    #[test]
    fn pvalue_extremes() {
        let mut l = Labeling::from_densities(2, vec![0.1, 0.2, 0.3, 0.05]);
        assert_eq!(filter_pvalue(&mut l, 0.0), 0);
        assert_eq!(filter_pvalue(&mut l, 0.25), 1);
        assert_eq!(l.labels(), &[None, Some(0)]);
        assert_eq!(filter_pvalue(&mut l, 1.0), 1);
        assert_eq!(l.dropped(), 2);
    }

    #[test]
    fn percent_drops_floor_of_cluster_size() {
        let dens: Vec<f64> = (0..10).map(|i| (i as f64 + 1.0) / 10.0).collect();
        let mut l = Labeling::from_densities(1, dens);
        assert_eq!(filter_percent(&mut l, 0.2), 2);
        assert_eq!(l.label(0), None);
        assert_eq!(l.label(1), None);
        assert!(l.labels()[2..].iter().all(Option::is_some));

        let mut l = Labeling::from_densities(1, vec![0.5; 10]);
        assert_eq!(filter_percent(&mut l, 0.0), 0);
        assert_eq!(percent_drop_count(0.29, 100), 29);
        assert_eq!(percent_drop_count(0.25, 7), 1);
    }

    #[test]
    fn percent_ties_drop_lower_ids_first() {
        let mut l = Labeling::from_densities(1, vec![0.3, 0.1, 0.1, 0.1, 0.9]);
        assert_eq!(filter_percent(&mut l, 0.4), 2);
        assert_eq!(l.labels(), &[Some(0), None, None, Some(0), Some(0)]);
    }

    #[test]
    fn separation_ratio_cases() {
        let mut l = Labeling::from_densities(2, vec![0.6, 0.5]);
        assert!((separation_ratio(l.densities(0)) - 0.6 / 1.1).abs() < 1e-15);
        assert_eq!(filter_separation(&mut l, 0.6), 1);

        let mut l = Labeling::from_densities(2, vec![0.6, 0.0]);
        assert_eq!(separation_ratio(l.densities(0)), 1.0);
        assert_eq!(filter_separation(&mut l, 1.0), 0);

        let mut single = Labeling::from_densities(1, vec![1e-9, 1e-3]);
        assert_eq!(filter_separation(&mut single, 1.0), 0);
    }

    #[test]
    fn filter_params_ranges() {
        assert!(FilterParams::default().validate().is_ok());
        let bad = FilterParams {
            l_s: Some(0.4),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterParams {
            l_pct: Some(1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterParams {
            l_p: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
