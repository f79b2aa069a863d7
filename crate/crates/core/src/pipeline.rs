//! End-to-end clustering: index, seed, converge, fit, assign, filter.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{self, FilterDrops, FilterParams, Labeling};
use crate::centroid::{self, SeedParams, DEFAULT_MAX_SEEDS};
use crate::covariance::{self, DensityForm, FitParams, GaussianModel};
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::spatial_index::SpatialIndex;

/// All knobs of a clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Separation distance `d_s`.
    pub d_s: f64,
    /// Seed count threshold `L`.
    pub min_count: usize,
    pub epsilon_centroid: f64,
    pub epsilon_sigma: f64,
    pub max_iter_centroid: usize,
    pub max_iter_sigma: usize,
    pub density_form: DensityForm,
    pub filters: FilterParams,
    pub max_seeds: usize,
    /// Worker threads; `0` lets the runtime decide.
    #[serde(skip)]
    pub thread_count: usize,
}

impl ClusterConfig {
    pub fn new(d_s: f64) -> Self {
        ClusterConfig {
            d_s,
            min_count: 0,
            epsilon_centroid: 0.01,
            epsilon_sigma: 0.01,
            max_iter_centroid: 100,
            max_iter_sigma: 50,
            density_form: DensityForm::Standard,
            filters: FilterParams::default(),
            max_seeds: DEFAULT_MAX_SEEDS,
            thread_count: 0,
        }
    }

    /// Sets both convergence thresholds.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon_centroid = epsilon;
        self.epsilon_sigma = epsilon;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.thread_count = threads;
        self
    }

    pub fn seed_params(&self) -> SeedParams {
        SeedParams {
            d_s: self.d_s,
            min_count: self.min_count,
            epsilon: self.epsilon_centroid,
            max_iter: self.max_iter_centroid,
            max_seeds: self.max_seeds,
        }
    }

    pub fn fit_params(&self) -> FitParams {
        FitParams {
            epsilon: self.epsilon_sigma,
            max_iter: self.max_iter_sigma,
            density_form: self.density_form,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.seed_params().validate()?;
        self.fit_params().validate()?;
        self.filters.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Index,
    Seed,
    Converge,
    Fit,
    Assign,
    Filter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub step: Step,
    pub millis: f64,
}

/// Diagnostics of one definitive cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Lattice id of the seed the cluster grew from.
    pub seed_id: usize,
    pub local_count: usize,
    pub centroid_iterations: usize,
    pub centroid_converged: bool,
    pub sigma_iterations: usize,
    pub sigma_converged: bool,
    pub degenerate: bool,
    pub weight_fallback: bool,
}

/// Run counters; everything here is deterministic for fixed input and config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub points: usize,
    pub dim: usize,
    pub seeds: usize,
    pub after_prune: usize,
    pub clusters: usize,
    pub sweeps: usize,
    pub collisions: usize,
    pub emptied: usize,
    pub cluster_stats: Vec<ClusterStats>,
    pub drops: FilterDrops,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub summary: RunSummary,
    /// One entry per step, in execution order.
    pub timings: Vec<StepTiming>,
}

impl RunReport {
    pub fn millis(&self, step: Step) -> f64 {
        self.timings
            .iter()
            .find(|t| t.step == step)
            .map_or(0.0, |t| t.millis)
    }

    pub fn total_millis(&self) -> f64 {
        self.timings.iter().map(|t| t.millis).sum()
    }
}

/// Result of [`run`]: one model per cluster, labels, and diagnostics.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub models: Vec<GaussianModel>,
    pub labeling: Labeling,
    pub report: RunReport,
}

struct Stopwatch {
    timings: Vec<StepTiming>,
}

impl Stopwatch {
    fn time<T>(&mut self, step: Step, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StepTiming {
            step,
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        out
    }
}

/// Runs the whole pipeline on a dedicated thread pool of `config.thread_count` workers.
pub fn run(points: &PointSet, config: &ClusterConfig) -> Result<Clustering> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.thread_count)
        .build()
        .map_err(|e| Error::invalid("thread_count", e.to_string()))?;
    pool.install(|| run_in_current_pool(points, config))
}

fn run_in_current_pool(points: &PointSet, config: &ClusterConfig) -> Result<Clustering> {
    let mut clock = Stopwatch {
        timings: Vec::new(),
    };
    let seed_params = config.seed_params();
    let fit_params = config.fit_params();

    let index = clock.time(Step::Index, || SpatialIndex::build(points));

    let (seeds, seeded) = clock.time(Step::Seed, || -> Result<_> {
        let seeds = centroid::seed_grid(&index, config.d_s, config.max_seeds)?;
        let total = seeds.len();
        Ok((total, centroid::prune_low_count(seeds, config.min_count)))
    })?;
    let after_prune = seeded.len();
    if seeded.is_empty() {
        return Err(Error::NoClusters);
    }

    let converged = clock.time(Step::Converge, || {
        centroid::converge_all(seeded, points, &index, &seed_params)
    })?;

    let fits = clock.time(Step::Fit, || {
        converged
            .centroids
            .par_iter()
            .map(|c| covariance::fit_covariance(&c.members, points, &c.mu, &fit_params))
            .collect::<Result<Vec<_>>>()
    })?;

    let cluster_stats = converged
        .centroids
        .iter()
        .zip(&fits)
        .map(|(c, f)| ClusterStats {
            seed_id: c.id,
            local_count: c.count(),
            centroid_iterations: c.iterations,
            centroid_converged: c.converged,
            sigma_iterations: f.iterations,
            sigma_converged: f.converged,
            degenerate: f.degenerate,
            weight_fallback: f.weight_fallback,
        })
        .collect::<Vec<_>>();

    let models: Vec<GaussianModel> = fits.into_iter().map(|f| f.model).collect();

    let mut labeling = clock.time(Step::Assign, || {
        assignment::assign_all(points, &models, config.density_form)
    })?;

    let drops = clock.time(Step::Filter, || {
        assignment::apply_filters(&mut labeling, &config.filters)
    });

    let summary = RunSummary {
        points: points.len(),
        dim: points.dim(),
        seeds,
        after_prune,
        clusters: cluster_stats.len(),
        sweeps: converged.sweeps,
        collisions: converged.collisions,
        emptied: converged.emptied,
        cluster_stats,
        drops,
    };

    Ok(Clustering {
        models,
        labeling,
        report: RunReport {
            summary,
            timings: clock.timings,
        },
    })
}

/// Heuristic starting value for `d_s`: the median non-zero per-axis span
/// divided by 20.
///
/// This knows nothing about cluster geometry. A good `d_s` sits just under
/// half the smallest distance between true cluster centers, which only the
/// user can judge. Returns `None` when every axis has zero span.
pub fn suggest_ds(points: &PointSet) -> Option<f64> {
    let bounds = points.bounds();
    let mut spans: Vec<f64> = (0..bounds.dim())
        .map(|a| bounds.span(a))
        .filter(|&s| s > 0.0)
        .collect();
    if spans.is_empty() {
        return None;
    }
    spans.sort_by(f64::total_cmp);
    let mid = spans.len() / 2;
    let median = if spans.len() % 2 == 1 {
        spans[mid]
    } else {
        0.5 * (spans[mid - 1] + spans[mid])
    };
    Some(median / 20.0)
}
