//! Grid seeding and centroid convergence with collision pruning.
//!
//! Seeds sit on a lattice of pitch `d_s` anchored at the per-axis minimum.
//! Each centroid owns the points of its local window, a closed cube of side
//! `d_s` centered on it, and moves to their mean every sweep. After each
//! sweep, centroids closer than `d_s` on every axis collide and the one
//! holding fewer points is deleted.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::{AxisBox, Bounds};
use crate::spatial_index::SpatialIndex;

/// Default upper bound on the number of lattice seeds.
pub const DEFAULT_MAX_SEEDS: usize = 10_000_000;

/// A candidate cluster center and the points of its local window.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub id: usize,
    pub mu: Vec<f64>,
    /// Ids of points in the window centered on `mu`, ascending.
    pub members: Vec<usize>,
    pub alive: bool,
    /// Number of mean updates applied.
    pub iterations: usize,
    /// Last update moved the centroid by less than the convergence threshold.
    pub converged: bool,
}

impl Centroid {
    /// Local point count `N_c`.
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

/// Parameters of the seeding and convergence stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedParams {
    /// Separation distance: lattice pitch and local window side.
    pub d_s: f64,
    /// Seeds whose initial window holds fewer points are discarded.
    pub min_count: usize,
    /// Convergence threshold on the Euclidean step length.
    pub epsilon: f64,
    pub max_iter: usize,
    pub max_seeds: usize,
}

impl SeedParams {
    pub fn new(d_s: f64) -> Self {
        SeedParams {
            d_s,
            min_count: 0,
            epsilon: 0.01,
            max_iter: 100,
            max_seeds: DEFAULT_MAX_SEEDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_ds(self.d_s)?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_ds(d_s: f64) -> Result<()> {
    if !(d_s > 0.0 && d_s.is_finite()) {
        return Err(Error::invalid(
            "d_s",
            format!("must be positive and finite, got {d_s}"),
        ));
    }
    Ok(())
}

fn window(mu: &[f64], d_s: f64) -> AxisBox {
    AxisBox::new(mu.to_vec(), d_s / 2.0).expect("d_s validated positive")
}

/// Per-axis lattice coordinates `min + j * d_s` for `j = 0..=ceil(span / d_s)`.
pub fn lattice_axes(bounds: &Bounds, d_s: f64) -> Result<Vec<Vec<f64>>> {
    check_ds(d_s)?;
    Ok((0..bounds.dim())
        .map(|a| {
            let steps = (bounds.span(a) / d_s).ceil() as usize;
            (0..=steps)
                .map(|j| bounds.min[a] + j as f64 * d_s)
                .collect()
        })
        .collect())
}

/// Seed positions of the lattice covering `bounds`, last axis varying fastest.
pub fn lattice_points(bounds: &Bounds, d_s: f64, max_seeds: usize) -> Result<Vec<Vec<f64>>> {
    let axes = lattice_axes(bounds, d_s)?;
    let count = axes
        .iter()
        .try_fold(1u128, |acc, ax| acc.checked_mul(ax.len() as u128))
        .unwrap_or(u128::MAX);
    if count > max_seeds as u128 {
        return Err(Error::TooManySeeds {
            count,
            cap: max_seeds,
        });
    }
    let mut seeds = Vec::with_capacity(count as usize);
    let mut cursor = vec![0usize; axes.len()];
    loop {
        seeds.push(cursor.iter().zip(&axes).map(|(&j, ax)| ax[j]).collect());
        let mut a = axes.len();
        loop {
            if a == 0 {
                return Ok(seeds);
            }
            a -= 1;
            cursor[a] += 1;
            if cursor[a] < axes[a].len() {
                break;
            }
            cursor[a] = 0;
        }
    }
}

/// Places one centroid on every lattice node and collects its window.
///
/// Every seed is returned, including empty ones; see [`prune_low_count`].
pub fn seed_grid(index: &SpatialIndex, d_s: f64, max_seeds: usize) -> Result<Vec<Centroid>> {
    let seeds = lattice_points(index.bounds(), d_s, max_seeds)?;
    seeds
        .into_par_iter()
        .enumerate()
        .map(|(id, mu)| {
            let win = window(&mu, d_s);
            let members = if index.count_in_box(&win)? == 0 {
                Vec::new()
            } else {
                index.range_query(&win)?
            };
            Ok(Centroid {
                id,
                mu,
                members,
                alive: true,
                iterations: 0,
                converged: false,
            })
        })
        .collect()
}

/// Drops centroids with `N_c < min_count`; empty centroids are always dropped.
pub fn prune_low_count(mut centroids: Vec<Centroid>, min_count: usize) -> Vec<Centroid> {
    centroids.retain(|c| c.count() >= min_count.max(1));
    centroids
}

/// Moves `c` to the mean of its current members, then re-collects the window
/// around the new position. Returns the Euclidean step length, or marks the
/// centroid dead and returns `None` when the new window is empty.
pub fn update_centroid(
    c: &mut Centroid,
    points: &crate::points::PointSet,
    index: &SpatialIndex,
    d_s: f64,
) -> Option<f64> {
    debug_assert!(c.alive && !c.members.is_empty());
    let k = c.mu.len();
    let mut sum = vec![0.0; k];
    for &id in &c.members {
        for (s, v) in sum.iter_mut().zip(points.point(id)) {
            *s += v;
        }
    }
    let n = c.members.len() as f64;
    let next: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    let step = next
        .iter()
        .zip(&c.mu)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    c.mu = next;
    c.iterations += 1;
    c.members = index
        .range_query(&window(&c.mu, d_s))
        .expect("centroid dimension matches index");
    if c.members.is_empty() {
        c.alive = false;
        return None;
    }
    Some(step)
}

/// Collision predicate: `b` lies strictly inside the cube of side `2 d_s` centered on `a`.
pub fn collides(a: &Centroid, b: &Centroid, d_s: f64) -> bool {
    a.mu.iter().zip(&b.mu).all(|(x, y)| (x - y).abs() < d_s)
}

/// Kills the lower-count member of every colliding alive pair.
///
/// Pairs are processed in `(lower id, higher id)` order; equal counts kill
/// the higher id. Deaths never create new collisions, so one ordered pass
/// leaves no colliding alive pair. Returns the number of centroids killed.
pub fn resolve_collisions(centroids: &mut [Centroid], d_s: f64) -> usize {
    let mut pairs = colliding_pairs(centroids, d_s);
    pairs.sort_unstable_by_key(|&(i, j)| (centroids[i].id, centroids[j].id));
    let mut killed = 0;
    for (i, j) in pairs {
        if !(centroids[i].alive && centroids[j].alive) {
            continue;
        }
        let (ci, cj) = (&centroids[i], &centroids[j]);
        let loser = if ci.count() != cj.count() {
            if ci.count() < cj.count() {
                i
            } else {
                j
            }
        } else if ci.id > cj.id {
            i
        } else {
            j
        };
        centroids[loser].alive = false;
        killed += 1;
    }
    killed
}

/// Candidate pairs via a sweep along axis 0, filtered by the full predicate.
/// Each pair is returned with the lower id first.
fn colliding_pairs(centroids: &[Centroid], d_s: f64) -> Vec<(usize, usize)> {
    let mut alive: Vec<usize> = (0..centroids.len())
        .filter(|&i| centroids[i].alive)
        .collect();
    alive.sort_unstable_by(|&a, &b| centroids[a].mu[0].total_cmp(&centroids[b].mu[0]));
    let mut pairs = Vec::new();
    for (pos, &i) in alive.iter().enumerate() {
        for &j in &alive[pos + 1..] {
            if centroids[j].mu[0] - centroids[i].mu[0] >= d_s {
                break;
            }
            if collides(&centroids[i], &centroids[j], d_s) {
                if centroids[i].id < centroids[j].id {
                    pairs.push((i, j));
                } else {
                    pairs.push((j, i));
                }
            }
        }
    }
    pairs
}

/// Outcome of [`converge_all`].
#[derive(Debug, Clone)]
pub struct Convergence {
    /// Definitive centroids, ascending by seed id.
    pub centroids: Vec<Centroid>,
    pub sweeps: usize,
    pub collisions: usize,
    /// Centroids whose window emptied during an update.
    pub emptied: usize,
}

/// Iterates every live, unconverged centroid to its local mean, resolving
/// collisions after each sweep, until all survivors have converged or hit
/// the iteration cap. Updates within a sweep run in parallel; results do not
/// depend on the worker count.
pub fn converge_all(
    mut centroids: Vec<Centroid>,
    points: &crate::points::PointSet,
    index: &SpatialIndex,
    params: &SeedParams,
) -> Result<Convergence> {
    params.validate()?;
    let mut sweeps = 0;
    let mut collisions = 0;
    let mut emptied = 0;
    loop {
        let pending = centroids
            .iter()
            .any(|c| c.alive && !c.converged && c.iterations < params.max_iter);
        if !pending {
            break;
        }
        sweeps += 1;
        emptied += centroids
            .par_iter_mut()
            .filter(|c| c.alive && !c.converged && c.iterations < params.max_iter)
            .map(|c| match update_centroid(c, points, index, params.d_s) {
                Some(step) => {
                    c.converged = step < params.epsilon;
                    0
                }
                None => 1,
            })
            .sum::<usize>();
        collisions += resolve_collisions(&mut centroids, params.d_s);
    }
    centroids.retain(|c| c.alive);
    if centroids.is_empty() {
        return Err(Error::NoClusters);
    }
    Ok(Convergence {
        centroids,
        sweeps,
        collisions,
        emptied,
    })
}
