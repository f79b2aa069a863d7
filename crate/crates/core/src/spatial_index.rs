//! Static K-dimensional R-tree, bulk loaded with sort-tile-recursive packing.
//!
//! Points are reordered into tile order at build time, so every node covers
//! a contiguous run of the reordered point array. Queries whose box swallows
//! a node whole take that run without visiting its leaves.

use crate::error::{Error, Result};
use crate::points::{AxisBox, Bounds, PointSet};

/// Maximum number of entries per node.
const NODE_CAPACITY: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Node {
    /// Child node range for internal nodes; unused for leaves.
    children: (u32, u32),
    /// Range of reordered points covered by this subtree.
    points: (u32, u32),
    leaf: bool,
}

/// Immutable box-query index over a [`PointSet`].
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    k: usize,
    /// Coordinates in tile order, row-major.
    coords: Vec<f64>,
    /// Original id of each reordered point.
    ids: Vec<u32>,
    nodes: Vec<Node>,
    /// Per node: `k` minimums followed by `k` maximums.
    node_bounds: Vec<f64>,
    root: usize,
    bounds: Bounds,
}

impl SpatialIndex {
    /// Bulk loads the index. Global bounds are accumulated in the same pass
    /// that computes the leaf envelopes.
    pub fn build(points: &PointSet) -> Self {
        let k = points.dim();
        let n = points.len();
        assert!(
            n <= u32::MAX as usize,
            "index supports at most 2^32 - 1 points"
        );

        let mut order: Vec<u32> = (0..n as u32).collect();
        tile(&mut order, points, 0);

        let mut coords = Vec::with_capacity(n * k);
        for &id in &order {
            coords.extend_from_slice(points.point(id as usize));
        }

        let mut nodes = Vec::new();
        let mut node_bounds = Vec::new();
        let mut bounds = Bounds {
            min: points.point(order[0] as usize).to_vec(),
            max: points.point(order[0] as usize).to_vec(),
        };

        for start in (0..n).step_by(NODE_CAPACITY) {
            let end = (start + NODE_CAPACITY).min(n);
            let mut env = Bounds {
                min: coords[start * k..(start + 1) * k].to_vec(),
                max: coords[start * k..(start + 1) * k].to_vec(),
            };
            for i in start + 1..end {
                env.include(&coords[i * k..(i + 1) * k]);
            }
            bounds.include(&env.min);
            bounds.include(&env.max);
            node_bounds.extend_from_slice(&env.min);
            node_bounds.extend_from_slice(&env.max);
            nodes.push(Node {
                children: (0, 0),
                points: (start as u32, end as u32),
                leaf: true,
            });
        }

        // Leaves are already spatially coherent in tile order, so parents
        // pack consecutive runs of children.
        let mut level = (0, nodes.len());
        while level.1 - level.0 > 1 {
            let next_start = nodes.len();
            for first in (level.0..level.1).step_by(NODE_CAPACITY) {
                let last = (first + NODE_CAPACITY).min(level.1);
                let mut min = node_bounds[2 * k * first..2 * k * first + k].to_vec();
                let mut max = node_bounds[2 * k * first + k..2 * k * (first + 1)].to_vec();
                for c in first + 1..last {
                    let base = 2 * k * c;
                    for a in 0..k {
                        min[a] = min[a].min(node_bounds[base + a]);
                        max[a] = max[a].max(node_bounds[base + k + a]);
                    }
                }
                node_bounds.extend_from_slice(&min);
                node_bounds.extend_from_slice(&max);
                nodes.push(Node {
                    children: (first as u32, last as u32),
                    points: (nodes[first].points.0, nodes[last - 1].points.1),
                    leaf: false,
                });
            }
            level = (next_start, nodes.len());
        }

        SpatialIndex {
            k,
            coords,
            ids: order,
            root: nodes.len() - 1,
            nodes,
            node_bounds,
            bounds,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Per-feature minimum and maximum over all indexed points.
    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Ids of all points inside the closed box, ascending.
    pub fn range_query(&self, query: &AxisBox) -> Result<Vec<usize>> {
        self.check_dim(query)?;
        let mut out = Vec::new();
        self.visit(query, |ids| out.extend(ids.iter().map(|&id| id as usize)));
        out.sort_unstable();
        Ok(out)
    }

    /// Number of points inside the closed box.
    pub fn count_in_box(&self, query: &AxisBox) -> Result<usize> {
        self.check_dim(query)?;
        let mut count = 0;
        self.visit(query, |ids| count += ids.len());
        Ok(count)
    }

    fn check_dim(&self, query: &AxisBox) -> Result<()> {
        if query.dim() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: query.dim(),
            });
        }
        Ok(())
    }

    /// Calls `hit` with runs of ids inside the box: whole subtrees at once,
    /// single points from partially covered leaves.
    fn visit(&self, query: &AxisBox, mut hit: impl FnMut(&[u32])) {
        let k = self.k;
        let mut stack = vec![self.root];
        while let Some(ni) = stack.pop() {
            let node = self.nodes[ni];
            let env = &self.node_bounds[2 * k * ni..2 * k * (ni + 1)];
            // Same rounded predicate as `AxisBox::contains`; `|x - c|` is
            // monotone on either side of `c`, so the envelope corners decide.
            let (c, hw) = (query.center(), query.half_width());
            let mut inside = true;
            let mut disjoint = false;
            for a in 0..k {
                let lo_off = (env[a] - c[a]).abs();
                let hi_off = (env[k + a] - c[a]).abs();
                let straddles = env[a] <= c[a] && c[a] <= env[k + a];
                if !straddles && lo_off.min(hi_off) > hw {
                    disjoint = true;
                    break;
                }
                if lo_off > hw || hi_off > hw {
                    inside = false;
                }
            }
            if disjoint {
                continue;
            }
            let (p0, p1) = (node.points.0 as usize, node.points.1 as usize);
            if inside {
                hit(&self.ids[p0..p1]);
            } else if node.leaf {
                for i in p0..p1 {
                    if query.contains(&self.coords[i * k..(i + 1) * k]) {
                        hit(std::slice::from_ref(&self.ids[i]));
                    }
                }
            } else {
                stack.extend(node.children.0 as usize..node.children.1 as usize);
            }
        }
    }
}

/// Sort-tile-recursive ordering: sort by `axis`, cut into slabs whose sizes
/// are multiples of the node capacity, recurse on the next axis in each slab.
fn tile(ids: &mut [u32], points: &PointSet, axis: usize) {
    let k = points.dim();
    let key = |id: &u32| points.point(*id as usize)[axis];
    // Ties broken by id so the layout depends only on the input.
    ids.sort_unstable_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    if axis + 1 == k || ids.len() <= NODE_CAPACITY {
        return;
    }
    let pages = ids.len().div_ceil(NODE_CAPACITY);
    let remaining_axes = (k - axis) as f64;
    let slabs = (pages as f64).powf(1.0 / remaining_axes).ceil().max(1.0) as usize;
    let slab_len = pages.div_ceil(slabs) * NODE_CAPACITY;
    for slab in ids.chunks_mut(slab_len) {
        tile(slab, points, axis + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(points: &PointSet, query: &AxisBox) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| query.contains(points.point(i)))
            .collect()
    }

    #[test]
    fn small_box_picks_the_origin() {
        let ps = PointSet::from_rows(&[[0.0, 0.0], [2.0, 2.0]]).unwrap();
        let idx = SpatialIndex::build(&ps);
        let q = AxisBox::new(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(idx.range_query(&q).unwrap(), vec![0]);
        assert_eq!(idx.count_in_box(&q).unwrap(), 1);
    }

    #[test]
    fn bounds_match_point_set() {
        let ps = PointSet::from_rows(&[[0.0, 0.0], [1.0, 2.0], [-1.0, 3.0]]).unwrap();
        let idx = SpatialIndex::build(&ps);
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.bounds(), &ps.bounds());
    }

    #[test]
    fn deep_tree_matches_scan_on_a_lattice() {
        // Lattice points land exactly on query boundaries.
        let rows: Vec<[f64; 2]> = (0..40)
            .flat_map(|i| (0..40).map(move |j| [i as f64 * 0.5, j as f64 * 0.5]))
            .collect();
        let ps = PointSet::from_rows(&rows).unwrap();
        let idx = SpatialIndex::build(&ps);
        for (cx, cy, hw) in [
            (3.0, 4.0, 1.0),
            (0.0, 0.0, 0.5),
            (10.0, 10.0, 2.25),
            (19.5, 0.0, 3.0),
        ] {
            let q = AxisBox::new(vec![cx, cy], hw).unwrap();
            let expected = scan(&ps, &q);
            assert_eq!(idx.range_query(&q).unwrap(), expected);
            assert_eq!(idx.count_in_box(&q).unwrap(), expected.len());
        }
        let all = AxisBox::new(vec![10.0, 10.0], 100.0).unwrap();
        assert_eq!(idx.count_in_box(&all).unwrap(), rows.len());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ps = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
        let idx = SpatialIndex::build(&ps);
        let q = AxisBox::new(vec![0.0], 1.0).unwrap();
        assert!(matches!(
            idx.range_query(&q),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(idx.count_in_box(&q).is_err());
    }
}
