//! Nearest-neighbor weighting.
//!
//! Every source point owns the Voronoi cell of points closer to it than to
//! any other source point. A target sample contributes one count to the
//! source point whose cell it lands in, which is exactly a 1-NN query. The
//! count vector is the raw importance-weight estimate; adding one count per
//! cell gives the Laplace-smoothed variant.

use nalgebra::DMatrix;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::weights::{Normalization, WeightVector};

/// Search strategy for the exact 1-NN index. Both strategies return
/// identical indices, including on distance ties (smallest row index wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Acceleration {
    BruteForce,
    #[default]
    KdTree,
}

impl std::str::FromStr for Acceleration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" | "brute-force" => Ok(Acceleration::BruteForce),
            "kd-tree" | "kdtree" => Ok(Acceleration::KdTree),
            other => Err(Error::InvalidArgument(format!(
                "unknown acceleration `{other}` (expected brute|kd-tree)"
            ))),
        }
    }
}

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        len: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact Euclidean 1-NN index over the source points.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    /// Row-major copy of the source features.
    points: Vec<f64>,
    n: usize,
    dim: usize,
    /// Tree node pool; empty in brute-force mode.
    nodes: Vec<Node>,
    /// Point ids grouped by leaf (kd-tree mode).
    order: Vec<u32>,
    root: usize,
}

fn dist2(points: &[f64], dim: usize, i: usize, query: &[f64]) -> f64 {
    let base = i * dim;
    let mut acc = 0.0;
    for j in 0..dim {
        let diff = query[j] - points[base + j];
        acc += diff * diff;
    }
    acc
}

impl NeighborIndex {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the source point nearest to `query`; smallest index on ties.
    pub fn nearest(&self, query: &[f64]) -> usize {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        if self.nodes.is_empty() {
            return self.nearest_brute(query);
        }
        let mut best = (f64::INFINITY, u32::MAX);
        self.search(self.root, query, &mut best);
        best.1 as usize
    }

    fn nearest_brute(&self, query: &[f64]) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        for i in 0..self.n {
            let d2 = dist2(&self.points, self.dim, i, query);
            if d2 < best.0 || (d2 == best.0 && i < best.1) {
                best = (d2, i);
            }
        }
        best.1
    }

    fn search(&self, node: usize, query: &[f64], best: &mut (f64, u32)) {
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for &id in &self.order[*start..*start + *len] {
                    let d2 = dist2(&self.points, self.dim, id as usize, query);
                    if d2 < best.0 || (d2 == best.0 && id < best.1) {
                        *best = (d2, id);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis] - value;
                let (near, far) = if diff < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, query, best);
                // equal plane distance may still hide the smallest tied index
                if diff * diff <= best.0 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

fn build_tree(
    points: &[f64],
    dim: usize,
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            len: order.len(),
        });
        return nodes.len() - 1;
    }
    // split on the axis with the largest spread; smallest axis wins ties
    let mut axis = 0;
    let mut best_spread = -1.0;
    for j in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &id in order.iter() {
            let v = points[id as usize * dim + j];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            axis = j;
        }
    }
    if best_spread <= 0.0 {
        // all remaining points identical on every axis
        nodes.push(Node::Leaf {
            start: offset,
            len: order.len(),
        });
        return nodes.len() - 1;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        let (va, vb) = (
            points[a as usize * dim + axis],
            points[b as usize * dim + axis],
        );
        va.partial_cmp(&vb).unwrap().then(a.cmp(&b))
    });
    let value = points[order[mid] as usize * dim + axis];
    let (left_ids, right_ids) = order.split_at_mut(mid);
    let left = build_tree(points, dim, left_ids, offset, nodes);
    let right = build_tree(points, dim, right_ids, offset + mid, nodes);
    nodes.push(Node::Split {
        axis,
        value,
        left,
        right,
    });
    nodes.len() - 1
}

/// Builds the 1-NN index over all source rows. Duplicate source points are
/// allowed; ties resolve to the smallest row index.
pub fn build_index(source: &Dataset, acceleration: Acceleration) -> Result<NeighborIndex> {
    build_index_matrix(source.features(), acceleration)
}

/// Matrix-level variant of [`build_index`].
pub fn build_index_matrix(
    features: &DMatrix<f64>,
    acceleration: Acceleration,
) -> Result<NeighborIndex> {
    let (n, dim) = (features.nrows(), features.ncols());
    if n == 0 {
        return Err(Error::InvalidArgument("empty source sample".into()));
    }
    let mut points = Vec::with_capacity(n * dim);
    for i in 0..n {
        for j in 0..dim {
            points.push(features[(i, j)]);
        }
    }
    let mut index = NeighborIndex {
        points,
        n,
        dim,
        nodes: Vec::new(),
        order: Vec::new(),
        root: 0,
    };
    if acceleration == Acceleration::KdTree {
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        let root = build_tree(&index.points, dim, &mut order, 0, &mut nodes);
        index.nodes = nodes;
        index.order = order;
        index.root = root;
    }
    Ok(index)
}

/// Number of target rows falling in each source point's Voronoi cell.
/// The counts sum to the number of target rows, exactly.
pub fn nnew_counts(index: &NeighborIndex, target_features: &DMatrix<f64>) -> Result<Vec<u64>> {
    if target_features.ncols() != index.dim() && target_features.nrows() > 0 {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            got: target_features.ncols(),
        });
    }
    let dim = index.dim();
    let m = target_features.nrows();
    let mut flat = Vec::with_capacity(m * dim);
    for i in 0..m {
        for j in 0..dim {
            flat.push(target_features[(i, j)]);
        }
    }

    #[cfg(feature = "parallel")]
    {
        if dim == 0 {
            return Ok(vec![0; index.len()]);
        }
        Ok(flat
            .par_chunks_exact(dim)
            .fold(
                || vec![0u64; index.len()],
                |mut acc, q| {
                    acc[index.nearest(q)] += 1;
                    acc
                },
            )
            .reduce(
                || vec![0u64; index.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            ))
    }

    #[cfg(not(feature = "parallel"))]
    {
        let mut counts = vec![0u64; index.len()];
        for q in flat.chunks_exact(dim) {
            counts[index.nearest(q)] += 1;
        }
        Ok(counts)
    }
}

/// NNeW: weight of source point i = number of target rows whose nearest
/// source point is i.
pub fn nnew_weights(index: &NeighborIndex, target: &Dataset) -> Result<WeightVector> {
    let counts = nnew_counts(index, target.features())?;
    WeightVector::new(
        counts.into_iter().map(|c| c as f64).collect(),
        Normalization::RawCounts,
    )
}

/// NNeW+1: Laplace-smoothed variant; every cell starts with one count.
pub fn nnew_plus_one(index: &NeighborIndex, target: &Dataset) -> Result<WeightVector> {
    let counts = nnew_counts(index, target.features())?;
    WeightVector::new(
        counts.into_iter().map(|c| (c + 1) as f64).collect(),
        Normalization::RawCounts,
    )
}
