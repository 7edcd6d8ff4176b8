//! Exact nearest-neighbour queries over a small, static point set.
//!
//! Ties between equidistant sites resolve to the lowest site index, so the
//! answer always equals an exhaustive scan with `(distance, index)` ordering.

use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// KD-tree over a fixed set of points in `dim` dimensions.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    nodes: Vec<Node>,
    root: usize,
}

impl KdTree {
    pub fn build<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| invalid("cannot index an empty point set"))?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(invalid("points must have at least one coordinate"));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(invalid(format!(
                    "mixed dimensions in point set: {} vs {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        let mut tree = Self {
            dim,
            coords,
            nodes: Vec::with_capacity(points.len()),
            root: 0,
        };
        let mut order: Vec<usize> = (0..points.len()).collect();
        tree.root = tree.build_rec(&mut order, 0);
        Ok(tree)
    }

    fn build_rec(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let axis = self.widest_axis(idx).unwrap_or(depth % self.dim);
        idx.sort_by(|&a, &b| {
            self.coord(a, axis)
                .total_cmp(&self.coord(b, axis))
                .then(a.cmp(&b))
        });
        let mid = idx.len() / 2;
        let node = self.nodes.len();
        self.nodes.push(Node {
            point: idx[mid],
            axis,
            left: None,
            right: None,
        });
        let (lo, rest) = idx.split_at_mut(mid);
        let hi = &mut rest[1..];
        if !lo.is_empty() {
            let l = self.build_rec(lo, depth + 1);
            self.nodes[node].left = Some(l);
        }
        if !hi.is_empty() {
            let r = self.build_rec(hi, depth + 1);
            self.nodes[node].right = Some(r);
        }
        node
    }

    fn widest_axis(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() < 2 {
            return None;
        }
        (0..self.dim)
            .map(|axis| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let c = self.coord(i, axis);
                    (lo.min(c), hi.max(c))
                });
                (axis, hi - lo)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(axis, _)| axis)
    }

    #[inline]
    fn coord(&self, point: usize, axis: usize) -> f64 {
        self.coords[point * self.dim + axis]
    }

    #[inline]
    fn point(&self, point: usize) -> &[f64] {
        &self.coords[point * self.dim..(point + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the nearest point to `query` (Euclidean), lowest index on ties.
    pub fn nearest(&self, query: &[f64]) -> Result<usize> {
        if query.len() != self.dim {
            return Err(invalid(format!(
                "query dimension {} does not match index dimension {}",
                query.len(),
                self.dim
            )));
        }
        Ok(self.nearest_unchecked(query))
    }

    pub(crate) fn nearest_unchecked(&self, query: &[f64]) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(self.root, query, &mut best);
        best.1
    }

    fn search(&self, node: usize, query: &[f64], best: &mut (f64, usize)) {
        let n = &self.nodes[node];
        let d2 = squared_distance(self.point(n.point), query);
        if d2 < best.0 || (d2 == best.0 && n.point < best.1) {
            *best = (d2, n.point);
        }
        let diff = query[n.axis] - self.coord(n.point, n.axis);
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        if let Some(c) = near {
            self.search(c, query, best);
        }
        // `<=` keeps equidistant candidates reachable for the index tie-break
        if let Some(c) = far {
            if diff * diff <= best.0 {
                self.search(c, query, best);
            }
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exhaustive nearest-point scan with the same tie rule as [`KdTree`].
pub fn linear_scan_nearest<P: AsRef<[f64]>>(points: &[P], query: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in points.iter().enumerate() {
        let d2 = squared_distance(p.as_ref(), query);
        if best.is_none_or(|(bd, _)| d2 < bd) {
            best = Some((d2, i));
        }
    }
    best.map(|(_, i)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    #[test]
    fn empty_and_mismatched_inputs_fail() {
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(KdTree::build(&empty).is_err());
        assert!(KdTree::build(&[vec![0.0, 1.0], vec![1.0]]).is_err());
        let tree = KdTree::build(&[vec![0.0, 1.0]]).unwrap();
        assert!(tree.nearest(&[0.0]).is_err());
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for dim in [1, 2, 3, 5, 8] {
            for n in [1, 2, 3, 10, 50, 200] {
                let pts = random_points(&mut rng, n, dim);
                let tree = KdTree::build(&pts).unwrap();
                for _ in 0..300 {
                    let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 1.4 - 0.2).collect();
                    assert_eq!(
                        tree.nearest(&q).unwrap(),
                        linear_scan_nearest(&pts, &q).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn duplicate_points_resolve_to_lowest_index() {
        let pts = vec![vec![0.5, 0.5], vec![0.1, 0.9], vec![0.5, 0.5], vec![0.5, 0.5]];
        let tree = KdTree::build(&pts).unwrap();
        assert_eq!(tree.nearest(&[0.5, 0.5]).unwrap(), 0);
        assert_eq!(tree.nearest(&[0.6, 0.4]).unwrap(), 0);
    }

    #[test]
    fn grid_ties_match_scan() {
        // integer grid queries produce many exact distance ties
        let pts: Vec<Vec<f64>> = (0..5)
            .flat_map(|i| (0..5).map(move |j| vec![i as f64, j as f64]))
            .collect();
        let tree = KdTree::build(&pts).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let q = [i as f64 * 0.5, j as f64 * 0.5];
                assert_eq!(tree.nearest(&q).unwrap(), linear_scan_nearest(&pts, &q).unwrap());
            }
        }
    }
}
