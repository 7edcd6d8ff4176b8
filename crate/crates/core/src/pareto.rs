//! Dominance, non-dominated sorting and the hypervolume indicator.
//!
//! All objectives are minimized. Hypervolume is exact for two and three
//! objectives (slab sum and a z-sweep over a 2-D staircase) and estimated by
//! Monte-Carlo sampling beyond that.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Samples per Monte-Carlo shard; every shard owns a generator seeded from
/// `(base seed, shard index)`, so the estimate does not depend on how shards
/// are scheduled.
const MC_SHARD: usize = 1024;

/// Monte-Carlo sample count used by [`hv`] beyond three objectives.
pub const DEFAULT_MC_SAMPLES: usize = 10_000;

/// A set of objective vectors and the reference point bounding their
/// dominated region.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSet {
    points: Vec<Vec<f64>>,
    reference: Vec<f64>,
}

impl FrontSet {
    pub fn new(points: Vec<Vec<f64>>, reference: Vec<f64>) -> Result<Self> {
        let dim = reference.len();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if reference.iter().any(|r| !r.is_finite()) {
            return Err(invalid("reference point must be finite"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(invalid(format!(
                    "point dimension {} does not match reference dimension {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("non-finite objective vector {p:?}")));
            }
        }
        Ok(Self { points, reference })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    /// Indices of points that do not lie strictly inside the reference box
    /// and therefore contribute no volume.
    pub fn beyond_reference(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| !strictly_inside(p, &self.reference))
            .map(|(i, _)| i)
            .collect()
    }
}

fn strictly_inside(p: &[f64], reference: &[f64]) -> bool {
    p.iter().zip(reference).all(|(v, r)| v < r)
}

/// Pareto dominance for minimization: `a <= b` componentwise and `a != b`.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Layers of mutually non-dominated point indices; rank 0 is the Pareto front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedFronts {
    pub ranks: Vec<Vec<usize>>,
}

impl RankedFronts {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Rank of every point, indexed by point.
    pub fn rank_of(&self) -> Vec<usize> {
        let n = self.ranks.iter().map(Vec::len).sum();
        let mut out = vec![0; n];
        for (r, members) in self.ranks.iter().enumerate() {
            for &i in members {
                out[i] = r;
            }
        }
        out
    }
}

/// Fast non-dominated sorting (pairwise, `O(n^2 J)`). Indices inside each rank
/// are ascending.
pub fn nondominated_sort<P: AsRef<[f64]>>(points: &[P]) -> Result<RankedFronts> {
    let first = points
        .first()
        .ok_or_else(|| invalid("cannot sort an empty point set"))?;
    let dim = first.as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(invalid("points have mixed dimensions"));
    }
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_unchecked(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut ranks = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        ranks.push(current);
        current = next;
    }
    Ok(RankedFronts { ranks })
}

/// Mutually non-dominated 2-D points sorted by first coordinate (second
/// coordinate then strictly decreasing), with the area they dominate inside a
/// reference box.
#[derive(Debug, Clone)]
pub(crate) struct Staircase {
    steps: Vec<(f64, f64)>,
    reference: (f64, f64),
    area: f64,
}

impl Staircase {
    pub(crate) fn new(reference: (f64, f64)) -> Self {
        Self {
            steps: Vec::new(),
            reference,
            area: 0.0,
        }
    }

    pub(crate) fn area(&self) -> f64 {
        self.area
    }

    /// Area dominated by `p` and by no current step.
    pub(crate) fn contribution(&self, p: (f64, f64)) -> f64 {
        let (rx, ry) = self.reference;
        let (px, py) = p;
        if px >= rx || py >= ry {
            return 0.0;
        }
        // steps with x <= px cap the exposed height from the start
        let split = self.steps.partition_point(|s| s.0 <= px);
        let mut cap = ry;
        if split > 0 {
            cap = cap.min(self.steps[split - 1].1);
        }
        if cap <= py {
            return 0.0;
        }
        let mut area = 0.0;
        let mut x = px;
        for &(sx, sy) in &self.steps[split..] {
            if sx >= rx {
                break;
            }
            area += (sx - x) * (cap - py);
            x = sx;
            cap = cap.min(sy);
            if cap <= py {
                return area;
            }
        }
        area + (rx - x) * (cap - py)
    }

    /// Adds `p`, drops steps it weakly dominates and returns its contribution.
    pub(crate) fn insert(&mut self, p: (f64, f64)) -> f64 {
        let gain = self.contribution(p);
        if gain <= 0.0 {
            return 0.0;
        }
        self.steps.retain(|s| !(s.0 >= p.0 && s.1 >= p.1));
        let at = self.steps.partition_point(|s| s.0 < p.0);
        self.steps.insert(at, p);
        self.area += gain;
        gain
    }
}

/// Exact hypervolume for two or three objectives. Points outside the
/// reference box contribute nothing.
pub fn hv_exact(front: &FrontSet) -> Result<f64> {
    let r = front.reference();
    match front.dim() {
        2 => Ok(hv2(front.points(), (r[0], r[1]))),
        3 => Ok(hv3(front.points(), r)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn hv2(points: &[Vec<f64>], reference: (f64, f64)) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p[0] < reference.0 && p[1] < reference.1)
        .map(|p| (p[0], p[1]))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut level = reference.1;
    for (x, y) in pts {
        if y < level {
            area += (reference.0 - x) * (level - y);
            level = y;
        }
    }
    area
}

fn hv3(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<&Vec<f64>> = points
        .iter()
        .filter(|p| strictly_inside(p, reference))
        .collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stairs = Staircase::new((reference[0], reference[1]));
    let mut volume = 0.0;
    for (k, p) in pts.iter().enumerate() {
        stairs.insert((p[0], p[1]));
        let next_z = pts.get(k + 1).map_or(reference[2], |q| q[2]);
        volume += stairs.area() * (next_z - p[2]);
    }
    volume
}

/// Monte-Carlo hypervolume estimate: uniform samples in the box spanned by the
/// componentwise minimum of the front and the reference point.
pub fn hv_monte_carlo<R: Rng + ?Sized>(front: &FrontSet, samples: usize, rng: &mut R) -> Result<f64> {
    if samples == 0 {
        return Err(invalid("need at least one Monte-Carlo sample"));
    }
    let base_seed: u64 = rng.random();
    let reference = front.reference();
    let inside: Vec<&Vec<f64>> = front
        .points()
        .iter()
        .filter(|p| strictly_inside(p, reference))
        .collect();
    if inside.is_empty() {
        return Ok(0.0);
    }
    let dim = front.dim();
    let lower: Vec<f64> = (0..dim)
        .map(|j| inside.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_volume: f64 = lower.iter().zip(reference).map(|(l, r)| r - l).product();
    if box_volume <= 0.0 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut sample = vec![0.0; dim];
    let shards = samples.div_ceil(MC_SHARD);
    for shard in 0..shards {
        let mut shard_rng = ChaCha8Rng::seed_from_u64(base_seed);
        shard_rng.set_stream(shard as u64);
        let count = MC_SHARD.min(samples - shard * MC_SHARD);
        for _ in 0..count {
            for j in 0..dim {
                sample[j] = lower[j] + shard_rng.random::<f64>() * (reference[j] - lower[j]);
            }
            if inside
                .iter()
                .any(|p| p.iter().zip(&sample).all(|(a, s)| a <= s))
            {
                hits += 1;
            }
        }
    }
    Ok(box_volume * hits as f64 / samples as f64)
}

/// Hypervolume dispatch: exact up to three objectives, Monte-Carlo with
/// [`DEFAULT_MC_SAMPLES`] beyond.
pub fn hv<R: Rng + ?Sized>(front: &FrontSet, rng: &mut R) -> Result<f64> {
    if front.dim() <= 3 {
        hv_exact(front)
    } else {
        hv_monte_carlo(front, DEFAULT_MC_SAMPLES, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fs(points: &[&[f64]], reference: &[f64]) -> FrontSet {
        FrontSet::new(points.iter().map(|p| p.to_vec()).collect(), reference.to_vec()).unwrap()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sorting_examples() {
        let r = nondominated_sort(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(r.ranks, vec![vec![0, 1], vec![2]]);
        let r = nondominated_sort(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(r.ranks, vec![vec![0], vec![1], vec![2]]);
        let r = nondominated_sort(&[vec![0.0, 3.0], vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(r.ranks, vec![vec![0, 1, 2]]);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(nondominated_sort(&empty).is_err());
        // duplicates share a rank
        let r = nondominated_sort(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(r.ranks, vec![vec![0, 1]]);
    }

    #[test]
    fn exact_examples() {
        assert_eq!(hv_exact(&fs(&[&[1.0, 1.0]], &[2.0, 2.0])).unwrap(), 1.0);
        assert_eq!(hv_exact(&fs(&[&[0.5, 1.0], &[1.0, 0.5]], &[2.0, 2.0])).unwrap(), 2.0);
        assert_eq!(hv_exact(&fs(&[&[0.0, 2.0], &[2.0, 0.0]], &[2.0, 2.0])).unwrap(), 0.0);
        assert_eq!(hv_exact(&fs(&[&[1.0, 1.0, 1.0]], &[2.0, 2.0, 2.0])).unwrap(), 1.0);
        assert!(matches!(
            hv_exact(&fs(&[&[1.0; 4]], &[2.0; 4])),
            Err(Error::UnsupportedDimension(4))
        ));
        assert_eq!(hv_exact(&fs(&[], &[2.0, 2.0])).unwrap(), 0.0);
    }

    #[test]
    fn exact_three_dims_inclusion_exclusion() {
        // boxes of volume 1*1*2 and 2*1*1 (ref 2) overlapping in 1*1*1 region
        let f = fs(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]], &[2.0, 2.0, 2.0]);
        assert!((hv_exact(&f).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn beyond_reference_flagged() {
        let f = fs(&[&[1.0, 1.0], &[3.0, 0.0]], &[2.0, 2.0]);
        assert_eq!(f.beyond_reference(), vec![1]);
        assert_eq!(hv_exact(&f).unwrap(), 1.0);
    }

    #[test]
    fn front_validation() {
        assert!(FrontSet::new(vec![vec![1.0]], vec![2.0, 2.0]).is_err());
        assert!(FrontSet::new(vec![vec![f64::NAN, 1.0]], vec![2.0, 2.0]).is_err());
        assert!(FrontSet::new(vec![], vec![2.0]).is_err());
    }

    #[test]
    fn monte_carlo_single_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = hv_monte_carlo(&fs(&[&[1.0, 1.0]], &[2.0, 2.0]), 10_000, &mut rng).unwrap();
        assert!((est - 1.0).abs() <= 0.05);
        let zero = hv_monte_carlo(&fs(&[&[3.0, 3.0]], &[2.0, 2.0]), 100, &mut rng).unwrap();
        assert_eq!(zero, 0.0);
        assert!(hv_monte_carlo(&fs(&[&[1.0, 1.0]], &[2.0, 2.0]), 0, &mut rng).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let f = fs(&[&[0.2, 0.8], &[0.5, 0.4], &[0.9, 0.1]], &[2.0, 2.0]);
        let a = hv_monte_carlo(&f, 5000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = hv_monte_carlo(&f, 5000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dispatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f2 = fs(&[&[0.3, 0.9], &[0.7, 0.2]], &[2.0, 2.0]);
        assert_eq!(hv(&f2, &mut rng).unwrap().to_bits(), hv_exact(&f2).unwrap().to_bits());
        let f3 = fs(&[&[0.3, 0.9, 1.0]], &[2.0, 2.0, 2.0]);
        assert_eq!(hv(&f3, &mut rng).unwrap(), hv_exact(&f3).unwrap());
        let f4 = fs(&[&[1.0; 4]], &[2.0; 4]);
        assert!((hv(&f4, &mut rng).unwrap() - 1.0).abs() <= 0.05);
    }

    /// Brute-force ranks: peel off the non-dominated subset repeatedly.
    fn brute_ranks(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut ranks = Vec::new();
        while !remaining.is_empty() {
            let layer: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| dominates_unchecked(&points[j], &points[i])))
                .collect();
            remaining.retain(|i| !layer.contains(i));
            ranks.push(layer);
        }
        ranks
    }

    /// Grid-counting oracle for 2-D hypervolume on integer coordinates.
    fn grid_hv2(points: &[Vec<f64>], reference: i64) -> f64 {
        let mut cells = 0;
        for x in 0..reference {
            for y in 0..reference {
                if points.iter().any(|p| p[0] <= x as f64 && p[1] <= y as f64) {
                    cells += 1;
                }
            }
        }
        cells as f64
    }

    fn grid_hv3(points: &[Vec<f64>], reference: i64) -> f64 {
        let mut cells = 0;
        for x in 0..reference {
            for y in 0..reference {
                for z in 0..reference {
                    if points
                        .iter()
                        .any(|p| p[0] <= x as f64 && p[1] <= y as f64 && p[2] <= z as f64)
                    {
                        cells += 1;
                    }
                }
            }
        }
        cells as f64
    }

    fn int_points(dim: usize, max: i64) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(
            prop::collection::vec((0..max).prop_map(|v| v as f64), dim),
            1..12,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sort_matches_brute_force(points in prop::collection::vec(
            prop::collection::vec(0.0f64..1.0, 3), 1..50)
        ) {
            let fast = nondominated_sort(&points).unwrap();
            prop_assert_eq!(fast.ranks, brute_ranks(&points));
        }

        #[test]
        fn exact_2d_matches_grid(points in int_points(2, 9)) {
            let f = FrontSet::new(points.clone(), vec![9.0, 9.0]).unwrap();
            prop_assert_eq!(hv_exact(&f).unwrap(), grid_hv2(&points, 9));
        }

        #[test]
        fn exact_3d_matches_grid(points in int_points(3, 6)) {
            let f = FrontSet::new(points.clone(), vec![6.0, 6.0, 6.0]).unwrap();
            prop_assert_eq!(hv_exact(&f).unwrap(), grid_hv3(&points, 6));
        }

        #[test]
        fn adding_a_point_never_decreases(
            points in prop::collection::vec(prop::collection::vec(0.0f64..2.5, 3), 1..15),
            extra in prop::collection::vec(0.0f64..2.5, 3),
        ) {
            for dim in [2usize, 3] {
                let pts: Vec<Vec<f64>> = points.iter().map(|p| p[..dim].to_vec()).collect();
                let before = hv_exact(&FrontSet::new(pts.clone(), vec![2.0; dim]).unwrap()).unwrap();
                let mut more = pts;
                more.push(extra[..dim].to_vec());
                let after = hv_exact(&FrontSet::new(more, vec![2.0; dim]).unwrap()).unwrap();
                prop_assert!(after >= before - 1e-12);
            }
        }

        #[test]
        fn dominated_points_add_nothing(
            points in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 3), 1..20)
        ) {
            for dim in [2usize, 3] {
                let pts: Vec<Vec<f64>> = points.iter().map(|p| p[..dim].to_vec()).collect();
                let ranks = nondominated_sort(&pts).unwrap();
                let front: Vec<Vec<f64>> = ranks.ranks[0].iter().map(|&i| pts[i].clone()).collect();
                let all = hv_exact(&FrontSet::new(pts, vec![2.0; dim]).unwrap()).unwrap();
                let top = hv_exact(&FrontSet::new(front, vec![2.0; dim]).unwrap()).unwrap();
                prop_assert!((all - top).abs() <= 1e-12 * (1.0 + all));
            }
        }

        #[test]
        fn scale_covariance_2d(
            points in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 2), 1..15),
            c in 0.1f64..10.0,
        ) {
            let base = hv_exact(&FrontSet::new(points.clone(), vec![2.0, 2.0]).unwrap()).unwrap();
            let scaled: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|v| v * c).collect()).collect();
            let s = hv_exact(&FrontSet::new(scaled, vec![2.0 * c, 2.0 * c]).unwrap()).unwrap();
            prop_assert!((s - c * c * base).abs() <= 1e-9 * (1.0 + s));
        }
    }
}
