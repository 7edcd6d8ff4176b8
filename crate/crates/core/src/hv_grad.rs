//! Hypervolume gradients with respect to every coordinate of every point, and
//! the dynamic-weight pipeline that turns a loss matrix into per-solution
//! descent directions.
//!
//! For a mutually non-dominated set, `dHV/dy_j` of point `i` is minus the
//! `(J-1)`-volume of the face of its box orthogonal to axis `j` that no point
//! with a better `j`-coordinate covers. [`grad_multisweep`] computes it by
//! sweeping each axis in ascending order over a staircase of already-seen
//! projections. Ties in the sweep are processed by point index, so of two
//! points sharing a coordinate the lower index gets the improving-side
//! derivative and the other the worsening-side one; exact duplicates beyond
//! the first get zero.

use crate::error::{invalid, Error, Result};
use crate::pareto::{dominates_unchecked, nondominated_sort, Staircase};

/// Gradient norms below this are treated as degenerate (zero weight).
pub const MIN_GRADIENT_NORM: f64 = 1e-8;

/// Floor used by [`dynamic_reference`] when an objective's maximum is zero.
pub const REFERENCE_FLOOR: f64 = 1e-6;

/// Scale applied to objective maxima by [`dynamic_reference`].
pub const REFERENCE_SCALE: f64 = 1.1;

/// `dHV/dy` per point; row `i` has one entry per objective.
pub type HvGradient = Vec<Vec<f64>>;

/// Reference point just outside the current solutions: each objective's
/// maximum scaled by 1.1 (moved away from the points for negative maxima),
/// floored at `1e-6` when the maximum is zero.
pub fn dynamic_reference<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let first = points
        .first()
        .ok_or_else(|| invalid("dynamic reference needs at least one point"))?;
    let dim = first.as_ref().len();
    let mut max = vec![f64::NEG_INFINITY; dim];
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(invalid("points have mixed dimensions"));
        }
        for (m, v) in max.iter_mut().zip(p) {
            *m = m.max(*v);
        }
    }
    Ok(max
        .into_iter()
        .map(|m| {
            if m == 0.0 {
                REFERENCE_FLOOR
            } else {
                m + (REFERENCE_SCALE - 1.0) * m.abs()
            }
        })
        .collect())
}

/// Partial derivatives of the hypervolume of `points` (two or three
/// objectives, mutually non-dominated) with respect to every coordinate.
/// Points on or beyond the reference in any coordinate get zero.
pub fn grad_multisweep<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<HvGradient> {
    let dim = reference.len();
    if dim != 2 && dim != 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    for p in points {
        if p.as_ref().len() != dim {
            return Err(invalid("point and reference dimensions differ"));
        }
        if p.as_ref().iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite objective vector"));
        }
    }
    for (i, a) in points.iter().enumerate() {
        for (k, b) in points.iter().enumerate() {
            if i != k && dominates_unchecked(a.as_ref(), b.as_ref()) {
                return Err(invalid(format!("point {i} dominates point {k}")));
            }
        }
    }

    let mut grad = vec![vec![0.0; dim]; points.len()];
    // the Z set: zero-volume boxes keep zero derivatives
    let active: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].as_ref().iter().zip(reference).all(|(v, r)| v < r))
        .collect();

    for axis in 0..dim {
        let mut order = active.clone();
        order.sort_by(|&a, &b| {
            points[a].as_ref()[axis]
                .total_cmp(&points[b].as_ref()[axis])
                .then(a.cmp(&b))
        });
        let rest: Vec<usize> = (0..dim).filter(|&j| j != axis).collect();
        match dim {
            2 => {
                let other = rest[0];
                let mut covered = reference[other];
                for &i in &order {
                    let v = points[i].as_ref()[other];
                    grad[i][axis] = -(covered - v).max(0.0);
                    covered = covered.min(v);
                }
            }
            _ => {
                let mut stairs = Staircase::new((reference[rest[0]], reference[rest[1]]));
                for &i in &order {
                    let p = points[i].as_ref();
                    grad[i][axis] = -stairs.insert((p[rest[0]], p[rest[1]]));
                }
            }
        }
    }
    Ok(grad)
}

/// A loss matrix: one column (objective vector) per sampled ray.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossMatrix {
    objectives: usize,
    columns: Vec<Vec<f64>>,
}

impl LossMatrix {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let objectives = columns
            .first()
            .map(Vec::len)
            .ok_or_else(|| invalid("loss matrix needs at least one column"))?;
        for c in &columns {
            if c.len() != objectives {
                return Err(invalid("loss matrix columns have mixed lengths"));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("non-finite loss column {c:?}")));
            }
        }
        Ok(Self { objectives, columns })
    }

    pub fn objectives(&self) -> usize {
        self.objectives
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }
}

/// Unit-norm hypervolume ascent directions, expressed as non-negative weights
/// on the losses (a positive weight means "decrease this loss").
pub type DynamicWeights = Vec<Vec<f64>>;

/// Non-dominated sort of the columns, then per rank: a dynamic reference over
/// that rank, [`grad_multisweep`], and unit-norm normalization of the negated
/// gradient. Degenerate gradients (norm below [`MIN_GRADIENT_NORM`]) yield
/// all-zero weights.
pub fn hv_weights(losses: &LossMatrix) -> Result<DynamicWeights> {
    hv_weights_with_floor(losses, None)
}

/// [`hv_weights`] with each rank's dynamic reference raised componentwise to
/// at least `floor`, when given.
pub fn hv_weights_with_floor(losses: &LossMatrix, floor: Option<&[f64]>) -> Result<DynamicWeights> {
    let dim = losses.objectives();
    if dim != 2 && dim != 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if let Some(f) = floor {
        if f.len() != dim {
            return Err(invalid(format!(
                "reference floor has {} coordinates, losses have {dim}",
                f.len()
            )));
        }
    }
    let ranks = nondominated_sort(losses.columns())?;
    let mut weights = vec![vec![0.0; dim]; losses.len()];
    for members in &ranks.ranks {
        let pts: Vec<&[f64]> = members.iter().map(|&i| losses.column(i)).collect();
        let mut reference = dynamic_reference(&pts)?;
        if let Some(f) = floor {
            for (r, &lo) in reference.iter_mut().zip(f) {
                *r = r.max(lo);
            }
        }
        let grad = grad_multisweep(&pts, &reference)?;
        for (&i, g) in members.iter().zip(grad) {
            weights[i] = normalized_descent(&g);
        }
    }
    Ok(weights)
}

/// `-g / |g|`, or zeros when `|g|` is below [`MIN_GRADIENT_NORM`].
pub fn normalized_descent(gradient: &[f64]) -> Vec<f64> {
    let norm = gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < MIN_GRADIENT_NORM {
        return vec![0.0; gradient.len()];
    }
    gradient.iter().map(|v| -v / norm).collect()
}
