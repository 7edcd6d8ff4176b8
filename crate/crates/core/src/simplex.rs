//! Primitive operations on the unit simplex `{x : x_j >= 0, sum_j x_j = 1}`.
//!
//! Preference rays, Monte-Carlo simulation points and Voronoi sites all live
//! here. Every constructor in this module returns points that satisfy the
//! simplex constraint to within [`SUM_TOLERANCE`].

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on `sum(coords) == 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A point on the `(J-1)`-simplex used as hypernetwork input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceRay(Vec<f64>);

impl PreferenceRay {
    /// Validates `coords` against the simplex invariants.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0 || *c > 1.0) {
            return Err(invalid(format!("ray coordinates must lie in [0,1]: {coords:?}")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!("ray coordinates sum to {sum}, expected 1")));
        }
        Ok(Self(coords))
    }

    /// The unit ray `e_k` in `dim` dimensions.
    pub fn corner(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if k >= dim {
            return Err(invalid(format!("corner index {k} out of range for dimension {dim}")));
        }
        let mut coords = vec![0.0; dim];
        coords[k] = 1.0;
        Ok(Self(coords))
    }

    /// The barycenter `(1/J, ..., 1/J)`.
    pub fn center(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self(vec![1.0 / dim as f64; dim]))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Builds a ray from coordinates known to be valid; only checked in debug builds.
    pub(crate) fn from_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(Self::new(coords.clone()).is_ok(), "invalid ray {coords:?}");
        Self(coords)
    }
}

impl TryFrom<Vec<f64>> for PreferenceRay {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<PreferenceRay> for Vec<f64> {
    fn from(ray: PreferenceRay) -> Self {
        ray.0
    }
}

impl AsRef<[f64]> for PreferenceRay {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Draws a point uniformly distributed over the simplex (flat Dirichlet),
/// by normalizing independent standard-exponential variates.
pub fn uniform_simplex_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<PreferenceRay> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 {
            return Ok(normalize_nonnegative(draws, sum));
        }
    }
}

/// Draws a point from a symmetric Dirichlet(`alpha`) distribution.
pub fn dirichlet_point<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    alpha: f64,
) -> Result<PreferenceRay> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| invalid(format!("dirichlet concentration {alpha}: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return Ok(normalize_nonnegative(draws, sum));
        }
    }
}

fn normalize_nonnegative(mut v: Vec<f64>, sum: f64) -> PreferenceRay {
    for c in &mut v {
        *c = (*c / sum).clamp(0.0, 1.0);
    }
    PreferenceRay::from_unchecked(v)
}

/// Maps an angle `phi` in `[0, pi/2]` to the 2-simplex by L1-normalizing
/// the direction `(cos phi, sin phi)`.
pub fn angle_to_ray(phi: f64) -> PreferenceRay {
    let (s, c) = phi.clamp(0.0, FRAC_PI_2).sin_cos();
    let (c, s) = (c.max(0.0), s.max(0.0));
    let a = c / (c + s);
    PreferenceRay::from_unchecked(vec![a, 1.0 - a])
}

/// One angle per sub-interval `[i*pi/(2n), (i+1)*pi/(2n))`, uniform within it.
pub fn partition_angles_2d<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("partition sampler needs at least one ray"));
    }
    let width = FRAC_PI_2 / n as f64;
    Ok((0..n)
        .map(|i| {
            let lo = i as f64 * width;
            let phi = lo + rng.random::<f64>() * width;
            // guard the half-open upper end against rounding
            if phi >= lo + width {
                lo
            } else {
                phi
            }
        })
        .collect())
}

/// The two-objective angular partition sampler: `n` rays, one per angular cell,
/// ordered by increasing angle (decreasing first coordinate).
pub fn partition_sample_2d<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<PreferenceRay>> {
    Ok(partition_angles_2d(n, rng)?.into_iter().map(angle_to_ray).collect())
}

/// Deterministic rays at the angular midpoints of `n` equal cells.
pub fn partition_midpoints_2d(n: usize) -> Result<Vec<PreferenceRay>> {
    if n == 0 {
        return Err(invalid("need at least one ray"));
    }
    let width = FRAC_PI_2 / n as f64;
    Ok((0..n)
        .map(|i| angle_to_ray((i as f64 + 0.5) * width))
        .collect())
}

/// Clips `point` to `[0,1]^J` and renormalizes onto the simplex.
///
/// Valid rays are returned unchanged, which makes the projection idempotent.
pub fn project_to_simplex(point: &[f64]) -> Result<PreferenceRay> {
    if point.len() < 2 {
        return Err(Error::InvalidDimension(point.len()));
    }
    if point.iter().any(|c| !c.is_finite()) {
        return Err(invalid(format!("non-finite point {point:?}")));
    }
    let clipped: Vec<f64> = point.iter().map(|c| c.clamp(0.0, 1.0)).collect();
    renormalize(clipped)
}

/// Boundary projection for a mutation step `origin -> target`.
///
/// If `target` leaves `[0,1]^J`, the step is shortened by the largest scale
/// factor that keeps every coordinate with a non-zero step component inside
/// the box, preserving the step direction. The result is then renormalized
/// onto the simplex. `origin` must itself lie in the box.
pub fn project_along(origin: &[f64], target: &[f64]) -> Result<PreferenceRay> {
    if origin.len() != target.len() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            origin.len(),
            target.len()
        )));
    }
    if target.iter().chain(origin).any(|c| !c.is_finite()) {
        return Err(invalid("non-finite point"));
    }
    let mut scale: f64 = 1.0;
    for (&o, &t) in origin.iter().zip(target) {
        let step = t - o;
        if step == 0.0 {
            continue;
        }
        if t < 0.0 {
            scale = scale.min((0.0 - o) / step);
        } else if t > 1.0 {
            scale = scale.min((1.0 - o) / step);
        }
    }
    let scale = scale.clamp(0.0, 1.0);
    let moved: Vec<f64> = origin
        .iter()
        .zip(target)
        .map(|(&o, &t)| (o + scale * (t - o)).clamp(0.0, 1.0))
        .collect();
    renormalize(moved)
}

fn renormalize(v: Vec<f64>) -> Result<PreferenceRay> {
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Degenerate(format!("point {v:?} has no mass on the simplex")));
    }
    if (sum - 1.0).abs() <= 1e-12 {
        return Ok(PreferenceRay(v));
    }
    Ok(normalize_nonnegative(v, sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn assert_on_simplex(r: &PreferenceRay) {
        let sum: f64 = r.coords().iter().sum();
        assert!((sum - 1.0).abs() <= SUM_TOLERANCE, "sum {sum}");
        assert!(r.coords().iter().all(|&c| (0.0..=1.0).contains(&c)));
    }

    #[test]
    fn uniform_rejects_low_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            uniform_simplex_point(&mut rng, 1),
            Err(Error::InvalidDimension(1))
        ));
    }

    #[test]
    fn uniform_two_dims_is_complementary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = uniform_simplex_point(&mut rng, 2).unwrap();
        assert!((r.coords()[0] + r.coords()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_mean_is_barycenter() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let r = uniform_simplex_point(&mut rng, 3).unwrap();
            for (m, c) in mean.iter_mut().zip(r.coords()) {
                *m += c / n as f64;
            }
        }
        for m in mean {
            assert!((m - 1.0 / 3.0).abs() < 0.01, "mean {m}");
        }
    }

    #[test]
    fn uniform_two_dims_marginal_passes_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| uniform_simplex_point(&mut rng, 2).unwrap().coords()[0])
            .collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = x - i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64 - x;
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        // asymptotic critical value at level 0.01
        let critical = 1.6276 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn quarter_angle_maps_to_center() {
        let r = angle_to_ray(PI / 4.0);
        assert!((r.coords()[0] - 0.5).abs() < 1e-15);
        assert!((r.coords()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_cell_ray_is_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rays = partition_sample_2d(1, &mut rng).unwrap();
        assert_eq!(rays.len(), 1);
        let c = rays[0].coords();
        assert!(c[0] > 0.0 && c[0] < 1.0 && c[1] > 0.0 && c[1] < 1.0);
        assert_on_simplex(&rays[0]);
    }

    #[test]
    fn four_cells_use_disjoint_intervals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let angles = partition_angles_2d(4, &mut rng).unwrap();
            for (i, phi) in angles.iter().enumerate() {
                let lo = i as f64 * PI / 8.0;
                let hi = (i + 1) as f64 * PI / 8.0;
                assert!(*phi >= lo && *phi < hi, "cell {i}: {phi}");
            }
        }
    }

    #[test]
    fn partition_rays_strictly_descend() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [1, 2, 7, 25, 90] {
            let rays = partition_sample_2d(n, &mut rng).unwrap();
            for w in rays.windows(2) {
                assert!(w[0].coords()[0] > w[1].coords()[0]);
            }
        }
        assert!(partition_sample_2d(0, &mut rng).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_to_simplex(&[0.5, 0.5]).unwrap();
        assert_eq!(p.coords(), &[0.5, 0.5]);
        let p = project_to_simplex(&[0.6, 0.6]).unwrap();
        assert!((p.coords()[0] - 0.5).abs() < 1e-15 && (p.coords()[1] - 0.5).abs() < 1e-15);
        let p = project_to_simplex(&[-0.2, 0.8]).unwrap();
        assert_eq!(p.coords(), &[0.0, 1.0]);
        assert!(matches!(
            project_to_simplex(&[-1.0, -2.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(project_to_simplex(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn projection_along_scales_back_to_boundary() {
        // step (0.2,0.8)->(-0.2,1.2) crosses both borders at scale 0.5
        let p = project_along(&[0.2, 0.8], &[-0.2, 1.2]).unwrap();
        assert!(p.coords()[0].abs() < 1e-15);
        assert!((p.coords()[1] - 1.0).abs() < 1e-15);
        // in-box targets are only renormalized
        let p = project_along(&[0.5, 0.5], &[0.6, 0.6]).unwrap();
        assert!((p.coords()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ray_validation() {
        assert!(PreferenceRay::new(vec![0.3, 0.7]).is_ok());
        assert!(PreferenceRay::new(vec![0.3, 0.6]).is_err());
        assert!(PreferenceRay::new(vec![1.0]).is_err());
        assert!(PreferenceRay::new(vec![-0.1, 1.1]).is_err());
        let json = serde_json::to_string(&PreferenceRay::corner(3, 1).unwrap()).unwrap();
        assert_eq!(json, "[0.0,1.0,0.0]");
        assert!(serde_json::from_str::<PreferenceRay>("[0.5,0.6]").is_err());
    }

    #[test]
    fn midpoints_are_symmetric() {
        let rays = partition_midpoints_2d(25).unwrap();
        assert_eq!(rays.len(), 25);
        assert!((rays[12].coords()[0] - 0.5).abs() < 1e-12);
        for (a, b) in rays.iter().zip(rays.iter().rev()) {
            assert!((a.coords()[0] - b.coords()[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_points_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            assert_on_simplex(&dirichlet_point(&mut rng, 5, 0.5).unwrap());
        }
        assert!(dirichlet_point(&mut rng, 3, -1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]

            #[test]
            fn projection_lands_on_simplex_and_is_idempotent(
                v in prop::collection::vec(-2.0f64..2.0, 2..8)
            ) {
                if let Ok(p) = project_to_simplex(&v) {
                    assert_on_simplex(&p);
                    let again = project_to_simplex(p.coords()).unwrap();
                    prop_assert_eq!(again.coords(), p.coords());
                }
            }

            #[test]
            fn projection_along_lands_on_simplex(
                seed in any::<u64>(), dim in 2usize..8, std in 0.01f64..1.0
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let origin = uniform_simplex_point(&mut rng, dim).unwrap();
                let target: Vec<f64> = origin
                    .coords()
                    .iter()
                    .map(|c| c + std * (rng.random::<f64>() - 0.5))
                    .collect();
                if let Ok(p) = project_along(origin.coords(), &target) {
                    assert_on_simplex(&p);
                }
            }

            #[test]
            fn samplers_land_on_simplex(seed in any::<u64>(), dim in 2usize..10, n in 1usize..40) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                assert_on_simplex(&uniform_simplex_point(&mut rng, dim).unwrap());
                for r in partition_sample_2d(n, &mut rng).unwrap() {
                    assert_on_simplex(&r);
                }
            }
        }
    }
}
