use phn_hvvs::hv_grad::{hv_weights, LossMatrix};
use phn_hvvs::kdtree::{linear_scan_nearest, KdTree};
use phn_hvvs::pareto::{hv_exact, FrontSet};
use phn_hvvs::problems::{MultiObjective, ProblemKind, ToyProblem};
use phn_hvvs::simplex::partition_sample_2d;
use phn_hvvs::voronoi::{evolve, fitness, GaConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn points(dim: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitness_is_in_unit_interval(labels in prop::collection::vec(0usize..6, 1..200)) {
        let f = fitness(&labels, 6);
        prop_assert!(f > 0.0 && f <= 1.0);
        let mut counts = [0usize; 6];
        for &l in &labels {
            counts[l] += 1;
        }
        prop_assert_eq!(f == 1.0, counts.iter().all(|&c| c == counts[0]));
    }

    #[test]
    fn partitions_cover_every_point_once(seed in any::<u64>(), dim in 2usize..5, sites in 1usize..9) {
        let mut c = GaConfig::new(dim, sites);
        c.points = 300;
        c.generations = 2;
        c.num_species = 4;
        c.seed = seed;
        let p = evolve(&c).unwrap();
        prop_assert!(p.labels().iter().all(|&l| l < sites));
        let mut seen = vec![false; p.points().len()];
        for cell in p.cells() {
            for &i in cell {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn kd_tree_matches_linear_scan(seed in any::<u64>(), dim in prop::sample::select(vec![2usize, 3, 5, 8])) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| (0..dim).map(|_| rng.random()).collect()).collect();
        let tree = KdTree::build(&pts).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            prop_assert_eq!(tree.nearest(&q).unwrap(), linear_scan_nearest(&pts, &q).unwrap());
        }
    }

    #[test]
    fn two_dim_hv_scales_quadratically(pts in points(2, 12), c in 0.1f64..10.0) {
        let hv = hv_exact(&FrontSet::new(pts.clone(), vec![1.2, 1.2]).unwrap()).unwrap();
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * c).collect()).collect();
        let hv_c = hv_exact(&FrontSet::new(scaled, vec![1.2 * c, 1.2 * c]).unwrap()).unwrap();
        prop_assert!((hv_c - c * c * hv).abs() <= 1e-9 * (1.0 + hv_c.abs()));
    }

    #[test]
    fn weights_are_unit_or_zero(pts in points(3, 12)) {
        let w = hv_weights(&LossMatrix::new(pts).unwrap()).unwrap();
        for row in w {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn dtlz2_optimal_points_lie_on_the_sphere(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = ToyProblem::new(ProblemKind::Dtlz2);
        let mut theta = vec![0.5; p.decision_dim()];
        theta[0] = a;
        theta[1] = b;
        let l = p.evaluate(&theta).unwrap();
        let norm = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn angular_rays_descend_in_first_coordinate(seed in any::<u64>(), n in 2usize..=90) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rays = partition_sample_2d(n, &mut rng).unwrap();
        prop_assert!(rays.windows(2).all(|w| w[1].coords()[0] < w[0].coords()[0]));
    }
}
