//! Monte-Carlo Voronoi decomposition of the simplex, optimized by a genetic
//! algorithm so that every cell receives the same share of uniformly drawn
//! simulation points.
//!
//! The result is a [`VoronoiPartition`]: `N` sites plus `M` labeled
//! simulation points. Training reuses a fixed partition and draws one ray per
//! cell every round by picking a stored point with that cell's label.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::kdtree::KdTree;
use crate::simplex::{project_along, uniform_simplex_point, PreferenceRay};

/// Genetic-algorithm settings for [`evolve`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaConfig {
    pub num_species: usize,
    /// Sites per individual (`N`).
    pub sites: usize,
    /// Simplex dimension (`J`).
    pub dim: usize,
    /// Fresh Monte-Carlo points drawn per generation (`M`).
    pub points: usize,
    pub generations: usize,
    pub mutation_std: f64,
    /// Probability that a given site of a child is perturbed.
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub seed: u64,
}

impl GaConfig {
    pub fn new(dim: usize, sites: usize) -> Self {
        Self {
            num_species: 20,
            sites,
            dim,
            points: 20_000,
            generations: 50,
            mutation_std: 0.05,
            mutation_prob: 1.0,
            tournament_size: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if self.sites == 0 || self.points < self.sites {
            return Err(invalid(format!(
                "need points >= sites >= 1 (points={}, sites={})",
                self.points, self.sites
            )));
        }
        if self.num_species == 0 || self.generations == 0 || self.tournament_size == 0 {
            return Err(invalid("num_species, generations and tournament_size must be positive"));
        }
        if !(self.mutation_std > 0.0 && self.mutation_std.is_finite()) {
            return Err(invalid(format!("mutation_std must be positive, got {}", self.mutation_std)));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(invalid(format!("mutation_prob must lie in [0,1], got {}", self.mutation_prob)));
        }
        Ok(())
    }
}

/// `N` sites and `M` labeled simulation points partitioning the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiPartition {
    sites: Vec<PreferenceRay>,
    points: Vec<PreferenceRay>,
    labels: Vec<usize>,
    fitness: f64,
    seed: u64,
    cells: Vec<Vec<usize>>,
}

impl VoronoiPartition {
    /// Assembles a partition and checks every invariant: labels must be the
    /// nearest-site assignment and `fitness` must match the label counts.
    pub fn from_parts(
        sites: Vec<PreferenceRay>,
        points: Vec<PreferenceRay>,
        labels: Vec<usize>,
        fitness: f64,
        seed: u64,
    ) -> Result<Self> {
        let index = build_index(&sites)?;
        if points.len() != labels.len() {
            return Err(invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let expected = assign(&points, &index)?;
        if expected != labels {
            return Err(invalid("labels are not the nearest-site assignment"));
        }
        let recomputed = self::fitness(&labels, sites.len());
        if (recomputed - fitness).abs() > 1e-12 {
            return Err(invalid(format!(
                "stored fitness {fitness} differs from recomputed {recomputed}"
            )));
        }
        Ok(Self::assemble(sites, points, labels, recomputed, seed))
    }

    fn assemble(
        sites: Vec<PreferenceRay>,
        points: Vec<PreferenceRay>,
        labels: Vec<usize>,
        fitness: f64,
        seed: u64,
    ) -> Self {
        let mut cells = vec![Vec::new(); sites.len()];
        for (m, &l) in labels.iter().enumerate() {
            cells[l].push(m);
        }
        Self {
            sites,
            points,
            labels,
            fitness,
            seed,
            cells,
        }
    }

    pub fn dim(&self) -> usize {
        self.sites[0].dim()
    }

    pub fn sites(&self) -> &[PreferenceRay] {
        &self.sites
    }

    pub fn points(&self) -> &[PreferenceRay] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Point indices grouped by cell.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }

    /// One ray per cell, drawn uniformly from that cell's simulation points.
    /// An empty cell contributes its site.
    pub fn sample_rays<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<PreferenceRay> {
        self.cells
            .iter()
            .zip(&self.sites)
            .map(|(cell, site)| match cell.choose(rng) {
                Some(&m) => self.points[m].clone(),
                None => site.clone(),
            })
            .collect()
    }
}

/// Builds the nearest-site index over `sites`.
pub fn build_index(sites: &[PreferenceRay]) -> Result<KdTree> {
    KdTree::build(sites)
}

/// Labels every point with the index of its nearest site (lowest index on ties).
pub fn assign(points: &[PreferenceRay], index: &KdTree) -> Result<Vec<usize>> {
    points.iter().map(|p| index.nearest(p.coords())).collect()
}

/// Per-cell point counts.
pub fn cell_counts(labels: &[usize], sites: usize) -> Vec<usize> {
    let mut counts = vec![0usize; sites];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Uniformity fitness `1 / (1 + rho)` where `rho` is the population variance of
/// the per-cell counts.
pub fn fitness(labels: &[usize], sites: usize) -> f64 {
    let counts = cell_counts(labels, sites);
    let n = sites as f64;
    let mean = labels.len() as f64 / n;
    let rho = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    1.0 / (1.0 + rho)
}

type Individual = Vec<PreferenceRay>;

/// Result of [`evolve_with_history`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub partition: VoronoiPartition,
    /// Best fitness seen so far, one entry per generation.
    pub best_history: Vec<f64>,
    /// Best fitness of the initial population.
    pub initial_best: f64,
}

/// Runs the genetic algorithm and returns the best partition found.
pub fn evolve(config: &GaConfig) -> Result<VoronoiPartition> {
    evolve_with_history(config).map(|e| e.partition)
}

/// Like [`evolve`], also returning the per-generation best-so-far fitness.
///
/// Each generation draws fresh simulation points, so fitness is noisy. All
/// individuals (including the surviving elite) are re-scored on the new points;
/// the returned partition is the best individual ever scored, paired with the
/// point set it was scored on.
pub fn evolve_with_history(config: &GaConfig) -> Result<Evolution> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.mutation_std)
        .map_err(|e| invalid(format!("mutation_std: {e}")))?;

    let mut population: Vec<Individual> = (0..config.num_species)
        .map(|_| {
            (0..config.sites)
                .map(|_| uniform_simplex_point(&mut rng, config.dim))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, Individual, Vec<PreferenceRay>, Vec<usize>)> = None;
    let mut history = Vec::with_capacity(config.generations);
    let mut initial_best = 0.0;

    for generation in 0..config.generations {
        let points: Vec<PreferenceRay> = (0..config.points)
            .map(|_| uniform_simplex_point(&mut rng, config.dim))
            .collect::<Result<_>>()?;

        let mut scored: Vec<(f64, Vec<usize>)> = Vec::with_capacity(population.len());
        for individual in &population {
            let index = build_index(individual)?;
            let labels = assign(&points, &index)?;
            scored.push((fitness(&labels, config.sites), labels));
        }

        let (gen_best, _) = scored
            .iter()
            .enumerate()
            .map(|(i, (f, _))| (i, *f))
            .fold((0, f64::NEG_INFINITY), |acc, (i, f)| if f > acc.1 { (i, f) } else { acc });
        let gen_best_fitness = scored[gen_best].0;
        if generation == 0 {
            initial_best = gen_best_fitness;
        }
        if best.as_ref().is_none_or(|b| gen_best_fitness > b.0) {
            best = Some((
                gen_best_fitness,
                population[gen_best].clone(),
                points,
                std::mem::take(&mut scored[gen_best].1),
            ));
        }
        history.push(best.as_ref().map(|b| b.0).unwrap_or(gen_best_fitness));

        if generation + 1 == config.generations {
            break;
        }

        let fitnesses: Vec<f64> = scored.iter().map(|(f, _)| *f).collect();
        let mut next = Vec::with_capacity(config.num_species);
        next.push(population[gen_best].clone());
        while next.len() < config.num_species {
            let a = tournament(&fitnesses, config.tournament_size, &mut rng);
            let b = tournament(&fitnesses, config.tournament_size, &mut rng);
            let alpha: f64 = rng.random();
            let child = crossover(&population[a], &population[b], alpha)?;
            next.push(mutate(child, &noise, config.mutation_prob, &mut rng)?);
        }
        population = next;
    }

    let (fit, sites, points, labels) = best.expect("at least one generation ran");
    Ok(Evolution {
        partition: VoronoiPartition::assemble(sites, points, labels, fit, config.seed),
        best_history: history,
        initial_best,
    })
}

/// Picks `size` individuals uniformly (with replacement) and returns the fittest.
fn tournament<R: Rng + ?Sized>(fitnesses: &[f64], size: usize, rng: &mut R) -> usize {
    let mut winner = rng.random_range(0..fitnesses.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitnesses.len());
        if fitnesses[c] > fitnesses[winner] {
            winner = c;
        }
    }
    winner
}

/// Row-wise arithmetic blend `alpha * a + (1 - alpha) * b` of aligned site lists.
fn crossover(a: &Individual, b: &Individual, alpha: f64) -> Result<Individual> {
    a.iter()
        .zip(b)
        .map(|(pa, pb)| {
            let blended: Vec<f64> = pa
                .coords()
                .iter()
                .zip(pb.coords())
                .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
                .collect();
            // a convex blend of rays is a ray up to rounding
            crate::simplex::project_to_simplex(&blended)
        })
        .collect()
}

fn mutate<R: Rng + ?Sized>(
    individual: Individual,
    noise: &Normal<f64>,
    prob: f64,
    rng: &mut R,
) -> Result<Individual> {
    individual
        .into_iter()
        .map(|site| {
            if prob < 1.0 && rng.random::<f64>() >= prob {
                return Ok(site);
            }
            let target: Vec<f64> = site.coords().iter().map(|c| c + noise.sample(rng)).collect();
            match project_along(site.coords(), &target) {
                Ok(p) => Ok(p),
                // a step that collapses all mass keeps the parent site
                Err(Error::Degenerate(_)) => Ok(site),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdtree::linear_scan_nearest;

    fn ray(c: &[f64]) -> PreferenceRay {
        PreferenceRay::new(c.to_vec()).unwrap()
    }

    #[test]
    fn two_corner_sites() {
        let index = build_index(&[ray(&[1.0, 0.0]), ray(&[0.0, 1.0])]).unwrap();
        assert_eq!(index.nearest(&[0.9, 0.1]).unwrap(), 0);
        assert!(build_index(&[]).is_err());
    }

    #[test]
    fn single_site_owns_everything() {
        let index = build_index(&[ray(&[0.2, 0.3, 0.5])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let p = uniform_simplex_point(&mut rng, 3).unwrap();
            assert_eq!(index.nearest(p.coords()).unwrap(), 0);
        }
    }

    #[test]
    fn index_agrees_with_scan_at_five_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sites: Vec<_> = (0..50).map(|_| uniform_simplex_point(&mut rng, 5).unwrap()).collect();
        let index = build_index(&sites).unwrap();
        for _ in 0..500 {
            let q = uniform_simplex_point(&mut rng, 5).unwrap();
            assert_eq!(
                index.nearest(q.coords()).unwrap(),
                linear_scan_nearest(&sites, q.coords()).unwrap()
            );
        }
    }

    #[test]
    fn assign_examples() {
        let sites = vec![ray(&[0.8, 0.2]), ray(&[0.2, 0.8])];
        let index = build_index(&sites).unwrap();
        assert_eq!(assign(&sites, &index).unwrap(), vec![0, 1]);
        assert_eq!(assign(&[ray(&[0.5, 0.5])], &index).unwrap(), vec![0]);
        assert!(assign(&[ray(&[0.2, 0.3, 0.5])], &index).is_err());
    }

    #[test]
    fn assign_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sites: Vec<_> = (0..12).map(|_| uniform_simplex_point(&mut rng, 3).unwrap()).collect();
        let points: Vec<_> = (0..2000).map(|_| uniform_simplex_point(&mut rng, 3).unwrap()).collect();
        let labels = assign(&points, &build_index(&sites).unwrap()).unwrap();
        for (p, l) in points.iter().zip(labels) {
            let brute = (0..sites.len())
                .min_by(|&a, &b| {
                    crate::kdtree::squared_distance(sites[a].coords(), p.coords())
                        .total_cmp(&crate::kdtree::squared_distance(sites[b].coords(), p.coords()))
                        .then(a.cmp(&b))
                })
                .unwrap();
            assert_eq!(l, brute);
        }
    }

    #[test]
    fn fitness_examples() {
        assert_eq!(fitness(&[0, 1, 2, 0, 1, 2], 3), 1.0);
        assert_eq!(fitness(&[0, 0], 2), 0.5);
        assert_eq!(fitness(&[0, 0, 0, 0], 4), 0.25);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::new(1, 4).validate().is_err());
        assert!(GaConfig::new(3, 0).validate().is_err());
        let mut c = GaConfig::new(3, 4);
        c.points = 3;
        assert!(c.validate().is_err());
        c = GaConfig::new(3, 4);
        c.mutation_std = 0.0;
        assert!(c.validate().is_err());
        assert!(GaConfig::new(3, 4).validate().is_ok());
    }

    #[test]
    fn single_cell_is_perfect() {
        let mut c = GaConfig::new(3, 1);
        c.points = 500;
        c.generations = 2;
        c.num_species = 4;
        let p = evolve(&c).unwrap();
        assert_eq!(p.fitness(), 1.0);
    }

    #[test]
    fn evolve_is_elitist_and_consistent() {
        let mut c = GaConfig::new(3, 8);
        c.points = 4000;
        c.generations = 15;
        c.num_species = 10;
        c.seed = 3;
        let evo = evolve_with_history(&c).unwrap();
        for w in evo.best_history.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(evo.partition.fitness() >= evo.initial_best);
        let p = &evo.partition;
        let rebuilt = VoronoiPartition::from_parts(
            p.sites().to_vec(),
            p.points().to_vec(),
            p.labels().to_vec(),
            p.fitness(),
            p.seed(),
        )
        .unwrap();
        assert_eq!(&rebuilt, p);
        assert_eq!(p.cell_counts().iter().sum::<usize>(), c.points);
    }

    /// Exact cell lengths of a 2-D partition: boundaries sit at the midpoints
    /// between consecutive sites along the segment `x0 in [0,1]`.
    fn exact_cell_lengths(sites: &[PreferenceRay]) -> Vec<f64> {
        let mut xs: Vec<(f64, usize)> = sites.iter().enumerate().map(|(i, s)| (s.coords()[0], i)).collect();
        xs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut lengths = vec![0.0; sites.len()];
        for k in 0..xs.len() {
            let lo = if k == 0 { 0.0 } else { 0.5 * (xs[k - 1].0 + xs[k].0) };
            let hi = if k + 1 == xs.len() { 1.0 } else { 0.5 * (xs[k].0 + xs[k + 1].0) };
            lengths[xs[k].1] = hi - lo;
        }
        lengths
    }

    #[test]
    fn two_dim_partition_regression() {
        let mut c = GaConfig::new(2, 4);
        c.points = 10_000;
        c.generations = 50;
        c.seed = 0;
        let evo = evolve_with_history(&c).unwrap();
        // raw-count variance carries multinomial noise of order M/N, so the
        // floor is the value this configuration reaches, not a uniformity target
        assert!(evo.partition.fitness() >= 0.009, "fitness {}", evo.partition.fitness());
        let worst = |sites: &[PreferenceRay]| {
            exact_cell_lengths(sites)
                .iter()
                .map(|l| (l - 0.25).abs())
                .fold(0.0, f64::max)
        };
        assert!(worst(evo.partition.sites()) < 0.03, "{:?}", exact_cell_lengths(evo.partition.sites()));
    }

    #[test]
    fn sampled_rays_stay_in_their_cells() {
        let mut c = GaConfig::new(3, 6);
        c.points = 3000;
        c.generations = 5;
        c.num_species = 6;
        let p = evolve(&c).unwrap();
        let index = build_index(p.sites()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = p.sample_rays(&mut rng);
        assert_eq!(a.len(), 6);
        for (i, r) in a.iter().enumerate() {
            assert_eq!(index.nearest(r.coords()).unwrap(), i);
        }
        let b = p.sample_rays(&mut rng);
        assert_ne!(a, b);
    }

    #[test]
    fn empty_cell_falls_back_to_site() {
        let sites = vec![ray(&[0.9, 0.1]), ray(&[0.1, 0.9]), ray(&[0.5, 0.5])];
        let points = vec![ray(&[1.0, 0.0]), ray(&[0.0, 1.0])];
        let labels = vec![0, 1];
        let f = fitness(&labels, 3);
        let p = VoronoiPartition::from_parts(sites.clone(), points, labels, f, 0).unwrap();
        let rays = p.sample_rays(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(rays[2], sites[2]);
        assert_eq!(rays[0], ray(&[1.0, 0.0]));
    }

    #[test]
    fn from_parts_rejects_bad_labels() {
        let sites = vec![ray(&[0.9, 0.1]), ray(&[0.1, 0.9])];
        let points = vec![ray(&[1.0, 0.0])];
        assert!(VoronoiPartition::from_parts(sites.clone(), points.clone(), vec![1], 0.5, 0).is_err());
        assert!(VoronoiPartition::from_parts(sites, points, vec![0], 0.9, 0).is_err());
    }
}
