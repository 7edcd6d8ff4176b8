//! Hypernetwork training over preference rays: the hypervolume solver with
//! its ray-alignment penalty, the scalarization baselines, and the fixed-ray
//! evaluation protocol.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hv_grad::{hv_weights_with_floor, LossMatrix};
use crate::nn::{Activation, HyperNet, NetShape, Optimizer, OptimizerKind};
use crate::pareto::{hv_exact, hv_monte_carlo, FrontSet, DEFAULT_MC_SAMPLES};
use crate::problems::{MultiObjective, ProblemKind, ToyProblem};
use crate::simplex::{dirichlet_point, partition_midpoints_2d, partition_sample_2d, PreferenceRay};
use crate::voronoi::{evolve, GaConfig, VoronoiPartition};

/// Training objective applied to each column of the loss matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Hvvs,
    Ls,
    Tche,
    Cosmos,
    Hvi,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Ls,
        SolverKind::Tche,
        SolverKind::Cosmos,
        SolverKind::Hvi,
        SolverKind::Hvvs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Hvvs => "hvvs",
            SolverKind::Ls => "ls",
            SolverKind::Tche => "tche",
            SolverKind::Cosmos => "cosmos",
            SolverKind::Hvi => "hvi",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }

    /// Whether the solver needs hypervolume gradients (two or three objectives).
    pub fn uses_hv(self) -> bool {
        matches!(self, SolverKind::Hvvs | SolverKind::Hvi)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "solver",
                name: s.to_string(),
                valid: Self::valid_names(),
            })
    }
}

/// Where training rays come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RaySource {
    /// Angular partition for two objectives, Voronoi partition otherwise.
    #[default]
    Auto,
    Angular,
    Voronoi,
    Dirichlet { alpha: f64 },
}

/// Settings of the Voronoi partitions used for training and evaluation rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionSettings {
    pub points: usize,
    pub generations: usize,
    pub seed: u64,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        Self {
            points: 20_000,
            generations: 50,
            seed: 0,
        }
    }
}

/// Fully resolved training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub problem: ProblemKind,
    pub solver: SolverKind,
    pub rays_per_step: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub hidden: usize,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub ray_source: RaySource,
    /// Partition file for training rays; generated from `partition` when absent.
    pub partition_file: Option<PathBuf>,
    pub partition: PartitionSettings,
    pub reference: Vec<f64>,
    /// Keep each rank's dynamic HV reference at or beyond `reference`.
    pub hv_reference_floor: bool,
    pub eval_rays: usize,
    /// Evaluate the front every this many iterations for the trace (0 = never).
    pub trace_every: usize,
    /// Apply the penalty with the sign printed in the update rule
    /// (`g - lambda dD`) instead of descending on it.
    pub literal_alg2_sign: bool,
}

impl TrainConfig {
    pub fn new(problem: ProblemKind, solver: SolverKind) -> Self {
        let toy = ToyProblem::new(problem);
        let j = toy.objectives();
        Self {
            problem,
            solver,
            rays_per_step: if j == 2 { 8 } else { 16 },
            lambda: toy.default_lambda(),
            learning_rate: 1e-3,
            iterations: 3000,
            seed: 0,
            hidden: 100,
            activation: Activation::Tanh,
            optimizer: OptimizerKind::Adam,
            ray_source: RaySource::Auto,
            partition_file: None,
            partition: PartitionSettings::default(),
            reference: vec![2.0; j],
            hv_reference_floor: true,
            eval_rays: 25,
            trace_every: 100,
            literal_alg2_sign: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let j = ToyProblem::new(self.problem).objectives();
        if self.rays_per_step == 0 {
            return Err(invalid("rays_per_step must be at least 1"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.hidden == 0 || self.eval_rays == 0 {
            return Err(invalid("hidden and eval_rays must be positive"));
        }
        if self.reference.len() != j || self.reference.iter().any(|r| !r.is_finite()) {
            return Err(invalid(format!(
                "reference must have {j} finite coordinates, got {:?}",
                self.reference
            )));
        }
        if let RaySource::Dirichlet { alpha } = self.ray_source {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(invalid(format!("dirichlet alpha must be > 0, got {alpha}")));
            }
        }
        if self.ray_source == RaySource::Angular && j != 2 {
            return Err(invalid("angular ray source needs two objectives"));
        }
        Ok(())
    }
}

/// `D(r, l)`: distance from `l` to the line through `r` with direction
/// `(1, ..., 1)`.
pub fn penalty_distance(ray: &[f64], loss: &[f64]) -> f64 {
    residual(ray, loss).iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn residual(ray: &[f64], loss: &[f64]) -> Vec<f64> {
    debug_assert_eq!(ray.len(), loss.len());
    let diff: Vec<f64> = loss.iter().zip(ray).map(|(l, r)| l - r).collect();
    let t = diff.iter().sum::<f64>() / diff.len() as f64;
    diff.iter().map(|d| d - t).collect()
}

/// `dD/dl`; zeros on the line itself.
pub fn penalty_gradient(ray: &[f64], loss: &[f64]) -> Vec<f64> {
    let res = residual(ray, loss);
    let d = res.iter().map(|v| v * v).sum::<f64>().sqrt();
    if d == 0.0 {
        return vec![0.0; res.len()];
    }
    res.iter().map(|v| v / d).collect()
}

/// Cosine similarity between `a` and `b`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// `d cos(r, l) / d l`.
pub fn cosine_gradient(ray: &[f64], loss: &[f64]) -> Vec<f64> {
    let (nr, nl) = (norm(ray), norm(loss));
    if nr == 0.0 || nl == 0.0 {
        return vec![0.0; loss.len()];
    }
    let c = dot(ray, loss) / (nr * nl);
    ray.iter()
        .zip(loss)
        .map(|(r, l)| r / (nr * nl) - c * l / (nl * nl))
        .collect()
}

/// Index of the largest `r_j l_j`, lowest index on ties.
pub fn tchebycheff_index(ray: &[f64], loss: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..ray.len() {
        if ray[j] * loss[j] > ray[best] * loss[best] {
            best = j;
        }
    }
    best
}

/// Solver settings consumed by [`train_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepSettings {
    pub solver: SolverKind,
    /// Lower bound for the dynamic reference inside the HV weights.
    pub reference_floor: Option<Vec<f64>>,
    pub lambda: f64,
    pub literal_alg2_sign: bool,
}

/// Per-column gradient of the minimized training objective with respect to
/// the losses.
pub fn upstream_gradients(
    settings: &StepSettings,
    rays: &[PreferenceRay],
    losses: &LossMatrix,
) -> Result<Vec<Vec<f64>>> {
    let weights = if settings.solver.uses_hv() {
        Some(hv_weights_with_floor(losses, settings.reference_floor.as_deref())?)
    } else {
        None
    };
    let lambda = settings.lambda;
    Ok(rays
        .iter()
        .enumerate()
        .map(|(i, ray)| {
            let (r, l) = (ray.coords(), losses.column(i));
            match settings.solver {
                SolverKind::Ls => r.to_vec(),
                SolverKind::Tche => {
                    let k = tchebycheff_index(r, l);
                    let mut u = vec![0.0; r.len()];
                    u[k] = r[k];
                    u
                }
                SolverKind::Cosmos => {
                    let dc = cosine_gradient(r, l);
                    r.iter().zip(dc).map(|(a, b)| a - lambda * b).collect()
                }
                SolverKind::Hvi => {
                    let w = &weights.as_ref().expect("hv weights")[i];
                    let dc = cosine_gradient(r, l);
                    w.iter().zip(dc).map(|(a, b)| a - lambda * b).collect()
                }
                SolverKind::Hvvs => {
                    let w = &weights.as_ref().expect("hv weights")[i];
                    let sign = if settings.literal_alg2_sign { -1.0 } else { 1.0 };
                    let dp = penalty_gradient(r, l);
                    w.iter()
                        .zip(dp)
                        .map(|(a, b)| a + sign * lambda * b)
                        .collect()
                }
            }
        })
        .collect())
}

/// One optimization step: forward every ray, evaluate losses, chain the
/// solver's upstream gradients through the problem Jacobian and the network,
/// then update the parameters.
pub fn train_step<P: MultiObjective + ?Sized>(
    net: &mut HyperNet,
    optimizer: &mut Optimizer,
    problem: &P,
    rays: &[PreferenceRay],
    settings: &StepSettings,
    iteration: usize,
) -> Result<LossMatrix> {
    net.clear_pending();
    net.zero_grad();
    let diverged = |reason: String| Error::Diverged { iteration, reason };
    let mut columns = Vec::with_capacity(rays.len());
    let mut jacobians = Vec::with_capacity(rays.len());
    for ray in rays {
        let theta = net.forward(ray.coords())?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(diverged("non-finite network output".into()));
        }
        let (loss, jac) = problem
            .value_and_jacobian(&theta)
            .map_err(|e| diverged(e.to_string()))?;
        columns.push(loss);
        jacobians.push(jac);
    }
    let losses = LossMatrix::new(columns).map_err(|e| diverged(e.to_string()))?;
    let upstream = upstream_gradients(settings, rays, &losses)?;
    for (u, jac) in upstream.iter().zip(&jacobians) {
        let d = jac.first().map_or(0, Vec::len);
        let mut g = vec![0.0; d];
        for (uj, row) in u.iter().zip(jac) {
            for (gk, jk) in g.iter_mut().zip(row) {
                *gk += uj * jk;
            }
        }
        net.backward(&g)?;
    }
    net.step(optimizer).map_err(|e| match e {
        Error::Diverged { reason, .. } => diverged(reason),
        other => other,
    })?;
    Ok(losses)
}

/// Training-ray generator.
#[derive(Debug, Clone)]
pub enum RaySampler {
    Angular { rays: usize },
    Voronoi(Arc<VoronoiPartition>),
    Dirichlet { rays: usize, dim: usize, alpha: f64 },
}

impl RaySampler {
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<PreferenceRay>> {
        match self {
            RaySampler::Angular { rays } => partition_sample_2d(*rays, rng),
            RaySampler::Voronoi(p) => Ok(p.sample_rays(rng)),
            RaySampler::Dirichlet { rays, dim, alpha } => {
                (0..*rays).map(|_| dirichlet_point(rng, *dim, *alpha)).collect()
            }
        }
    }
}

type PartitionKey = (usize, usize, PartitionSettings);

/// Evolves (or fetches from a process-wide cache) the Voronoi partition with
/// `sites` cells on the `dim`-simplex.
pub fn cached_partition(
    dim: usize,
    sites: usize,
    settings: &PartitionSettings,
) -> Result<Arc<VoronoiPartition>> {
    static CACHE: OnceLock<Mutex<HashMap<PartitionKey, Arc<VoronoiPartition>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (dim, sites, *settings);
    if let Some(p) = cache.lock().expect("partition cache").get(&key) {
        return Ok(Arc::clone(p));
    }
    let mut ga = GaConfig::new(dim, sites);
    ga.points = settings.points;
    ga.generations = settings.generations;
    ga.seed = settings.seed;
    let partition = Arc::new(evolve(&ga)?);
    cache
        .lock()
        .expect("partition cache")
        .insert(key, Arc::clone(&partition));
    Ok(partition)
}

/// Fixed evaluation rays: angular cell midpoints for two objectives; for
/// more, the `dim` corner rays followed by the sites of a `(count - dim)`-cell
/// Voronoi partition (all corners when `count <= dim`).
pub fn evaluation_rays(
    dim: usize,
    count: usize,
    settings: &PartitionSettings,
) -> Result<Vec<PreferenceRay>> {
    if dim == 2 {
        return partition_midpoints_2d(count);
    }
    let mut rays = (0..dim.min(count))
        .map(|k| PreferenceRay::corner(dim, k))
        .collect::<Result<Vec<_>>>()?;
    if count > dim {
        rays.extend_from_slice(cached_partition(dim, count - dim, settings)?.sites());
    }
    Ok(rays)
}

/// Hypervolume of `front`: exact for two or three objectives, Monte-Carlo
/// (seeded by `seed`) beyond.
pub fn front_hv(front: &[Vec<f64>], reference: &[f64], seed: u64) -> Result<f64> {
    let set = FrontSet::new(front.to_vec(), reference.to_vec())?;
    if reference.len() <= 3 {
        hv_exact(&set)
    } else {
        hv_monte_carlo(&set, DEFAULT_MC_SAMPLES, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Objective vectors of the network's solutions at `rays` and their
/// hypervolume.
pub fn evaluate_front<P: MultiObjective + ?Sized>(
    net: &HyperNet,
    problem: &P,
    reference: &[f64],
    rays: &[PreferenceRay],
) -> Result<(Vec<Vec<f64>>, f64)> {
    let front = rays
        .iter()
        .map(|r| problem.evaluate(&net.predict(r.coords())?))
        .collect::<Result<Vec<_>>>()?;
    let hv = front_hv(&front, reference, 0)?;
    Ok((front, hv))
}

/// Number of groups of front points lying within `radius` of each other
/// (single-linkage).
pub fn cluster_count(front: &[Vec<f64>], radius: f64) -> usize {
    let n = front.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = front[i]
                .iter()
                .zip(&front[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 <= radius * radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..n).filter(|&i| root(&mut parent, i) == i).count()
}

/// Evaluation hypervolume at a given iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub hv: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: TrainConfig,
    pub seed: u64,
    pub hv: f64,
    pub analytic_max_hv: Option<f64>,
    pub rays: Vec<Vec<f64>>,
    pub front: Vec<Vec<f64>>,
    pub trace: Vec<TracePoint>,
    pub warnings: Vec<String>,
}

/// Front points closer than this are considered one cluster when checking
/// for a collapsed front.
pub const COLLAPSE_RADIUS: f64 = 0.05;

/// Training state for one toy-problem run.
pub struct Trainer {
    config: TrainConfig,
    problem: ToyProblem,
    net: HyperNet,
    optimizer: Optimizer,
    sampler: RaySampler,
    eval_rays: Vec<PreferenceRay>,
    rng: ChaCha8Rng,
    iteration: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let problem = ToyProblem::new(config.problem);
        let j = problem.objectives();
        let shape = NetShape {
            input: j,
            hidden: config.hidden,
            output: problem.decision_dim(),
            activation: config.activation,
            head: problem.output_head(),
        };
        let mut net = HyperNet::new(shape, config.seed)?;
        if let Some(start) = problem.initial_decision() {
            let bias = start
                .iter()
                .map(|&t| shape.head.invert(t).ok_or_else(|| invalid("initial decision outside bounds")))
                .collect::<Result<Vec<_>>>()?;
            net.set_output_bias(&bias)?;
        }
        let optimizer = Optimizer::new(config.optimizer, config.learning_rate)?;
        let sampler = match (config.ray_source, j) {
            (RaySource::Dirichlet { alpha }, _) => RaySampler::Dirichlet {
                rays: config.rays_per_step,
                dim: j,
                alpha,
            },
            (RaySource::Angular, _) | (RaySource::Auto, 2) => RaySampler::Angular {
                rays: config.rays_per_step,
            },
            _ => RaySampler::Voronoi(match &config.partition_file {
                Some(path) => {
                    let p = crate::io::load_partition(path)?;
                    if p.dim() != j {
                        return Err(invalid(format!(
                            "partition has dimension {}, problem has {j} objectives",
                            p.dim()
                        )));
                    }
                    Arc::new(p)
                }
                None => cached_partition(j, config.rays_per_step, &config.partition)?,
            }),
        };
        let eval_rays = evaluation_rays(j, config.eval_rays, &config.partition)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Self {
            config,
            problem,
            net,
            optimizer,
            sampler,
            eval_rays,
            rng,
            iteration: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn problem(&self) -> &ToyProblem {
        &self.problem
    }

    pub fn net(&self) -> &HyperNet {
        &self.net
    }

    pub fn into_net(self) -> HyperNet {
        self.net
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn eval_rays(&self) -> &[PreferenceRay] {
        &self.eval_rays
    }

    pub fn step(&mut self) -> Result<LossMatrix> {
        let rays = self.sampler.sample(&mut self.rng)?;
        let settings = StepSettings {
            solver: self.config.solver,
            reference_floor: self
                .config
                .hv_reference_floor
                .then(|| self.config.reference.clone()),
            lambda: self.config.lambda,
            literal_alg2_sign: self.config.literal_alg2_sign,
        };
        let losses = train_step(
            &mut self.net,
            &mut self.optimizer,
            &self.problem,
            &rays,
            &settings,
            self.iteration,
        )?;
        self.iteration += 1;
        Ok(losses)
    }

    pub fn evaluate(&self) -> Result<(Vec<Vec<f64>>, f64)> {
        evaluate_front(&self.net, &self.problem, &self.config.reference, &self.eval_rays)
    }

    /// Runs the remaining iterations and evaluates the final network.
    pub fn run(&mut self) -> Result<RunResult> {
        let mut trace = Vec::new();
        while self.iteration < self.config.iterations {
            self.step()?;
            let every = self.config.trace_every;
            if every > 0 && self.iteration % every == 0 {
                trace.push(TracePoint {
                    iteration: self.iteration,
                    hv: self.evaluate()?.1,
                });
            }
        }
        let (front, hv) = self.evaluate()?;
        let analytic = self.problem.analytic_max_hv(&self.config.reference);
        let mut warnings = Vec::new();
        let clusters = cluster_count(&front, COLLAPSE_RADIUS);
        if clusters <= 3 {
            warnings.push(format!(
                "front collapsed: {} evaluation rays map to {clusters} cluster(s)",
                front.len()
            ));
        }
        if let Some(max) = analytic {
            if hv > max + 1e-6 {
                return Err(Error::State(format!(
                    "hypervolume {hv} exceeds the analytic maximum {max}"
                )));
            }
        }
        Ok(RunResult {
            seed: self.config.seed,
            config: self.config.clone(),
            hv,
            analytic_max_hv: analytic,
            rays: self.eval_rays.iter().map(|r| r.coords().to_vec()).collect(),
            front,
            trace,
            warnings,
        })
    }
}

/// Trains a fresh network under `config` and reports the evaluation front.
pub fn train(config: &TrainConfig) -> Result<RunResult> {
    Trainer::new(config.clone())?.run()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::problems::DTLZ4_ALPHA;

    fn ray(v: &[f64]) -> PreferenceRay {
        PreferenceRay::new(v.to_vec()).unwrap()
    }

    fn fd_check(f: impl Fn(&[f64]) -> f64, x: &[f64], g: &[f64], tol: f64) {
        for k in 0..x.len() {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[k] += 1e-6;
            m[k] -= 1e-6;
            let fd = (f(&p) - f(&m)) / 2e-6;
            assert!((g[k] - fd).abs() <= tol * (1.0 + fd.abs()), "k={k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty_distance(&[0.5, 0.5], &[1.5, 1.5]), 0.0);
        assert_eq!(penalty_gradient(&[0.5, 0.5], &[1.5, 1.5]), vec![0.0, 0.0]);
        let d = penalty_distance(&[0.5, 0.5], &[1.5, 0.5]);
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
        let g = penalty_gradient(&[0.5, 0.5], &[1.5, 0.5]);
        assert!((g[0] - 0.5f64.sqrt()).abs() < 1e-12 && (g[1] + 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn penalty_gradient_and_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let j = rng.random_range(2..=4);
            let r = crate::simplex::uniform_simplex_point(&mut rng, j).unwrap();
            let l: Vec<f64> = (0..j).map(|_| rng.random_range(0.0..2.0)).collect();
            let g = penalty_gradient(r.coords(), &l);
            fd_check(|x| penalty_distance(r.coords(), x), &l, &g, 1e-6);
            let c = rng.random_range(-3.0..3.0);
            let shifted: Vec<f64> = l.iter().map(|v| v + c).collect();
            let (a, b) = (penalty_distance(r.coords(), &l), penalty_distance(r.coords(), &shifted));
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scalarization_upstreams_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let r = crate::simplex::uniform_simplex_point(&mut rng, 3).unwrap();
            let l: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..2.0)).collect();
            let lambda = 0.7;
            let losses = LossMatrix::new(vec![l.clone()]).unwrap();
            let rays = [r.clone()];
            let up = |solver| {
                let s = StepSettings {
                    solver,
                    reference_floor: None,
                    lambda,
                    literal_alg2_sign: false,
                };
                upstream_gradients(&s, &rays, &losses).unwrap().remove(0)
            };
            let rc = r.coords();
            fd_check(|x| dot(rc, x), &l, &up(SolverKind::Ls), 1e-5);
            fd_check(
                |x| dot(rc, x) - lambda * cosine(rc, x),
                &l,
                &up(SolverKind::Cosmos),
                1e-5,
            );
            let k = tchebycheff_index(rc, &l);
            fd_check(|x| rc[k] * x[k], &l, &up(SolverKind::Tche), 1e-5);
            fd_check(|x| cosine(rc, x), &l, &cosine_gradient(rc, &l), 1e-5);
        }
    }

    #[test]
    fn tchebycheff_index_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let r = crate::simplex::uniform_simplex_point(&mut rng, 3).unwrap();
            let l: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
            let c = rng.random_range(0.01..100.0);
            let scaled: Vec<f64> = l.iter().map(|v| v * c).collect();
            assert_eq!(tchebycheff_index(r.coords(), &l), tchebycheff_index(r.coords(), &scaled));
        }
    }

    #[test]
    fn hvvs_single_ray_weights_both_losses() {
        let losses = LossMatrix::new(vec![vec![0.25, 0.25]]).unwrap();
        let s = StepSettings {
            solver: SolverKind::Hvvs,
            reference_floor: None,
            lambda: 0.0,
            literal_alg2_sign: false,
        };
        let u = upstream_gradients(&s, &[ray(&[0.5, 0.5])], &losses).unwrap();
        assert!(u[0][0] > 0.0 && u[0][1] > 0.0);

        // one SGD step on pro1 reduces the hv-weighted loss sum at the old weights
        let problem = ToyProblem::new(ProblemKind::Pro1);
        let shape = NetShape::new(2, 8, 1);
        let mut net = HyperNet::from_params(shape, vec![0.0; shape.param_count()]).unwrap();
        net.set_output_bias(&[0.8]).unwrap();
        let before = problem.evaluate(&[0.8]).unwrap();
        let w = upstream_gradients(&s, &[ray(&[0.5, 0.5])], &LossMatrix::new(vec![before.clone()]).unwrap())
            .unwrap()
            .remove(0);
        assert!(w[0] > 0.0 && w[1] > 0.0);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.01).unwrap();
        train_step(&mut net, &mut opt, &problem, &[ray(&[0.5, 0.5])], &s, 0).unwrap();
        let after = problem.evaluate(&net.predict(&[0.5, 0.5]).unwrap()).unwrap();
        assert!(dot(&w, &after) < dot(&w, &before));
    }

    #[test]
    fn ls_converges_to_first_objective_minimizer() {
        let mut cfg = TrainConfig::new(ProblemKind::Pro1, SolverKind::Ls);
        cfg.iterations = 500;
        cfg.learning_rate = 1e-2;
        let problem = ToyProblem::new(ProblemKind::Pro1);
        let shape = NetShape::new(2, cfg.hidden, 1);
        let mut net = HyperNet::new(shape, 0).unwrap();
        let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate).unwrap();
        let s = StepSettings {
            solver: SolverKind::Ls,
            reference_floor: None,
            lambda: 0.0,
            literal_alg2_sign: false,
        };
        for it in 0..cfg.iterations {
            train_step(&mut net, &mut opt, &problem, &[ray(&[1.0, 0.0])], &s, it).unwrap();
        }
        assert!(net.predict(&[1.0, 0.0]).unwrap()[0].abs() < 0.05);
    }

    #[test]
    fn untrained_run_reports_finite_hv() {
        let mut cfg = TrainConfig::new(ProblemKind::Pro1, SolverKind::Hvvs);
        cfg.iterations = 0;
        let res = train(&cfg).unwrap();
        assert!(res.hv.is_finite() && res.hv >= 0.0);
        assert_eq!(res.front.len(), 25);
        assert!(res.trace.is_empty());
    }

    #[test]
    fn short_runs_are_deterministic() {
        let mut cfg = TrainConfig::new(ProblemKind::Zdt1, SolverKind::Hvvs);
        cfg.iterations = 50;
        cfg.trace_every = 10;
        let a = serde_json::to_string(&train(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&train(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::new(ProblemKind::Dtlz2, SolverKind::Hvvs);
        assert_eq!(cfg.rays_per_step, 16);
        assert_eq!(cfg.reference, vec![2.0; 3]);
        cfg.lambda = -1.0;
        assert!(cfg.validate().is_err());
        cfg.lambda = 1.0;
        cfg.ray_source = RaySource::Angular;
        assert!(cfg.validate().is_err());
        assert!("foo".parse::<SolverKind>().is_err());
        assert_eq!("hvi".parse::<SolverKind>().unwrap(), SolverKind::Hvi);
    }

    #[test]
    fn cluster_counting() {
        let f = vec![vec![0.0, 1.0], vec![0.01, 0.99], vec![1.0, 0.0], vec![0.5, 0.5]];
        assert_eq!(cluster_count(&f, 0.05), 3);
        assert_eq!(cluster_count(&f, 2.0), 1);
    }

    #[test]
    fn evaluation_rays_cover_corners_in_three_dimensions() {
        let settings = PartitionSettings {
            points: 2000,
            generations: 3,
            seed: 0,
        };
        let rays = evaluation_rays(3, 25, &settings).unwrap();
        assert_eq!(rays.len(), 25);
        for k in 0..3 {
            assert_eq!(rays[k], PreferenceRay::corner(3, k).unwrap());
        }
        assert_eq!(evaluation_rays(3, 2, &settings).unwrap().len(), 2);
        let flat = evaluation_rays(2, 25, &settings).unwrap();
        assert_eq!(flat.len(), 25);
        assert!((flat[12].coords()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dtlz4_network_starts_at_the_declared_decision() {
        let config = TrainConfig::new(ProblemKind::Dtlz4, SolverKind::Hvvs);
        let trainer = Trainer::new(config).unwrap();
        let theta = trainer.net().predict(&[0.2, 0.3, 0.5]).unwrap();
        let meta: Vec<f64> = theta.iter().map(|t| t.powf(DTLZ4_ALPHA)).collect();
        // only the output bias is set; the weights still perturb each ray
        assert!(meta.iter().all(|m| (m - 0.5).abs() < 0.35));
    }
}
