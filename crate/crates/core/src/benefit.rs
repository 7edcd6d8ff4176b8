//! Benefit graphs between synthetic federated clients: each client is one
//! objective, a shared hypernetwork is trained over preference rays, and row
//! `i` of the graph is the ray whose solution scores best on client `i`'s
//! validation data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nn::{HyperNet, NetShape, Optimizer, OptimizerKind};
use crate::problems::MultiObjective;
use crate::simplex::PreferenceRay;
use crate::solvers::{
    cached_partition, evaluation_rays, train_step, PartitionSettings, RaySampler, RaySource,
    SolverKind, StepSettings,
};

/// Standard deviation of the target noise.
pub const TARGET_NOISE: f64 = 0.1;

/// Features and targets of one data split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Mean squared error of the linear model `q`.
    pub fn mse(&self, q: &[f64]) -> f64 {
        self.residuals(q).map(|r| r * r).sum::<f64>() / self.len() as f64
    }

    /// Mean squared error and its gradient with respect to `q`.
    pub fn mse_and_gradient(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let m = self.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; q.len()];
        for (x, r) in self.features.iter().zip(self.residuals(q)) {
            loss += r * r;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += 2.0 * r * xi / m;
            }
        }
        (loss / m, grad)
    }

    fn residuals<'a>(&'a self, q: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.features
            .iter()
            .zip(&self.targets)
            .map(move |(x, y)| dot(x, q) - y)
    }
}

/// One participant with a private linear-Gaussian regression task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClient {
    pub index: usize,
    /// True regression weights.
    pub weights: Vec<f64>,
    pub train: Dataset,
    pub validation: Dataset,
}

/// Client population parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientSpec {
    pub clients: usize,
    /// 1 gives every client the same model, 0 independent private models.
    pub overlap: f64,
    pub features: usize,
    pub train_samples: usize,
    pub validation_samples: usize,
    pub seed: u64,
}

impl ClientSpec {
    pub fn new(clients: usize, overlap: f64, seed: u64) -> Self {
        Self {
            clients,
            overlap,
            features: 5,
            train_samples: 20,
            validation_samples: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients < 2 {
            return Err(invalid(format!("need at least 2 clients, got {}", self.clients)));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(invalid(format!("overlap must lie in [0,1], got {}", self.overlap)));
        }
        if self.features == 0 || self.train_samples == 0 || self.validation_samples == 0 {
            return Err(invalid("features and sample counts must be positive"));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_gaussian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn draw_split<R: Rng + ?Sized>(rng: &mut R, weights: &[f64], samples: usize) -> Dataset {
    let mut features = Vec::with_capacity(samples);
    let mut targets = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: Vec<f64> = (0..weights.len()).map(|_| rng.sample(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        targets.push(dot(&x, weights) + TARGET_NOISE * noise);
        features.push(x);
    }
    Dataset { features, targets }
}

/// Clients whose weights are `overlap * shared + (1 - overlap) * private_i`
/// with unit-norm shared and private directions.
pub fn generate_clients(spec: &ClientSpec) -> Result<Vec<SyntheticClient>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shared = unit_gaussian(&mut rng, spec.features);
    let private: Vec<Vec<f64>> = (0..spec.clients)
        .map(|_| unit_gaussian(&mut rng, spec.features))
        .collect();
    Ok(private
        .into_iter()
        .enumerate()
        .map(|(index, p)| {
            let weights: Vec<f64> = shared
                .iter()
                .zip(&p)
                .map(|(s, q)| spec.overlap * s + (1.0 - spec.overlap) * q)
                .collect();
            let train = draw_split(&mut rng, &weights, spec.train_samples);
            let validation = draw_split(&mut rng, &weights, spec.validation_samples);
            SyntheticClient {
                index,
                weights,
                train,
                validation,
            }
        })
        .collect())
}

/// The clients' training losses as a multi-objective problem over a shared
/// linear model.
#[derive(Debug, Clone, Copy)]
pub struct ClientObjectives<'a> {
    clients: &'a [SyntheticClient],
}

impl<'a> ClientObjectives<'a> {
    pub fn new(clients: &'a [SyntheticClient]) -> Result<Self> {
        let first = clients.first().ok_or_else(|| invalid("no clients"))?;
        let dim = first.weights.len();
        if clients.iter().any(|c| c.weights.len() != dim) {
            return Err(invalid("clients have different feature counts"));
        }
        Ok(Self { clients })
    }
}

impl MultiObjective for ClientObjectives<'_> {
    fn objectives(&self) -> usize {
        self.clients.len()
    }

    fn decision_dim(&self) -> usize {
        self.clients[0].weights.len()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(theta)?;
        Ok(self.clients.iter().map(|c| c.train.mse(theta)).collect())
    }

    fn value_and_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.check(theta)?;
        Ok(self
            .clients
            .iter()
            .map(|c| c.train.mse_and_gradient(theta))
            .unzip())
    }
}

impl ClientObjectives<'_> {
    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.decision_dim() {
            return Err(invalid(format!(
                "model has {} weights, clients have {} features",
                theta.len(),
                self.decision_dim()
            )));
        }
        Ok(())
    }
}

/// Everything needed to reproduce a benefit graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitConfig {
    pub clients: ClientSpec,
    pub solver: SolverKind,
    pub lambda: f64,
    pub rays_per_step: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub hidden: usize,
    pub ray_source: RaySource,
    pub partition: PartitionSettings,
    /// Voronoi sites used as candidate rays next to the corners.
    pub candidate_rays: usize,
}

impl BenefitConfig {
    pub fn new(clients: usize, overlap: f64, seed: u64) -> Self {
        Self {
            clients: ClientSpec::new(clients, overlap, seed),
            solver: SolverKind::Ls,
            lambda: 0.3,
            rays_per_step: 8,
            learning_rate: 1e-3,
            iterations: 1500,
            hidden: 100,
            ray_source: RaySource::Voronoi,
            partition: PartitionSettings::default(),
            candidate_rays: 25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.clients.validate()?;
        let n = self.clients.clients;
        if self.solver.uses_hv() && n > 3 {
            return Err(invalid(format!(
                "{} needs exact HV gradients, available for at most 3 clients (got {n})",
                self.solver
            )));
        }
        if self.rays_per_step == 0 || self.hidden == 0 || self.candidate_rays == 0 {
            return Err(invalid("rays_per_step, hidden and candidate_rays must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be > 0"));
        }
        match self.ray_source {
            RaySource::Dirichlet { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(invalid(format!("dirichlet alpha must be > 0, got {alpha}")))
            }
            RaySource::Angular => Err(invalid("benefit graphs sample Voronoi or Dirichlet rays")),
            _ => Ok(()),
        }
    }
}

/// Hypernetwork over `clients.len()`-dimensional rays trained on the clients'
/// training losses.
pub fn train_shared_hypernet(clients: &[SyntheticClient], config: &BenefitConfig) -> Result<HyperNet> {
    config.validate()?;
    let problem = ClientObjectives::new(clients)?;
    let n = problem.objectives();
    let shape = NetShape::new(n, config.hidden, problem.decision_dim());
    let mut net = HyperNet::new(shape, config.clients.seed)?;
    let mut optimizer = Optimizer::new(OptimizerKind::Adam, config.learning_rate)?;
    let sampler = match config.ray_source {
        RaySource::Dirichlet { alpha } => RaySampler::Dirichlet {
            rays: config.rays_per_step,
            dim: n,
            alpha,
        },
        _ => RaySampler::Voronoi(cached_partition(n, config.rays_per_step, &config.partition)?),
    };
    let settings = StepSettings {
        solver: config.solver,
        reference_floor: None,
        lambda: config.lambda,
        literal_alg2_sign: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.clients.seed);
    rng.set_stream(1);
    for iteration in 0..config.iterations {
        let rays = sampler.sample(&mut rng)?;
        train_step(&mut net, &mut optimizer, &problem, &rays, &settings, iteration)?;
    }
    Ok(net)
}

/// The `n` corner rays followed by the evaluation rays of the `n`-simplex,
/// without repeats.
pub fn candidate_rays(
    n: usize,
    count: usize,
    settings: &PartitionSettings,
) -> Result<Vec<PreferenceRay>> {
    let mut rays = (0..n)
        .map(|k| PreferenceRay::corner(n, k))
        .collect::<Result<Vec<_>>>()?;
    for r in evaluation_rays(n, count, settings)? {
        if !rays.contains(&r) {
            rays.push(r);
        }
    }
    Ok(rays)
}

/// Row `i` is the preference ray that serves client `i` best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitGraph {
    pub weights: Vec<Vec<f64>>,
    /// Candidate index chosen for each row.
    pub chosen: Vec<usize>,
    /// Validation loss of each row's chosen solution.
    pub validation_loss: Vec<f64>,
}

impl BenefitGraph {
    pub fn size(&self) -> usize {
        self.weights.len()
    }

    /// Index of the largest weight in each row (lowest index on ties).
    pub fn row_argmaxes(&self) -> Vec<usize> {
        self.weights
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold(0, |best, (j, &w)| if w > row[best] { j } else { best })
            })
            .collect()
    }

    pub fn mean_diagonal(&self) -> f64 {
        (0..self.size()).map(|i| self.weights[i][i]).sum::<f64>() / self.size() as f64
    }
}

/// Picks, for every client, the candidate ray whose solution has the lowest
/// validation loss (first candidate on ties).
pub fn compute_benefit_graph(
    net: &HyperNet,
    clients: &[SyntheticClient],
    candidates: &[PreferenceRay],
) -> Result<BenefitGraph> {
    if candidates.is_empty() {
        return Err(invalid("no candidate rays"));
    }
    if let Some(r) = candidates.iter().find(|r| r.dim() != clients.len()) {
        return Err(invalid(format!(
            "candidate ray has {} coordinates for {} clients",
            r.dim(),
            clients.len()
        )));
    }
    let solutions = candidates
        .iter()
        .map(|r| net.predict(r.coords()))
        .collect::<Result<Vec<_>>>()?;
    let mut graph = BenefitGraph {
        weights: Vec::with_capacity(clients.len()),
        chosen: Vec::with_capacity(clients.len()),
        validation_loss: Vec::with_capacity(clients.len()),
    };
    for client in clients {
        let (best, loss) = solutions
            .iter()
            .map(|q| client.validation.mse(q))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, l)| if l < acc.1 { (k, l) } else { acc });
        graph.weights.push(candidates[best].coords().to_vec());
        graph.chosen.push(best);
        graph.validation_loss.push(loss);
    }
    Ok(graph)
}

/// Output of [`benefit_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitRun {
    pub config: BenefitConfig,
    pub candidates: Vec<Vec<f64>>,
    /// Training losses of every candidate's solution, one row per candidate.
    pub front: Vec<Vec<f64>>,
    pub graph: BenefitGraph,
}

/// Clients, shared training and graph extraction in one call.
pub fn benefit_graph(config: &BenefitConfig) -> Result<BenefitRun> {
    let clients = generate_clients(&config.clients)?;
    let net = train_shared_hypernet(&clients, config)?;
    let candidates = candidate_rays(config.clients.clients, config.candidate_rays, &config.partition)?;
    let graph = compute_benefit_graph(&net, &clients, &candidates)?;
    let problem = ClientObjectives::new(&clients)?;
    let front = candidates
        .iter()
        .map(|r| problem.evaluate(&net.predict(r.coords())?))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenefitRun {
        config: config.clone(),
        candidates: candidates.iter().map(|r| r.coords().to_vec()).collect(),
        front,
        graph,
    })
}
