//! Command-line front end.
//!
//! Each command resolves its configuration from built-in defaults, then an
//! optional TOML file, then flags, and writes that resolved form into a
//! `manifest.toml` next to its outputs. Passing a manifest back through
//! `--config` re-runs the command with identical result files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::benefit::{benefit_graph, BenefitConfig};
use crate::error::{invalid, Error, Result};
use crate::io;
use crate::problems::{MultiObjective, ProblemKind, ToyProblem};
use crate::solvers::{
    evaluate_front, evaluation_rays, train, RunResult, SolverKind, TrainConfig, Trainer,
};
use crate::voronoi::{evolve, GaConfig};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FLOOR: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "PHN_OUT_DIR";
const DEFAULT_OUT_ROOT: &str = "phn-out";

/// Lowest acceptable 5-seed mean HV of `hvvs` per toy problem at the
/// standard reference points.
pub const HV_FLOORS: [(ProblemKind, f64); 8] = [
    (ProblemKind::Pro1, 3.80),
    (ProblemKind::Pro2, 3.30),
    (ProblemKind::Dtlz2, 7.25),
    (ProblemKind::Dtlz4, 7.20),
    (ProblemKind::Zdt1, 3.60),
    (ProblemKind::Zdt2, 3.25),
    (ProblemKind::Vlmop1, 3.75),
    (ProblemKind::Vlmop2Printed, 3.25),
];

pub fn hv_floor(kind: ProblemKind) -> Option<f64> {
    HV_FLOORS.iter().find(|(k, _)| *k == kind).map(|&(_, f)| f)
}

#[derive(Debug, Parser)]
#[command(
    name = "phn-hvvs",
    version,
    about = "Pareto front learning with hypervolume maximization over Voronoi-sampled preference rays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a Voronoi partition of the preference simplex.
    Voronoi(VoronoiArgs),
    /// Train a hypernetwork on one benchmark problem.
    Train(TrainArgs),
    /// Train every (problem, solver) pair over several seeds and tabulate HV.
    Bench(BenchArgs),
    /// Build a benefit graph between synthetic clients.
    BenefitGraph(BenefitArgs),
    /// Re-evaluate a saved checkpoint.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct VoronoiArgs {
    /// Simplex dimension (number of objectives).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Voronoi sites.
    #[arg(long)]
    pub sites: Option<usize>,
    /// Monte-Carlo points per generation.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config or manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Partition file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub solver: Option<SolverKind>,
    /// TOML config or manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Penalty weight.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Rays per training step.
    #[arg(long)]
    pub rays: Option<usize>,
    #[arg(long)]
    pub eval_rays: Option<usize>,
    /// Comma-separated evaluation reference point.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub reference: Option<Vec<f64>>,
    /// Voronoi partition file for the training rays.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Ascend the penalty as the printed update rule does.
    #[arg(long)]
    pub literal_alg2_sign: bool,
    /// Use the bare 1.1 x max dynamic reference inside the HV weights.
    #[arg(long)]
    pub no_hv_floor: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Problem suite; only `toy` exists.
    #[arg(long)]
    pub suite: Option<String>,
    /// Seeds per cell (0..runs).
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub solvers: Option<Vec<SolverKind>>,
    #[arg(long, value_delimiter = ',')]
    pub problems: Option<Vec<ProblemKind>>,
    /// Override the training length of every cell.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Cells trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenefitArgs {
    #[arg(long)]
    pub clients: Option<usize>,
    /// Model overlap between clients in [0, 1].
    #[arg(long, allow_negative_numbers = true)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub solver: Option<SolverKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub eval_rays: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub reference: Option<Vec<f64>>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Record of one invocation, written as `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub seed: u64,
    pub config: toml::Table,
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_)
        | Error::UnknownName { .. }
        | Error::InvalidDimension(_)
        | Error::UnsupportedDimension(_) => EXIT_USAGE,
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

/// Runs a parsed command and returns its exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Voronoi(a) => cmd_voronoi(a),
        Command::Train(a) => cmd_train(a),
        Command::Bench(a) => cmd_bench(a),
        Command::BenefitGraph(a) => cmd_benefit_graph(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

fn out_dir(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| out_root().join(name))
}

/// Reads a config file; for a manifest of the same command, its `[config]`
/// table.
fn load_table(path: &Path, command: &str) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(io::at(path))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let Some(toml::Value::String(cmd)) = table.get("command") else {
        return Ok(table);
    };
    if cmd != command {
        return Err(invalid(format!(
            "{} is a manifest for '{cmd}', not '{command}'",
            path.display()
        )));
    }
    match table.get("config") {
        Some(toml::Value::Table(c)) => Ok(c.clone()),
        _ => Err(invalid(format!("{}: manifest without a [config] table", path.display()))),
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<toml::Table> {
    toml::Table::try_from(value).map_err(|e| Error::Format(e.to_string()))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Keys of `file` that `known` does not have, as dotted paths.
fn unknown_keys(known: &toml::Table, file: &toml::Table, optional: &[&str], prefix: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in file {
        let path = format!("{prefix}{k}");
        match (known.get(k), v) {
            (Some(toml::Value::Table(kt)), toml::Value::Table(ft)) => {
                out.extend(unknown_keys(kt, ft, optional, &format!("{path}.")));
            }
            (Some(_), _) => {}
            (None, _) if optional.contains(&path.as_str()) => {}
            (None, _) => out.push(path),
        }
    }
    out
}

/// Defaults, then the file, then flags.
fn resolve<T: Serialize + DeserializeOwned>(
    defaults: &T,
    file: Option<&toml::Table>,
    flags: toml::Table,
    optional: &[&str],
) -> Result<T> {
    let mut table = to_table(defaults)?;
    if let Some(f) = file {
        let unknown = unknown_keys(&table, f, optional, "");
        if !unknown.is_empty() {
            return Err(invalid(format!("unknown config keys: {}", unknown.join(", "))));
        }
        merge(&mut table, f.clone());
    }
    merge(&mut table, flags);
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| invalid(format!("config: {e}")))
}

fn put<T: Serialize>(table: &mut toml::Table, key: &str, value: Option<T>) -> Result<()> {
    if let Some(v) = value {
        let v = toml::Value::try_from(v).map_err(|e| Error::Format(e.to_string()))?;
        table.insert(key.to_string(), v);
    }
    Ok(())
}

fn file_str<'a>(file: Option<&'a toml::Table>, key: &str) -> Option<&'a str> {
    file.and_then(|f| f.get(key)).and_then(toml::Value::as_str)
}

fn write_manifest<T: Serialize>(
    path: &Path,
    command: &str,
    config_file: Option<&Path>,
    output_dir: &Path,
    seed: u64,
    config: &T,
) -> Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_file: config_file.map(Path::to_path_buf),
        output_dir: output_dir.to_path_buf(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        seed,
        config: to_table(config)?,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    io::write_text(path, &text)
}

fn json_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(value)?)
}

fn cmd_voronoi(a: VoronoiArgs) -> Result<u8> {
    let file = a.config.as_deref().map(|p| load_table(p, "voronoi")).transpose()?;
    let file_usize = |key: &str| {
        file.as_ref()
            .and_then(|f| f.get(key))
            .and_then(toml::Value::as_integer)
            .and_then(|v| usize::try_from(v).ok())
    };
    let dim = a
        .dim
        .or_else(|| file_usize("dim"))
        .ok_or_else(|| invalid("--dim is required"))?;
    let sites = a.sites.or_else(|| file_usize("sites")).unwrap_or(16);
    let mut flags = toml::Table::new();
    put(&mut flags, "dim", Some(dim))?;
    put(&mut flags, "sites", Some(sites))?;
    put(&mut flags, "points", a.points)?;
    put(&mut flags, "generations", a.generations)?;
    put(&mut flags, "seed", a.seed)?;
    let config: GaConfig = resolve(&GaConfig::new(dim, sites), file.as_ref(), flags, &[])?;
    let path = a.out.unwrap_or_else(|| {
        out_dir(
            None,
            &format!("voronoi-d{}-n{}-s{}", config.dim, config.sites, config.seed),
        )
        .join("partition.json")
    });
    let partition = evolve(&config)?;
    io::save_partition(&path, &partition)?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let stem = path.file_stem().map_or("partition".into(), |s| s.to_string_lossy());
    write_manifest(
        &dir.join(format!("{stem}.manifest.toml")),
        "voronoi",
        a.config.as_deref(),
        &dir,
        config.seed,
        &config,
    )?;
    println!(
        "fitness {:.6} ({} sites, dim {}, {} points, {} generations)",
        partition.fitness(),
        config.sites,
        config.dim,
        config.points,
        config.generations
    );
    println!("wrote {}", path.display());
    Ok(0)
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let file = a.config.as_deref().map(|p| load_table(p, "train")).transpose()?;
    let problem = match (a.problem, file_str(file.as_ref(), "problem")) {
        (Some(p), _) => p,
        (None, Some(name)) => name.parse()?,
        (None, None) => {
            return Err(invalid(format!(
                "--problem is required (valid: {})",
                ProblemKind::valid_names()
            )))
        }
    };
    let solver = match (a.solver, file_str(file.as_ref(), "solver")) {
        (Some(s), _) => s,
        (None, Some(name)) => name.parse()?,
        (None, None) => SolverKind::Hvvs,
    };
    let mut flags = toml::Table::new();
    put(&mut flags, "problem", Some(problem))?;
    put(&mut flags, "solver", Some(solver))?;
    put(&mut flags, "seed", a.seed)?;
    put(&mut flags, "lambda", a.lambda)?;
    put(&mut flags, "learning_rate", a.lr)?;
    put(&mut flags, "iterations", a.iterations)?;
    put(&mut flags, "rays_per_step", a.rays)?;
    put(&mut flags, "eval_rays", a.eval_rays)?;
    put(&mut flags, "reference", a.reference.clone())?;
    put(&mut flags, "partition_file", a.partition.clone())?;
    put(&mut flags, "literal_alg2_sign", a.literal_alg2_sign.then_some(true))?;
    put(&mut flags, "hv_reference_floor", a.no_hv_floor.then_some(false))?;
    let defaults = TrainConfig::new(problem, solver);
    let config: TrainConfig = resolve(&defaults, file.as_ref(), flags, &["partition_file"])?;
    config.validate()?;
    Ok(config)
}

fn cmd_train(a: TrainArgs) -> Result<u8> {
    let config = train_config(&a)?;
    let dir = out_dir(
        a.out.clone(),
        &format!("train-{}-{}-s{}", config.problem, config.solver, config.seed),
    );
    let mut trainer = Trainer::new(config.clone())?;
    let result = trainer.run()?;
    let cfg = json_value(&config)?;
    io::write_json(&dir.join("run.json"), &result)?;
    io::write_text(
        &dir.join("front.csv"),
        &io::annotate_csv(&io::front_csv(&result.rays, &result.front), &cfg),
    )?;
    if config.reference.len() == 2 {
        let title = format!("{} / {}: HV {:.4}", config.problem, config.solver, result.hv);
        let svg = io::front_svg(&result.front, &config.reference, &title);
        io::write_text(&dir.join("front.svg"), &io::annotate_svg(&svg, &cfg))?;
    }
    io::save_checkpoint(&dir.join("model.ckpt"), trainer.net(), &cfg)?;
    write_manifest(
        &dir.join("manifest.toml"),
        "train",
        a.config.as_deref(),
        &dir,
        config.seed,
        &config,
    )?;
    print_run(&result);
    println!("wrote {}", dir.display());
    Ok(0)
}

fn print_run(result: &RunResult) {
    let c = &result.config;
    print!(
        "{} {} seed {}: HV {:.4} at reference {:?}",
        c.problem, c.solver, result.seed, result.hv, c.reference
    );
    match result.analytic_max_hv {
        Some(max) => println!(" (analytic max {max:.4})"),
        None => println!(),
    }
    for w in &result.warnings {
        println!("warning: {w}");
    }
}

/// Resolved `bench` settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub suite: String,
    pub problems: Vec<ProblemKind>,
    pub solvers: Vec<SolverKind>,
    pub runs: usize,
    pub iterations: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            suite: "toy".into(),
            problems: ProblemKind::SUITE.to_vec(),
            solvers: vec![SolverKind::Hvvs],
            runs: 5,
            iterations: None,
        }
    }
}

/// One (problem, solver, seed) training run of a bench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub problem: ProblemKind,
    pub solver: SolverKind,
    pub seed: u64,
    pub hv: f64,
}

/// Mean and sample standard deviation of one (problem, solver) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: ProblemKind,
    pub solver: SolverKind,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorCheck {
    pub problem: ProblemKind,
    pub floor: f64,
    pub mean: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub config: BenchConfig,
    pub cells: Vec<BenchCell>,
    pub rows: Vec<BenchRow>,
    pub floors: Vec<FloorCheck>,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_bench(a: BenchArgs) -> Result<u8> {
    let file = a.config.as_deref().map(|p| load_table(p, "bench")).transpose()?;
    let mut flags = toml::Table::new();
    put(&mut flags, "suite", a.suite.clone())?;
    put(&mut flags, "runs", a.runs)?;
    put(&mut flags, "solvers", a.solvers.clone())?;
    put(&mut flags, "problems", a.problems.clone())?;
    put(&mut flags, "iterations", a.iterations)?;
    let config: BenchConfig = resolve(&BenchConfig::default(), file.as_ref(), flags, &["iterations"])?;
    if config.suite != "toy" {
        return Err(invalid(format!("unknown suite '{}' (valid: toy)", config.suite)));
    }
    if config.runs == 0 || config.problems.is_empty() || config.solvers.is_empty() {
        return Err(invalid("runs, problems and solvers must be non-empty"));
    }
    if a.jobs == 0 {
        return Err(invalid("--jobs must be at least 1"));
    }
    let dir = out_dir(a.out.clone(), "bench");
    let cells = bench_cells(&config, a.jobs, &dir.join("cells"))?;
    let summary = summarize(config, cells);
    io::write_json(&dir.join("bench.json"), &summary)?;
    let mut csv = String::from("problem,solver,mean,std\n");
    for r in &summary.rows {
        let _ = writeln!(csv, "{},{},{},{}", r.problem, r.solver, r.mean, r.std);
    }
    io::write_text(&dir.join("bench.csv"), &csv)?;
    write_manifest(
        &dir.join("manifest.toml"),
        "bench",
        a.config.as_deref(),
        &dir,
        0,
        &summary.config,
    )?;
    print!("{}", bench_table(&summary));
    println!("wrote {}", dir.display());
    Ok(if summary.floors.iter().all(|f| f.pass) { 0 } else { EXIT_FLOOR })
}

fn bench_cells(config: &BenchConfig, jobs: usize, cell_dir: &Path) -> Result<Vec<BenchCell>> {
    let mut plan = Vec::new();
    for &p in &config.problems {
        for &s in &config.solvers {
            for seed in 0..config.runs as u64 {
                plan.push((p, s, seed));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<BenchCell>>>> =
        Mutex::new((0..plan.len()).map(|_| None).collect());
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(problem, solver, seed)) = plan.get(i) else {
            break;
        };
        let cell = (|| {
            let mut tc = TrainConfig::new(problem, solver);
            tc.seed = seed;
            if let Some(n) = config.iterations {
                tc.iterations = n;
            }
            let run = train(&tc)?;
            io::write_json(&cell_dir.join(format!("{problem}-{solver}-s{seed}.json")), &run)?;
            Ok(BenchCell {
                problem,
                solver,
                seed,
                hv: run.hv,
            })
        })();
        results.lock().expect("bench results")[i] = Some(cell);
    };
    std::thread::scope(|scope| {
        for _ in 1..jobs.min(plan.len()) {
            scope.spawn(work);
        }
        work();
    });
    results
        .into_inner()
        .expect("bench results")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}

fn summarize(config: BenchConfig, cells: Vec<BenchCell>) -> BenchSummary {
    let mut rows = Vec::new();
    let mut floors = Vec::new();
    for &p in &config.problems {
        for &s in &config.solvers {
            let hvs: Vec<f64> = cells
                .iter()
                .filter(|c| c.problem == p && c.solver == s)
                .map(|c| c.hv)
                .collect();
            let (mean, std) = mean_std(&hvs);
            rows.push(BenchRow {
                problem: p,
                solver: s,
                mean,
                std,
            });
            if let (SolverKind::Hvvs, Some(floor)) = (s, hv_floor(p)) {
                floors.push(FloorCheck {
                    problem: p,
                    floor,
                    mean,
                    pass: mean >= floor,
                });
            }
        }
    }
    BenchSummary {
        config,
        cells,
        rows,
        floors,
    }
}

/// Problems down, solvers across, `mean±std` per cell.
pub fn bench_table(summary: &BenchSummary) -> String {
    let mut out = format!("{:<16}", "problem");
    for s in &summary.config.solvers {
        let _ = write!(out, " {:>15}", s.to_string().to_uppercase());
    }
    out.push('\n');
    for &p in &summary.config.problems {
        let _ = write!(out, "{:<16}", p.name());
        for r in summary.rows.iter().filter(|r| r.problem == p) {
            let _ = write!(out, " {:>15}", format!("{:.3}±{:.3}", r.mean, r.std));
        }
        out.push('\n');
    }
    for f in &summary.floors {
        let _ = writeln!(
            out,
            "{} floor {:.2}: mean {:.4} {}",
            f.problem,
            f.floor,
            f.mean,
            if f.pass { "pass" } else { "FAIL" }
        );
    }
    out
}

fn cmd_benefit_graph(a: BenefitArgs) -> Result<u8> {
    let file = a
        .config
        .as_deref()
        .map(|p| load_table(p, "benefit-graph"))
        .transpose()?;
    let mut clients = toml::Table::new();
    put(&mut clients, "clients", a.clients)?;
    put(&mut clients, "overlap", a.overlap)?;
    put(&mut clients, "seed", a.seed)?;
    let mut flags = toml::Table::new();
    flags.insert("clients".into(), toml::Value::Table(clients));
    put(&mut flags, "solver", a.solver)?;
    put(&mut flags, "lambda", a.lambda)?;
    put(&mut flags, "iterations", a.iterations)?;
    let config: BenefitConfig = resolve(&BenefitConfig::new(2, 0.0, 0), file.as_ref(), flags, &[])?;
    config.validate()?;
    let spec = &config.clients;
    let dir = out_dir(
        a.out.clone(),
        &format!("benefit-n{}-o{}-s{}", spec.clients, spec.overlap, spec.seed),
    );
    let run = benefit_graph(&config)?;
    let cfg = json_value(&config)?;
    io::write_json(&dir.join("benefit.json"), &run)?;
    io::write_text(
        &dir.join("graph.csv"),
        &io::annotate_csv(&io::graph_csv(&run.graph.weights), &cfg),
    )?;
    write_manifest(
        &dir.join("manifest.toml"),
        "benefit-graph",
        a.config.as_deref(),
        &dir,
        spec.seed,
        &config,
    )?;
    let argmax = run.graph.row_argmaxes();
    for (i, row) in run.graph.weights.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|w| format!("{w:.3}")).collect();
        println!(
            "client {i}: argmax {} [{}] validation mse {:.4}",
            argmax[i],
            cells.join(", "),
            run.graph.validation_loss[i]
        );
    }
    println!("mean diagonal weight {:.4}", run.graph.mean_diagonal());
    println!("wrote {}", dir.display());
    Ok(0)
}

/// Resolved `eval` settings; unset fields fall back to the checkpoint's
/// training config.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalConfig {
    pub checkpoint: PathBuf,
    pub eval_rays: Option<usize>,
    pub reference: Option<Vec<f64>>,
}

/// Front and HV of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub config: EvalConfig,
    pub train_config: TrainConfig,
    pub hv: f64,
    pub reference: Vec<f64>,
    pub rays: Vec<Vec<f64>>,
    pub front: Vec<Vec<f64>>,
}

pub fn evaluate_checkpoint(config: &EvalConfig) -> Result<EvalResult> {
    let (net, stored) = io::load_checkpoint(&config.checkpoint)?;
    let train_config: TrainConfig = serde_json::from_value(stored)?;
    let problem = ToyProblem::new(train_config.problem);
    if net.shape().input != problem.objectives() || net.shape().output != problem.decision_dim() {
        return Err(Error::Format(format!(
            "checkpoint network {:?} does not fit {}",
            net.shape(),
            problem.name()
        )));
    }
    let reference = config
        .reference
        .clone()
        .unwrap_or_else(|| train_config.reference.clone());
    if reference.len() != problem.objectives() {
        return Err(invalid(format!(
            "reference needs {} coordinates",
            problem.objectives()
        )));
    }
    let count = config.eval_rays.unwrap_or(train_config.eval_rays);
    if count == 0 {
        return Err(invalid("eval_rays must be positive"));
    }
    let rays = evaluation_rays(problem.objectives(), count, &train_config.partition)?;
    let (front, hv) = evaluate_front(&net, &problem, &reference, &rays)?;
    Ok(EvalResult {
        config: config.clone(),
        train_config,
        hv,
        reference,
        rays: rays.iter().map(|r| r.coords().to_vec()).collect(),
        front,
    })
}

fn cmd_eval(a: EvalArgs) -> Result<u8> {
    let file = a.config.as_deref().map(|p| load_table(p, "eval")).transpose()?;
    let mut flags = toml::Table::new();
    put(&mut flags, "checkpoint", a.checkpoint.clone())?;
    put(&mut flags, "eval_rays", a.eval_rays)?;
    put(&mut flags, "reference", a.reference.clone())?;
    let config: EvalConfig = resolve(
        &EvalConfig::default(),
        file.as_ref(),
        flags,
        &["eval_rays", "reference"],
    )?;
    if config.checkpoint.as_os_str().is_empty() {
        return Err(invalid("--checkpoint is required"));
    }
    let result = evaluate_checkpoint(&config)?;
    let stem = config
        .checkpoint
        .parent()
        .and_then(Path::file_name)
        .map_or("checkpoint".into(), |s| s.to_string_lossy());
    let dir = out_dir(a.out.clone(), &format!("eval-{stem}"));
    let cfg = json_value(&config)?;
    io::write_json(&dir.join("eval.json"), &result)?;
    io::write_text(
        &dir.join("front.csv"),
        &io::annotate_csv(&io::front_csv(&result.rays, &result.front), &cfg),
    )?;
    write_manifest(
        &dir.join("manifest.toml"),
        "eval",
        a.config.as_deref(),
        &dir,
        result.train_config.seed,
        &config,
    )?;
    println!(
        "{} {}: HV {:.4} at reference {:?} over {} rays",
        result.train_config.problem,
        result.train_config.solver,
        result.hv,
        result.reference,
        result.rays.len()
    );
    println!("wrote {}", dir.display());
    Ok(0)
}
