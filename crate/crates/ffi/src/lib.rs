//! C interface to `phn-hvvs`.
//!
//! Every fallible call returns a [`PhnStatus`]; on failure a message for the
//! calling thread is available from [`phn_last_error`]. Arrays are row-major
//! `f64` buffers with explicit lengths. Partitions and training runs are
//! opaque handles released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use phn_hvvs::error::Error;
use phn_hvvs::hv_grad::{grad_multisweep, hv_weights, LossMatrix};
use phn_hvvs::io::{load_partition, save_partition};
use phn_hvvs::nn::HyperNet;
use phn_hvvs::pareto::{hv_exact, FrontSet};
use phn_hvvs::problems::{MultiObjective, ToyProblem};
use phn_hvvs::simplex::PreferenceRay;
use phn_hvvs::solvers::{RunResult, TrainConfig, Trainer};
use phn_hvvs::voronoi::{evolve, GaConfig, VoronoiPartition};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    UnsupportedDimension = 3,
    Io = 4,
    Format = 5,
    BufferTooSmall = 6,
    Failure = 7,
    Panic = 8,
}

/// Voronoi partition of the preference simplex.
pub struct PhnPartition(VoronoiPartition);

/// Trained hypernetwork together with its evaluated front.
pub struct PhnRun {
    result: RunResult,
    net: HyperNet,
    problem: ToyProblem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> PhnStatus {
    match err {
        Error::InvalidInput(_) | Error::InvalidDimension(_) | Error::UnknownName { .. } => {
            PhnStatus::InvalidInput
        }
        Error::UnsupportedDimension(_) => PhnStatus::UnsupportedDimension,
        Error::Io(_) => PhnStatus::Io,
        Error::Format(_) => PhnStatus::Format,
        _ => PhnStatus::Failure,
    }
}

struct Fail(PhnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail(status: PhnStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

/// Runs `f`, recording any error or panic for [`phn_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PhnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PhnStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PhnStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PhnStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Fail> {
    if len < need {
        return Err(fail(
            PhnStatus::BufferTooSmall,
            format!("output buffer holds {len} values, {need} needed"),
        ));
    }
    if p.is_null() {
        return Err(fail(PhnStatus::NullPointer, "output buffer is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(PhnStatus::NullPointer, "output pointer is null"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(PhnStatus::NullPointer, "handle is null"))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(PhnStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PhnStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn rows(p: *const f64, count: usize, dim: usize, what: &str) -> Result<Vec<Vec<f64>>, Fail> {
    let len = count
        .checked_mul(dim)
        .ok_or_else(|| fail(PhnStatus::InvalidInput, "size overflow"))?;
    Ok(slice(p, len, what)?.chunks(dim.max(1)).map(<[f64]>::to_vec).collect())
}

fn copy_rows(src: &[Vec<f64>], dst: &mut [f64]) {
    for (d, s) in dst.iter_mut().zip(src.iter().flatten()) {
        *d = *s;
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn phn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn phn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Exact hypervolume of `count` points of `dim` (2 or 3) minimized
/// objectives, dominated up to `reference`.
#[no_mangle]
pub unsafe extern "C" fn phn_hypervolume(
    points: *const f64,
    count: usize,
    dim: usize,
    reference: *const f64,
    out: *mut f64,
) -> PhnStatus {
    guard(|| {
        let pts = rows(points, count, dim, "points")?;
        let r = slice(reference, dim, "reference")?.to_vec();
        let front = FrontSet::new(pts, r)?;
        *out_ptr(out)? = hv_exact(&front)?;
        Ok(())
    })
}

/// `dHV/dy` for `count` mutually non-dominated points; writes `count * dim`
/// values.
#[no_mangle]
pub unsafe extern "C" fn phn_hv_gradient(
    points: *const f64,
    count: usize,
    dim: usize,
    reference: *const f64,
    out: *mut f64,
    out_len: usize,
) -> PhnStatus {
    guard(|| {
        let pts = rows(points, count, dim, "points")?;
        let r = slice(reference, dim, "reference")?;
        let grad = grad_multisweep(&pts, r)?;
        copy_rows(&grad, out_slice(out, out_len, count * dim)?);
        Ok(())
    })
}

/// Unit-norm descent weights per solution from a loss matrix whose row `i`
/// holds the `dim` losses of solution `i`; writes `count * dim` values.
#[no_mangle]
pub unsafe extern "C" fn phn_hv_weights(
    losses: *const f64,
    count: usize,
    dim: usize,
    out: *mut f64,
    out_len: usize,
) -> PhnStatus {
    guard(|| {
        let m = LossMatrix::new(rows(losses, count, dim, "losses")?)?;
        let w = hv_weights(&m)?;
        copy_rows(&w, out_slice(out, out_len, count * dim)?);
        Ok(())
    })
}

/// Evolves a partition; zero `points` or `generations` keep the defaults.
#[no_mangle]
pub unsafe extern "C" fn phn_partition_evolve(
    dim: usize,
    sites: usize,
    points: usize,
    generations: usize,
    seed: u64,
    out: *mut *mut PhnPartition,
) -> PhnStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let mut config = GaConfig::new(dim, sites);
        if points > 0 {
            config.points = points;
        }
        if generations > 0 {
            config.generations = generations;
        }
        config.seed = seed;
        *slot = Box::into_raw(Box::new(PhnPartition(evolve(&config)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn phn_partition_load(
    path: *const c_char,
    out: *mut *mut PhnPartition,
) -> PhnStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let p = load_partition(Path::new(string(path, "path")?))?;
        *slot = Box::into_raw(Box::new(PhnPartition(p)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn phn_partition_save(
    partition: *const PhnPartition,
    path: *const c_char,
) -> PhnStatus {
    guard(|| {
        let p = handle(partition)?;
        save_partition(Path::new(string(path, "path")?), &p.0)?;
        Ok(())
    })
}

/// Simplex dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn phn_partition_dim(partition: *const PhnPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.0.dim())
}

/// Number of sites, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn phn_partition_site_count(partition: *const PhnPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.0.sites().len())
}

/// Cell-balance fitness, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn phn_partition_fitness(partition: *const PhnPartition) -> f64 {
    partition.as_ref().map_or(f64::NAN, |p| p.0.fitness())
}

/// Writes the sites, `site_count * dim` values.
#[no_mangle]
pub unsafe extern "C" fn phn_partition_sites(
    partition: *const PhnPartition,
    out: *mut f64,
    out_len: usize,
) -> PhnStatus {
    guard(|| {
        let p = &handle(partition)?.0;
        let sites: Vec<Vec<f64>> = p.sites().iter().map(|s| s.coords().to_vec()).collect();
        copy_rows(&sites, out_slice(out, out_len, sites.len() * p.dim())?);
        Ok(())
    })
}

/// Draws one ray per cell with a generator seeded by `seed`; writes
/// `site_count * dim` values.
#[no_mangle]
pub unsafe extern "C" fn phn_partition_sample(
    partition: *const PhnPartition,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> PhnStatus {
    guard(|| {
        let p = &handle(partition)?.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rays: Vec<Vec<f64>> = p
            .sample_rays(&mut rng)
            .into_iter()
            .map(PreferenceRay::into_inner)
            .collect();
        copy_rows(&rays, out_slice(out, out_len, rays.len() * p.dim())?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn phn_partition_free(partition: *mut PhnPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Trains `solver` on `problem` (names as on the command line) with default
/// settings; a zero `iterations` keeps the default length.
#[no_mangle]
pub unsafe extern "C" fn phn_train(
    problem: *const c_char,
    solver: *const c_char,
    seed: u64,
    iterations: usize,
    out: *mut *mut PhnRun,
) -> PhnStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let problem = string(problem, "problem")?.parse()?;
        let solver = string(solver, "solver")?.parse()?;
        let mut config = TrainConfig::new(problem, solver);
        config.seed = seed;
        if iterations > 0 {
            config.iterations = iterations;
        }
        config.validate()?;
        let mut trainer = Trainer::new(config)?;
        let result = trainer.run()?;
        *slot = Box::into_raw(Box::new(PhnRun {
            result,
            net: trainer.into_net(),
            problem: ToyProblem::new(problem),
        }));
        Ok(())
    })
}

/// HV of the evaluated front, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn phn_run_hv(run: *const PhnRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.result.hv)
}

/// Number of objectives, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn phn_run_objectives(run: *const PhnRun) -> usize {
    run.as_ref().map_or(0, |r| r.problem.objectives())
}

/// Number of evaluated front points, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn phn_run_front_len(run: *const PhnRun) -> usize {
    run.as_ref().map_or(0, |r| r.result.front.len())
}

/// Writes the evaluated losses, `front_len * objectives` values.
#[no_mangle]
pub unsafe extern "C" fn phn_run_front(run: *const PhnRun, out: *mut f64, out_len: usize) -> PhnStatus {
    guard(|| {
        let r = handle(run)?;
        let need = r.result.front.len() * r.problem.objectives();
        copy_rows(&r.result.front, out_slice(out, out_len, need)?);
        Ok(())
    })
}

/// Losses of the network's solution for one preference ray of length
/// `objectives`; writes `objectives` values.
#[no_mangle]
pub unsafe extern "C" fn phn_run_losses(
    run: *const PhnRun,
    ray: *const f64,
    ray_len: usize,
    out: *mut f64,
    out_len: usize,
) -> PhnStatus {
    guard(|| {
        let r = handle(run)?;
        let j = r.problem.objectives();
        if ray_len != j {
            return Err(fail(
                PhnStatus::InvalidInput,
                format!("ray has {ray_len} coordinates, problem has {j} objectives"),
            ));
        }
        let ray = PreferenceRay::new(slice(ray, ray_len, "ray")?.to_vec())?;
        let theta = r.net.predict(ray.coords())?;
        let losses = r.problem.evaluate(&theta)?;
        out_slice(out, out_len, j)?.copy_from_slice(&losses);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn phn_run_free(run: *mut PhnRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
