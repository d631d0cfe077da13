//! C ABI for the gridot solver.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`GridotStatus`]; on failure a message is available from
//! [`gridot_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gridot::barycenter::{barycenter, interpolation_problem, BarycenterProblem};
use gridot::refinement::{solve, DensityModel, SolveConfig, TransportSolution};
use gridot::transportmap::MapEvaluator;
use gridot::{Error, RefinementPolicy, SampleSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OutOfSupport = 4,
    Infeasible = 5,
    Internal = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridotPolicy {
    Standard = 0,
    LongestAxis = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridotDensityModel {
    Uniform = 0,
    Linear = 1,
}

/// Solver settings. Obtain defaults from [`gridot_solve_config_default`].
/// `policy` holds a `GridotPolicy` and `density_model` a
/// `GridotDensityModel` value.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GridotSolveConfig {
    pub max_levels: usize,
    pub n_min: usize,
    pub policy: u32,
    pub neighbor_expansion: bool,
    pub density_model: u32,
    pub quadrature_order: usize,
}

/// A set of points of one dimension.
pub struct GridotSamples(SampleSet);

/// A finished multilevel solve together with its map evaluator.
pub struct GridotSolution {
    solution: TransportSolution,
    evaluator: MapEvaluator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GridotStatus {
    match e {
        Error::Parse { .. } | Error::EmptyInput | Error::Domain(_) => GridotStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => GridotStatus::DimensionMismatch,
        Error::OutOfSupport { .. }
        | Error::PointOutside { .. }
        | Error::OutOfSupportMany { .. } => GridotStatus::OutOfSupport,
        Error::Infeasible { .. } => GridotStatus::Infeasible,
        Error::Internal(_) | Error::IterationLimit(_) => GridotStatus::Internal,
        Error::Marginal { source, .. } => status_of(source),
        Error::Io(_) => GridotStatus::Io,
    }
}

struct Failure(GridotStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GridotStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GridotStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GridotStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside gridot".to_string());
            GridotStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_config(c: &GridotSolveConfig) -> Result<SolveConfig, Failure> {
    let bad =
        |what: &str, v: u32| Failure(GridotStatus::InvalidArgument, format!("unknown {what} {v}"));
    let policy = match c.policy {
        p if p == GridotPolicy::Standard as u32 => RefinementPolicy::Standard,
        p if p == GridotPolicy::LongestAxis as u32 => RefinementPolicy::LongestAxis,
        p => return Err(bad("policy", p)),
    };
    let density_model = match c.density_model {
        m if m == GridotDensityModel::Uniform as u32 => DensityModel::Uniform,
        m if m == GridotDensityModel::Linear as u32 => DensityModel::Linear,
        m => return Err(bad("density model", m)),
    };
    Ok(SolveConfig {
        max_levels: c.max_levels,
        n_min: c.n_min,
        policy,
        neighbor_expansion: c.neighbor_expansion,
        density_model,
        quadrature_order: c.quadrature_order,
        ..SolveConfig::default()
    })
}

unsafe fn config_or_default(c: *const GridotSolveConfig) -> Result<SolveConfig, Failure> {
    c.as_ref()
        .map_or_else(|| Ok(SolveConfig::default()), to_config)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gridot_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn gridot_solve_config_default() -> GridotSolveConfig {
    let d = SolveConfig::default();
    GridotSolveConfig {
        max_levels: d.max_levels,
        n_min: d.n_min,
        policy: GridotPolicy::Standard as u32,
        neighbor_expansion: d.neighbor_expansion,
        density_model: GridotDensityModel::Linear as u32,
        quadrature_order: d.quadrature_order,
    }
}

/// Copies `n * dim` row-major coordinates into a new sample set.
///
/// # Safety
/// `coords` must point to `n * dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_samples_new(
    coords: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut GridotSamples,
) -> GridotStatus {
    guard(|| {
        if coords.is_null() {
            return Err(null("coords"));
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Failure(GridotStatus::InvalidArgument, "size overflow".into()))?;
        let set = SampleSet::new(dim, slice::from_raw_parts(coords, len).to_vec())?;
        write_out(out, Box::into_raw(Box::new(GridotSamples(set))), "out")
    })
}

/// # Safety
/// `samples` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gridot_samples_len(samples: *const GridotSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `samples` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gridot_samples_dim(samples: *const GridotSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the coordinates into `buffer`, which holds `capacity` doubles.
///
/// # Safety
/// `buffer` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gridot_samples_copy(
    samples: *const GridotSamples,
    buffer: *mut f64,
    capacity: usize,
) -> GridotStatus {
    guard(|| {
        let s = as_ref(samples, "samples")?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let coords = s.0.coords();
        if capacity < coords.len() {
            return Err(Failure(
                GridotStatus::InvalidArgument,
                format!("buffer holds {capacity} values, {} needed", coords.len()),
            ));
        }
        ptr::copy_nonoverlapping(coords.as_ptr(), buffer, coords.len());
        Ok(())
    })
}

/// # Safety
/// `samples` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gridot_samples_free(samples: *mut GridotSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Multilevel solve from `source` to `target`. A null `config` selects the
/// defaults.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_solve(
    source: *const GridotSamples,
    target: *const GridotSamples,
    config: *const GridotSolveConfig,
    out: *mut *mut GridotSolution,
) -> GridotStatus {
    guard(|| {
        let (s, t) = (as_ref(source, "source")?, as_ref(target, "target")?);
        let solution = solve(&s.0, &t.0, &config_or_default(config)?)?;
        let evaluator = MapEvaluator::from_solution(&solution)?;
        write_out(
            out,
            Box::into_raw(Box::new(GridotSolution {
                solution,
                evaluator,
            })),
            "out",
        )
    })
}

/// Number of levels the solve ran.
///
/// # Safety
/// `solution` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gridot_solution_levels(solution: *const GridotSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.levels.len())
}

/// Objective of level `level` (0-based).
///
/// # Safety
/// `solution` must be a handle from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_solution_objective(
    solution: *const GridotSolution,
    level: usize,
    out: *mut f64,
) -> GridotStatus {
    guard(|| {
        let s = as_ref(solution, "solution")?;
        let lvl =
            s.solution.levels.get(level).ok_or_else(|| {
                Failure(GridotStatus::InvalidArgument, format!("no level {level}"))
            })?;
        write_out(out, lvl.objective, "out")
    })
}

/// Wasserstein-2 distance at the final level.
///
/// # Safety
/// `solution` must be a handle from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_solution_wasserstein(
    solution: *const GridotSolution,
    out: *mut f64,
) -> GridotStatus {
    guard(|| {
        let s = as_ref(solution, "solution")?;
        write_out(out, s.solution.final_level().wasserstein(), "out")
    })
}

/// Evaluates the transport map at one point of dimension `dim`.
///
/// # Safety
/// `x` and `y` must each point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn gridot_solution_evaluate(
    solution: *const GridotSolution,
    x: *const f64,
    dim: usize,
    y: *mut f64,
) -> GridotStatus {
    guard(|| {
        let s = as_ref(solution, "solution")?;
        if x.is_null() {
            return Err(null("x"));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        let image = s.evaluator.evaluate_map(slice::from_raw_parts(x, dim))?;
        ptr::copy_nonoverlapping(image.as_ptr(), y, image.len());
        Ok(())
    })
}

/// Pushes every sample through the transport map.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_solution_push(
    solution: *const GridotSolution,
    samples: *const GridotSamples,
    out: *mut *mut GridotSamples,
) -> GridotStatus {
    guard(|| {
        let s = as_ref(solution, "solution")?;
        let x = as_ref(samples, "samples")?;
        let pushed = s.evaluator.push_samples(&x.0)?;
        write_out(out, Box::into_raw(Box::new(GridotSamples(pushed))), "out")
    })
}

/// # Safety
/// `solution` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gridot_solution_free(solution: *mut GridotSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Barycenter of `count` sample sets with the given weights, started from
/// the first one.
///
/// # Safety
/// `marginals` and `weights` must point to `count` entries; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_barycenter(
    marginals: *const *const GridotSamples,
    weights: *const f64,
    count: usize,
    config: *const GridotSolveConfig,
    max_iters: usize,
    tolerance: f64,
    out: *mut *mut GridotSamples,
) -> GridotStatus {
    guard(|| {
        if marginals.is_null() {
            return Err(null("marginals"));
        }
        if weights.is_null() {
            return Err(null("weights"));
        }
        let sets = slice::from_raw_parts(marginals, count)
            .iter()
            .map(|&m| as_ref(m, "marginal").map(|s| s.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut problem =
            BarycenterProblem::new(sets, slice::from_raw_parts(weights, count).to_vec());
        problem.config = config_or_default(config)?;
        problem.max_iters = max_iters;
        problem.tolerance = tolerance;
        let result = barycenter(&problem)?;
        write_out(
            out,
            Box::into_raw(Box::new(GridotSamples(result.samples))),
            "out",
        )
    })
}

/// Displacement interpolation at `t` in `[0, 1]`.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridot_interpolate(
    source: *const GridotSamples,
    target: *const GridotSamples,
    t: f64,
    config: *const GridotSolveConfig,
    max_iters: usize,
    tolerance: f64,
    out: *mut *mut GridotSamples,
) -> GridotStatus {
    guard(|| {
        let (s, d) = (as_ref(source, "source")?, as_ref(target, "target")?);
        let mut problem = interpolation_problem(&s.0, &d.0, t, &config_or_default(config)?)?;
        problem.max_iters = max_iters;
        problem.tolerance = tolerance;
        let result = barycenter(&problem)?;
        write_out(
            out,
            Box::into_raw(Box::new(GridotSamples(result.samples))),
            "out",
        )
    })
}
