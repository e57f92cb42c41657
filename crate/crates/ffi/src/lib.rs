//! C interface to the spheretv solvers.
//!
//! Graphs and signals cross the boundary as opaque handles created by the
//! `stv_*_new`/`stv_graph_*` constructors and released with the matching
//! `_free`. Every fallible call returns a [`StvStatus`]; on failure the
//! message is available from [`stv_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spheretv::admm::{self, SolverConfig, StopReason};
use spheretv::signal;
use spheretv::tvprox::{self, TvProxConfig};
use spheretv::{Error, Graph, Signal};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StvStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Degenerate = 3,
    ResourceLimit = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StvStopReason {
    Residual = 0,
    Sphere = 1,
    MaxIter = 2,
}

/// Solver settings. `tol_sphere = 0` disables the sphere-distance stop.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StvSolverConfig {
    pub lambda: f64,
    pub rho: f64,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub tol_sphere: f64,
    pub dykstra_max_iter: usize,
    pub dykstra_tol: f64,
    pub dual_max_iter: usize,
    pub dual_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StvSolverReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub final_sphere_distance: f64,
    pub final_objective_k: f64,
    pub wall_time_sec: f64,
    pub stop_reason: StvStopReason,
}

/// Opaque graph handle.
pub struct StvGraph(Graph);

/// Opaque signal handle.
pub struct StvSignal(Signal);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> StvStatus {
    match err {
        Error::InvalidArgument(_) => StvStatus::InvalidArgument,
        Error::DegenerateProjection { .. } | Error::DegenerateChromaticity { .. } => StvStatus::Degenerate,
        Error::ResourceLimit(_) => StvStatus::ResourceLimit,
        Error::Parse(_) => StvStatus::Parse,
        Error::Io(_) => StvStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (StvStatus, String)>) -> StvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            StvStatus::Panic
        }
    }
}

fn lift<T>(r: spheretv::Result<T>) -> Result<T, (StvStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (StvStatus, String) {
    (StvStatus::NullPointer, format!("{name} is null"))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (StvStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a>(data: *const f64, len: usize, name: &str) -> Result<&'a [f64], (StvStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn stv_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a nul byte"),
    };
    VERSION.as_ptr()
}

/// Default settings: λ = 1, ρ = 1, 10000 iterations, tolerances 1e-6 and 1e-5.
#[no_mangle]
pub extern "C" fn stv_solver_config_default() -> StvSolverConfig {
    let cfg = SolverConfig::default();
    StvSolverConfig {
        lambda: cfg.lambda,
        rho: cfg.rho,
        max_iter: cfg.max_iter,
        tol_residual: cfg.tol_residual,
        tol_sphere: cfg.tol_sphere,
        dykstra_max_iter: cfg.tvprox.dykstra_max_iter,
        dykstra_tol: cfg.tvprox.dykstra_tol,
        dual_max_iter: cfg.tvprox.dual_max_iter,
        dual_tol: cfg.tvprox.dual_tol,
    }
}

fn solver_config(c: &StvSolverConfig) -> SolverConfig {
    SolverConfig {
        lambda: c.lambda,
        rho: c.rho,
        max_iter: c.max_iter,
        tol_residual: c.tol_residual,
        tol_sphere: c.tol_sphere,
        tvprox: TvProxConfig {
            dykstra_max_iter: c.dykstra_max_iter,
            dykstra_tol: c.dykstra_tol,
            dual_max_iter: c.dual_max_iter,
            dual_tol: c.dual_tol,
        },
    }
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn stv_graph_chain(n: usize, out: *mut *mut StvGraph) -> StvStatus {
    guard(|| write_out(out, StvGraph(lift(Graph::chain(n))?)))
}

/// Row-major `rows × cols` grid with 4-neighbour edges.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn stv_graph_grid(rows: usize, cols: usize, out: *mut *mut StvGraph) -> StvStatus {
    guard(|| write_out(out, StvGraph(lift(Graph::grid(rows, cols))?)))
}

/// Connected graph from `num_edges` pairs stored flat in `edges`
/// (`2·num_edges` entries).
///
/// # Safety
/// `edges` must point to `2·num_edges` readable values; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn stv_graph_general(
    num_vertices: usize,
    edges: *const usize,
    num_edges: usize,
    out: *mut *mut StvGraph,
) -> StvStatus {
    guard(|| {
        let flat = if num_edges == 0 {
            &[][..]
        } else if edges.is_null() {
            return Err(null("edges"));
        } else {
            std::slice::from_raw_parts(edges, 2 * num_edges)
        };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        write_out(out, StvGraph(lift(Graph::general(num_vertices, &pairs))?))
    })
}

/// # Safety
/// `graph` must be null or a handle from a `stv_graph_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn stv_graph_free(graph: *mut StvGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stv_graph_num_vertices(graph: *const StvGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_vertices())
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stv_graph_num_edges(graph: *const StvGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Signal of `len` vertices in `R^dim`, copied from `values` (vertex-major,
/// `dim·len` entries).
///
/// # Safety
/// `values` must point to `dim·len` readable doubles; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn stv_signal_new(
    dim: usize,
    len: usize,
    values: *const f64,
    out: *mut *mut StvSignal,
) -> StvStatus {
    guard(|| {
        let count = dim
            .checked_mul(len)
            .ok_or_else(|| (StvStatus::InvalidArgument, "dim·len overflows".to_string()))?;
        let data = slice(values, count, "values")?;
        write_out(out, StvSignal(lift(Signal::new(dim, data.to_vec()))?))
    })
}

/// # Safety
/// `signal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stv_signal_free(signal: *mut StvSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

/// # Safety
/// `signal` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stv_signal_dim(signal: *const StvSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `signal` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stv_signal_len(signal: *const StvSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the `dim·len` values into `out`, which holds `capacity` doubles.
///
/// # Safety
/// `signal` must be a live handle and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn stv_signal_copy_values(
    signal: *const StvSignal,
    out: *mut f64,
    capacity: usize,
) -> StvStatus {
    guard(|| {
        let s = signal.as_ref().ok_or_else(|| null("signal"))?;
        let values = s.0.as_slice();
        if capacity < values.len() {
            return Err((
                StvStatus::InvalidArgument,
                format!("buffer holds {capacity} values, need {}", values.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

/// Mean absolute deviation of the vertex norms from 1.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stv_sphere_distance(signal: *const StvSignal, out: *mut f64) -> StvStatus {
    guard(|| {
        let s = signal.as_ref().ok_or_else(|| null("signal"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = signal::sphere_distance(&s.0);
        Ok(())
    })
}

/// Vertexwise normalisation; zero vertices give `STV_STATUS_DEGENERATE`.
///
/// # Safety
/// `signal` must be a live handle; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn stv_project_sphere(signal: *const StvSignal, out: *mut *mut StvSignal) -> StvStatus {
    guard(|| {
        let s = signal.as_ref().ok_or_else(|| null("signal"))?;
        write_out(out, StvSignal(lift(s.0.project_sphere())?))
    })
}

/// Thresholding `x ↦ +1 if x > η else −1` of a scalar signal.
///
/// # Safety
/// `signal` must be a live handle; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn stv_characteristic(
    signal: *const StvSignal,
    eta: f64,
    out: *mut *mut StvSignal,
) -> StvStatus {
    guard(|| {
        let s = signal.as_ref().ok_or_else(|| null("signal"))?;
        write_out(out, StvSignal(lift(s.0.characteristic(eta))?))
    })
}

/// Exact 1D TV prox of `z` with weight `gamma`, written to `out` (`n` values).
///
/// # Safety
/// `z` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn stv_tv_prox_1d(z: *const f64, n: usize, gamma: f64, out: *mut f64) -> StvStatus {
    guard(|| {
        let input = slice(z, n, "z")?;
        let x = lift(tvprox::tv_prox_1d(input, gamma))?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out, x.len());
        Ok(())
    })
}

/// Runs ADMM on data `y` over `graph`; stores the solution in `*out` and,
/// when `report` is non-null, the run summary in `*report`.
///
/// # Safety
/// `y` and `graph` must be live handles, `config` readable, `out` writable,
/// `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn stv_admm_solve(
    y: *const StvSignal,
    graph: *const StvGraph,
    config: *const StvSolverConfig,
    out: *mut *mut StvSignal,
    report: *mut StvSolverReport,
) -> StvStatus {
    guard(|| {
        let y = y.as_ref().ok_or_else(|| null("y"))?;
        let graph = graph.as_ref().ok_or_else(|| null("graph"))?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (u, rep) = lift(admm::admm_solve(&y.0, &graph.0, &solver_config(cfg)))?;
        if let Some(r) = report.as_mut() {
            *r = StvSolverReport {
                iterations: rep.iterations,
                final_residual: rep.residual_trace.last().copied().unwrap_or(f64::NAN),
                final_sphere_distance: rep.final_sphere_distance,
                final_objective_k: rep.final_objective_k,
                wall_time_sec: rep.wall_time_sec,
                stop_reason: match rep.stop_reason {
                    StopReason::Residual => StvStopReason::Residual,
                    StopReason::Sphere => StvStopReason::Sphere,
                    StopReason::MaxIter => StvStopReason::MaxIter,
                },
            };
        }
        write_out(out, StvSignal(u))
    })
}

/// Coordinatewise TV prox with weight `lambda`, followed by sphere projection
/// when `project` is non-zero.
///
/// # Safety
/// `y` and `graph` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stv_fast_tv(
    y: *const StvSignal,
    graph: *const StvGraph,
    lambda: f64,
    project: i32,
    out: *mut *mut StvSignal,
) -> StvStatus {
    guard(|| {
        let y = y.as_ref().ok_or_else(|| null("y"))?;
        let graph = graph.as_ref().ok_or_else(|| null("graph"))?;
        let cfg = TvProxConfig::default();
        let x = if project != 0 {
            admm::fast_tv_heuristic(&y.0, &graph.0, lambda, &cfg)
        } else {
            admm::fast_tv_unprojected(&y.0, &graph.0, lambda, &cfg)
        };
        write_out(out, StvSignal(lift(x)?))
    })
}
