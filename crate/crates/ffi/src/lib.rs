//! C interface to the ddfem solver.
//!
//! Every function returns a status code (`DDFEM_OK` on success) and writes
//! results through out-pointers. After a failure,
//! `ddfem_last_error_message` describes the error on the calling thread.
//! Objects are opaque handles released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ddfem::equilibrium::{EquilibriumProjector, Source};
use ddfem::harness::{build_dataset, compute_errors, ErrorReport};
use ddfem::law::Law;
use ddfem::material::{LocalDataSet, Sampling};
use ddfem::mesh::Mesh;
use ddfem::solvers::{assignment_objective, solve, Algorithm, SolveReport, SolverConfig};
use ddfem::Error;

pub const DDFEM_OK: c_int = 0;
pub const DDFEM_ERR_INVALID_ARGUMENT: c_int = 1;
pub const DDFEM_ERR_OUT_OF_RANGE: c_int = 2;
pub const DDFEM_ERR_DIMENSION_MISMATCH: c_int = 3;
pub const DDFEM_ERR_EMPTY_DATA: c_int = 4;
pub const DDFEM_ERR_FORMAT: c_int = 5;
pub const DDFEM_ERR_IO: c_int = 6;
pub const DDFEM_ERR_SIZE_GUARD: c_int = 7;
pub const DDFEM_ERR_FACTORIZATION: c_int = 8;
pub const DDFEM_ERR_NEWTON: c_int = 9;
pub const DDFEM_ERR_NULL_POINTER: c_int = 10;
pub const DDFEM_ERR_PANIC: c_int = 11;

pub const DDFEM_LAW_FOURIER: c_int = 0;
pub const DDFEM_LAW_ARCTAN: c_int = 1;

pub const DDFEM_SAMPLING_GRID: c_int = 0;
pub const DDFEM_SAMPLING_UNIFORM: c_int = 1;

pub const DDFEM_ALGORITHM_PG: c_int = 0;
pub const DDFEM_ALGORITHM_PS: c_int = 1;
pub const DDFEM_ALGORITHM_DR1: c_int = 2;
pub const DDFEM_ALGORITHM_DR2: c_int = 3;

/// A material data set.
pub struct DdfemDataSet(LocalDataSet);

/// A mesh with its equilibrium projector for the manufactured problem.
pub struct DdfemProblem(EquilibriumProjector);

/// Result of a solver run.
pub struct DdfemReport {
    report: SolveReport,
    errors: ErrorReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(c_int, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => DDFEM_ERR_INVALID_ARGUMENT,
            Error::OutOfRange { .. } => DDFEM_ERR_OUT_OF_RANGE,
            Error::DimensionMismatch(_) => DDFEM_ERR_DIMENSION_MISMATCH,
            Error::EmptyDataSet => DDFEM_ERR_EMPTY_DATA,
            Error::Format { .. } => DDFEM_ERR_FORMAT,
            Error::Io { .. } => DDFEM_ERR_IO,
            Error::SizeGuard(_) => DDFEM_ERR_SIZE_GUARD,
            Error::Factorization(_) => DDFEM_ERR_FACTORIZATION,
            Error::NewtonDivergence(_) => DDFEM_ERR_NEWTON,
            _ => DDFEM_ERR_INVALID_ARGUMENT,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DDFEM_ERR_NULL_POINTER, format!("{what} is null"))
}

fn invalid(message: String) -> Failure {
    Failure(DDFEM_ERR_INVALID_ARGUMENT, message)
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            DDFEM_OK
        }
        Ok(Err(Failure(code, message))) => {
            set_last_error(message);
            code
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {message}"));
            DDFEM_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not valid UTF-8".into()))
}

fn law(code: c_int) -> Result<Law, Failure> {
    match code {
        DDFEM_LAW_FOURIER => Ok(Law::Fourier),
        DDFEM_LAW_ARCTAN => Ok(Law::Arctan),
        other => Err(invalid(format!("unknown law code {other}"))),
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn ddfem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ddfem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples `m` points of `law` (`m` must be a perfect square for grid
/// sampling) with uniform noise in `[-noise, noise]^4`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_generate(
    law_code: c_int,
    sampling: c_int,
    m: usize,
    noise: f64,
    seed: u64,
    out: *mut *mut DdfemDataSet,
) -> c_int {
    guard(|| {
        let sampling = match sampling {
            DDFEM_SAMPLING_GRID => Sampling::Grid,
            DDFEM_SAMPLING_UNIFORM => Sampling::Uniform,
            other => return Err(invalid(format!("unknown sampling code {other}"))),
        };
        let data = build_dataset(law(law_code)?, sampling, m, noise, seed)?;
        write(out, Box::into_raw(Box::new(DdfemDataSet(data))), "out")
    })
}

/// Creates a data set from `m` rows `(r1, r2, w1, w2)` stored contiguously.
///
/// # Safety
/// `points` must point to `4 * m` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_from_points(
    points: *const f64,
    m: usize,
    out: *mut *mut DdfemDataSet,
) -> c_int {
    guard(|| {
        if points.is_null() {
            return Err(null("points"));
        }
        let raw = std::slice::from_raw_parts(points, 4 * m);
        let rows = raw.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
        let data = LocalDataSet::new(rows, Default::default())?;
        write(out, Box::into_raw(Box::new(DdfemDataSet(data))), "out")
    })
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_load(path: *const c_char, out: *mut *mut DdfemDataSet) -> c_int {
    guard(|| {
        let data = LocalDataSet::load(path_arg(path)?)?;
        write(out, Box::into_raw(Box::new(DdfemDataSet(data))), "out")
    })
}

/// # Safety
/// `data` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_save(data: *const DdfemDataSet, path: *const c_char) -> c_int {
    guard(|| {
        deref(data, "data")?.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `data` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_len(data: *const DdfemDataSet, out: *mut usize) -> c_int {
    guard(|| write(out, deref(data, "data")?.0.len(), "out"))
}

/// Copies point `j` as `(r1, r2, w1, w2)` into `out[0..4]`.
///
/// # Safety
/// `data` must be a live handle; `out` must hold four doubles.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_point(data: *const DdfemDataSet, j: usize, out: *mut f64) -> c_int {
    guard(|| {
        let p = deref(data, "data")?.0.point(j)?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(p.as_ptr(), out, 4);
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ddfem_dataset_free(data: *mut DdfemDataSet) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Mesh of `2 n^2` triangles with the manufactured source of `law`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddfem_problem_new(n: usize, law_code: c_int, out: *mut *mut DdfemProblem) -> c_int {
    guard(|| {
        let source = Source::Manufactured(law(law_code)?);
        let projector = EquilibriumProjector::new(Mesh::new(n)?, &source)?;
        write(out, Box::into_raw(Box::new(DdfemProblem(projector))), "out")
    })
}

/// # Safety
/// `problem` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_problem_num_elements(problem: *const DdfemProblem, out: *mut usize) -> c_int {
    guard(|| write(out, deref(problem, "problem")?.0.mesh().num_triangles(), "out"))
}

/// Objective `1/2 |pi_E(y) - y|_Z^2` of the field assigning data point
/// `assignment[t]` to element `t`.
///
/// # Safety
/// Handles must be live; `assignment` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn ddfem_objective(
    problem: *const DdfemProblem,
    data: *const DdfemDataSet,
    assignment: *const usize,
    len: usize,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let p = deref(problem, "problem")?;
        let d = deref(data, "data")?;
        if assignment.is_null() {
            return Err(null("assignment"));
        }
        let a = std::slice::from_raw_parts(assignment, len);
        write(out, assignment_objective(&p.0, &d.0, a)?, "out")
    })
}

/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddfem_problem_free(problem: *mut DdfemProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs a solver from the zero field. `gamma0 <= 0` and `max_iter == 0`
/// select the defaults.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_solve(
    problem: *const DdfemProblem,
    data: *const DdfemDataSet,
    algorithm: c_int,
    gamma0: f64,
    max_iter: usize,
    out: *mut *mut DdfemReport,
) -> c_int {
    guard(|| {
        let p = deref(problem, "problem")?;
        let d = deref(data, "data")?;
        let alg = match algorithm {
            DDFEM_ALGORITHM_PG => Algorithm::Pg,
            DDFEM_ALGORITHM_PS => Algorithm::Ps,
            DDFEM_ALGORITHM_DR1 => Algorithm::Dr1,
            DDFEM_ALGORITHM_DR2 => Algorithm::Dr2,
            other => return Err(invalid(format!("unknown algorithm code {other}"))),
        };
        let mut config = SolverConfig::new(alg);
        if gamma0 > 0.0 {
            config.gamma0 = gamma0;
        }
        if max_iter > 0 {
            config.max_iter = max_iter;
        }
        let report = solve(&p.0, &d.0, &config)?;
        let errors = compute_errors(p.0.mesh(), &report.state)?;
        write(out, Box::into_raw(Box::new(DdfemReport { report, errors })), "out")
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_report_objective(report: *const DdfemReport, out: *mut f64) -> c_int {
    guard(|| write(out, deref(report, "report")?.report.objective, "out"))
}

/// # Safety
/// `report` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_report_iterations(report: *const DdfemReport, out: *mut usize) -> c_int {
    guard(|| write(out, deref(report, "report")?.report.iterations, "out"))
}

/// Relative `L^2` and `H^1_0` errors of the potential against the
/// manufactured solution.
///
/// # Safety
/// `report` must be a live handle; both outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddfem_report_errors(
    report: *const DdfemReport,
    err_l2: *mut f64,
    err_h1: *mut f64,
) -> c_int {
    guard(|| {
        let e = deref(report, "report")?.errors;
        write(err_l2, e.err_l2, "err_l2")?;
        write(err_h1, e.err_h1, "err_h1")
    })
}

/// Copies up to `cap` history values into `buf`; `len` receives the full
/// history length. `buf` may be null when `cap == 0`.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ddfem_report_history(
    report: *const DdfemReport,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> c_int {
    guard(|| {
        let h = &deref(report, "report")?.report.history;
        copy_out(h, buf, cap)?;
        write(len, h.len(), "len")
    })
}

/// Copies up to `cap` entries of the final assignment into `buf`; `len`
/// receives the number of elements.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn ddfem_report_assignment(
    report: *const DdfemReport,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> c_int {
    guard(|| {
        let a = &deref(report, "report")?.report.assignment;
        copy_out(a, buf, cap)?;
        write(len, a.len(), "len")
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize) -> Result<(), Failure> {
    let n = src.len().min(cap);
    if n > 0 {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, n);
    }
    Ok(())
}

/// # Safety
/// `report` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ddfem_report_free(report: *mut DdfemReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
