//! C ABI over `ocm-core`.
//!
//! Every entry point returns an [`OcmStatus`]. Results come back through out
//! pointers. On failure, [`ocm_last_error`] describes the most recent error
//! on the calling thread. Handles are opaque and must be released with the
//! matching `*_free` function; strings with [`ocm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use ocm_core::baire::{graph_completion, is_h_continuous};
use ocm_core::grid::GridIntervalFunction;
use ocm_core::macneille::{macneille_complete, CutLattice, FinitePoset};
use ocm_core::order::{ExtInterval, ExtReal};
use ocm_core::pde::{check_condition_23, probe_lattice, PdeProblem};
use ocm_core::solver::{assemble_global, verify_certificate, PiecewiseSolution, Side};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    SolverFailure = 5,
    /// A certificate or condition check failed; outputs are still written.
    Violation = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcmSide {
    Lower = 0,
    Upper = 1,
}

pub struct OcmPoset {
    inner: FinitePoset,
}

pub struct OcmLattice {
    inner: CutLattice,
}

pub struct OcmProblem {
    inner: PdeProblem,
}

pub struct OcmSolution {
    inner: PiecewiseSolution,
}

pub struct OcmGrid {
    inner: GridIntervalFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

type Failure = (OcmStatus, String);

fn guard(body: impl FnOnce() -> Result<OcmStatus, Failure>) -> OcmStatus {
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OcmStatus::Panic
        }
    }
}

fn null() -> Failure {
    (OcmStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (OcmStatus::InvalidUtf8, "input is not valid UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| (OcmStatus::InvalidArgument, "string contains NUL".into()))?;
    put(out, c.into_raw())
}

fn parse_err(e: impl ToString) -> Failure {
    (OcmStatus::Parse, e.to_string())
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ocm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ocm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ocm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `[alo, ahi] <= [blo, bhi]` componentwise. Infinite endpoints are allowed.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_interval_leq(alo: f64, ahi: f64, blo: f64, bhi: f64, out: *mut bool) -> OcmStatus {
    guard(|| {
        let iv = |lo: f64, hi: f64| ExtInterval::from_f64(lo, hi).map_err(|e| (OcmStatus::InvalidArgument, e.to_string()));
        let (a, b) = (iv(alo, ahi)?, iv(blo, bhi)?);
        put(out, a.leq(&b))?;
        Ok(OcmStatus::Ok)
    })
}

/// Parse a poset in the `name: cover cover` line format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_poset_parse(text: *const c_char, out: *mut *mut OcmPoset) -> OcmStatus {
    guard(|| {
        let poset = FinitePoset::from_text(read_str(text)?).map_err(parse_err)?;
        put(out, Box::into_raw(Box::new(OcmPoset { inner: poset })))?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`ocm_poset_parse`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ocm_poset_free(p: *mut OcmPoset) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dedekind-MacNeille completion of `poset`.
///
/// # Safety
/// `poset` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_lattice_complete(poset: *const OcmPoset, out: *mut *mut OcmLattice) -> OcmStatus {
    guard(|| {
        let lattice = macneille_complete(&handle(poset)?.inner).map_err(|e| (OcmStatus::InvalidArgument, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OcmLattice { inner: lattice })))?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `lattice` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_lattice_cut_count(lattice: *const OcmLattice, out: *mut usize) -> OcmStatus {
    guard(|| {
        put(out, handle(lattice)?.inner.len())?;
        Ok(OcmStatus::Ok)
    })
}

/// Graphviz rendering of the cut lattice. Free with [`ocm_string_free`].
///
/// # Safety
/// `lattice` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_lattice_to_dot(lattice: *const OcmLattice, out: *mut *mut c_char) -> OcmStatus {
    guard(|| {
        put_string(out, handle(lattice)?.inner.to_dot())?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `l` must be NULL or a handle from [`ocm_lattice_complete`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ocm_lattice_free(l: *mut OcmLattice) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Parse a `key = value` problem description.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_problem_parse(text: *const c_char, out: *mut *mut OcmProblem) -> OcmStatus {
    guard(|| {
        let problem = PdeProblem::from_text(read_str(text)?).map_err(parse_err)?;
        put(out, Box::into_raw(Box::new(OcmProblem { inner: problem })))?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`ocm_problem_parse`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ocm_problem_free(p: *mut OcmProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Range-condition check on a lattice with `points_per_axis` points per
/// axis. Writes the number of failing points; returns `Violation` if any.
///
/// # Safety
/// `problem` must be a live handle and `failed` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_check23(problem: *const OcmProblem, points_per_axis: usize, budget: usize, failed: *mut usize) -> OcmStatus {
    guard(|| {
        let p = &handle(problem)?.inner;
        if points_per_axis == 0 || budget == 0 {
            return Err((OcmStatus::InvalidArgument, "points_per_axis and budget must be positive".into()));
        }
        let verdicts = check_condition_23(p, &probe_lattice(p.domain(), points_per_axis), budget)
            .map_err(|e| (OcmStatus::SolverFailure, e.to_string()))?;
        let n = verdicts.iter().filter(|v| !v.holds).count();
        put(failed, n)?;
        Ok(if n == 0 { OcmStatus::Ok } else { OcmStatus::Violation })
    })
}

/// Assemble a one-sided solution with tolerance `eps`.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_solve(problem: *const OcmProblem, eps: f64, side: OcmSide, out: *mut *mut OcmSolution) -> OcmStatus {
    guard(|| {
        let side = match side {
            OcmSide::Lower => Side::Lower,
            OcmSide::Upper => Side::Upper,
        };
        let sol = assemble_global(&handle(problem)?.inner, eps, side).map_err(|e| (OcmStatus::SolverFailure, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OcmSolution { inner: sol })))?;
        Ok(OcmStatus::Ok)
    })
}

/// Parse a solution file written by [`ocm_solution_to_text`] for `problem`.
///
/// # Safety
/// Pointers must be live and valid as for the other entry points.
#[no_mangle]
pub unsafe extern "C" fn ocm_solution_parse(problem: *const OcmProblem, text: *const c_char, out: *mut *mut OcmSolution) -> OcmStatus {
    guard(|| {
        let sol = PiecewiseSolution::from_text(read_str(text)?, &handle(problem)?.inner).map_err(parse_err)?;
        put(out, Box::into_raw(Box::new(OcmSolution { inner: sol })))?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `sol` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_solution_box_count(sol: *const OcmSolution, out: *mut usize) -> OcmStatus {
    guard(|| {
        put(out, handle(sol)?.inner.boxes().len())?;
        Ok(OcmStatus::Ok)
    })
}

/// Fresh-sample audit. Writes the residual range and violation count;
/// returns `Violation` when the count is nonzero.
///
/// # Safety
/// `sol` must be a live handle; the out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_solution_verify(
    sol: *const OcmSolution,
    samples_per_box: usize,
    seed: u64,
    min_residual: *mut f64,
    max_residual: *mut f64,
    violations: *mut usize,
) -> OcmStatus {
    guard(|| {
        let r = verify_certificate(&handle(sol)?.inner, samples_per_box, seed);
        put(min_residual, r.min_residual)?;
        put(max_residual, r.max_residual)?;
        put(violations, r.violations.len())?;
        if let Some(v) = r.violations.first() {
            set_error(format!("violation in box {} at {:?}, residual {:?}", v.box_index, v.point, v.residual));
            return Ok(OcmStatus::Violation);
        }
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `sol` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_solution_to_text(sol: *const OcmSolution, out: *mut *mut c_char) -> OcmStatus {
    guard(|| {
        put_string(out, handle(sol)?.inner.to_text())?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `s` must be NULL or a solution handle, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ocm_solution_free(s: *mut OcmSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Parse the plain-text grid function format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_grid_parse(text: *const c_char, out: *mut *mut OcmGrid) -> OcmStatus {
    guard(|| {
        let g = GridIntervalFunction::from_text(read_str(text)?).map_err(parse_err)?;
        put(out, Box::into_raw(Box::new(OcmGrid { inner: g })))?;
        Ok(OcmStatus::Ok)
    })
}

/// Graph completion from the grid's own mask.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_graph_completion(grid: *const OcmGrid, out: *mut *mut OcmGrid) -> OcmStatus {
    guard(|| {
        let g = &handle(grid)?.inner;
        let c = graph_completion(g, g.mask()).map_err(|e| (OcmStatus::InvalidArgument, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OcmGrid { inner: c })))?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `grid` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_is_h_continuous(grid: *const OcmGrid, out: *mut bool) -> OcmStatus {
    guard(|| {
        put(out, is_h_continuous(&handle(grid)?.inner))?;
        Ok(OcmStatus::Ok)
    })
}

/// Interval value at node `index`.
///
/// # Safety
/// `grid` must be a live handle; `lo` and `hi` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_grid_value(grid: *const OcmGrid, index: usize, lo: *mut f64, hi: *mut f64) -> OcmStatus {
    guard(|| {
        let g = &handle(grid)?.inner;
        if index >= g.domain().node_count() {
            return Err((OcmStatus::InvalidArgument, format!("node {index} out of range")));
        }
        let v = g.value(index);
        put(lo, ExtReal::to_f64(v.lo()))?;
        put(hi, ExtReal::to_f64(v.hi()))?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `grid` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ocm_grid_to_text(grid: *const OcmGrid, out: *mut *mut c_char) -> OcmStatus {
    guard(|| {
        put_string(out, handle(grid)?.inner.to_text())?;
        Ok(OcmStatus::Ok)
    })
}

/// # Safety
/// `g` must be NULL or a grid handle, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ocm_grid_free(g: *mut OcmGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}
