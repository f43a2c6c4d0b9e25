//! C interface to `opfdp`.
//!
//! Cases live behind an opaque [`OpfdpCase`] handle. Every function returns an
//! [`OpfdpStatus`]; on failure a message is kept per thread and can be read with
//! [`opfdp_last_error`]. Output arrays are caller-owned: pass the capacity, and
//! the function reports the length it needs through `len_out` even when the
//! buffer is too small.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opfdp::cli::fixtures::gen_fixture;
use opfdp::cli::{load_case, CaseFile, LoadedCase};
use opfdp::monotonicity::{estimate_pair, SweepConfig};
use opfdp::opf::opf_operator;
use opfdp::privacy::mechanism::{aggregation_scale, general_mechanism_scale, release_aggregates, MechanismConfig};
use opfdp::Error;

/// Result codes. `OPFDP_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpfdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Infeasible = 3,
    Unbounded = 4,
    Nonsmooth = 5,
    BufferTooSmall = 6,
    Io = 7,
    Internal = 8,
    Panic = 9,
}

/// Opaque handle to a loaded case.
pub struct OpfdpCase {
    inner: LoadedCase,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OpfdpStatus {
    match e {
        Error::OpfInfeasible | Error::NoFeasiblePerturbation | Error::NoUsableSample(_) => OpfdpStatus::Infeasible,
        Error::OpfUnbounded => OpfdpStatus::Unbounded,
        Error::NonsmoothPoint { .. } => OpfdpStatus::Nonsmooth,
        Error::Io(_) => OpfdpStatus::Io,
        Error::IterationLimit(_) | Error::NotOptimal => OpfdpStatus::Internal,
        _ => OpfdpStatus::InvalidInput,
    }
}

struct Failure(OpfdpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OpfdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OpfdpStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            OpfdpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OpfdpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OpfdpStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn case_ref<'a>(case: *const OpfdpCase) -> Result<&'a LoadedCase, Failure> {
    case.as_ref().map(|c| &c.inner).ok_or_else(|| null("case"))
}

unsafe fn store_case(out: *mut *mut OpfdpCase, case: LoadedCase) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(OpfdpCase { inner: case }));
    Ok(())
}

/// Loads the case's own loads, or `n_loads` values from `loads` when it is not null.
unsafe fn loads_or_default(case: &LoadedCase, loads: *const f64, n_loads: usize) -> Result<Vec<f64>, Failure> {
    if loads.is_null() {
        return Ok(case.load.clone());
    }
    Ok(std::slice::from_raw_parts(loads, n_loads).to_vec())
}

unsafe fn write_out(values: &[f64], out: *mut f64, capacity: usize, len_out: *mut usize) -> Result<(), Failure> {
    if !len_out.is_null() {
        *len_out = values.len();
    }
    if capacity < values.len() {
        return Err(Failure(
            OpfdpStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", values.len()),
        ));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn opfdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a JSON case document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_from_json(json: *const c_char, out: *mut *mut OpfdpCase) -> OpfdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let case = CaseFile::from_json_str(text(json, "json")?)?.load()?;
        store_case(out, case)
    })
}

/// Reads a JSON case file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_from_file(path: *const c_char, out: *mut *mut OpfdpCase) -> OpfdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let case = load_case(text(path, "path")?)?;
        store_case(out, case)
    })
}

/// Builds a built-in case: `"radial"`, `"case9"` or `"ring"` (`n` buses; 0
/// picks the default).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_fixture(name: *const c_char, n: usize, out: *mut *mut OpfdpCase) -> OpfdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = (n > 0).then_some(n);
        let case = gen_fixture(text(name, "name")?, n)?.load()?;
        store_case(out, case)
    })
}

/// Releases a case handle. Null is ignored.
///
/// # Safety
/// `case` must come from one of the constructors and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_free(case: *mut OpfdpCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// Counts of buses, generators, loads and regions (0 when the case has none).
/// Any output pointer may be null.
///
/// # Safety
/// `case` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_dims(
    case: *const OpfdpCase,
    n_buses: *mut usize,
    n_generators: *mut usize,
    n_loads: *mut usize,
    n_regions: *mut usize,
) -> OpfdpStatus {
    guard(|| {
        let c = case_ref(case)?;
        let net = c.instance.network();
        let regions = c.partition.as_ref().map_or(0, |p| p.regions());
        for (p, v) in [
            (n_buses, net.n_buses()),
            (n_generators, net.n_generators()),
            (n_loads, net.n_loads()),
            (n_regions, regions),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Optimal generation (MW) at the given loads. Pass `loads = NULL` to use the
/// case loads.
///
/// # Safety
/// `loads`, if not null, must point to `n_loads` values; `gen_out` must hold
/// `capacity` values; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_solve(
    case: *const OpfdpCase,
    loads: *const f64,
    n_loads: usize,
    gen_out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> OpfdpStatus {
    guard(|| {
        let c = case_ref(case)?;
        let load = loads_or_default(c, loads, n_loads)?;
        let gen = opf_operator(&c.instance, &load)?;
        write_out(&gen, gen_out, capacity, len_out)
    })
}

/// Sweep estimate of the monotonicity pair at the case loads: the worst
/// negative sum `epsilon` over increments up to `delta` MW on every load, and
/// `epsilon / delta`. The value is a lower bound on the true epsilon.
///
/// # Safety
/// `case` must be a live handle; `epsilon_out` and `ratio_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_monotonicity(
    case: *const OpfdpCase,
    delta: f64,
    epsilon_out: *mut f64,
    ratio_out: *mut f64,
) -> OpfdpStatus {
    guard(|| {
        let c = case_ref(case)?;
        let report = estimate_pair(&c.instance, &SweepConfig::new(vec![c.load.clone()], delta))?;
        if !epsilon_out.is_null() {
            *epsilon_out = report.epsilon;
        }
        if !ratio_out.is_null() {
            *ratio_out = report.ratio;
        }
        Ok(())
    })
}

/// Laplace scale `2(delta + epsilon)/rho` for releasing regional totals.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opfdp_aggregation_scale(delta: f64, epsilon: f64, rho: f64, out: *mut f64) -> OpfdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = aggregation_scale(delta, epsilon, rho)?;
        Ok(())
    })
}

/// Laplace scale `2 U r (delta + epsilon)/rho` for a query with Jacobian bound
/// `U` over `regions` regions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opfdp_general_scale(
    jacobian_bound: f64,
    regions: usize,
    delta: f64,
    epsilon: f64,
    rho: f64,
    out: *mut f64,
) -> OpfdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = general_mechanism_scale(jacobian_bound, regions, delta, epsilon, rho)?;
        Ok(())
    })
}

/// Noisy regional aggregates at the case loads over the case's regions:
/// generation totals for each region, then load totals. A negative `epsilon`
/// uses the sweep estimate. The same `seed` gives the same output.
///
/// # Safety
/// `case` must be a live handle; `out` must hold `capacity` values; `len_out`
/// and `scale_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn opfdp_case_release(
    case: *const OpfdpCase,
    delta: f64,
    rho: f64,
    epsilon: f64,
    seed: u64,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
    scale_out: *mut f64,
) -> OpfdpStatus {
    guard(|| {
        let c = case_ref(case)?;
        let partition = c
            .partition
            .as_ref()
            .ok_or_else(|| Failure(OpfdpStatus::InvalidInput, "case has no regions".into()))?;
        let report = estimate_pair(&c.instance, &SweepConfig::new(vec![c.load.clone()], delta))?;
        let eps = if epsilon < 0.0 { report.epsilon } else { epsilon };
        let config = MechanismConfig::aggregation(delta, rho, eps, seed)?;
        let release = release_aggregates(&c.instance, &c.load, partition, &config, &report)?;
        if !scale_out.is_null() {
            *scale_out = config.scale;
        }
        write_out(&release.noisy.values, out, capacity, len_out)
    })
}
