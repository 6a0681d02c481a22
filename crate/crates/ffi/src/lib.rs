//! C interface to `homdyn`.
//!
//! Every function returns a [`HomdynStatus`]. On failure the message is kept
//! per thread and read back with [`homdyn_last_error`]. Objects are opaque
//! handles created by `*_new` functions and released by the matching
//! `*_free`. Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use homdyn::height::{alpha, make_height_params};
use homdyn::homspace::{apply_flow, make_flow, minima, FlowSpec, LatticePoint};
use homdyn::largedev::derive_constants;
use homdyn::rootsys::exact::{rat, to_f64, Rational};
use homdyn::rootsys::{build_expanding, build_root_system, check_construction, decompose_dominated, verify_decomposition, Family, RootSystem};
use homdyn::tensor::Matrix;
use homdyn::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomdynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Falsified = 4,
    Panic = 5,
}

/// A diagonal flow `g_t` with its chart `u(w)`.
pub struct HomdynFlow(FlowSpec);

/// A unimodular lattice in `R^d`.
pub struct HomdynLattice(LatticePoint);

/// A root system with its positive roots.
pub struct HomdynRootSystem(RootSystem);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HomdynStatus {
    match e {
        Error::Falsified(_) | Error::BranchFailure { .. } | Error::SearchFailed(_) => HomdynStatus::Falsified,
        Error::Singular | Error::EnumerationBudget(_) | Error::FlowOverflow(_) | Error::InsufficientData(_) => {
            HomdynStatus::Numeric
        }
        _ => HomdynStatus::InvalidArgument,
    }
}

struct Failure(HomdynStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HomdynStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> HomdynStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            HomdynStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HomdynStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Length in bytes of the last error message of this thread, without the terminator.
#[no_mangle]
pub extern "C" fn homdyn_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message, truncated and NUL-terminated, into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn homdyn_last_error(buf: *mut c_char, len: usize) -> HomdynStatus {
    if buf.is_null() || len == 0 {
        return HomdynStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    });
    HomdynStatus::Ok
}

/// Builds the flow with expanding exponents `a[0..m]` and contracting exponents `b[0..n]`.
///
/// # Safety
/// `a` and `b` must hold `m` and `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_flow_new(
    a: *const f64,
    m: usize,
    b: *const f64,
    n: usize,
    out_flow: *mut *mut HomdynFlow,
) -> HomdynStatus {
    guard(|| {
        let slot = out(out_flow, "out_flow")?;
        let spec = make_flow(slice(a, m, "a")?, slice(b, n, "b")?)?;
        *slot = Box::into_raw(Box::new(HomdynFlow(spec)));
        Ok(())
    })
}

/// Releases a flow; null is ignored.
///
/// # Safety
/// `flow` must come from [`homdyn_flow_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn homdyn_flow_free(flow: *mut HomdynFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Ambient dimension `d` and chart dimension `m·n` of a flow.
///
/// # Safety
/// `flow` must be a live handle; `d` and `chart_dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_flow_dims(flow: *const HomdynFlow, d: *mut usize, chart_dim: *mut usize) -> HomdynStatus {
    guard(|| {
        let f = &handle(flow, "flow")?.0;
        *out(d, "d")? = f.d();
        *out(chart_dim, "chart_dim")? = f.chart_dim();
        Ok(())
    })
}

/// The standard lattice `Z^d`.
///
/// # Safety
/// `out_lattice` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_lattice_standard(d: usize, out_lattice: *mut *mut HomdynLattice) -> HomdynStatus {
    guard(|| {
        let slot = out(out_lattice, "out_lattice")?;
        if d < 2 {
            return Err(Failure(HomdynStatus::InvalidArgument, format!("dimension {d} is below 2")));
        }
        *slot = Box::into_raw(Box::new(HomdynLattice(LatticePoint::standard(d))));
        Ok(())
    })
}

/// The lattice spanned by the columns of the row-major `d×d` matrix `basis`,
/// which must have determinant `±1`.
///
/// # Safety
/// `basis` must hold `d*d` doubles; `out_lattice` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_lattice_new(
    basis: *const f64,
    d: usize,
    out_lattice: *mut *mut HomdynLattice,
) -> HomdynStatus {
    guard(|| {
        let slot = out(out_lattice, "out_lattice")?;
        let entries = slice(basis, d * d, "basis")?;
        let x = LatticePoint::new(Matrix::from_row_slice(d, d, entries))?;
        *slot = Box::into_raw(Box::new(HomdynLattice(x)));
        Ok(())
    })
}

/// Releases a lattice; null is ignored.
///
/// # Safety
/// `lattice` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn homdyn_lattice_free(lattice: *mut HomdynLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Copies the row-major basis of a `d`-dimensional lattice into `basis[0..d*d]`.
///
/// # Safety
/// `lattice` must be live and `basis` must hold `d*d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn homdyn_lattice_basis(lattice: *const HomdynLattice, basis: *mut f64, len: usize) -> HomdynStatus {
    guard(|| {
        let x = &handle(lattice, "lattice")?.0;
        let d = x.dim();
        if len != d * d {
            return Err(Failure(HomdynStatus::InvalidArgument, format!("buffer holds {len} entries, need {}", d * d)));
        }
        let dst = slice_mut(basis, len, "basis")?;
        for r in 0..d {
            for c in 0..d {
                dst[r * d + c] = x.basis()[(r, c)];
            }
        }
        Ok(())
    })
}

/// `g_t u(w) x`, renormalized and reduced.
///
/// # Safety
/// Handles must be live, `w` must hold `w_len` doubles and `out_lattice` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_apply_flow(
    flow: *const HomdynFlow,
    lattice: *const HomdynLattice,
    t: f64,
    w: *const f64,
    w_len: usize,
    out_lattice: *mut *mut HomdynLattice,
) -> HomdynStatus {
    guard(|| {
        let slot = out(out_lattice, "out_lattice")?;
        let y = apply_flow(&handle(flow, "flow")?.0, &handle(lattice, "lattice")?.0, t, slice(w, w_len, "w")?)?;
        *slot = Box::into_raw(Box::new(HomdynLattice(y.reduced())));
        Ok(())
    })
}

/// Smallest covolume of a rank-`i` sublattice, `0 < i < d`.
///
/// # Safety
/// `lattice` must be live and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_lattice_minimum(lattice: *const HomdynLattice, i: usize, value: *mut f64) -> HomdynStatus {
    guard(|| {
        *out(value, "value")? = minima(&handle(lattice, "lattice")?.0, i)?;
        Ok(())
    })
}

/// Height `α_ε` of a lattice for the given flow.
///
/// # Safety
/// Handles must be live and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_height(
    flow: *const HomdynFlow,
    lattice: *const HomdynLattice,
    epsilon: f64,
    value: *mut f64,
) -> HomdynStatus {
    guard(|| {
        let params = make_height_params(&handle(flow, "flow")?.0, epsilon)?;
        *out(value, "value")? = alpha(&params, &handle(lattice, "lattice")?.0)?;
        Ok(())
    })
}

/// Rate `θ` and cutoff `Q` of the large-deviation bound for a tail certificate `(C0, θ0)`.
///
/// # Safety
/// `theta` and `q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_ld_constants(c0: f64, theta0: f64, eps: f64, theta: *mut f64, q: *mut u64) -> HomdynStatus {
    guard(|| {
        let k = derive_constants(c0, theta0, eps)?;
        *out(theta, "theta")? = k.theta;
        *out(q, "q")? = k.q;
        Ok(())
    })
}

/// Root system of type `family` (`"A"`, .., `"G"`, `"BC"`) and the given rank.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out_system` writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_rootsys_new(
    family: *const c_char,
    rank: usize,
    out_system: *mut *mut HomdynRootSystem,
) -> HomdynStatus {
    guard(|| {
        let slot = out(out_system, "out_system")?;
        if family.is_null() {
            return Err(null("family"));
        }
        let name = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| Failure(HomdynStatus::InvalidArgument, "family is not UTF-8".into()))?;
        let family: Family = name.parse()?;
        *slot = Box::into_raw(Box::new(HomdynRootSystem(build_root_system(family, rank)?)));
        Ok(())
    })
}

/// Releases a root system; null is ignored.
///
/// # Safety
/// `system` must come from [`homdyn_rootsys_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn homdyn_rootsys_free(system: *mut HomdynRootSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Rank, ambient dimension and number of positive roots.
///
/// # Safety
/// `system` must be live and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_rootsys_shape(
    system: *const HomdynRootSystem,
    rank: *mut usize,
    ambient: *mut usize,
    positive: *mut usize,
) -> HomdynStatus {
    guard(|| {
        let s = &handle(system, "system")?.0;
        *out(rank, "rank")? = s.rank();
        *out(ambient, "ambient")? = s.ambient();
        *out(positive, "positive")? = s.positive().len();
        Ok(())
    })
}

/// Decomposes the dominated vector with nonnegative integer fundamental-weight
/// coordinates `weights[0..rank]` as `Σ c_i β_i`. Writes the roots row-major into
/// `betas[0..rank*ambient]`, the coefficients into `coeffs[0..rank]` and
/// whether the independent verification passed into `verified`.
///
/// # Safety
/// `system` must be live and every buffer sized as described.
#[no_mangle]
pub unsafe extern "C" fn homdyn_rootsys_decompose(
    system: *const HomdynRootSystem,
    weights: *const i64,
    rank: usize,
    betas: *mut f64,
    coeffs: *mut f64,
    verified: *mut bool,
) -> HomdynStatus {
    guard(|| {
        let s = &handle(system, "system")?.0;
        if rank != s.rank() {
            return Err(Failure(HomdynStatus::InvalidArgument, format!("{} needs {} weights", s.name(), s.rank())));
        }
        let f: Vec<Rational> = slice(weights, rank, "weights")?.iter().map(|&k| rat(k)).collect();
        let alpha = s.from_fundamental_coordinates(&f)?;
        let dec = decompose_dominated(s, &alpha)?;
        let amb = s.ambient();
        let beta_out = slice_mut(betas, rank * amb, "betas")?;
        for (k, b) in dec.betas.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                beta_out[k * amb + j] = to_f64(v);
            }
        }
        for (dst, c) in slice_mut(coeffs, rank, "coeffs")?.iter_mut().zip(&dec.coeffs) {
            *dst = to_f64(c);
        }
        *out(verified, "verified")? = verify_decomposition(s, &dec).passed();
        Ok(())
    })
}

/// Builds the expanding subalgebra for the traceless diagonal `z[0..d]` and
/// runs the expanding check on its adjoint representation.
///
/// # Safety
/// `z` must hold `d` doubles; `passed` and `max_sine` must be writable.
#[no_mangle]
pub unsafe extern "C" fn homdyn_expanding_check(
    z: *const f64,
    d: usize,
    passed: *mut bool,
    max_sine: *mut f64,
) -> HomdynStatus {
    guard(|| {
        let con = build_expanding(slice(z, d, "z")?, true)?;
        let report = check_construction(&con)?;
        *out(passed, "passed")? = report.verdict.passed;
        *out(max_sine, "max_sine")? = report.verdict.max_sine;
        Ok(())
    })
}
