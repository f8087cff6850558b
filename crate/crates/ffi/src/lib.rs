//! C interface to `upbforge`.
//!
//! Objects are opaque handles created by `upb_*_new`-style functions and
//! released with the matching `upb_*_free`. Every fallible function returns a
//! [`UpbStatus`]; on failure, [`upb_last_error`] describes the error for the
//! calling thread. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use upbforge::analysis::quadruple::{closed_form_determinant, find_b2_roots};
use upbforge::analysis::witness::{find_witness, WitnessOutcome};
use upbforge::geometric::{steepest_descent, to_ebits, DescentConfig, LineSearch, Parameterization, ProductObjective};
use upbforge::partition::Partition;
use upbforge::ppt::{builtin_upb, build_state, diagnostics, is_ppt, DensityOperator};
use upbforge::product::ConcreteProductSet;
use upbforge::uom::{builtin_a, builtin_a_tilde, AngleAssignment};
use upbforge::{Error, Tolerances};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotOrthonormal = 4,
    InfiniteMeasure = 5,
    BudgetExhausted = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// Orthonormal product vectors over a partition.
pub struct UpbProductSet(ConcreteProductSet);

/// A density operator on qubits.
pub struct UpbState(DensityOperator);

/// Overlap of a real qubit product vector with the span of a product set.
pub struct UpbObjective {
    obj: ProductObjective,
    dim: usize,
    len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UpbStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::TooManyVectors { .. } => UpbStatus::DimensionMismatch,
        Error::NotOrthonormal(_) => UpbStatus::NotOrthonormal,
        Error::InfiniteMeasure => UpbStatus::InfiniteMeasure,
        Error::BudgetExhausted { .. } => UpbStatus::BudgetExhausted,
        _ => UpbStatus::InvalidArgument,
    }
}

enum Fail {
    Status(UpbStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null() -> Fail {
    Fail::Status(UpbStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UpbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UpbStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            UpbStatus::Internal
        }
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn upb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn upb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The fixed 11-vector, 7-qubit table with explicit amplitudes.
///
/// # Safety
/// `out_set` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upb_product_set_table(out_set: *mut *mut UpbProductSet) -> UpbStatus {
    guard(|| {
        *out(out_set)? = Box::into_raw(Box::new(UpbProductSet(builtin_upb())));
        Ok(())
    })
}

/// A random instantiation of the built-in symbolic matrix (`tilde` selects
/// the row- and column-permuted variant), seeded by `seed`.
///
/// # Safety
/// `out_set` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upb_product_set_generic(seed: u64, tilde: bool, out_set: *mut *mut UpbProductSet) -> UpbStatus {
    guard(|| {
        let u = if tilde { builtin_a_tilde() } else { builtin_a() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = u.instantiate(&AngleAssignment::random(&u, &mut rng))?;
        *out(out_set)? = Box::into_raw(Box::new(UpbProductSet(s)));
        Ok(())
    })
}

/// # Safety
/// `set` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn upb_product_set_free(set: *mut UpbProductSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of vectors and dimension of the full space.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_product_set_shape(set: *const UpbProductSet, len: *mut usize, dim: *mut usize) -> UpbStatus {
    guard(|| {
        let s = &get(set)?.0;
        *out(len)? = s.len();
        *out(dim)? = s.total_dim();
        Ok(())
    })
}

/// Largest `|⟨φᵢ|φⱼ⟩ - δᵢⱼ|` over the set.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_product_set_orthonormality_error(set: *const UpbProductSet, err: *mut f64) -> UpbStatus {
    guard(|| {
        *out(err)? = get(set)?.0.orthonormality_error();
        Ok(())
    })
}

/// Writes vector `i` in the global basis into `re[0..cap]` and `im[0..cap]`;
/// `cap` must be at least the dimension.
///
/// # Safety
/// `re` and `im` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn upb_product_set_global_vector(
    set: *const UpbProductSet,
    i: usize,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> UpbStatus {
    guard(|| {
        let s = &get(set)?.0;
        if i >= s.len() {
            return Err(Fail::Status(UpbStatus::InvalidArgument, format!("vector index {i} out of range")));
        }
        if cap < s.total_dim() {
            return Err(Fail::Status(UpbStatus::BufferTooSmall, format!("need {} entries", s.total_dim())));
        }
        let (re, im) = (slice_mut(re, cap)?, slice_mut(im, cap)?);
        for (k, z) in s.global(i).entries().iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Searches for a product vector orthogonal to every vector of the set after
/// merging systems by `partition` (e.g. `"12|3|4|5|6|7"`). `found` is false
/// when the exhaustive search proves none exists among its candidates.
///
/// # Safety
/// `partition` must be a NUL-terminated string; all pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_find_witness(
    set: *const UpbProductSet,
    partition: *const c_char,
    budget: u64,
    found: *mut bool,
    max_residual: *mut f64,
) -> UpbStatus {
    guard(|| {
        let s = &get(set)?.0;
        if partition.is_null() {
            return Err(null());
        }
        let spec = CStr::from_ptr(partition)
            .to_str()
            .map_err(|_| Fail::Status(UpbStatus::InvalidArgument, "partition is not UTF-8".into()))?;
        let p = Partition::parse(spec, s.partition().n_systems())?;
        match find_witness(s, &p, budget, &Tolerances::default())? {
            WitnessOutcome::Found(w) => {
                *out(found)? = true;
                *out(max_residual)? = w.max_residual();
            }
            WitnessOutcome::Exhausted { .. } => {
                *out(found)? = false;
                *out(max_residual)? = f64::NAN;
            }
        }
        Ok(())
    })
}

/// `(I - Σ|φᵢ⟩⟨φᵢ|)/(d - m)` for an orthonormal set.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_state_new(set: *const UpbProductSet, orth_tol: f64, out_state: *mut *mut UpbState) -> UpbStatus {
    guard(|| {
        let rho = build_state(&get(set)?.0, orth_tol)?;
        *out(out_state)? = Box::into_raw(Box::new(UpbState(rho)));
        Ok(())
    })
}

/// # Safety
/// `state` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn upb_state_free(state: *mut UpbState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Trace and number of eigenvalues above `rank_tol`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_state_diagnostics(
    state: *const UpbState,
    rank_tol: f64,
    trace: *mut f64,
    rank: *mut usize,
) -> UpbStatus {
    guard(|| {
        let rho = &get(state)?.0;
        let d = diagnostics(rho, 0, rank_tol);
        *out(trace)? = d.trace;
        *out(rank)? = d.rank;
        Ok(())
    })
}

/// Smallest eigenvalue of the partial transpose over all bipartitions, and
/// whether it is at least `-psd_tol`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_state_ppt(state: *const UpbState, psd_tol: f64, min_eigenvalue: *mut f64, ppt: *mut bool) -> UpbStatus {
    guard(|| {
        let r = is_ppt(&get(state)?.0, psd_tol)?;
        *out(min_eigenvalue)? = r.min_eigenvalue;
        *out(ppt)? = r.ppt;
        Ok(())
    })
}

/// Closed-form determinant of the four-row submatrix parameterized by five angles.
#[no_mangle]
pub extern "C" fn upb_closed_form_determinant(a1: f64, a2: f64, a3: f64, b1: f64, b2: f64) -> f64 {
    closed_form_determinant(a1, a2, a3, b1, b2)
}

/// Roots in `b2 ∈ [0, 2π)` of the determinant. Writes at most `cap` roots
/// and the total count.
///
/// # Safety
/// `roots` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn upb_determinant_roots(a1: f64, a2: f64, a3: f64, b1: f64, roots: *mut f64, cap: usize, count: *mut usize) -> UpbStatus {
    guard(|| {
        let r = find_b2_roots(a1, a2, a3, b1);
        *out(count)? = r.len();
        if r.len() > cap {
            return Err(Fail::Status(UpbStatus::BufferTooSmall, format!("need {} entries", r.len())));
        }
        if !r.is_empty() {
            slice_mut(roots, cap)?[..r.len()].copy_from_slice(&r);
        }
        Ok(())
    })
}

/// Objective `x ↦ Σᵢ |⟨δ(x)|φᵢ⟩|²` with `δ(x) = ⊗ₛ (sin xₛ, cos xₛ)`.
/// The set must consist of qubit factors.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_objective_new(set: *const UpbProductSet, out_obj: *mut *mut UpbObjective) -> UpbStatus {
    guard(|| {
        let s = &get(set)?.0;
        let obj = ProductObjective::from_set(s, Parameterization::Real)?;
        *out(out_obj)? = Box::into_raw(Box::new(UpbObjective { obj, dim: s.total_dim(), len: s.len() }));
        Ok(())
    })
}

/// # Safety
/// `obj` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn upb_objective_free(obj: *mut UpbObjective) {
    if !obj.is_null() {
        drop(Box::from_raw(obj));
    }
}

/// # Safety
/// `x` must hold `n` values; all pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_objective_value(obj: *const UpbObjective, x: *const f64, n: usize, value: *mut f64) -> UpbStatus {
    guard(|| {
        *out(value)? = get(obj)?.obj.value(slice(x, n)?)?;
        Ok(())
    })
}

/// Exact gradient of the objective.
///
/// # Safety
/// `x` and `grad` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn upb_objective_gradient(obj: *const UpbObjective, x: *const f64, n: usize, grad: *mut f64) -> UpbStatus {
    guard(|| {
        let g = get(obj)?.obj.gradient(slice(x, n)?)?;
        slice_mut(grad, n)?.copy_from_slice(&g);
        Ok(())
    })
}

/// Steepest descent from `x` (overwritten with the final point). `backtracking`
/// selects the monotone Armijo rule instead of the default quadratic model.
///
/// # Safety
/// `x` must hold `n` values; all pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_steepest_descent(
    obj: *const UpbObjective,
    x: *mut f64,
    n: usize,
    step0: f64,
    gtol: f64,
    max_iter: usize,
    backtracking: bool,
    q_star: *mut f64,
    g_ebits: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> UpbStatus {
    guard(|| {
        let o = get(obj)?;
        let xs = slice_mut(x, n)?;
        let cfg = DescentConfig {
            step0,
            gtol,
            max_iter,
            line_search: if backtracking { LineSearch::Backtracking } else { LineSearch::QuadraticModel },
        };
        let run = steepest_descent(&o.obj, xs, &cfg, o.dim, o.len)?;
        xs.copy_from_slice(&run.trace.last().expect("trace holds the start").x);
        *out(q_star)? = run.result.q_star;
        *out(g_ebits)? = run.result.g_ebits;
        *out(iterations)? = run.result.iterations.unwrap_or(0);
        *out(converged)? = run.converged;
        Ok(())
    })
}

/// `-log₂((1 - q)/(d - m))`.
///
/// # Safety
/// `ebits` must be valid.
#[no_mangle]
pub unsafe extern "C" fn upb_to_ebits(q: f64, d: usize, m: usize, ebits: *mut f64) -> UpbStatus {
    guard(|| {
        *out(ebits)? = to_ebits(q, d, m)?;
        Ok(())
    })
}
