//! C ABI over `haar-bloom`.
//!
//! Grids and weights cross the boundary as opaque handles. Every fallible
//! call returns an [`HbStatus`]; on failure the message is available from
//! [`hb_last_error_message`] on the same thread until the next failing call.
//! Grid values are row-major with `values[x * 2^N + y]`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use haar_bloom::dyadic::{haar_forward, haar_inverse, HaarCoefficients2D, HaarType};
use haar_bloom::norms::{bmo_prod_two_weight, little_bmo, BmoStrategy};
use haar_bloom::operators::{Lambda, OperatorMatrix, Paraproduct};
use haar_bloom::opnorm::{opnorm, sup_commutator_norm, LpSearch, NormKind, SignMode};
use haar_bloom::weights::{ap_characteristic, random_ap_weight, Weight, WeightRole};
use haar_bloom::{Error, GridFunction2D};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DepthMismatch = 3,
    NonFinite = 4,
    NonPositiveWeight = 5,
    TooLarge = 6,
    Panic = 7,
}

/// Operator selector for [`hb_paraproduct_norm`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbParaproduct {
    Pi11 = 0,
    Pi00 = 1,
    Pi10 = 2,
    Pi01 = 3,
    /// Sum of the four.
    Lambda = 4,
}

/// Opaque grid function handle.
pub struct HbGrid(GridFunction2D);

/// Opaque weight handle.
pub struct HbWeight(Weight);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HbStatus {
    match e {
        Error::DepthMismatch(..) => HbStatus::DepthMismatch,
        Error::NonFinite { .. } => HbStatus::NonFinite,
        Error::NonPositiveWeight { .. } => HbStatus::NonPositiveWeight,
        Error::DepthTooLarge { .. } => HbStatus::TooLarge,
        _ => HbStatus::InvalidArgument,
    }
}

struct Fail(HbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HbStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(HbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn read_values<'a>(values: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if values.is_null() {
        return Err(null("values"));
    }
    Ok(std::slice::from_raw_parts(values, len))
}

unsafe fn copy_to(dst: *mut f64, len: usize, src: &[f64]) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(null("out"));
    }
    if len != src.len() {
        return Err(Fail(
            HbStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    Ok(())
}

/// Message of the last failing call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `values` must point to `len` readable doubles and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_new(
    depth: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut HbGrid,
) -> HbStatus {
    guard(|| {
        let v = read_values(values, len)?;
        let g = GridFunction2D::new(depth, v.to_vec())?;
        write_out(out, Box::into_raw(Box::new(HbGrid(g))), "out")
    })
}

/// # Safety
/// `grid` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_free(grid: *mut HbGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Depth of the grid, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_depth(grid: *const HbGrid) -> u32 {
    grid.as_ref().map_or(0, |g| g.0.depth())
}

/// # Safety
/// `grid` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_values(
    grid: *const HbGrid,
    out: *mut f64,
    len: usize,
) -> HbStatus {
    guard(|| copy_to(out, len, deref(grid, "grid")?.0.values()))
}

/// Orthonormal tensor Haar coefficients in slot layout (`(00)` block at `kx, ky ≥ 1`).
///
/// # Safety
/// `grid` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hb_haar_forward(
    grid: *const HbGrid,
    out: *mut f64,
    len: usize,
) -> HbStatus {
    guard(|| copy_to(out, len, haar_forward(&deref(grid, "grid")?.0).as_slice()))
}

/// # Safety
/// `coeffs` must point to `len` readable doubles and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hb_haar_inverse(
    depth: u32,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut HbGrid,
) -> HbStatus {
    guard(|| {
        let v = read_values(coeffs, len)?;
        // same depth and length rules as a grid
        GridFunction2D::new(depth, v.to_vec())?;
        let mut c = HaarCoefficients2D::zeros(depth);
        c.as_mut_slice().copy_from_slice(v);
        write_out(
            out,
            Box::into_raw(Box::new(HbGrid(haar_inverse(&c)))),
            "out",
        )
    })
}

/// # Safety
/// `values` must point to `len` readable doubles and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hb_weight_new(
    depth: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut HbWeight,
) -> HbStatus {
    guard(|| {
        let v = read_values(values, len)?;
        let w = Weight::new(GridFunction2D::new(depth, v.to_vec())?, WeightRole::Generic)?;
        write_out(out, Box::into_raw(Box::new(HbWeight(w))), "out")
    })
}

/// Seeded multiplicative cascade weight of strength `delta` in `[0, 1)`.
///
/// # Safety
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hb_weight_random_ap(
    depth: u32,
    p: f64,
    delta: f64,
    seed: u64,
    out: *mut *mut HbWeight,
) -> HbStatus {
    guard(|| {
        let w = random_ap_weight(depth, p, delta, seed)?.weight;
        write_out(out, Box::into_raw(Box::new(HbWeight(w))), "out")
    })
}

/// # Safety
/// `weight` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hb_weight_free(weight: *mut HbWeight) {
    if !weight.is_null() {
        drop(Box::from_raw(weight));
    }
}

/// # Safety
/// `weight` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hb_weight_values(
    weight: *const HbWeight,
    out: *mut f64,
    len: usize,
) -> HbStatus {
    guard(|| copy_to(out, len, deref(weight, "weight")?.0.values()))
}

/// `[w]_{A_p}` over all dyadic rectangles.
///
/// # Safety
/// `weight` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_ap_characteristic(
    weight: *const HbWeight,
    p: f64,
    out: *mut f64,
) -> HbStatus {
    guard(|| {
        let r = ap_characteristic(&deref(weight, "weight")?.0, p)?;
        write_out(out, r.characteristic, "out")
    })
}

fn strategy(heuristic: bool, restarts: usize, seed: u64) -> BmoStrategy {
    if heuristic {
        BmoStrategy::Heuristic { restarts, seed }
    } else {
        BmoStrategy::Exact
    }
}

/// Two-weight product BMO norm. With `heuristic == false` every mask is enumerated (depth ≤ 2).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_bmo_two_weight(
    b: *const HbGrid,
    mu: *const HbWeight,
    lambda: *const HbWeight,
    p: f64,
    heuristic: bool,
    restarts: usize,
    seed: u64,
    out: *mut f64,
) -> HbStatus {
    guard(|| {
        let r = bmo_prod_two_weight(
            &deref(b, "b")?.0,
            &deref(mu, "mu")?.0,
            &deref(lambda, "lambda")?.0,
            p,
            strategy(heuristic, restarts, seed),
        )?;
        write_out(out, r.value, "out")
    })
}

/// Little bmo norm; `rect_out` (nullable) receives `[x level, x index, y level, y index]`.
///
/// # Safety
/// Handles must be live, `out` writable, and `rect_out` null or 4 writable `u32`s.
#[no_mangle]
pub unsafe extern "C" fn hb_little_bmo(
    b: *const HbGrid,
    mu: *const HbWeight,
    lambda: *const HbWeight,
    p: f64,
    out: *mut f64,
    rect_out: *mut u32,
) -> HbStatus {
    guard(|| {
        let r = little_bmo(
            &deref(b, "b")?.0,
            &deref(mu, "mu")?.0,
            &deref(lambda, "lambda")?.0,
            p,
        )?;
        if let (false, haar_bloom::norms::BmoWitness::Rect(rect)) = (rect_out.is_null(), &r.witness)
        {
            let parts = [rect.ix.level, rect.ix.index, rect.iy.level, rect.iy.index];
            std::ptr::copy_nonoverlapping(parts.as_ptr(), rect_out, 4);
        }
        write_out(out, r.value, "out")
    })
}

/// `‖Π_b‖_{L^p(μ)→L^p(λ)}`: exact at `p = 2` (`*exact = true`), a lower bound otherwise.
///
/// # Safety
/// Handles must be live and `out`, `exact` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_paraproduct_norm(
    b: *const HbGrid,
    mu: *const HbWeight,
    lambda: *const HbWeight,
    p: f64,
    kind: HbParaproduct,
    restarts: usize,
    seed: u64,
    out: *mut f64,
    exact: *mut bool,
) -> HbStatus {
    guard(|| {
        let b = &deref(b, "b")?.0;
        let m = match kind {
            HbParaproduct::Lambda => OperatorMatrix::materialize(&Lambda::new(b))?,
            k => {
                let t = match k {
                    HbParaproduct::Pi11 => HaarType::T11,
                    HbParaproduct::Pi00 => HaarType::T00,
                    HbParaproduct::Pi10 => HaarType::T10,
                    _ => HaarType::T01,
                };
                OperatorMatrix::materialize(&Paraproduct::new(t, b))?
            }
        };
        let search = LpSearch {
            restarts,
            seed,
            warm_starts: Vec::new(),
        };
        let r = opnorm(
            &m,
            &deref(mu, "mu")?.0,
            &deref(lambda, "lambda")?.0,
            p,
            &search,
        )?;
        write_out(exact, r.kind == NormKind::Exact, "exact")?;
        write_out(out, r.value, "out")
    })
}

/// `sup_{σ1,σ2} ‖[T_{σ1}^1,[T_{σ2}^2,b]]‖`; `samples == 0` enumerates every sign pair (depth ≤ 2).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_sup_commutator_norm(
    b: *const HbGrid,
    mu: *const HbWeight,
    lambda: *const HbWeight,
    p: f64,
    samples: usize,
    restarts: usize,
    seed: u64,
    out: *mut f64,
) -> HbStatus {
    guard(|| {
        let mode = if samples == 0 {
            SignMode::Exhaustive
        } else {
            SignMode::Sampled { samples, seed }
        };
        let search = LpSearch {
            restarts,
            seed,
            warm_starts: Vec::new(),
        };
        let r = sup_commutator_norm(
            &deref(b, "b")?.0,
            &deref(mu, "mu")?.0,
            &deref(lambda, "lambda")?.0,
            p,
            mode,
            &search,
        )?;
        write_out(out, r.value, "out")
    })
}
