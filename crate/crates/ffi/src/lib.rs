//! C interface to `robustsell`.
//!
//! Every fallible call returns an [`RsStatus`]; on failure the message is kept
//! per thread and can be read with [`rs_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Strings returned by the
//! library are released with [`rs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use robustsell::closed_form::{fixed_price_guarantee_formula, robust_strategy, thresholds, Region};
use robustsell::model::{validate_params, Side};
use robustsell::search::demand_and_revenue;
use robustsell::{Error, PiecewiseDistribution, PolicyKind, SellingStrategy};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    InvalidDistribution = 3,
    Numerical = 4,
    OutOfBounds = 5,
    BadString = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsPolicyKind {
    Uniform = 0,
    Full = 1,
    Mixture = 2,
    Binary = 3,
    Degenerate = 4,
    WBarFamily = 5,
    HhuFamily = 6,
    Custom = 7,
}

impl From<PolicyKind> for RsPolicyKind {
    fn from(k: PolicyKind) -> Self {
        match k {
            PolicyKind::Uniform => RsPolicyKind::Uniform,
            PolicyKind::Full => RsPolicyKind::Full,
            PolicyKind::Mixture => RsPolicyKind::Mixture,
            PolicyKind::Binary => RsPolicyKind::Binary,
            PolicyKind::Degenerate => RsPolicyKind::Degenerate,
            PolicyKind::WBarFamily => RsPolicyKind::WBarFamily,
            PolicyKind::HhuFamily => RsPolicyKind::HhuFamily,
            PolicyKind::Custom => RsPolicyKind::Custom,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsRegion {
    FullInfoAll = 0,
    UniformAll = 1,
    CutoffFull = 2,
    CutoffMixture = 3,
}

/// Region boundaries and cutoffs. Absent values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RsThresholds {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    pub mu_hat: f64,
    pub mu_check: f64,
    pub s_hat: f64,
    pub region: RsRegion,
    pub cutoff_at_boundary: bool,
}

/// Robust strategy with its worst-case revenue.
pub struct RsStrategy {
    strategy: SellingStrategy,
    guarantee: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RsStatus {
    match e {
        Error::OutOfRange { .. } => RsStatus::InvalidParams,
        Error::InvalidDistribution(_) | Error::MeanMismatch(..) => RsStatus::InvalidDistribution,
        _ => RsStatus::Numerical,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (RsStatus, String)>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RsStatus::Ok
        }
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            RsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (RsStatus, String) {
    (RsStatus::NullPointer, format!("{name} is null"))
}

unsafe fn json_arg(p: *const c_char, name: &str) -> Result<PiecewiseDistribution, (RsStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    let text = CStr::from_ptr(p).to_str().map_err(|_| (RsStatus::BadString, format!("{name} is not UTF-8")))?;
    PiecewiseDistribution::from_json(text).map_err(lib)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves for the robust strategy. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_solve(mu: f64, xi: f64, s: f64, out: *mut *mut RsStrategy) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let params = validate_params(mu, xi, s).map_err(lib)?;
        let (strategy, report) = robust_strategy(&params).map_err(lib)?;
        *out = Box::into_raw(Box::new(RsStrategy { strategy, guarantee: report.guarantee }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`rs_strategy_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_free(h: *mut RsStrategy) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Price of the strategy; NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_price(h: *const RsStrategy) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.strategy.price)
}

/// Worst-case revenue; NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_guarantee(h: *const RsStrategy) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.guarantee)
}

/// # Safety
/// `h` must be null or a live handle; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_kind(h: *const RsStrategy, out: *mut RsPolicyKind) -> RsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = h.strategy.kind.into();
        Ok(())
    })
}

/// Number of atoms in the posterior; 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_atom_count(h: *const RsStrategy) -> usize {
    h.as_ref().map_or(0, |h| h.strategy.posterior.atoms().len())
}

/// # Safety
/// `h` must be null or a live handle; `loc` and `mass` null or valid.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_atom(h: *const RsStrategy, i: usize, loc: *mut f64, mass: *mut f64) -> RsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let (l, q) = *h
            .strategy
            .posterior
            .atoms()
            .get(i)
            .ok_or_else(|| (RsStatus::OutOfBounds, format!("atom index {i} out of bounds")))?;
        *loc.as_mut().ok_or_else(|| null("loc"))? = l;
        *mass.as_mut().ok_or_else(|| null("mass"))? = q;
        Ok(())
    })
}

/// Number of uniform segments in the posterior; 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_segment_count(h: *const RsStrategy) -> usize {
    h.as_ref().map_or(0, |h| h.strategy.posterior.segments().len())
}

/// Segment `i` carries `mass` spread uniformly on `[lo, hi]`.
///
/// # Safety
/// `h` must be null or a live handle; output pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_segment(
    h: *const RsStrategy,
    i: usize,
    lo: *mut f64,
    hi: *mut f64,
    mass: *mut f64,
) -> RsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let (a, b, q) = *h
            .strategy
            .posterior
            .segments()
            .get(i)
            .ok_or_else(|| (RsStatus::OutOfBounds, format!("segment index {i} out of bounds")))?;
        *lo.as_mut().ok_or_else(|| null("lo"))? = a;
        *hi.as_mut().ok_or_else(|| null("hi"))? = b;
        *mass.as_mut().ok_or_else(|| null("mass"))? = q;
        Ok(())
    })
}

/// Right-continuous CDF of the posterior at `w`; NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_cdf(h: *const RsStrategy, w: f64) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.strategy.posterior.cdf(w, Side::Right))
}

/// Posterior as JSON; free with [`rs_string_free`]. Null on error.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_strategy_posterior_json(h: *const RsStrategy) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        out = CString::new(h.strategy.posterior.to_json()).unwrap_or_default().into_raw();
        Ok(())
    });
    out
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Worst-case revenue of price `p` with the best information policy for it.
///
/// # Safety
/// `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rs_fixed_price_guarantee(mu: f64, xi: f64, s: f64, p: f64, out: *mut f64) -> RsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = validate_params(mu, xi, s).map_err(lib)?;
        if !(0.0..=1.0).contains(&p) {
            return Err((RsStatus::InvalidParams, format!("price out of range ({p}): 0 <= p <= 1 violated")));
        }
        *out = fixed_price_guarantee_formula(p, &params);
        Ok(())
    })
}

/// # Safety
/// `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rs_thresholds(mu: f64, xi: f64, s: f64, out: *mut RsThresholds) -> RsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = validate_params(mu, xi, s).map_err(lib)?;
        let t = thresholds(&params);
        *out = RsThresholds {
            b1: t.b1,
            b2: t.b2,
            b3: t.b3,
            mu_low: t.mu_low,
            mu_high: t.mu_high,
            mu_hat: t.mu_hat.unwrap_or(f64::NAN),
            mu_check: t.mu_check.unwrap_or(f64::NAN),
            s_hat: t.s_hat.unwrap_or(f64::NAN),
            region: match t.region {
                Region::FullInfoAll => RsRegion::FullInfoAll,
                Region::UniformAll => RsRegion::UniformAll,
                Region::CutoffFull => RsRegion::CutoffFull,
                Region::CutoffMixture => RsRegion::CutoffMixture,
            },
            cutoff_at_boundary: t.cutoff_at_boundary,
        };
        Ok(())
    })
}

/// Demand and revenue at price `p` for posterior `h_json` and outside option
/// `g_json` (JSON with `atoms` and `segments`).
///
/// # Safety
/// String arguments must be null or NUL-terminated; outputs null or valid.
#[no_mangle]
pub unsafe extern "C" fn rs_demand(
    p: f64,
    h_json: *const c_char,
    g_json: *const c_char,
    s: f64,
    demand: *mut f64,
    revenue: *mut f64,
) -> RsStatus {
    guard(|| {
        let h = json_arg(h_json, "h_json")?;
        let g = json_arg(g_json, "g_json")?;
        let (d, r) = demand_and_revenue(p, &h, &g, s).map_err(lib)?;
        *demand.as_mut().ok_or_else(|| null("demand"))? = d;
        *revenue.as_mut().ok_or_else(|| null("revenue"))? = r;
        Ok(())
    })
}
