//! C ABI for `perclab`.
//!
//! Objects are opaque handles returned through out-parameters and
//! released with the matching `pl_*_free`. Every fallible function returns a
//! [`PlStatus`]; on failure, `pl_last_error()` describes the error for the
//! calling thread. Strings returned through `char **` out-parameters are
//! owned by the caller and released with [`pl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use perclab::exact::format_rational;
use perclab::graphs::{ball, geodesic_targets, FamilyKind, GraphFamily, Window};
use perclab::percolation::{self, Config};
use perclab::{thresholds, walks, Error};

/// Status codes. `PL_OK` is zero; all other values are failures.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStatus {
    PlOk = 0,
    PlErrParameter = 1,
    PlErrAddress = 2,
    PlErrResource = 3,
    PlErrUnsupported = 4,
    PlErrPrecondition = 5,
    PlErrNumeric = 6,
    PlErrConstruction = 7,
    PlErrDegenerateSlab = 8,
    PlErrIo = 9,
    /// A required pointer argument was null.
    PlErrNull = 10,
    /// A string argument was not valid UTF-8.
    PlErrUtf8 = 11,
    /// The library panicked; this is a bug.
    PlErrPanic = 12,
}

/// A graph family.
pub struct PlFamily(GraphFamily);

/// A finite window (ball) of a family.
pub struct PlWindow(Arc<Window>);

/// A bond percolation configuration on a window.
pub struct PlConfig(Config);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> PlStatus {
    match e {
        Error::Parameter(_) => PlStatus::PlErrParameter,
        Error::Address(_) => PlStatus::PlErrAddress,
        Error::Resource(_) => PlStatus::PlErrResource,
        Error::Unsupported(_) => PlStatus::PlErrUnsupported,
        Error::Precondition(_) => PlStatus::PlErrPrecondition,
        Error::Numeric { .. } => PlStatus::PlErrNumeric,
        Error::Construction(_) => PlStatus::PlErrConstruction,
        Error::DegenerateSlab => PlStatus::PlErrDegenerateSlab,
        Error::Io(_) => PlStatus::PlErrIo,
    }
}

struct Fail(PlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PlStatus::PlErrNull, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PlStatus::PlOk
        }
        Ok(Err(Fail(status, msg))) => {
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
            PlStatus::PlErrPanic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PlStatus::PlErrUtf8, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap().into_raw()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a family from its JSON description, e.g.
/// `{"name": "oriented_tree", "params": {"n1": 1, "n2": 2}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_family` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_family_from_json(
    json: *const c_char,
    out_family: *mut *mut PlFamily,
) -> PlStatus {
    guard(|| {
        let text = string_arg(json, "json")?;
        let slot = out(out_family, "out_family")?;
        let kind: FamilyKind = serde_json::from_str(text).map_err(|e| {
            Fail(
                PlStatus::PlErrParameter,
                format!("bad family description: {e}"),
            )
        })?;
        *slot = Box::into_raw(Box::new(PlFamily(GraphFamily::new(kind)?)));
        Ok(())
    })
}

/// Creates the oriented tree `T_{n1+n2+1}` with its `(1, n1, n2)` orientation.
///
/// # Safety
/// `out_family` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_family_oriented_tree(
    n1: u32,
    n2: u32,
    out_family: *mut *mut PlFamily,
) -> PlStatus {
    guard(|| {
        let slot = out(out_family, "out_family")?;
        let g = GraphFamily::new(FamilyKind::OrientedTree { n1, n2 })?;
        *slot = Box::into_raw(Box::new(PlFamily(g)));
        Ok(())
    })
}

/// # Safety
/// `family` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_family_free(family: *mut PlFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_family_orbit_count(
    family: *const PlFamily,
    out_count: *mut usize,
) -> PlStatus {
    guard(|| {
        *out(out_count, "out_count")? = borrow(family, "family")?.0.orbit_count;
        Ok(())
    })
}

/// Modular base as an exact `"num/den"` string (free with `pl_string_free`).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_family_modular_base(
    family: *const PlFamily,
    out_base: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let g = &borrow(family, "family")?.0;
        *out(out_base, "out_base")? = into_c_string(format_rational(&g.modular_base));
        Ok(())
    })
}

/// Ball of the given radius around the family's origin.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_window_ball(
    family: *const PlFamily,
    radius: u32,
    out_window: *mut *mut PlWindow,
) -> PlStatus {
    guard(|| {
        let g = &borrow(family, "family")?.0;
        let slot = out(out_window, "out_window")?;
        let w = ball(g, &g.origin(), radius)?;
        *slot = Box::into_raw(Box::new(PlWindow(Arc::new(w))));
        Ok(())
    })
}

/// # Safety
/// `window` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_window_free(window: *mut PlWindow) {
    if !window.is_null() {
        drop(Box::from_raw(window));
    }
}

/// Vertex and edge counts of a window.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_window_size(
    window: *const PlWindow,
    out_vertices: *mut usize,
    out_edges: *mut usize,
) -> PlStatus {
    guard(|| {
        let w = &borrow(window, "window")?.0;
        *out(out_vertices, "out_vertices")? = w.len();
        *out(out_edges, "out_edges")? = w.edges.len();
        Ok(())
    })
}

/// Versioned JSON serialization of a window (free with `pl_string_free`).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_window_to_json(
    window: *const PlWindow,
    out_json: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let w = &borrow(window, "window")?.0;
        *out(out_json, "out_json")? = into_c_string(w.to_json()?);
        Ok(())
    })
}

/// Samples trial `trial` of the configuration keyed by `seed` at density `p`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_config_sample(
    window: *const PlWindow,
    p: f64,
    seed: u64,
    trial: u64,
    out_config: *mut *mut PlConfig,
) -> PlStatus {
    guard(|| {
        let w = borrow(window, "window")?.0.clone();
        let slot = out(out_config, "out_config")?;
        let cfg = percolation::sample_config_trial(w, p, seed, trial)?;
        *slot = Box::into_raw(Box::new(PlConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_config_free(config: *mut PlConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of open edges.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_config_open_count(
    config: *const PlConfig,
    out_count: *mut usize,
) -> PlStatus {
    guard(|| {
        *out(out_count, "out_count")? = borrow(config, "config")?.0.open_count();
        Ok(())
    })
}

/// Size of the open cluster of window vertex `vertex` (0 is the center).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_config_cluster_size(
    config: *const PlConfig,
    vertex: usize,
    out_size: *mut usize,
) -> PlStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        if vertex >= cfg.window.len() {
            return Err(Fail(
                PlStatus::PlErrAddress,
                format!("vertex {vertex} is outside the window"),
            ));
        }
        *out(out_size, "out_size")? = cfg.cluster_of(vertex).len();
        Ok(())
    })
}

/// Effective conductance from window vertex `vertex` to the sphere of radius
/// `radius` around it, through open edges with unit conductances.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_config_effective_conductance(
    config: *const PlConfig,
    vertex: usize,
    radius: u32,
    out_conductance: *mut f64,
) -> PlStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        let res = walks::effective_conductance(cfg, vertex, radius, walks::EdgeWeight::Unit)?;
        *out(out_conductance, "out_conductance")? = res.c_eff;
        Ok(())
    })
}

/// Monte Carlo estimate of the probability that the origin connects to the
/// vertex at `distance` along the canonical geodesic.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_connectivity_estimate(
    family: *const PlFamily,
    p: f64,
    distance: u32,
    trials: u64,
    seed: u64,
    out_p_hat: *mut f64,
    out_se: *mut f64,
) -> PlStatus {
    guard(|| {
        let g = &borrow(family, "family")?.0;
        let o = g.origin();
        let y = geodesic_targets(g, &o, distance)?
            .pop()
            .ok_or_else(|| Fail(PlStatus::PlErrParameter, "distance must be positive".into()))?;
        let est = percolation::connectivity_estimate(g, p, &o, &y, trials, seed, 0)?;
        *out(out_p_hat, "out_p_hat")? = est.p_hat;
        *out(out_se, "out_se")? = est.se;
        Ok(())
    })
}

/// Closed-form `p_h` of the oriented tree with parameters `(n1, n2)`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_ph_closed_form(n1: u32, n2: u32, out_value: *mut f64) -> PlStatus {
    guard(|| {
        *out(out_value, "out_value")? = thresholds::ph_closed_form(n1, n2)?.value;
        Ok(())
    })
}

/// Lower bound on `p_u` of `T_{b+1} × Z`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_pu_lower_bound(b: u32, out_value: *mut f64) -> PlStatus {
    guard(|| {
        *out(out_value, "out_value")? = thresholds::pu_lower_bound(b)?;
        Ok(())
    })
}

/// Perron root `λ*` of the slab with `n + 1` levels of the `(n1, n2)`
/// oriented tree. Fails with `PL_ERR_DEGENERATE_SLAB` for `n = 0`.
///
/// # Safety
/// `out_lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_slab_spectral_radius(
    n1: u32,
    n2: u32,
    n: u32,
    out_lambda: *mut f64,
) -> PlStatus {
    guard(|| {
        let slot = out(out_lambda, "out_lambda")?;
        let sg = thresholds::slab_state_graph(n1, n2, n)?;
        *slot = thresholds::slab_spectral_radius(
            &sg,
            thresholds::DEFAULT_TOLERANCE,
            thresholds::DEFAULT_MAX_ITERATIONS,
        )?
        .lambda_star;
        Ok(())
    })
}
