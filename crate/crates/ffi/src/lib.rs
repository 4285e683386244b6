//! C ABI over the `specsep` solver.
//!
//! Models and gap lists are opaque handles created and released by this
//! library. Every fallible function returns a [`SpecsepStatus`] code; the
//! message for the most recent failure on the calling thread is available
//! from [`specsep_last_error_message`]. Panics are caught at the boundary
//! and reported as `SPECSEP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use specsep::separation::{predict_counts, DEFAULT_SAMPLES};
use specsep::stieltjes::{boundary_value, solve_at};
use specsep::support::{density, find_gaps};
use specsep::{Convention, Error, GapSearch, JointSpectrum, ModelConfig, SolveSettings, SpectralGap, SpectrumAtom};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecsepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    Pole = 4,
    Panic = 5,
}

/// Eigenvalues above the gap for pairs with `h < -1`.
pub const SPECSEP_CONVENTION_DERIVATION: i32 = 0;
/// Eigenvalues below the gap for pairs with `h < -1`.
pub const SPECSEP_CONVENTION_THEOREM: i32 = 1;

/// Opaque model handle.
pub struct SpecsepModel {
    cfg: ModelConfig,
    settings: SolveSettings,
    search: GapSearch,
}

/// Opaque list of gaps returned by [`specsep_find_gaps`].
pub struct SpecsepGapList {
    gaps: Vec<SpectralGap>,
}

/// One gap `(a, b)`. An unbounded gap has `b = +inf`; a gap reaching down to
/// zero from the `g -> -inf` end has `g_a = -inf`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecsepGap {
    pub a: f64,
    pub b: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub y: f64,
}

impl From<SpectralGap> for SpecsepGap {
    fn from(g: SpectralGap) -> Self {
        Self { a: g.a, b: g.b, g_a: g.g_a, g_b: g.g_b, y: g.y }
    }
}

impl From<SpecsepGap> for SpectralGap {
    fn from(g: SpecsepGap) -> Self {
        Self { a: g.a, b: g.b, g_a: g.g_a, g_b: g.g_b, y: g.y }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpecsepStatus {
    match e {
        Error::Pole { .. } => SpecsepStatus::Pole,
        Error::InvalidSpectrum(_) | Error::InvalidArgument(_) | Error::DimensionMismatch(_) => SpecsepStatus::InvalidArgument,
        _ => SpecsepStatus::SolverFailure,
    }
}

fn fail(status: SpecsepStatus, msg: impl Into<String>) -> SpecsepStatus {
    set_error(msg.into());
    status
}

fn guard<F: FnOnce() -> SpecsepStatus>(f: F) -> SpecsepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SpecsepStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! try_lib {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(status_of(&err), err.to_string()),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SpecsepStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

/// Message for the last failure on this thread, or NULL if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn specsep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a model from `n_atoms` atoms `(u[k], t[k], weight[k])` and aspect
/// ratio `y` in `(0, 1]`. Default solver settings are used.
///
/// # Safety
/// `u`, `t` and `weight` must point to `n_atoms` readable doubles and `out`
/// to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn specsep_model_new(
    u: *const f64,
    t: *const f64,
    weight: *const f64,
    n_atoms: usize,
    y: f64,
    out: *mut *mut SpecsepModel,
) -> SpecsepStatus {
    guard(|| {
        non_null!(u, t, weight, out);
        *out = ptr::null_mut();
        if n_atoms == 0 {
            return fail(SpecsepStatus::InvalidArgument, "n_atoms = 0");
        }
        let (u, t, w) = (
            std::slice::from_raw_parts(u, n_atoms),
            std::slice::from_raw_parts(t, n_atoms),
            std::slice::from_raw_parts(weight, n_atoms),
        );
        let atoms = (0..n_atoms).map(|k| SpectrumAtom::new(u[k], t[k], w[k])).collect();
        let spectrum = try_lib!(JointSpectrum::new(atoms));
        let cfg = try_lib!(ModelConfig::new(spectrum, y));
        *out = Box::into_raw(Box::new(SpecsepModel { cfg, settings: SolveSettings::default(), search: GapSearch::default() }));
        SpecsepStatus::Ok
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`specsep_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn specsep_model_free(model: *mut SpecsepModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Replaces the solver settings.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn specsep_model_set_solver(
    model: *mut SpecsepModel,
    tol: f64,
    max_iter: usize,
    damping: f64,
    v_start: f64,
    v_min: f64,
) -> SpecsepStatus {
    guard(|| {
        non_null!(model);
        let settings = SolveSettings { tol, max_iter, damping, v_start, v_min };
        try_lib!(settings.validate());
        (*model).settings = settings;
        SpecsepStatus::Ok
    })
}

/// Companion pair at `z = re + i im` (`im > 0`), written as
/// `{Re s, Im s, Re g, Im g}`.
///
/// # Safety
/// `model` must be a live handle and `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn specsep_solve_at(model: *const SpecsepModel, re: f64, im: f64, out: *mut f64) -> SpecsepStatus {
    guard(|| {
        non_null!(model, out);
        let m = &*model;
        let pair = try_lib!(solve_at(Complex64::new(re, im), &m.cfg, &m.settings));
        write_pair(out, pair.s_under, pair.g_under);
        SpecsepStatus::Ok
    })
}

/// Limit of the companion pair at the real point `x != 0`, written as
/// `{Re s, Im s, Re g, Im g}`.
///
/// # Safety
/// `model` must be a live handle and `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn specsep_boundary_value(model: *const SpecsepModel, x: f64, out: *mut f64) -> SpecsepStatus {
    guard(|| {
        non_null!(model, out);
        let m = &*model;
        let pair = try_lib!(boundary_value(x, &m.cfg, &m.settings));
        write_pair(out, pair.s_under, pair.g_under);
        SpecsepStatus::Ok
    })
}

unsafe fn write_pair(out: *mut f64, s: Complex64, g: Complex64) {
    let out = std::slice::from_raw_parts_mut(out, 4);
    out.copy_from_slice(&[s.re, s.im, g.re, g.im]);
}

/// Density of the limiting distribution at `n` points. Points where the
/// solve failed are set to NaN; the call still returns OK.
///
/// # Safety
/// `xs` must point to `n` readable doubles and `out_f` to `n` writable ones.
#[no_mangle]
pub unsafe extern "C" fn specsep_density(model: *const SpecsepModel, xs: *const f64, n: usize, out_f: *mut f64) -> SpecsepStatus {
    guard(|| {
        non_null!(model, xs, out_f);
        let m = &*model;
        let grid = std::slice::from_raw_parts(xs, n);
        let curve = try_lib!(density(&m.cfg, grid, &m.settings));
        std::slice::from_raw_parts_mut(out_f, n).copy_from_slice(&curve.f);
        SpecsepStatus::Ok
    })
}

/// Sweeps for the gaps of the support.
///
/// # Safety
/// `model` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn specsep_find_gaps(model: *const SpecsepModel, out: *mut *mut SpecsepGapList) -> SpecsepStatus {
    guard(|| {
        non_null!(model, out);
        *out = ptr::null_mut();
        let m = &*model;
        let gaps = try_lib!(find_gaps(&m.cfg, &m.search, &m.settings));
        *out = Box::into_raw(Box::new(SpecsepGapList { gaps }));
        SpecsepStatus::Ok
    })
}

/// Number of gaps in the list; 0 for NULL.
///
/// # Safety
/// `list` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn specsep_gap_list_len(list: *const SpecsepGapList) -> usize {
    if list.is_null() {
        0
    } else {
        (&*list).gaps.len()
    }
}

/// Copies gap `index` (ascending in `a`) into `out`.
///
/// # Safety
/// `list` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specsep_gap_list_get(list: *const SpecsepGapList, index: usize, out: *mut SpecsepGap) -> SpecsepStatus {
    guard(|| {
        non_null!(list, out);
        match (&*list).gaps.get(index) {
            Some(g) => {
                *out = (*g).into();
                SpecsepStatus::Ok
            }
            None => fail(SpecsepStatus::InvalidArgument, format!("gap index {index} out of range")),
        }
    })
}

/// Releases a gap list. NULL is ignored.
///
/// # Safety
/// `list` must come from [`specsep_find_gaps`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn specsep_gap_list_free(list: *mut SpecsepGapList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// Predicted number of eigenvalues of a `p × p` realization below and above
/// `gap` under `convention` (one of the `SPECSEP_CONVENTION_*` values).
///
/// # Safety
/// `model` must be a live handle; `gap`, `below` and `above` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn specsep_predict_counts(
    model: *const SpecsepModel,
    gap: *const SpecsepGap,
    p: usize,
    convention: i32,
    below: *mut usize,
    above: *mut usize,
) -> SpecsepStatus {
    guard(|| {
        non_null!(model, gap, below, above);
        if p == 0 {
            return fail(SpecsepStatus::InvalidArgument, "p = 0");
        }
        let m = &*model;
        let convention = match convention {
            SPECSEP_CONVENTION_DERIVATION => Convention::Derivation,
            SPECSEP_CONVENTION_THEOREM => Convention::Theorem,
            other => return fail(SpecsepStatus::InvalidArgument, format!("unknown convention {other}")),
        };
        let pairs = m.cfg.spectrum.materialize_pairs(p);
        let gap: SpectralGap = (*gap).into();
        let pred = try_lib!(predict_counts(&gap, &pairs, &m.cfg, &m.settings, DEFAULT_SAMPLES, convention));
        *below = pred.predicted_below;
        *above = pred.predicted_above;
        SpecsepStatus::Ok
    })
}
