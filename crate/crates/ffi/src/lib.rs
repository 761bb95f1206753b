//! C ABI over the finite-system part of `pdl`.
//!
//! Handles are opaque and owned by the caller once returned. Every entry point
//! returns a [`PdlStatus`]; on anything but `PDL_STATUS_OK` the message is available
//! from [`pdl_last_error`] until the next call on the same thread. Rationals
//! cross the boundary as `"p/q"` strings.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pdl::expansivity::{verdict_at, Variant};
use pdl::format::parse_system_file;
use pdl::shadowing::shadowable_exact;
use pdl::stability::{build_conjugacy, default_eta, gh_distance_bounds};
use pdl::systems::FiniteSystem;
use pdl::{Error, Rational};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Unsupported = 5,
    Budget = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdlVariant {
    Expansive = 0,
    Uniform = 1,
    Minimal = 2,
}

/// A finite system loaded from `.pdl` text.
pub struct PdlSystem {
    inner: FiniteSystem,
}

/// Exact GH0 bounds. Strings are owned by the caller; release them with
/// [`pdl_string_free`].
#[repr(C)]
pub struct PdlGhBounds {
    pub lower: *mut c_char,
    pub upper: *mut c_char,
    pub complete: bool,
}

/// Marks a point outside the domain of a conjugacy.
pub const PDL_NO_IMAGE: usize = !0;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PdlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Structural(_) | Error::Construction(_) => PdlStatus::Parse,
            Error::Domain(_) | Error::Precondition(_) => PdlStatus::InvalidArgument,
            Error::Unsupported(_) => PdlStatus::Unsupported,
            Error::Budget { .. } => PdlStatus::Budget,
        };
        Failure(code, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PdlStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PdlStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            PdlStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(PdlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(PdlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn rational(p: *const c_char, what: &str) -> Result<Rational, Failure> {
    text(p, what)?.parse().map_err(|e| Failure(PdlStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn system<'a>(p: *const PdlSystem, what: &str) -> Result<&'a FiniteSystem, Failure> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| Failure(PdlStatus::NullPointer, format!("{what} is null")))
}

fn point(sys: &FiniteSystem, x: usize) -> Result<usize, Failure> {
    if x < sys.len() {
        Ok(x)
    } else {
        Err(Failure(PdlStatus::InvalidArgument, format!("point {x} out of range 0..{}", sys.len())))
    }
}

fn out<T>(p: *mut T) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(PdlStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn owned(r: Rational) -> *mut c_char {
    CString::new(r.to_string()).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread, or "" after success.
#[no_mangle]
pub extern "C" fn pdl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn pdl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse `.pdl` text holding a finite system (explicit or lattice stanza).
///
/// # Safety
/// `text_ptr` must be a NUL-terminated string and `out_sys` writable.
#[no_mangle]
pub unsafe extern "C" fn pdl_system_from_text(text_ptr: *const c_char, out_sys: *mut *mut PdlSystem) -> PdlStatus {
    guard(|| {
        out(out_sys)?;
        let file = parse_system_file(text(text_ptr, "text")?)?;
        let inner = file.system.as_finite()?.clone();
        *out_sys = Box::into_raw(Box::new(PdlSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`pdl_system_from_text`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdl_system_free(sys: *mut PdlSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdl_system_len(sys: *const PdlSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `sys` must be a live handle and `image` writable.
#[no_mangle]
pub unsafe extern "C" fn pdl_system_apply(sys: *const PdlSystem, x: usize, image: *mut usize) -> PdlStatus {
    guard(|| {
        out(image)?;
        let f = system(sys, "sys")?;
        *image = f.f(point(f, x)?);
        Ok(())
    })
}

/// Writes 1 or 0 per point into `flags` (length `pdl_system_len`).
///
/// # Safety
/// `c` must be a NUL-terminated string, `flags` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pdl_classify(
    sys: *const PdlSystem,
    variant: PdlVariant,
    c: *const c_char,
    flags: *mut u8,
    len: usize,
) -> PdlStatus {
    guard(|| {
        out(flags)?;
        let f = system(sys, "sys")?;
        let c = rational(c, "c")?;
        if len != f.len() {
            return Err(Failure(PdlStatus::InvalidArgument, format!("flags has {len} slots for {} points", f.len())));
        }
        let variant = match variant {
            PdlVariant::Expansive => Variant::Expansive,
            PdlVariant::Uniform => Variant::Uniform,
            PdlVariant::Minimal => Variant::Minimal,
        };
        let flags = std::slice::from_raw_parts_mut(flags, len);
        for (x, slot) in flags.iter_mut().enumerate() {
            *slot = verdict_at(f, variant, &x, c).holds as u8;
        }
        Ok(())
    })
}

/// Exact shadowing verdict at `x`.
///
/// # Safety
/// String arguments must be NUL-terminated and `holds` writable.
#[no_mangle]
pub unsafe extern "C" fn pdl_shadowable(
    sys: *const PdlSystem,
    x: usize,
    eps: *const c_char,
    delta: *const c_char,
    holds: *mut bool,
) -> PdlStatus {
    guard(|| {
        out(holds)?;
        let f = system(sys, "sys")?;
        let v = shadowable_exact(f, point(f, x)?, rational(eps, "eps")?, rational(delta, "delta")?)?;
        *holds = v.holds;
        Ok(())
    })
}

/// Build the conjugacy of `g` into `f` on the `g`-orbit closure of `x`.
/// `eta` may be null for the default schedule. `images` receives `h(u)` per
/// point of `g`, or [`PDL_NO_IMAGE`] off the domain.
///
/// # Safety
/// `images` must hold `len` slots and `holds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdl_conjugacy(
    f: *const PdlSystem,
    g: *const PdlSystem,
    x: usize,
    eps: *const c_char,
    delta: *const c_char,
    eta: *const c_char,
    images: *mut usize,
    len: usize,
    holds: *mut bool,
) -> PdlStatus {
    guard(|| {
        out(images)?;
        out(holds)?;
        let (f, g) = (system(f, "f")?, system(g, "g")?);
        let eps = rational(eps, "eps")?;
        let delta = rational(delta, "delta")?;
        let eta = if eta.is_null() { default_eta(eps, None) } else { rational(eta, "eta")? };
        if len != g.len() {
            return Err(Failure(PdlStatus::InvalidArgument, format!("images has {len} slots for {} points", g.len())));
        }
        let r = build_conjugacy(f, g, point(g, x)?, eps, delta, eta)?;
        let images = std::slice::from_raw_parts_mut(images, len);
        for (u, slot) in images.iter_mut().enumerate() {
            *slot = r.h(u).unwrap_or(PDL_NO_IMAGE);
        }
        *holds = r.holds;
        Ok(())
    })
}

/// Exact GH0 distance between two finite systems under a node budget.
/// Returns `PDL_STATUS_BUDGET` with valid bounds filled in when the search
/// was cut short.
///
/// # Safety
/// `bounds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdl_gh_distance(
    f: *const PdlSystem,
    g: *const PdlSystem,
    budget: u64,
    bounds: *mut PdlGhBounds,
) -> PdlStatus {
    guard(|| {
        out(bounds)?;
        let b = gh_distance_bounds(system(f, "f")?, system(g, "g")?, budget);
        *bounds = PdlGhBounds { lower: owned(b.lower), upper: owned(b.upper), complete: b.complete };
        if b.complete {
            Ok(())
        } else {
            Err(Failure(PdlStatus::Budget, format!("search stopped after {budget} nodes")))
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pdl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
