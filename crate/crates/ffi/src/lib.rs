//! C ABI over the lattice pricers, calibrated surface models and the
//! scenario engine.
//!
//! Every function returns an [`SvStatus`]. On failure the message is
//! available from [`sv_last_error`] on the same thread. Models are opaque
//! handles released with [`sv_model_free`]; strings returned to the caller
//! are released with [`sv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use synthvol::calibration::ModelBundle;
use synthvol::lattice::{fd_greeks, price, ContractSpec, ExerciseStyle, GreekBumps, LatticeSpec, Parity};
use synthvol::scenario::export::ScenarioSummary;
use synthvol::scenario::{run_scenario, ScenarioConfig};
use synthvol::surface::SurfaceFeatures;
use synthvol::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Lattice = 3,
    Numerical = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvParity {
    Call = 0,
    Put = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvLattice {
    Crr = 0,
    LeisenReimer = 1,
}

/// One option contract. `dte` is in trading days.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvContract {
    pub strike: f64,
    pub dte: f64,
    pub parity: SvParity,
    pub american: bool,
    pub rate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SvGreeks {
    pub price: f64,
    pub delta: f64,
    pub gamma: f64,
    pub vega: f64,
    pub vega_pct: f64,
    pub aliasing_warning: bool,
}

/// Calibrated surface model loaded from a bundle.
pub struct SvModel {
    bundle: ModelBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SvStatus {
    match e {
        Error::InvalidInput(_) => SvStatus::InvalidInput,
        Error::Lattice(_) => SvStatus::Lattice,
        Error::Numerical(_) => SvStatus::Numerical,
        Error::Scenario { source, .. } => status_of(source),
        Error::File { .. } | Error::Io(_) => SvStatus::Io,
        Error::Csv(_) | Error::Json(_) => SvStatus::Parse,
    }
}

struct Failure(SvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SvStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(SvStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

fn lattice_of(kind: SvLattice, steps: usize) -> LatticeSpec {
    match kind {
        SvLattice::Crr => LatticeSpec::crr(steps),
        SvLattice::LeisenReimer => LatticeSpec::leisen_reimer(steps),
    }
}

fn contract_of(c: &SvContract) -> ContractSpec {
    let parity = match c.parity {
        SvParity::Call => Parity::Call,
        SvParity::Put => Parity::Put,
    };
    let style = if c.american { ExerciseStyle::American } else { ExerciseStyle::European };
    ContractSpec::from_dte(c.strike, c.dte, parity, style, c.rate)
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Lattice price of one contract.
///
/// # Safety
/// `contract` and `out_price` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sv_price(
    spot: f64,
    contract: *const SvContract,
    sigma: f64,
    lattice: SvLattice,
    steps: usize,
    out_price: *mut f64,
) -> SvStatus {
    guard(|| {
        let c = contract.as_ref().ok_or_else(|| null("contract"))?;
        let out = out_price.as_mut().ok_or_else(|| null("out_price"))?;
        *out = price(spot, &contract_of(c), sigma, &lattice_of(lattice, steps))?;
        Ok(())
    })
}

/// Price plus central finite-difference Greeks with the default bumps.
///
/// # Safety
/// `contract` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sv_greeks(
    spot: f64,
    contract: *const SvContract,
    sigma: f64,
    lattice: SvLattice,
    steps: usize,
    out: *mut SvGreeks,
) -> SvStatus {
    guard(|| {
        let c = contract.as_ref().ok_or_else(|| null("contract"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let spec = contract_of(c);
        let lattice = lattice_of(lattice, steps);
        let g = fd_greeks(spot, &spec, sigma, &lattice, GreekBumps::default())?;
        *out = SvGreeks {
            price: price(spot, &spec, sigma, &lattice)?,
            delta: g.delta,
            gamma: g.gamma,
            vega: g.vega,
            vega_pct: g.vega_pct,
            aliasing_warning: g.aliasing_warning,
        };
        Ok(())
    })
}

fn load_model(load: impl FnOnce() -> synthvol::Result<ModelBundle>, out: *mut *mut SvModel) -> SvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bundle = load()?;
        unsafe { *out = Box::into_raw(Box::new(SvModel { bundle })) };
        Ok(())
    })
}

/// Loads a model bundle file written by calibration.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_model_load(path: *const c_char, out: *mut *mut SvModel) -> SvStatus {
    let path = match str_arg(path, "path") {
        Ok(p) => p.to_owned(),
        Err(f) => return guard(|| Err(f)),
    };
    load_model(|| ModelBundle::load(Path::new(&path)), out)
}

/// Parses a model bundle from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_model_from_json(json: *const c_char, out: *mut *mut SvModel) -> SvStatus {
    let json = match str_arg(json, "json") {
        Ok(j) => j.to_owned(),
        Err(f) => return guard(|| Err(f)),
    };
    load_model(|| ModelBundle::from_json(&json), out)
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from a loader in this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sv_model_free(model: *mut SvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Model IV for a ticker. Two-input shapes ignore `e` and `e_peer`.
///
/// # Safety
/// `model` must be a live handle, `ticker` a NUL-terminated string and
/// `out_iv` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_model_iv(
    model: *const SvModel,
    ticker: *const c_char,
    dte: f64,
    moneyness: f64,
    e: f64,
    e_peer: f64,
    out_iv: *mut f64,
) -> SvStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let ticker = str_arg(ticker, "ticker")?;
        let out = out_iv.as_mut().ok_or_else(|| null("out_iv"))?;
        let f = SurfaceFeatures { dte, moneyness, e, e_peer };
        *out = m.bundle.model.iv(ticker, &f)?;
        Ok(())
    })
}

/// Runs a scenario from its JSON config and returns the stats summary as
/// JSON. A bundle path in the config resolves against `base_dir`, or the
/// working directory when `base_dir` is null.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `base_dir` null or
/// NUL-terminated, and `out_json` a valid pointer. Free the result with
/// [`sv_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sv_scenario_run(
    config_json: *const c_char,
    base_dir: *const c_char,
    out_json: *mut *mut c_char,
) -> SvStatus {
    guard(|| {
        let json = str_arg(config_json, "config_json")?;
        let base = if base_dir.is_null() { "." } else { str_arg(base_dir, "base_dir")? };
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let mut config = ScenarioConfig::from_json(json)?;
        config.resolve_surface(Path::new(base))?;
        let seed = config.seed.unwrap_or(0);
        config.seed = Some(seed);
        let result = run_scenario(&config)?;
        let text = ScenarioSummary::build(&result, seed)?.to_json()?;
        let c = CString::new(text).map_err(|_| Failure(SvStatus::Panic, "summary contains NUL".into()))?;
        *out_json = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
