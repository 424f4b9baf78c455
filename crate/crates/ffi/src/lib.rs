//! C ABI over `aggsim`.
//!
//! Objects are opaque handles created by `*_new`/`*_generate`/`*_from_text`
//! and released with the matching `*_free`. Every fallible call returns an
//! [`AggsimStatus`]; on failure a message is available from
//! [`aggsim_last_error`] on the same thread. Strings returned through out
//! parameters are owned by the caller and released with
//! [`aggsim_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aggsim::algebra::generate_group_params;
use aggsim::poly::evaluate;
use aggsim::{Error, GroupParams, Model, PolynomialSpec, RandomSource, Scheme, Simulation};
use num_bigint::BigUint;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InvalidParams = 4,
    /// Missing or malformed ciphertexts, subgroup violations, bad inputs.
    ProtocolError = 5,
    /// The request would disclose an individual input.
    Insecure = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggsimModel {
    Aggregator = 0,
    Peers = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggsimScheme {
    Basic = 0,
    Advanced = 1,
}

/// Opaque group parameters.
pub struct AggsimParams(GroupParams);

/// Opaque simulation: a set of parties sharing one network.
pub struct AggsimSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AggsimStatus {
    match e {
        Error::InvalidParams(_) => AggsimStatus::InvalidParams,
        Error::Parse(_) | Error::Decode(_) => AggsimStatus::ParseError,
        Error::InvalidArgument(_) | Error::TooFewParticipants { .. } => AggsimStatus::InvalidArgument,
        Error::InsecureTerm { .. } | Error::TooFewSumParticipants { .. } => AggsimStatus::Insecure,
        _ => AggsimStatus::ProtocolError,
    }
}

/// Runs `f`, converting errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), (AggsimStatus, String)>) -> AggsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AggsimStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AggsimStatus::Panic
        }
    }
}

fn fail(e: Error) -> (AggsimStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (AggsimStatus, String) {
    (AggsimStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (AggsimStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (AggsimStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (AggsimStatus::ParseError, format!("{what} is not UTF-8")))
}

unsafe fn inputs<'a>(values: *const u64, len: usize) -> Result<&'a [u64], (AggsimStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if values.is_null() {
        return Err(null("inputs"));
    }
    Ok(std::slice::from_raw_parts(values, len))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), (AggsimStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

fn bigs(values: &[u64]) -> Vec<BigUint> {
    values.iter().copied().map(BigUint::from).collect()
}

/// Message describing the most recent failure on this thread, or NULL.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn aggsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn aggsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates parameters with a `q_bits`-bit prime `q`.
#[no_mangle]
pub unsafe extern "C" fn aggsim_params_generate(q_bits: u64, seed: u64, out: *mut *mut AggsimParams) -> AggsimStatus {
    guard(|| {
        let gp = generate_group_params(q_bits, &mut RandomSource::from_u64(seed)).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AggsimParams(gp))))
    })
}

/// Parses the `q=.. p=.. h=.. g1=.. g2=.. M=..` text form. Validity is not
/// checked here; see [`aggsim_params_validate`].
#[no_mangle]
pub unsafe extern "C" fn aggsim_params_from_text(s: *const c_char, out: *mut *mut AggsimParams) -> AggsimStatus {
    guard(|| {
        let gp: GroupParams = text(s, "text")?.parse().map_err(fail)?;
        put(out, Box::into_raw(Box::new(AggsimParams(gp))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn aggsim_params_to_text(params: *const AggsimParams, out: *mut *mut c_char) -> AggsimStatus {
    guard(|| {
        let gp = borrow(params, "params")?;
        put(out, c_string(gp.0.to_string()))
    })
}

/// Sets `*out_valid` and, when invalid, records the reasons as the last error.
#[no_mangle]
pub unsafe extern "C" fn aggsim_params_validate(params: *const AggsimParams, out_valid: *mut bool) -> AggsimStatus {
    guard(|| {
        let gp = borrow(params, "params")?;
        let valid = gp.0.validate();
        if !valid {
            set_error(gp.0.violations().join("; "));
        }
        put(out_valid, valid)
    })
}

#[no_mangle]
pub unsafe extern "C" fn aggsim_params_free(params: *mut AggsimParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Creates `n` participants (plus an aggregator in that model).
#[no_mangle]
pub unsafe extern "C" fn aggsim_simulation_new(
    params: *const AggsimParams,
    model: AggsimModel,
    n: u32,
    seed: u64,
    out: *mut *mut AggsimSimulation,
) -> AggsimStatus {
    guard(|| {
        let gp = borrow(params, "params")?;
        let model = match model {
            AggsimModel::Aggregator => Model::Aggregator,
            AggsimModel::Peers => Model::Peers,
        };
        let sim = Simulation::new(gp.0.clone(), model, n as usize, &mut RandomSource::from_u64(seed)).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AggsimSimulation(sim))))
    })
}

/// One product session; `*out_result` receives the product in decimal.
#[no_mangle]
pub unsafe extern "C" fn aggsim_simulation_run_product(
    sim: *mut AggsimSimulation,
    values: *const u64,
    len: usize,
    out_result: *mut *mut c_char,
) -> AggsimStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        let v = sim.0.run_product(0, &bigs(inputs(values, len)?)).map_err(fail)?;
        put(out_result, c_string(v.to_string()))
    })
}

/// One sum session over all participants; result in decimal.
#[no_mangle]
pub unsafe extern "C" fn aggsim_simulation_run_sum(
    sim: *mut AggsimSimulation,
    values: *const u64,
    len: usize,
    out_result: *mut *mut c_char,
) -> AggsimStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        let v = sim.0.run_sum_all(&bigs(inputs(values, len)?)).map_err(fail)?;
        put(out_result, c_string(v.to_string()))
    })
}

/// The eavesdropper's transcript so far, one message per line.
#[no_mangle]
pub unsafe extern "C" fn aggsim_simulation_transcript(
    sim: *const AggsimSimulation,
    out: *mut *mut c_char,
) -> AggsimStatus {
    guard(|| {
        let sim = borrow(sim, "simulation")?;
        put(out, c_string(sim.0.transcript().dump()))
    })
}

#[no_mangle]
pub unsafe extern "C" fn aggsim_simulation_free(sim: *mut AggsimSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Evaluates the polynomial in `spec_text` (the CLI spec file format) on
/// `values`; result in decimal.
#[no_mangle]
pub unsafe extern "C" fn aggsim_evaluate(
    params: *const AggsimParams,
    spec_text: *const c_char,
    values: *const u64,
    len: usize,
    model: AggsimModel,
    scheme: AggsimScheme,
    seed: u64,
    out_result: *mut *mut c_char,
) -> AggsimStatus {
    guard(|| {
        let gp = borrow(params, "params")?;
        let spec: PolynomialSpec = text(spec_text, "spec")?.parse().map_err(fail)?;
        let model = match model {
            AggsimModel::Aggregator => Model::Aggregator,
            AggsimModel::Peers => Model::Peers,
        };
        let scheme = match scheme {
            AggsimScheme::Basic => Scheme::Basic,
            AggsimScheme::Advanced => Scheme::Advanced,
        };
        let mut rng = RandomSource::from_u64(seed);
        let eval = evaluate(&gp.0, &spec, &bigs(inputs(values, len)?), model, scheme, &mut rng).map_err(fail)?;
        put(out_result, c_string(eval.value.to_string()))
    })
}
