//! C ABI over `su3sim`.
//!
//! Objects cross the boundary as opaque handles created by `su3_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns an [`Su3Status`]; on failure a message is available from
//! [`su3_last_error_message`] on the same thread. Strings returned through
//! `char **` out-parameters are owned by the caller and must be released with
//! [`su3_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use su3sim::circuit::{synth_trotter_general, synth_trotter_penta4, synth_trotter_reduced3, Circuit, SynthOptions};
use su3sim::commands;
use su3sim::config::RunConfig;
use su3sim::dynamics::{exact_evolve, QuantumState};
use su3sim::model::{self, ModelParams, Variant};
use su3sim::noise::{run_noisy, NoiseModel};
use su3sim::pauli::OperatorSum;
use su3sim::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su3Status {
    Ok = 0,
    /// A required pointer was null or a string was not valid UTF-8.
    InvalidArgument = 1,
    InvalidParams = 2,
    DenseLimit = 3,
    QubitMismatch = 4,
    NonHermitian = 5,
    Routing = 6,
    InvalidProbability = 7,
    Calibration = 8,
    Parse = 9,
    Io = 10,
    Json = 11,
    /// A Rust panic was caught at the boundary.
    Internal = 99,
}

impl From<&Error> for Su3Status {
    fn from(e: &Error) -> Self {
        match e {
            Error::QubitMismatch { .. } => Su3Status::QubitMismatch,
            Error::DenseLimit { .. } => Su3Status::DenseLimit,
            Error::NonHermitian { .. } => Su3Status::NonHermitian,
            Error::InvalidParams(_) => Su3Status::InvalidParams,
            Error::Routing { .. } => Su3Status::Routing,
            Error::InvalidProbability { .. } => Su3Status::InvalidProbability,
            Error::Calibration(_) => Su3Status::Calibration,
            Error::Parse(_) => Su3Status::Parse,
            Error::Io(_) => Su3Status::Io,
            Error::Json(_) => Su3Status::Json,
        }
    }
}

/// Weighted sum of Pauli strings.
pub struct Su3Operator(OperatorSum);

/// Pure state on a small register.
pub struct Su3State(QuantumState);

/// Gate-level circuit.
pub struct Su3Circuit(Circuit);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(Su3Status, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(Su3Status::from(&e), e.to_string())
    }
}

fn bad_arg(msg: &str) -> Failure {
    Failure(Su3Status::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Su3Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            Su3Status::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            Su3Status::Internal
        }
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(bad_arg(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| bad_arg(&format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or point to a live handle of type `T`.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| bad_arg(&format!("{what} is null")))
}

/// # Safety
/// `out` must be null or valid for a pointer write.
unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(bad_arg("output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// # Safety
/// `out` must be null or valid for a pointer write.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(bad_arg("output pointer is null"));
    }
    *out = CString::new(s.replace('\0', " ")).expect("NUL bytes removed").into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread; do not free.
#[no_mangle]
pub extern "C" fn su3_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn su3_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the Hamiltonian described by a model JSON object such as
/// `{"n_sites":2,"m_tilde":1.2,"x":0.8,"variant":"reduced3"}`.
///
/// # Safety
/// `params_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_model_hamiltonian(params_json: *const c_char, out: *mut *mut Su3Operator) -> Su3Status {
    guard(|| {
        let params: ModelParams = serde_json::from_str(read_str(params_json, "params_json")?).map_err(Error::from)?;
        put(out, Su3Operator(model::build_hamiltonian(&params)?))
    })
}

/// Particle-number observable of a model.
///
/// # Safety
/// As for [`su3_model_hamiltonian`].
#[no_mangle]
pub unsafe extern "C" fn su3_model_particle_number(params_json: *const c_char, out: *mut *mut Su3Operator) -> Su3Status {
    guard(|| {
        let params: ModelParams = serde_json::from_str(read_str(params_json, "params_json")?).map_err(Error::from)?;
        put(out, Su3Operator(model::particle_number(&params)?))
    })
}

/// Parses an operator from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_operator_from_json(json: *const c_char, out: *mut *mut Su3Operator) -> Su3Status {
    guard(|| put(out, Su3Operator(OperatorSum::from_json(read_str(json, "json")?)?)))
}

/// Serialises an operator to JSON.
///
/// # Safety
/// `op` must be a live operator handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_operator_to_json(op: *const Su3Operator, out: *mut *mut c_char) -> Su3Status {
    guard(|| put_string(out, handle(op, "op")?.0.to_json()))
}

/// Number of qubits the operator acts on; 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn su3_operator_n_qubits(op: *const Su3Operator) -> usize {
    op.as_ref().map_or(0, |o| o.0.n_qubits())
}

/// # Safety
/// `op` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su3_operator_free(op: *mut Su3Operator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Product state from a spin pattern: `u`/`0`/`↑` for up, `d`/`1`/`↓` for down.
///
/// # Safety
/// `pattern` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_state_from_spins(pattern: *const c_char, out: *mut *mut Su3State) -> Su3Status {
    guard(|| put(out, Su3State(QuantumState::from_spins(read_str(pattern, "pattern")?)?)))
}

/// `e^{−itH}|ψ⟩` as a new state.
///
/// # Safety
/// `h` and `psi` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_state_evolve(
    h: *const Su3Operator,
    psi: *const Su3State,
    t: f64,
    out: *mut *mut Su3State,
) -> Su3Status {
    guard(|| {
        let evolved = exact_evolve(&handle(h, "h")?.0, &handle(psi, "psi")?.0, t)?;
        put(out, Su3State(evolved))
    })
}

/// Real expectation value `⟨ψ|O|ψ⟩`.
///
/// # Safety
/// `psi` and `op` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_state_expectation(psi: *const Su3State, op: *const Su3Operator, out: *mut f64) -> Su3Status {
    guard(|| {
        let v = handle(psi, "psi")?.0.expectation(&handle(op, "op")?.0)?;
        if out.is_null() {
            return Err(bad_arg("output pointer is null"));
        }
        *out = v;
        Ok(())
    })
}

/// Writes the `2^n` outcome probabilities into `buf` (qubit 1 is the most
/// significant bit of the index).
///
/// # Safety
/// `psi` must be a live handle; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn su3_state_probabilities(psi: *const Su3State, buf: *mut f64, len: usize) -> Su3Status {
    guard(|| {
        let p = handle(psi, "psi")?.0.probabilities();
        if buf.is_null() || len != p.len() {
            return Err(bad_arg(&format!("buffer must hold {} values", p.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `psi` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su3_state_free(psi: *mut Su3State) {
    if !psi.is_null() {
        drop(Box::from_raw(psi));
    }
}

/// Trotter circuit for a model: the dedicated layouts for `reduced3` and
/// `penta4`, per-string synthesis otherwise.
///
/// # Safety
/// `params_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_trotter(
    params_json: *const c_char,
    dt: f64,
    steps: usize,
    peephole: bool,
    out: *mut *mut Su3Circuit,
) -> Su3Status {
    guard(|| {
        let p: ModelParams = serde_json::from_str(read_str(params_json, "params_json")?).map_err(Error::from)?;
        p.validate()?;
        let opts = SynthOptions { peephole, ..SynthOptions::default() };
        let c = match p.variant {
            Variant::Reduced3 => synth_trotter_reduced3(dt, p.m_tilde, p.x, steps, &opts)?,
            Variant::Penta4 => synth_trotter_penta4(dt, p.m_tilde, p.x, steps, &opts)?,
            _ => synth_trotter_general(&model::build_hamiltonian(&p)?, dt, steps, &opts)?,
        };
        put(out, Su3Circuit(c))
    })
}

/// Parses a circuit from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_from_json(json: *const c_char, out: *mut *mut Su3Circuit) -> Su3Status {
    guard(|| put(out, Su3Circuit(Circuit::from_json(read_str(json, "json")?)?)))
}

/// # Safety
/// `c` must be a live circuit handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_to_json(c: *const Su3Circuit, out: *mut *mut c_char) -> Su3Status {
    guard(|| put_string(out, handle(c, "circuit")?.0.to_json()))
}

/// # Safety
/// `c` must be a live circuit handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_to_qasm(c: *const Su3Circuit, out: *mut *mut c_char) -> Su3Status {
    guard(|| put_string(out, handle(c, "circuit")?.0.to_qasm()))
}

/// Number of CNOT gates; 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live circuit handle.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_cnot_count(c: *const Su3Circuit) -> usize {
    c.as_ref().map_or(0, |c| c.0.cnot_count())
}

/// Noiseless action of the circuit on a state.
///
/// # Safety
/// `c` and `psi` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_run(c: *const Su3Circuit, psi: *const Su3State, out: *mut *mut Su3State) -> Su3Status {
    guard(|| {
        let result = handle(c, "circuit")?.0.run(&handle(psi, "psi")?.0)?;
        put(out, Su3State(result))
    })
}

/// Samples shots from `|0…0⟩` under a noise model (JSON; null for the
/// default model) and returns counts JSON `{"shots":…,"counts":{…}}`.
///
/// # Safety
/// `c` must be a live handle; `noise_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_run_noisy(
    c: *const Su3Circuit,
    noise_json: *const c_char,
    shots: u64,
    seed: u64,
    out: *mut *mut c_char,
) -> Su3Status {
    guard(|| {
        let noise: NoiseModel = if noise_json.is_null() {
            NoiseModel::default()
        } else {
            serde_json::from_str(read_str(noise_json, "noise_json")?).map_err(Error::from)?
        };
        let counts = run_noisy(&handle(c, "circuit")?.0, &noise, shots, seed)?;
        put_string(out, serde_json::to_string(&counts).map_err(Error::from)?)
    })
}

/// # Safety
/// `c` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su3_circuit_free(c: *mut Su3Circuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs a CLI subcommand (`spectrum`, `evolve`, `trotter-circuit`,
/// `experiment`, `resources`, `fit`) on a JSON run configuration (null for
/// defaults). `input` is the CSV text for `fit` and ignored otherwise. The
/// result is a JSON object mapping output file names to their contents.
///
/// # Safety
/// String arguments must be null or NUL-terminated (`command` is required);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su3_run_command(
    command: *const c_char,
    config_json: *const c_char,
    input: *const c_char,
    out: *mut *mut c_char,
) -> Su3Status {
    guard(|| {
        let cmd = read_str(command, "command")?;
        let cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_json(read_str(config_json, "config_json")?)?
        };
        cfg.validate()?;
        let result = match cmd {
            "spectrum" => commands::spectrum(&cfg)?,
            "evolve" => commands::evolve(&cfg)?,
            "trotter-circuit" => commands::trotter_circuit(&cfg)?,
            "experiment" => commands::experiment(&cfg)?,
            "resources" => commands::resources(&cfg)?,
            "fit" => commands::fit(&cfg, read_str(input, "input")?)?,
            other => return Err(Failure(Su3Status::InvalidArgument, format!("unknown command {other:?}"))),
        };
        let files: serde_json::Map<String, serde_json::Value> =
            result.files.into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
        put_string(out, serde_json::Value::Object(files).to_string())
    })
}
