use std::ffi::{c_char, CStr, CString};
use std::ptr;

use su3sim_ffi::*;

const PARAMS: &str = r#"{"n_sites":2,"m_tilde":1.2,"x":0.8,"variant":"reduced3"}"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    su3_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = su3_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn hamiltonian_state_round_trip() {
    unsafe {
        let params = cstr(PARAMS);
        let mut h = ptr::null_mut();
        assert_eq!(su3_model_hamiltonian(params.as_ptr(), &mut h), Su3Status::Ok);
        assert_eq!(su3_operator_n_qubits(h), 3);
        let mut n_op = ptr::null_mut();
        assert_eq!(su3_model_particle_number(params.as_ptr(), &mut n_op), Su3Status::Ok);

        let mut psi = ptr::null_mut();
        assert_eq!(su3_state_from_spins(cstr("ddd").as_ptr(), &mut psi), Su3Status::Ok);
        let mut n0 = 0.0;
        assert_eq!(su3_state_expectation(psi, n_op, &mut n0), Su3Status::Ok);
        assert!((n0 - 6.0).abs() < 1e-12, "{n0}");

        let mut later = ptr::null_mut();
        assert_eq!(su3_state_evolve(h, psi, 1.0, &mut later), Su3Status::Ok);
        let mut probs = [0.0; 8];
        assert_eq!(su3_state_probabilities(later, probs.as_mut_ptr(), probs.len()), Su3Status::Ok);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(su3_state_probabilities(later, probs.as_mut_ptr(), 4), Su3Status::InvalidArgument);

        let mut json = ptr::null_mut();
        assert_eq!(su3_operator_to_json(h, &mut json), Su3Status::Ok);
        let text = cstr(&take(json));
        let mut h2 = ptr::null_mut();
        assert_eq!(su3_operator_from_json(text.as_ptr(), &mut h2), Su3Status::Ok);
        assert_eq!(su3_operator_n_qubits(h2), 3);

        su3_state_free(later);
        su3_state_free(psi);
        su3_operator_free(h2);
        su3_operator_free(n_op);
        su3_operator_free(h);
    }
}

#[test]
fn circuits_and_shots() {
    unsafe {
        let params = cstr(PARAMS);
        let mut c = ptr::null_mut();
        assert_eq!(su3_circuit_trotter(params.as_ptr(), 0.25, 2, false, &mut c), Su3Status::Ok);
        assert_eq!(su3_circuit_cnot_count(c), 20);

        let mut qasm = ptr::null_mut();
        assert_eq!(su3_circuit_to_qasm(c, &mut qasm), Su3Status::Ok);
        assert!(take(qasm).starts_with("OPENQASM"));

        let mut json = ptr::null_mut();
        assert_eq!(su3_circuit_to_json(c, &mut json), Su3Status::Ok);
        let text = cstr(&take(json));
        let mut c2 = ptr::null_mut();
        assert_eq!(su3_circuit_from_json(text.as_ptr(), &mut c2), Su3Status::Ok);
        assert_eq!(su3_circuit_cnot_count(c2), 20);

        let mut psi = ptr::null_mut();
        su3_state_from_spins(cstr("uuu").as_ptr(), &mut psi);
        let mut out = ptr::null_mut();
        assert_eq!(su3_circuit_run(c2, psi, &mut out), Su3Status::Ok);

        let mut counts = ptr::null_mut();
        assert_eq!(su3_circuit_run_noisy(c, ptr::null(), 500, 7, &mut counts), Su3Status::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(counts)).unwrap();
        assert_eq!(v["shots"], 500);
        let total: u64 = v["counts"].as_object().unwrap().values().map(|n| n.as_u64().unwrap()).sum();
        assert_eq!(total, 500);

        let bad_noise = cstr(r#"{"cnot_depolarizing_p": 2.0}"#);
        assert_eq!(su3_circuit_run_noisy(c, bad_noise.as_ptr(), 10, 1, &mut counts), Su3Status::InvalidProbability);
        assert!(!last_error().is_empty());

        su3_state_free(out);
        su3_state_free(psi);
        su3_circuit_free(c2);
        su3_circuit_free(c);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(su3_model_hamiltonian(ptr::null(), &mut h), Su3Status::InvalidArgument);
        assert!(last_error().contains("null"));
        assert!(h.is_null());

        assert_eq!(su3_model_hamiltonian(cstr("{not json").as_ptr(), &mut h), Su3Status::Json);
        let bad = cstr(r#"{"n_sites":2,"m_tilde":-1.0,"x":0.8,"variant":"reduced3"}"#);
        assert_eq!(su3_model_hamiltonian(bad.as_ptr(), &mut h), Su3Status::InvalidParams);

        let mut psi = ptr::null_mut();
        assert_ne!(su3_state_from_spins(cstr("uxq").as_ptr(), &mut psi), Su3Status::Ok);

        assert_eq!(su3_operator_n_qubits(ptr::null()), 0);
        su3_operator_free(ptr::null_mut());
        su3_string_free(ptr::null_mut());

        let params = cstr(PARAMS);
        assert_eq!(su3_model_hamiltonian(params.as_ptr(), &mut h), Su3Status::Ok);
        assert!(su3_last_error_message().is_null());
        su3_operator_free(h);
        assert!(!CStr::from_ptr(su3_version()).to_bytes().is_empty());
    }
}

#[test]
fn run_command_returns_files() {
    unsafe {
        let mut out = ptr::null_mut();
        let cfg = cstr(r#"{"resources": {"max_n": 3}}"#);
        assert_eq!(su3_run_command(cstr("resources").as_ptr(), cfg.as_ptr(), ptr::null(), &mut out), Su3Status::Ok);
        let files: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert!(files.get("resources.json").is_some());

        assert_eq!(su3_run_command(cstr("spectrum").as_ptr(), ptr::null(), ptr::null(), &mut out), Su3Status::Ok);
        let files: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert!(files.get("spectrum.json").is_some());

        assert_eq!(su3_run_command(cstr("dance").as_ptr(), ptr::null(), ptr::null(), &mut out), Su3Status::InvalidArgument);
        assert_eq!(su3_run_command(cstr("fit").as_ptr(), ptr::null(), ptr::null(), &mut out), Su3Status::InvalidArgument);
        let unknown = cstr(r#"{"sed": 1}"#);
        assert_eq!(su3_run_command(cstr("spectrum").as_ptr(), unknown.as_ptr(), ptr::null(), &mut out), Su3Status::Json);
    }
}

#[test]
fn header_declares_entry_points() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/su3sim.h")).unwrap();
    for name in ["su3_model_hamiltonian", "su3_circuit_run_noisy", "su3_run_command", "su3_string_free", "SU3_STATUS_INTERNAL"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
