//! The work behind each CLI subcommand, returning file contents instead of
//! touching the filesystem.

use serde_json::json;

use crate::circuit::{
    estimate_cnots, naive_cnot_count, resource_report, synth_trotter_general, synth_trotter_penta4,
    synth_trotter_reduced3, CnotEstimate, SynthOptions,
};
use crate::config::{fmt_num, CircuitFormat, EvolveMethod, RunConfig};
use crate::dynamics::{observable_series, trotter_series, QuantumState};
use crate::error::{invalid, Error, Result};
use crate::inference::{posterior_predictive, read_series_csv, sample, summarize};
use crate::mitigation::{build_runs, records_to_csv, run_experiment, ExperimentRecord, EXPERIMENT_CSV_HEADER};
use crate::model::{
    self, baryon_number, build_hamiltonian, cp_embed, hamiltonian_parts, named_state, particle_number,
    spectrum_overlaps, ModelParams, NamedState, StateLabel, Variant,
};
use crate::pauli::OperatorSum;

/// Named outputs of one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
    /// Human-readable text for the terminal, if any.
    pub display: Option<String>,
}

impl CommandOutput {
    fn single(name: &str, contents: String) -> Self {
        CommandOutput { files: vec![(name.to_string(), contents)], display: None }
    }

    /// Contents of the first file, for printing when no output directory is set.
    pub fn primary(&self) -> &str {
        self.files.first().map(|f| f.1.as_str()).unwrap_or("")
    }
}

/// Reference states whose register matches the model.
pub fn reference_states(params: &ModelParams) -> Vec<NamedState> {
    let nq = params.n_qubits();
    let mut out: Vec<NamedState> = Vec::new();
    if params.variant == Variant::Full && params.n_sites == 2 {
        for label in StateLabel::STRONG_COUPLING {
            let s = cp_embed(&named_state(label).state).expect("three-qubit state");
            out.push(NamedState { label, state: s });
        }
    }
    for ns in model::named_states() {
        if ns.state.n_qubits() == nq && !out.iter().any(|o| o.label == ns.label) {
            out.push(ns);
        }
    }
    out
}

pub fn spectrum(cfg: &RunConfig) -> Result<CommandOutput> {
    let params = cfg.model_or_default();
    let h = build_hamiltonian(&params)?;
    let table = spectrum_overlaps(&h, &reference_states(&params))?;
    let mut doc = json!({
        "model": params,
        "labels": table.labels,
        "eigenvalues": table.rows.iter().map(|r| r.eigenvalue).collect::<Vec<_>>(),
        "rows": table.rows,
    });
    if let Some(b) = cfg.spectrum.baryon_sector {
        if params.variant != Variant::Full {
            return Err(invalid("baryon_sector applies to the full model"));
        }
        let levels = model::sector_spectrum(&h, &baryon_number(params.n_sites), b)?;
        doc["sector"] = json!({ "baryon_number": b, "eigenvalues": levels });
    }
    let mut display = String::from("eigenvalue");
    for l in &table.labels {
        display.push_str(&format!("  {l:>12}"));
    }
    display.push('\n');
    for r in &table.rows {
        display.push_str(&format!("{:>10.6}", r.eigenvalue));
        for o in &r.overlaps {
            display.push_str(&format!("  {o:>12.6}"));
        }
        display.push('\n');
    }
    let mut out = CommandOutput::single("spectrum.json", serde_json::to_string_pretty(&doc)?);
    out.display = Some(display);
    Ok(out)
}

/// Parses a state label or spin pattern; three-qubit states are embedded for the full `N = 2` model.
pub fn resolve_initial(params: &ModelParams, spec: Option<&str>) -> Result<QuantumState> {
    let nq = params.n_qubits();
    let state = match spec {
        Some(s) => match s.parse::<StateLabel>() {
            Ok(label) => named_state(label).state,
            Err(_) => QuantumState::from_spins(s)?,
        },
        None => match params.variant {
            Variant::Reduced3 | Variant::Full => named_state(StateLabel::Baryonium).state,
            Variant::Penta4 => named_state(StateLabel::PentaBaryonRed).state,
            Variant::StaticCharges { .. } => return Err(invalid("static-charge models need an explicit initial state")),
        },
    };
    if state.n_qubits() == nq {
        Ok(state)
    } else if state.n_qubits() == 3 && nq == 6 && params.variant == Variant::Full {
        cp_embed(&state)
    } else {
        Err(Error::QubitMismatch { left: nq, right: state.n_qubits() })
    }
}

pub fn observable(params: &ModelParams, name: &str) -> Result<OperatorSum> {
    match name {
        "N" => particle_number(params),
        "He" => Ok(hamiltonian_parts(params)?.electric),
        "Hm" => Ok(hamiltonian_parts(params)?.mass),
        "B" if params.variant == Variant::Full => Ok(baryon_number(params.n_sites)),
        _ => Err(Error::Parse(format!("unknown observable {name:?} (N, He, Hm, B)"))),
    }
}

pub fn evolve(cfg: &RunConfig) -> Result<CommandOutput> {
    let params = cfg.model_or_default();
    let ev = &cfg.evolve;
    let h = build_hamiltonian(&params)?;
    let psi0 = resolve_initial(&params, ev.initial.as_deref())?;
    let obs: Vec<(String, OperatorSum)> =
        ev.observables.iter().map(|n| Ok((n.clone(), observable(&params, n)?))).collect::<Result<_>>()?;
    let n_points = (ev.mt_max / ev.mt_step + 1e-9).floor() as usize;
    let scale = if params.m_tilde > 0.0 { params.m_tilde } else { 1.0 };
    let times: Vec<f64> = (0..=n_points).map(|k| k as f64 * ev.mt_step / scale).collect();
    let result = match ev.method {
        EvolveMethod::Exact => observable_series(&h, &psi0, &obs, &times, params.m_tilde)?,
        EvolveMethod::Trotter => trotter_series(&h, &psi0, &obs, &times, ev.trotter_steps, params.m_tilde)?,
    };
    Ok(CommandOutput::single("evolve.csv", result.to_csv()))
}

pub fn trotter_circuit(cfg: &RunConfig) -> Result<CommandOutput> {
    let params = cfg.model_or_default();
    params.validate()?;
    let c = &cfg.circuit;
    let opts = SynthOptions { connectivity: None, peephole: c.peephole, frame_gates: c.frame_gates };
    let circuit = match params.variant {
        Variant::Reduced3 => synth_trotter_reduced3(c.dt, params.m_tilde, params.x, c.steps, &opts)?,
        Variant::Penta4 => synth_trotter_penta4(c.dt, params.m_tilde, params.x, c.steps, &opts)?,
        _ => synth_trotter_general(&build_hamiltonian(&params)?, c.dt, c.steps, &opts)?,
    };
    let report = resource_report(&circuit);
    let (name, body) = match c.format {
        CircuitFormat::Json => ("circuit.json", circuit.to_json()),
        CircuitFormat::Qasm => ("circuit.qasm", circuit.to_qasm()),
    };
    let mut out = CommandOutput::single(name, body);
    out.files.push(("circuit_resources.json".into(), serde_json::to_string_pretty(&report)?));
    out.display = Some(format!(
        "{} qubits, {} gates, {} CNOTs, depth {}\n",
        circuit.n_qubits(),
        circuit.len(),
        report.cnot_count,
        report.depth
    ));
    Ok(out)
}

pub fn experiment(cfg: &RunConfig) -> Result<CommandOutput> {
    let params = cfg.model_or_default();
    let ex = &cfg.experiment;
    if ex.n_trotter.is_empty() {
        return Err(invalid("no Trotter step counts requested"));
    }
    let mut all: Vec<ExperimentRecord> = Vec::new();
    let mut runs = Vec::new();
    for (i, &nt) in ex.n_trotter.iter().enumerate() {
        let plan = ex.plan_for(i, nt)?;
        let (phys, mitig) = build_runs(&plan, &params, 1.0)?;
        let recs = run_experiment(&params, &plan, &ex.noise, crate::rng::derive_seed(cfg.seed, nt as u64))?;
        let dev = |f: fn(&ExperimentRecord) -> f64| recs.iter().map(|r| (f(r) - r.exact_trotter).abs()).fold(0.0, f64::max);
        runs.push(json!({
            "n_trotter": nt,
            "kappa": plan.kappa,
            "mitigation_step_count": plan.mitigation_step_count,
            "randomizations": plan.randomizations,
            "shots_per_circuit": plan.shots_per_circuit,
            "physics_cnots": phys.cnot_count(),
            "mitigation_cnots": mitig.cnot_count(),
            "max_deviation_mitigated": dev(|r| r.corrected),
            "max_deviation_unmitigated": dev(|r| r.readout_phys),
            "flagged_points": recs.iter().filter(|r| r.quality_flag != crate::mitigation::QualityFlag::Ok).count(),
        }));
        all.extend(recs);
    }
    let summary = json!({ "model": params, "preset": ex.preset, "seed": cfg.seed, "noise": ex.noise, "runs": runs });
    let mut out = CommandOutput::single("experiment.csv", records_to_csv(&all));
    out.files.push(("experiment_summary.json".into(), serde_json::to_string_pretty(&summary)?));
    debug_assert!(out.primary().starts_with(EXPERIMENT_CSV_HEADER));
    Ok(out)
}

/// Largest `N` for which the per-string count is built from operators.
pub const NAIVE_MAX_N: usize = 6;

pub fn resources(cfg: &RunConfig) -> Result<CommandOutput> {
    let max_n = cfg.resources.max_n.max(2);
    let mut rows = Vec::new();
    let mut table = String::from("   N  closed_form   estimate      naive  kinetic  electric_zz  four_body  six_body\n");
    for n in 2..=max_n {
        let est = estimate_cnots(n)?;
        let naive: Option<CnotEstimate> = if n <= NAIVE_MAX_N { Some(naive_cnot_count(n)?) } else { None };
        table.push_str(&format!(
            "{:>4} {:>12} {:>10} {:>10} {:>8} {:>12} {:>10} {:>9}\n",
            n,
            CnotEstimate::closed_form(n),
            est.total,
            naive.map(|c| c.total.to_string()).unwrap_or_else(|| "-".into()),
            est.kinetic,
            est.electric_zz,
            est.four_body,
            est.six_body
        ));
        rows.push(json!({ "n_sites": n, "closed_form": CnotEstimate::closed_form(n), "estimate": est, "naive": naive }));
    }
    let opt = SynthOptions::optimized();
    // An odd step count closes the reduced3 frame with extra CNOTs, so the
    // per-step figure comes from a two-step circuit.
    let r3_one = synth_trotter_reduced3(0.1, 1.2, 0.8, 1, &opt)?.cnot_count();
    let r3_two = synth_trotter_reduced3(0.1, 1.2, 0.8, 2, &opt)?.cnot_count();
    let p4 = synth_trotter_penta4(0.1, 0.1, 3.0, 1, &opt)?.cnot_count();
    let doc = json!({
        "rows": rows,
        "synthesized_step_cnots": {
            "reduced3": r3_two as f64 / 2.0,
            "reduced3_single_step_circuit": r3_one,
            "penta4": p4,
        },
    });
    table.push_str(&format!(
        "reduced3: {} CNOTs per step ({} for a lone step); penta4: {} CNOTs per step\n",
        r3_two as f64 / 2.0,
        r3_one,
        p4
    ));
    let mut out = CommandOutput::single("resources.json", serde_json::to_string_pretty(&doc)?);
    out.display = Some(table);
    Ok(out)
}

/// Fits the series in `input` (CSV text).
pub fn fit(cfg: &RunConfig, input: &str) -> Result<CommandOutput> {
    let data = read_series_csv(input.as_bytes())?;
    let f = &cfg.fit;
    let post = sample(&f.model, &data, &f.sampler, cfg.seed)?;
    let summary = summarize(&post)?;
    let mut csv = String::new();
    for (s, series) in data.iter().enumerate() {
        let lo = series.t.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = series.t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let n = f.predictive_points.max(2);
        let grid: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
        let band = posterior_predictive(&post, s, &grid, f.predictive_draws, crate::rng::derive_seed(cfg.seed, s as u64))?;
        let text = band.to_csv();
        if s == 0 {
            csv.push_str(&text);
        } else {
            csv.extend(text.lines().skip(2).map(|l| format!("{l}\n")));
        }
    }
    let mut display = String::new();
    for p in summary.frequencies.iter().chain(&summary.parameters) {
        display.push_str(&format!("{:<14} {} [{}, {}]\n", p.name, fmt_num(p.mean), fmt_num(p.hdi_low), fmt_num(p.hdi_high)));
    }
    let mut out = CommandOutput::single("fit_summary.json", summary.to_json());
    out.files.push(("predictive.csv".into(), csv));
    out.display = Some(display);
    Ok(out)
}
