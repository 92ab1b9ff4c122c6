//! Self-mitigation: physics runs corrected by forward-then-backward
//! mitigation runs, plus the end-to-end noisy experiment driver.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{synth_trotter_penta4, synth_trotter_reduced3, Circuit, Gate, SynthOptions};
use crate::config::fmt_num;
use crate::dynamics::QuantumState;
use crate::error::{invalid, Result};
use crate::model::{ModelParams, Variant};
use crate::noise::{
    build_confusion, calibration_circuits, correct_frequencies, diagonal_expectation, run_noisy, twirl, CalibrationMap,
    NoiseModel,
};
use crate::rng::{derive_seed, rng_from_seed};

/// Points whose mitigation signal falls below this fraction of the ideal are flagged.
pub const SIGNAL_THRESHOLD: f64 = 0.1;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigationPlan {
    pub n_trotter: usize,
    /// Last time point, in units of `1/m̃` (the grid is in `m̃t`).
    pub t_final: f64,
    /// Spacing of the `m̃t` grid.
    pub time_step: f64,
    pub randomizations: usize,
    pub shots_per_circuit: u64,
    /// Shots for each readout calibration circuit.
    pub calibration_shots: u64,
    pub kappa: f64,
    /// Total Trotter steps in the mitigation circuit (forward plus backward).
    pub mitigation_step_count: usize,
}

impl Default for MitigationPlan {
    fn default() -> Self {
        Self::new(4).expect("4 is a valid step count")
    }
}

impl MitigationPlan {
    /// Plan with the step-count rule: `N_T ∈ {2, 6}` runs `N_T` steps forward
    /// and back (`κ = ½`); otherwise `N_T/2` forward and back (`κ = 1`).
    pub fn new(n_trotter: usize) -> Result<Self> {
        if n_trotter == 0 || n_trotter % 2 == 1 {
            return Err(invalid(format!("n_trotter = {n_trotter} (must be even and positive)")));
        }
        let forward = Self::forward_steps_for(n_trotter);
        Ok(MitigationPlan {
            n_trotter,
            t_final: 4.0,
            time_step: 0.25,
            randomizations: 140,
            shots_per_circuit: 2048,
            calibration_shots: 32768,
            kappa: n_trotter as f64 / (2 * forward) as f64,
            mitigation_step_count: 2 * forward,
        })
    }

    fn forward_steps_for(n_trotter: usize) -> usize {
        if n_trotter == 2 || n_trotter == 6 {
            n_trotter
        } else {
            n_trotter / 2
        }
    }

    pub fn forward_steps(&self) -> usize {
        self.mitigation_step_count / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trotter == 0 || self.n_trotter % 2 == 1 {
            return Err(invalid(format!("n_trotter = {} (must be even and positive)", self.n_trotter)));
        }
        if self.mitigation_step_count == 0 || self.mitigation_step_count % 2 == 1 {
            return Err(invalid("mitigation_step_count must be even and positive"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(invalid("kappa must be positive"));
        }
        if self.randomizations == 0 || self.shots_per_circuit == 0 || self.calibration_shots == 0 {
            return Err(invalid("randomizations and shot counts must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0 && self.time_step.is_finite() && self.time_step > 0.0) {
            return Err(invalid("time grid needs t_final ≥ 0 and time_step > 0"));
        }
        Ok(())
    }

    /// `m̃t` grid `0, step, …, t_final`.
    pub fn mt_grid(&self) -> Vec<f64> {
        let n = (self.t_final / self.time_step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.time_step).collect()
    }
}

/// Diagonal observable measured in an experiment and the state it starts from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentObservable {
    pub n_qubits: usize,
    /// Diagonal of the traceless summed-Z observable `O`.
    pub diagonal: Vec<f64>,
    /// Reported value is `O + shift` (the particle number).
    pub shift: f64,
    pub initial_index: usize,
}

impl ExperimentObservable {
    pub fn for_model(params: &ModelParams) -> Result<Self> {
        let (n, weights, shift, initial_index): (usize, Vec<f64>, f64, usize) = match params.variant {
            // −(Z₁+Z₂+Z₃), starting from |↓↓↓⟩.
            Variant::Reduced3 => (3, vec![-1.0, -1.0, -1.0], 3.0, 0b111),
            // ½(−Z₂−Z₃+Z₅+Z₆), starting from |↑↑↓↓⟩.
            Variant::Penta4 => (4, vec![-0.5, -0.5, 0.5, 0.5], 5.0, 0b0011),
            _ => return Err(invalid("experiments run on the reduced3 or penta4 variants")),
        };
        let diagonal = (0..1usize << n)
            .map(|i| {
                (0..n)
                    .map(|q| {
                        let z = if i >> (n - 1 - q) & 1 == 0 { 1.0 } else { -1.0 };
                        weights[q] * z
                    })
                    .sum()
            })
            .collect();
        Ok(ExperimentObservable { n_qubits: n, diagonal, shift, initial_index })
    }

    /// Ideal value of `O` in the initial state.
    pub fn initial_value(&self) -> f64 {
        self.diagonal[self.initial_index]
    }

    pub fn initial_state(&self) -> QuantumState {
        QuantumState::basis(self.n_qubits, self.initial_index)
    }

    fn prep_gates(&self) -> Vec<Gate> {
        (0..self.n_qubits).filter(|&q| self.initial_index >> (self.n_qubits - 1 - q) & 1 == 1).map(Gate::X).collect()
    }

    pub fn value(&self, probs: &[f64]) -> f64 {
        diagonal_expectation(probs, &self.diagonal)
    }
}

fn trotter_circuit(params: &ModelParams, dt: f64, steps: usize) -> Result<Circuit> {
    let opts = SynthOptions::default();
    match params.variant {
        Variant::Reduced3 => synth_trotter_reduced3(dt, params.m_tilde, params.x, steps, &opts),
        Variant::Penta4 => synth_trotter_penta4(dt, params.m_tilde, params.x, steps, &opts),
        _ => Err(invalid("experiments run on the reduced3 or penta4 variants")),
    }
}

/// Physics and mitigation circuits at physical time `t`, state preparation included.
pub fn build_runs(plan: &MitigationPlan, params: &ModelParams, t: f64) -> Result<(Circuit, Circuit)> {
    plan.validate()?;
    params.validate()?;
    let obs = ExperimentObservable::for_model(params)?;
    let dt = t / plan.n_trotter as f64;
    let prep = Circuit::from_gates(obs.n_qubits, obs.prep_gates())?;

    let mut physics = prep.clone();
    let body = trotter_circuit(params, dt, plan.n_trotter)?;
    physics.append(&body)?;
    physics.metadata = body.metadata.clone();

    let forward = trotter_circuit(params, dt, plan.forward_steps())?;
    let mut mitigation = prep;
    mitigation.append(&forward)?;
    mitigation.append(&forward.inverse())?;
    mitigation.metadata = forward.metadata.clone();
    mitigation.metadata.trotter_steps = plan.mitigation_step_count;
    Ok((physics, mitigation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    Ok,
    /// The measured mitigation value has the opposite sign to the ideal one.
    SignFlip,
    /// `|mitig_meas| < 0.1·|mitig_true|`.
    SmallSignal,
}

impl QualityFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityFlag::Ok => "ok",
            QualityFlag::SignFlip => "sign_flip",
            QualityFlag::SmallSignal => "small_signal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mitigated {
    /// Corrected value, or the uncorrected physics value when flagged.
    pub value: f64,
    pub flag: QualityFlag,
}

/// `(mitig_true / mitig_meas)^κ · phys_meas`, flagged instead of corrected
/// when the mitigation signal is unreliable.
pub fn self_mitigate(phys_meas: f64, mitig_meas: f64, mitig_true: f64, kappa: f64) -> Mitigated {
    if mitig_meas * mitig_true <= 0.0 && mitig_true != 0.0 {
        let flag = if mitig_meas == 0.0 { QualityFlag::SmallSignal } else { QualityFlag::SignFlip };
        return Mitigated { value: phys_meas, flag };
    }
    if mitig_meas.abs() < SIGNAL_THRESHOLD * mitig_true.abs() || mitig_meas == 0.0 {
        return Mitigated { value: phys_meas, flag: QualityFlag::SmallSignal };
    }
    Mitigated { value: (mitig_true / mitig_meas).powf(kappa) * phys_meas, flag: QualityFlag::Ok }
}

/// One time point of an experiment; expectation columns include the shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub mt: f64,
    pub n_trotter: usize,
    /// Physics run, no readout correction.
    pub raw_phys: f64,
    /// Mitigation run, no readout correction.
    pub raw_mitig: f64,
    pub readout_phys: f64,
    pub readout_mitig: f64,
    pub corrected: f64,
    /// Bootstrap standard deviation of `corrected`.
    pub err: f64,
    /// Bootstrap standard deviation of `readout_phys`.
    pub unmitigated_err: f64,
    pub quality_flag: QualityFlag,
    /// Noiseless expectation of the physics circuit.
    pub exact_trotter: f64,
}

pub const EXPERIMENT_CSV_HEADER: &str = "# su3sim experiment v1";

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(EXPERIMENT_CSV_HEADER);
    out.push_str(
        "\nmt,raw_phys,raw_mitig,corrected,err,quality_flag,n_trotter,readout_phys,readout_mitig,unmitigated_err,exact_trotter\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_num(r.mt),
            fmt_num(r.raw_phys),
            fmt_num(r.raw_mitig),
            fmt_num(r.corrected),
            fmt_num(r.err),
            r.quality_flag.as_str(),
            r.n_trotter,
            fmt_num(r.readout_phys),
            fmt_num(r.readout_mitig),
            fmt_num(r.unmitigated_err),
            fmt_num(r.exact_trotter),
        ));
    }
    out
}

/// Per-randomization estimates of `O` (without shift).
#[derive(Debug, Clone, Copy)]
struct Sample {
    phys_raw: f64,
    mitig_raw: f64,
    phys: f64,
    mitig: f64,
}

/// Readout map from noisy calibration runs; the identity when readout is noiseless.
pub fn calibrate(n_qubits: usize, noise: &NoiseModel, shots: u64, seed: u64) -> Result<CalibrationMap> {
    let circuits = calibration_circuits(n_qubits)?;
    let counts = circuits
        .par_iter()
        .enumerate()
        .map(|(k, c)| run_noisy(c, noise, shots, derive_seed(seed, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    build_confusion(&counts)
}

/// Runs the alternating physics/mitigation schedule at every grid point.
///
/// Randomization `r` at time index `k` uses twirl and shot seeds derived from
/// `(seed, k, r)`, so results do not depend on thread scheduling.
pub fn run_experiment(
    params: &ModelParams,
    plan: &MitigationPlan,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    plan.validate()?;
    noise.validate()?;
    let obs = ExperimentObservable::for_model(params)?;
    let map = calibrate(obs.n_qubits, noise, plan.calibration_shots, derive_seed(seed, u64::MAX))?;
    let mitig_true = obs.initial_value();
    plan.mt_grid()
        .into_iter()
        .enumerate()
        .map(|(k, mt)| {
            let t = mt / params.m_tilde;
            let (physics, mitigation) = build_runs(plan, params, t)?;
            let exact = {
                let psi = physics.run(&QuantumState::basis(obs.n_qubits, 0))?;
                obs.value(&psi.probabilities())
            };
            let point_seed = derive_seed(seed, k as u64);
            let samples = (0..plan.randomizations)
                .into_par_iter()
                .map(|r| {
                    let rs = derive_seed(point_seed, r as u64);
                    let measure = |c: &Circuit, stream: u64| -> Result<(f64, f64)> {
                        let twirled = twirl(c, derive_seed(rs, 2 * stream));
                        let counts = run_noisy(&twirled, noise, plan.shots_per_circuit, derive_seed(rs, 2 * stream + 1))?;
                        let f = counts.frequencies(obs.n_qubits)?;
                        let corrected = correct_frequencies(&f, &map)?;
                        Ok((obs.value(&f), obs.value(&corrected.probabilities)))
                    };
                    // Physics first, then mitigation, for every randomization.
                    let (phys_raw, phys) = measure(&physics, 0)?;
                    let (mitig_raw, mitig) = measure(&mitigation, 1)?;
                    Ok(Sample { phys_raw, mitig_raw, phys, mitig })
                })
                .collect::<Result<Vec<_>>>()?;
            let mean = |f: fn(&Sample) -> f64| samples.iter().map(f).sum::<f64>() / samples.len() as f64;
            let phys = mean(|s| s.phys);
            let mitig = mean(|s| s.mitig);
            let point = self_mitigate(phys, mitig, mitig_true, plan.kappa);
            let (err, unmitigated_err) =
                bootstrap(&samples, mitig_true, plan.kappa, BOOTSTRAP_RESAMPLES, derive_seed(point_seed, u64::MAX));
            Ok(ExperimentRecord {
                mt,
                n_trotter: plan.n_trotter,
                raw_phys: mean(|s| s.phys_raw) + obs.shift,
                raw_mitig: mean(|s| s.mitig_raw) + obs.shift,
                readout_phys: phys + obs.shift,
                readout_mitig: mitig + obs.shift,
                corrected: point.value + obs.shift,
                err,
                unmitigated_err,
                quality_flag: point.flag,
                exact_trotter: exact + obs.shift,
            })
        })
        .collect()
}

/// Standard deviations of the mitigated and unmitigated estimators over
/// randomization-level resamples.
fn bootstrap(samples: &[Sample], mitig_true: f64, kappa: f64, resamples: usize, seed: u64) -> (f64, f64) {
    let n = samples.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let mut rng = rng_from_seed(seed);
    let mut mitigated = Vec::with_capacity(resamples);
    let mut plain = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut p, mut m) = (0.0, 0.0);
        for _ in 0..n {
            let s = &samples[rng.random_range(0..n)];
            p += s.phys;
            m += s.mitig;
        }
        p /= n as f64;
        m /= n as f64;
        mitigated.push(self_mitigate(p, m, mitig_true, kappa).value);
        plain.push(p);
    }
    (std_dev(&mitigated), std_dev(&plain))
}

pub(crate) fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correction_arithmetic() {
        let m = self_mitigate(1.6, 2.4, 3.0, 1.0);
        assert!((m.value - 2.0).abs() < 1e-12);
        assert_eq!(m.flag, QualityFlag::Ok);
        assert!((self_mitigate(1.6, 2.4, 3.0, 0.5).value - 1.788854381999832).abs() < 1e-12);
        assert_eq!(self_mitigate(1.6, 3.0, 3.0, 0.7).value, 1.6);
    }

    #[test]
    fn unreliable_points_flagged() {
        let m = self_mitigate(1.6, -0.5, 3.0, 1.0);
        assert_eq!(m.flag, QualityFlag::SignFlip);
        assert_eq!(m.value, 1.6);
        assert_eq!(self_mitigate(1.6, 0.2, 3.0, 1.0).flag, QualityFlag::SmallSignal);
        assert_eq!(self_mitigate(1.6, 0.31, 3.0, 1.0).flag, QualityFlag::Ok);
    }

    #[test]
    fn plan_rule() {
        assert!(MitigationPlan::new(3).is_err());
        let p = MitigationPlan::new(4).unwrap();
        assert_eq!((p.mitigation_step_count, p.kappa), (4, 1.0));
        assert_eq!(MitigationPlan::new(2).unwrap().kappa, 0.5);
        assert_eq!(MitigationPlan::new(6).unwrap().kappa, 0.5);
        assert_eq!(MitigationPlan::new(8).unwrap().kappa, 1.0);
        assert_eq!(p.mt_grid().len(), 17);
    }

    #[test]
    fn kappa_is_cnot_ratio() {
        let params = ModelParams::reduced3(1.2, 0.8);
        for nt in [2, 4, 6, 8] {
            let plan = MitigationPlan::new(nt).unwrap();
            let (p, m) = build_runs(&plan, &params, 1.3).unwrap();
            assert!((p.cnot_count() as f64 / m.cnot_count() as f64 - plan.kappa).abs() < 1e-12, "N_T = {nt}");
        }
    }

    #[test]
    fn mitigation_circuit_returns_to_start() {
        for params in [ModelParams::reduced3(1.2, 0.8), ModelParams::penta4(0.1, 3.0)] {
            let obs = ExperimentObservable::for_model(&params).unwrap();
            for nt in [2, 4, 6] {
                let plan = MitigationPlan::new(nt).unwrap();
                let (_, m) = build_runs(&plan, &params, 2.1).unwrap();
                let psi = m.run(&QuantumState::basis(obs.n_qubits, 0)).unwrap();
                assert!((psi.probabilities()[obs.initial_index] - 1.0).abs() < 1e-12);
            }
        }
        let obs = ExperimentObservable::for_model(&ModelParams::reduced3(1.2, 0.8)).unwrap();
        assert_eq!(obs.initial_value() + obs.shift, 6.0);
        let obs = ExperimentObservable::for_model(&ModelParams::penta4(0.1, 3.0)).unwrap();
        assert_eq!(obs.initial_value() + obs.shift, 3.0);
    }

    #[test]
    fn noiseless_experiment_tracks_trotter_curve() {
        let params = ModelParams::reduced3(1.2, 0.8);
        let plan = MitigationPlan { t_final: 1.0, randomizations: 4, shots_per_circuit: 512, ..MitigationPlan::new(4).unwrap() };
        let recs = run_experiment(&params, &plan, &NoiseModel::ideal(), 5).unwrap();
        assert_eq!(recs.len(), 5);
        let tol = 4.0 * 3.0 / ((512 * 4) as f64).sqrt();
        for r in &recs {
            assert!((r.corrected - r.exact_trotter).abs() < tol, "{r:?}");
            assert!((r.raw_mitig - 6.0).abs() < 1e-12);
        }
        assert!((recs[0].exact_trotter - 6.0).abs() < 1e-12);
        assert!(records_to_csv(&recs).starts_with(EXPERIMENT_CSV_HEADER));
    }
}
