//! Run configuration shared by the CLI and the C ABI.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::inference::{FitModel, SamplerConfig};
use crate::mitigation::MitigationPlan;
use crate::model::ModelParams;
use crate::noise::NoiseModel;

/// Formats a float with at most 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round-trip of formatted float");
    format!("{rounded}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMethod {
    #[default]
    Exact,
    Trotter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitFormat {
    #[default]
    Json,
    Qasm,
}

/// Experiment presets with the published parameters and schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Tetraquark at `m̃ = 1.2`, `x = 0.8`; `N_T ∈ {2, 4, 6}`.
    Tetra1,
    /// Tetraquark at `m̃ = 0.45`, `x = 0.8`; `N_T = 4` (560 randomizations) and 8 (40).
    Tetra2,
    /// Pentaquark at `m̃ = 0.1`, `x = 3`; `N_T ∈ {2, 4}` on four qubits.
    Penta,
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tetra1" => Ok(Preset::Tetra1),
            "tetra2" => Ok(Preset::Tetra2),
            "penta" => Ok(Preset::Penta),
            _ => Err(crate::Error::Parse(format!("unknown preset {s:?} (tetra1, tetra2, penta)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Also report the spectrum restricted to this baryon number (full model only).
    pub baryon_sector: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub method: EvolveMethod,
    pub trotter_steps: usize,
    /// Final `m̃t` (or `t` when `m̃ = 0`).
    pub mt_max: f64,
    pub mt_step: f64,
    /// Any of `N` (particle number), `He` (electric energy), `Hm`, `B`.
    pub observables: Vec<String>,
    /// State label or spin pattern such as `"ddd"`; a per-variant default otherwise.
    pub initial: Option<String>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            method: EvolveMethod::Exact,
            trotter_steps: 8,
            mt_max: 8.0,
            mt_step: 0.05,
            observables: vec!["N".into()],
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    pub dt: f64,
    pub steps: usize,
    pub peephole: bool,
    pub frame_gates: bool,
    pub format: CircuitFormat,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig { dt: 0.1, steps: 1, peephole: true, frame_gates: false, format: CircuitFormat::Json }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub n_trotter: Vec<usize>,
    /// Randomizations per entry of `n_trotter`; falls back to `plan.randomizations`.
    pub randomizations: Vec<usize>,
    /// Schedule shared by all step counts (its `n_trotter`, `kappa` and
    /// `mitigation_step_count` are recomputed per run).
    pub plan: MitigationPlan,
    pub noise: NoiseModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: None,
            n_trotter: vec![4],
            randomizations: Vec::new(),
            plan: MitigationPlan::default(),
            noise: NoiseModel::default(),
        }
    }
}

impl ExperimentConfig {
    /// Plan for step count `n_trotter` at list position `idx`.
    pub fn plan_for(&self, idx: usize, n_trotter: usize) -> Result<MitigationPlan> {
        let rule = MitigationPlan::new(n_trotter)?;
        Ok(MitigationPlan {
            n_trotter,
            kappa: rule.kappa,
            mitigation_step_count: rule.mitigation_step_count,
            randomizations: self.randomizations.get(idx).copied().unwrap_or(self.plan.randomizations),
            ..self.plan.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcesConfig {
    pub max_n: usize,
}

impl Default for ResourcesConfig {
    fn default() -> Self {
        ResourcesConfig { max_n: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub model: FitModel,
    pub sampler: SamplerConfig,
    pub predictive_draws: usize,
    pub predictive_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            input: None,
            model: FitModel::default(),
            sampler: SamplerConfig::default(),
            predictive_draws: 5000,
            predictive_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    /// Output directory; results go to stdout when absent.
    pub output: Option<PathBuf>,
    pub model: Option<ModelParams>,
    pub spectrum: SpectrumConfig,
    pub evolve: EvolveConfig,
    pub circuit: CircuitConfig,
    pub experiment: ExperimentConfig,
    pub resources: ResourcesConfig,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            threads: None,
            output: None,
            model: None,
            spectrum: SpectrumConfig::default(),
            evolve: EvolveConfig::default(),
            circuit: CircuitConfig::default(),
            experiment: ExperimentConfig::default(),
            resources: ResourcesConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// The configured model, or the tetraquark register at `m̃ = 1.2`, `x = 0.8`.
    pub fn model_or_default(&self) -> ModelParams {
        self.model.unwrap_or(ModelParams::reduced3(1.2, 0.8))
    }

    /// Fills model and schedule from a preset.
    pub fn apply_preset(&mut self, preset: Preset) {
        let e = &mut self.experiment;
        e.preset = Some(preset);
        match preset {
            Preset::Tetra1 => {
                self.model = Some(ModelParams::reduced3(1.2, 0.8));
                e.n_trotter = vec![2, 4, 6];
                e.randomizations = vec![140, 140, 140];
                e.plan.t_final = 4.0;
                e.plan.time_step = 0.25;
            }
            Preset::Tetra2 => {
                self.model = Some(ModelParams::reduced3(0.45, 0.8));
                e.n_trotter = vec![4, 8];
                e.randomizations = vec![560, 40];
                e.plan.t_final = 8.0;
                e.plan.time_step = 0.25;
            }
            Preset::Penta => {
                self.model = Some(ModelParams::penta4(0.1, 3.0));
                e.n_trotter = vec![2, 4];
                e.randomizations = vec![140, 140];
                e.plan.t_final = 0.6;
                e.plan.time_step = 0.05;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be positive"));
        }
        let ev = &self.evolve;
        if !(ev.mt_max.is_finite() && ev.mt_max >= 0.0 && ev.mt_step.is_finite() && ev.mt_step > 0.0) {
            return Err(invalid("evolve needs mt_max ≥ 0 and mt_step > 0"));
        }
        if ev.trotter_steps == 0 {
            return Err(invalid("trotter_steps must be positive"));
        }
        if !self.circuit.dt.is_finite() || self.circuit.steps == 0 {
            return Err(invalid("circuit needs a finite dt and at least one step"));
        }
        let ex = &self.experiment;
        ex.noise.validate()?;
        for (i, &nt) in ex.n_trotter.iter().enumerate() {
            ex.plan_for(i, nt)?.validate()?;
        }
        self.fit.model.validate()?;
        if self.fit.sampler.n_samples <= self.fit.sampler.burn_in {
            return Err(invalid("fit sampler needs n_samples > burn_in"));
        }
        Ok(())
    }
}
