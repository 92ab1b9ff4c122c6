use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use su3sim::commands::{self, CommandOutput};
use su3sim::config::{CircuitFormat, EvolveMethod, Preset, RunConfig};
use su3sim::model::{ModelParams, Variant};
use su3sim::{Error, Result};

#[derive(Parser)]
#[command(name = "su3sim", version, about = "SU(3) lattice gauge theory emulation on simulated qubits")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs and the resolved config; stdout when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and overlaps with the strong-coupling states.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        /// Also list the levels with this baryon number (full model).
        #[arg(long)]
        baryon_sector: Option<f64>,
    },
    /// Exact or product-formula time evolution of observables.
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        mt_max: Option<f64>,
        #[arg(long)]
        mt_step: Option<f64>,
        /// Repeatable: N, He, Hm, B.
        #[arg(long = "observable")]
        observables: Vec<String>,
        /// State label (e.g. baryonium) or spin pattern (e.g. ddd).
        #[arg(long)]
        initial: Option<String>,
    },
    /// Synthesises a Trotter circuit.
    TrotterCircuit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        no_peephole: bool,
        #[arg(long)]
        frame_gates: bool,
    },
    /// Noisy physics and mitigation runs with self-mitigation.
    Experiment {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        /// Repeatable Trotter step counts.
        #[arg(long = "n-trotter")]
        n_trotter: Vec<usize>,
        #[arg(long)]
        randomizations: Option<usize>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Switches every noise channel off.
        #[arg(long)]
        noiseless: bool,
    },
    /// CNOT counts per Trotter step.
    Resources {
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Bayesian cosine-series fit of a CSV time series.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    Reduced3,
    Penta4,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Trotter,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Qasm,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Tetra1,
    Tetra2,
    Penta,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long)]
    m_tilde: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.variant.is_none() && self.n_sites.is_none() && self.m_tilde.is_none() && self.x.is_none() {
            return;
        }
        let mut m = cfg.model_or_default();
        if let Some(v) = self.variant {
            m.variant = match v {
                VariantArg::Full => Variant::Full,
                VariantArg::Reduced3 => Variant::Reduced3,
                VariantArg::Penta4 => Variant::Penta4,
            };
            if !matches!(m.variant, Variant::Full) {
                m.n_sites = 2;
            }
        }
        if let Some(n) = self.n_sites {
            m.n_sites = n;
        }
        if let Some(v) = self.m_tilde {
            m.m_tilde = v;
        }
        if let Some(v) = self.x {
            m.x = v;
        }
        cfg.model = Some(ModelParams { ..m });
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_json(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.output {
        cfg.output = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    match &cli.command {
        Command::Spectrum { model, baryon_sector } => {
            model.apply(&mut cfg);
            if baryon_sector.is_some() {
                cfg.spectrum.baryon_sector = *baryon_sector;
            }
        }
        Command::Evolve { model, method, steps, mt_max, mt_step, observables, initial } => {
            model.apply(&mut cfg);
            let e = &mut cfg.evolve;
            if let Some(m) = method {
                e.method = match m {
                    MethodArg::Exact => EvolveMethod::Exact,
                    MethodArg::Trotter => EvolveMethod::Trotter,
                };
            }
            set(&mut e.trotter_steps, *steps);
            set(&mut e.mt_max, *mt_max);
            set(&mut e.mt_step, *mt_step);
            if !observables.is_empty() {
                e.observables = observables.clone();
            }
            if initial.is_some() {
                e.initial = initial.clone();
            }
        }
        Command::TrotterCircuit { model, dt, steps, format, no_peephole, frame_gates } => {
            model.apply(&mut cfg);
            let c = &mut cfg.circuit;
            set(&mut c.dt, *dt);
            set(&mut c.steps, *steps);
            if let Some(f) = format {
                c.format = match f {
                    FormatArg::Json => CircuitFormat::Json,
                    FormatArg::Qasm => CircuitFormat::Qasm,
                };
            }
            c.peephole &= !no_peephole;
            c.frame_gates |= frame_gates;
        }
        Command::Experiment { model, preset, n_trotter, randomizations, shots, t_final, noiseless } => {
            let chosen = preset.map(|p| match p {
                PresetArg::Tetra1 => Preset::Tetra1,
                PresetArg::Tetra2 => Preset::Tetra2,
                PresetArg::Penta => Preset::Penta,
            });
            if let Some(p) = chosen.or(cfg.experiment.preset) {
                cfg.apply_preset(p);
            }
            model.apply(&mut cfg);
            let e = &mut cfg.experiment;
            if !n_trotter.is_empty() {
                e.n_trotter = n_trotter.clone();
                e.randomizations.clear();
            }
            if let Some(r) = randomizations {
                e.randomizations = vec![*r; e.n_trotter.len()];
            }
            set(&mut e.plan.shots_per_circuit, *shots);
            set(&mut e.plan.t_final, *t_final);
            if *noiseless {
                e.noise = su3sim::noise::NoiseModel::ideal();
            }
        }
        Command::Resources { max_n } => set(&mut cfg.resources.max_n, *max_n),
        Command::Fit { input, k, samples, burn_in, chains } => {
            let f = &mut cfg.fit;
            if input.is_some() {
                f.input = input.clone();
            }
            if let Some(k) = k {
                let defaults = su3sim::inference::FitModel::with_k(*k);
                f.model.k = *k;
                f.model.freq_windows.resize(*k, defaults.freq_windows[0]);
                f.model.amp_windows.resize(*k, defaults.amp_windows[0]);
            }
            set(&mut f.sampler.n_samples, *samples);
            set(&mut f.sampler.burn_in, *burn_in);
            set(&mut f.sampler.n_chains, *chains);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<CommandOutput> {
    match &cli.command {
        Command::Spectrum { .. } => commands::spectrum(cfg),
        Command::Evolve { .. } => commands::evolve(cfg),
        Command::TrotterCircuit { .. } => commands::trotter_circuit(cfg),
        Command::Experiment { .. } => commands::experiment(cfg),
        Command::Resources { .. } => commands::resources(cfg),
        Command::Fit { .. } => {
            let path = cfg.fit.input.as_ref().ok_or_else(|| Error::InvalidParams("fit needs --input".into()))?;
            commands::fit(cfg, &fs::read_to_string(path)?)
        }
    }
}

fn write_outputs(dir: &Path, cfg: &RunConfig, out: &CommandOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in &out.files {
        fs::write(dir.join(name), contents)?;
    }
    fs::write(dir.join("config.json"), cfg.to_json())?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
    }
    let out = execute(cli, &cfg)?;
    match &cfg.output {
        Some(dir) => {
            write_outputs(dir, &cfg, &out)?;
            if let Some(text) = &out.display {
                print!("{text}");
            }
            for (name, _) in &out.files {
                eprintln!("wrote {}", dir.join(name).display());
            }
        }
        None => print!("{}", out.primary()),
    }
    Ok(())
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::from(1)
        }
    }
}
