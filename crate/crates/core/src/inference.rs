//! Bayesian cosine-series fits of expectation-value time series.
//!
//! Each series `s` is modelled as `ξ_s + Σ_i A_i cos(ω_i t + φ_i)` with
//! Gaussian noise of scale `σ_s`; amplitudes, frequencies and phases are
//! shared between series. Sampling uses adaptive random-walk Metropolis.

use std::f64::consts::{PI, TAU};
use std::io::Read;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::fmt_num;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// One observed time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub id: String,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub err: Vec<f64>,
}

impl Series {
    pub fn new(id: impl Into<String>, t: Vec<f64>, y: Vec<f64>, err: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() || t.len() != err.len() {
            return Err(invalid("series columns have different lengths"));
        }
        if t.is_empty() {
            return Err(invalid("empty series"));
        }
        Ok(Series { id: id.into(), t, y, err })
    }

    /// Series without error bars.
    pub fn exact(id: impl Into<String>, t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = t.len();
        Self::new(id, t, y, vec![0.0; n])
    }

    pub fn mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }

    fn is_constant(&self) -> bool {
        let m = self.mean();
        self.y.iter().all(|v| (v - m).abs() < 1e-12)
    }
}

/// Reads `mt,value,err,series_id` rows; lines starting with `#` are skipped.
/// Experiment CSVs (`corrected`, grouped by `n_trotter`) and evolution CSVs
/// (grouped by `observable`, no error column) are accepted as well.
pub fn read_series_csv(reader: impl Read) -> Result<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let find = |names: &[&str]| names.iter().find_map(|n| headers.iter().position(|h| h == *n));
    let col = |names: &[&str]| find(names).ok_or_else(|| Error::Parse(format!("missing column {:?}", names[0])));
    let (ct, cv) = (col(&["mt"])?, col(&["value", "corrected"])?);
    let ce = find(&["err"]);
    let cs = find(&["series_id", "n_trotter", "observable"]);
    let mut out: Vec<Series> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            let field = rec.get(c).ok_or_else(|| Error::Parse(format!("row {}: missing field", line + 1)))?;
            field.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: {field:?} is not a number", line + 1)))
        };
        let id = cs.and_then(|c| rec.get(c)).unwrap_or("0").to_string();
        let (t, v) = (num(ct)?, num(cv)?);
        let e = match ce {
            Some(c) => num(c)?,
            None => 0.0,
        };
        match out.iter_mut().find(|s| s.id == id) {
            Some(s) => {
                s.t.push(t);
                s.y.push(v);
                s.err.push(e);
            }
            None => out.push(Series { id, t: vec![t], y: vec![v], err: vec![e] }),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitModel {
    /// Number of cosine components.
    pub k: usize,
    /// Uniform prior window per angular frequency (time units of the data).
    pub freq_windows: Vec<[f64; 2]>,
    /// Uniform prior window per amplitude.
    pub amp_windows: Vec<[f64; 2]>,
    /// Standard deviation of the zero-mean normal prior on each phase.
    pub phase_scale: f64,
    /// Standard deviation of the normal prior on each offset, centred on the series mean.
    pub offset_scale: f64,
    /// Lower bound on the half-normal σ scale; the largest error bar is used if bigger.
    pub sigma_floor: f64,
}

impl Default for FitModel {
    fn default() -> Self {
        Self::with_k(2)
    }
}

impl FitModel {
    /// Frequencies in `[0.05, 1]·2π`, amplitudes in `[−10, 10]`.
    pub fn with_k(k: usize) -> Self {
        FitModel {
            k,
            freq_windows: vec![[0.05 * TAU, TAU]; k],
            amp_windows: vec![[-10.0, 10.0]; k],
            phase_scale: PI / 2.0,
            offset_scale: 2.0,
            sigma_floor: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if self.freq_windows.len() != self.k || self.amp_windows.len() != self.k {
            return Err(invalid("one frequency and one amplitude window per component"));
        }
        for w in self.freq_windows.iter().chain(&self.amp_windows) {
            if !(w[0].is_finite() && w[1].is_finite() && w[0] < w[1]) {
                return Err(invalid(format!("prior window {w:?} is empty or infinite")));
            }
        }
        if !(self.phase_scale > 0.0 && self.offset_scale > 0.0 && self.sigma_floor > 0.0) {
            return Err(invalid("prior scales must be positive"));
        }
        Ok(())
    }

    pub fn n_params(&self, n_series: usize) -> usize {
        3 * self.k + 2 * n_series
    }

    pub fn param_names(&self, data: &[Series]) -> Vec<String> {
        let mut names = Vec::new();
        for pfx in ["omega", "amp", "phase"] {
            names.extend((1..=self.k).map(|i| format!("{pfx}{i}")));
        }
        names.extend(data.iter().map(|s| format!("offset[{}]", s.id)));
        names.extend(data.iter().map(|s| format!("sigma[{}]", s.id)));
        names
    }

    fn sigma_scale(&self, data: &[Series]) -> f64 {
        data.iter().flat_map(|s| s.err.iter().copied()).fold(self.sigma_floor, f64::max)
    }
}

/// Parameter vector layout: `ω₁…ω_K, A₁…A_K, φ₁…φ_K, ξ_1…ξ_S, σ_1…σ_S`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    k: usize,
    s: usize,
}

impl Layout {
    fn omega(&self, i: usize) -> usize {
        i
    }
    fn amp(&self, i: usize) -> usize {
        self.k + i
    }
    fn phase(&self, i: usize) -> usize {
        2 * self.k + i
    }
    fn offset(&self, s: usize) -> usize {
        3 * self.k + s
    }
    fn sigma(&self, s: usize) -> usize {
        3 * self.k + self.s + s
    }
}

/// `ξ + Σ A_i cos(ω_i t + φ_i)` for series `s`.
pub fn model_mean(model: &FitModel, n_series: usize, theta: &[f64], s: usize, t: f64) -> f64 {
    let l = Layout { k: model.k, s: n_series };
    theta[l.offset(s)] + (0..model.k).map(|i| theta[l.amp(i)] * (theta[l.omega(i)] * t + theta[l.phase(i)]).cos()).sum::<f64>()
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Sum of normal log-likelihoods over all series and points.
pub fn log_likelihood(model: &FitModel, data: &[Series], theta: &[f64]) -> f64 {
    let l = Layout { k: model.k, s: data.len() };
    let mut total = 0.0;
    for (s, series) in data.iter().enumerate() {
        let sigma = theta[l.sigma(s)];
        if sigma <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let norm = -sigma.ln() - LN_SQRT_2PI;
        for (&t, &y) in series.t.iter().zip(&series.y) {
            let r = (y - model_mean(model, data.len(), theta, s, t)) / sigma;
            total += norm - 0.5 * r * r;
        }
    }
    total
}

/// Log prior density; `−∞` outside the windows, for `σ ≤ 0`, or when the
/// frequencies are not in descending order.
pub fn log_prior(model: &FitModel, data: &[Series], theta: &[f64]) -> f64 {
    let l = Layout { k: model.k, s: data.len() };
    let mut lp = 0.0;
    for i in 0..model.k {
        let (w, a) = (model.freq_windows[i], model.amp_windows[i]);
        let (om, amp) = (theta[l.omega(i)], theta[l.amp(i)]);
        if !(w[0]..=w[1]).contains(&om) || !(a[0]..=a[1]).contains(&amp) {
            return f64::NEG_INFINITY;
        }
        if i > 0 && theta[l.omega(i - 1)] < om {
            return f64::NEG_INFINITY;
        }
        lp -= (w[1] - w[0]).ln() + (a[1] - a[0]).ln();
        let z = theta[l.phase(i)] / model.phase_scale;
        lp += -0.5 * z * z - model.phase_scale.ln() - LN_SQRT_2PI;
    }
    let sigma_scale = model.sigma_scale(data);
    for (s, series) in data.iter().enumerate() {
        let z = (theta[l.offset(s)] - series.mean()) / model.offset_scale;
        lp += -0.5 * z * z - model.offset_scale.ln() - LN_SQRT_2PI;
        let sigma = theta[l.sigma(s)];
        if sigma <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = sigma / sigma_scale;
        lp += -0.5 * z * z - sigma_scale.ln() - LN_SQRT_2PI + std::f64::consts::LN_2;
    }
    lp
}

pub fn log_posterior(model: &FitModel, data: &[Series], theta: &[f64]) -> f64 {
    let lp = log_prior(model, data, theta);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_likelihood(model, data, theta)
}

/// Sorts components by descending frequency, carrying amplitude and phase.
fn order_components(model: &FitModel, n_series: usize, theta: &mut [f64]) {
    let l = Layout { k: model.k, s: n_series };
    let mut comps: Vec<(f64, f64, f64)> =
        (0..model.k).map(|i| (theta[l.omega(i)], theta[l.amp(i)], theta[l.phase(i)])).collect();
    comps.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (i, (om, a, ph)) in comps.into_iter().enumerate() {
        theta[l.omega(i)] = om;
        theta[l.amp(i)] = a;
        theta[l.phase(i)] = ph;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Iterations per chain, burn-in included.
    pub n_samples: usize,
    pub burn_in: usize,
    pub n_chains: usize,
    pub target_acceptance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_samples: 12_000, burn_in: 4_000, n_chains: 4, target_acceptance: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub param_names: Vec<String>,
    pub k: usize,
    pub series_ids: Vec<String>,
    /// Post-burn-in draws of all chains, chain by chain.
    pub samples: Vec<Vec<f64>>,
    pub n_chains: usize,
    pub acceptance_rate: f64,
    pub seed: u64,
    /// Split-chain potential scale reduction per parameter.
    pub r_hat: Vec<f64>,
    /// Every series was constant, so the fit is prior-dominated.
    pub degenerate_data: bool,
}

/// Starting point from a frequency grid search with linear least squares
/// for offsets, amplitudes and phases.
pub fn initial_estimate(model: &FitModel, data: &[Series]) -> Vec<f64> {
    let l = Layout { k: model.k, s: data.len() };
    let mut omegas: Vec<f64> = Vec::new();
    let grid = |w: [f64; 2], n: usize| (0..n).map(move |j| w[0] + (w[1] - w[0]) * j as f64 / (n - 1) as f64);
    for i in 0..model.k {
        let best = grid(model.freq_windows[i], 800)
            .map(|om| {
                let mut trial = omegas.clone();
                trial.push(om);
                (om, linear_fit(data, &trial).1)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(om, _)| om)
            .unwrap_or(model.freq_windows[i][0]);
        omegas.push(best);
    }
    // Coordinate refinement with shrinking local grids.
    let mut width = (model.freq_windows[0][1] - model.freq_windows[0][0]) / 400.0;
    for _ in 0..12 {
        for i in 0..model.k {
            let w = model.freq_windows[i];
            let centre = omegas[i];
            let local = [(centre - width).max(w[0]), (centre + width).min(w[1])];
            let best = grid(local, 41)
                .map(|om| {
                    let mut trial = omegas.clone();
                    trial[i] = om;
                    (om, linear_fit(data, &trial).1)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(om, _)| om)
                .unwrap_or(centre);
            omegas[i] = best;
        }
        width *= 0.5;
    }
    let (coef, _) = linear_fit(data, &omegas);
    let mut theta = vec![0.0; model.n_params(data.len())];
    for i in 0..model.k {
        let (a, b) = (coef[data.len() + 2 * i], coef[data.len() + 2 * i + 1]);
        let w = model.amp_windows[i];
        theta[l.omega(i)] = omegas[i];
        theta[l.amp(i)] = a.hypot(b).clamp(w[0], w[1]);
        theta[l.phase(i)] = (-b).atan2(a);
    }
    for (s, series) in data.iter().enumerate() {
        theta[l.offset(s)] = coef[s];
        let resid = series.y.iter().zip(&series.t).map(|(&y, &t)| {
            let mut m = coef[s];
            for (i, om) in omegas.iter().enumerate() {
                m += coef[data.len() + 2 * i] * (om * t).cos() + coef[data.len() + 2 * i + 1] * (om * t).sin();
            }
            (y - m).powi(2)
        });
        theta[l.sigma(s)] = (resid.sum::<f64>() / series.y.len() as f64).sqrt().max(1e-3);
    }
    order_components(model, data.len(), &mut theta);
    theta
}

/// Least squares on `[offset per series, cos ω_i t, sin ω_i t]`; returns the
/// coefficients and the residual sum of squares.
fn linear_fit(data: &[Series], omegas: &[f64]) -> (Vec<f64>, f64) {
    let n_rows: usize = data.iter().map(|s| s.t.len()).sum();
    let n_cols = data.len() + 2 * omegas.len();
    let mut a = DMatrix::<f64>::zeros(n_rows, n_cols);
    let mut y = DVector::<f64>::zeros(n_rows);
    let mut row = 0;
    for (s, series) in data.iter().enumerate() {
        for (&t, &v) in series.t.iter().zip(&series.y) {
            a[(row, s)] = 1.0;
            for (i, om) in omegas.iter().enumerate() {
                a[(row, data.len() + 2 * i)] = (om * t).cos();
                a[(row, data.len() + 2 * i + 1)] = (om * t).sin();
            }
            y[row] = v;
            row += 1;
        }
    }
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&y, 1e-10).unwrap_or_else(|_| DVector::zeros(n_cols));
    let rss = (&a * &coef - &y).norm_squared();
    (coef.iter().copied().collect(), rss)
}

struct ChainResult {
    draws: Vec<Vec<f64>>,
    accepted: usize,
}

fn initial_scales(model: &FitModel, data: &[Series], theta: &[f64]) -> Vec<f64> {
    let l = Layout { k: model.k, s: data.len() };
    let mut s = vec![0.0; theta.len()];
    for i in 0..model.k {
        s[l.omega(i)] = 1e-3 * (model.freq_windows[i][1] - model.freq_windows[i][0]);
        s[l.amp(i)] = 1e-2;
        s[l.phase(i)] = 1e-2;
    }
    for j in 0..data.len() {
        s[l.offset(j)] = 1e-2;
        s[l.sigma(j)] = 0.1 * theta[l.sigma(j)].max(1e-3);
    }
    s
}

fn run_chain(model: &FitModel, data: &[Series], cfg: &SamplerConfig, start: Vec<f64>, rng: &mut SimRng) -> ChainResult {
    let d = start.len();
    let mut x = start;
    let mut lp = log_posterior(model, data, &x);
    let scales = initial_scales(model, data, &x);
    let mut chol = DMatrix::<f64>::from_diagonal(&DVector::from_vec(scales.clone()));
    let mut log_lambda = 0.0f64;
    // Running moments of the burn-in history.
    let mut mean = DVector::<f64>::zeros(d);
    let mut m2 = DMatrix::<f64>::zeros(d, d);
    let mut n_hist = 0usize;
    let adapt_start = (cfg.burn_in / 10).max(1);
    let mut draws = Vec::with_capacity(cfg.n_samples.saturating_sub(cfg.burn_in));
    let mut accepted = 0;
    for it in 0..cfg.n_samples {
        let z = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(rng));
        let step = &chol * z * log_lambda.exp();
        let mut y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        order_components(model, data.len(), &mut y);
        let lp_y = log_posterior(model, data, &y);
        let accept = lp_y.is_finite() && (lp_y - lp >= 0.0 || rng.random::<f64>().ln() < lp_y - lp);
        if accept {
            x = y;
            lp = lp_y;
        }
        if it < cfg.burn_in {
            let gamma = 1.0 / ((it + 1) as f64).sqrt().max(10.0);
            log_lambda += gamma * ((accept as u8 as f64) - cfg.target_acceptance);
            if it >= adapt_start {
                n_hist += 1;
                let xv = DVector::from_column_slice(&x);
                let delta = &xv - &mean;
                mean += &delta / n_hist as f64;
                m2 += &delta * (&xv - &mean).transpose();
                if n_hist >= 4 * d && n_hist.is_multiple_of(100) {
                    let cov = &m2 / (n_hist - 1) as f64 * (2.38 * 2.38 / d as f64)
                        + DMatrix::from_diagonal(&DVector::from_iterator(d, scales.iter().map(|s| 1e-4 * s * s)));
                    if let Some(c) = cov.cholesky() {
                        chol = c.l();
                        log_lambda = 0.0;
                    }
                }
            }
        } else {
            accepted += accept as usize;
            draws.push(x.clone());
        }
    }
    ChainResult { draws, accepted }
}

/// Adaptive Metropolis over all parameters; deterministic in `seed`.
pub fn sample(model: &FitModel, data: &[Series], cfg: &SamplerConfig, seed: u64) -> Result<Posterior> {
    model.validate()?;
    if data.is_empty() || data.iter().any(|s| s.t.is_empty()) {
        return Err(invalid("no data to fit"));
    }
    if cfg.n_samples <= cfg.burn_in || cfg.n_chains == 0 {
        return Err(invalid("n_samples must exceed burn_in and n_chains must be positive"));
    }
    let init = initial_estimate(model, data);
    let chains: Vec<ChainResult> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, c as u64));
            let scales = initial_scales(model, data, &init);
            let mut start = init.clone();
            for _ in 0..100 {
                let trial: Vec<f64> = init
                    .iter()
                    .zip(&scales)
                    .map(|(v, s)| v + 5.0 * s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                let mut trial = trial;
                order_components(model, data.len(), &mut trial);
                if log_posterior(model, data, &trial).is_finite() {
                    start = trial;
                    break;
                }
            }
            run_chain(model, data, cfg, start, &mut rng)
        })
        .collect();
    let kept = cfg.n_samples - cfg.burn_in;
    let accepted: usize = chains.iter().map(|c| c.accepted).sum();
    let r_hat = split_r_hat(&chains.iter().map(|c| c.draws.as_slice()).collect::<Vec<_>>());
    Ok(Posterior {
        param_names: model.param_names(data),
        k: model.k,
        series_ids: data.iter().map(|s| s.id.clone()).collect(),
        samples: chains.into_iter().flat_map(|c| c.draws).collect(),
        n_chains: cfg.n_chains,
        acceptance_rate: accepted as f64 / (kept * cfg.n_chains) as f64,
        seed,
        r_hat,
        degenerate_data: data.iter().all(Series::is_constant),
    })
}

/// Gelman–Rubin statistic over half-chains.
pub fn split_r_hat(chains: &[&[Vec<f64>]]) -> Vec<f64> {
    let Some(d) = chains.first().and_then(|c| c.first()).map(|x| x.len()) else {
        return Vec::new();
    };
    let halves: Vec<&[Vec<f64>]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[h..2 * h]]
        })
        .filter(|h| h.len() >= 2)
        .collect();
    if halves.len() < 2 {
        return vec![f64::NAN; d];
    }
    let n = halves[0].len() as f64;
    (0..d)
        .map(|p| {
            let stats: Vec<(f64, f64)> = halves
                .iter()
                .map(|h| {
                    let m = h.iter().map(|x| x[p]).sum::<f64>() / h.len() as f64;
                    let v = h.iter().map(|x| (x[p] - m).powi(2)).sum::<f64>() / (h.len() - 1) as f64;
                    (m, v)
                })
                .collect();
            let grand = stats.iter().map(|s| s.0).sum::<f64>() / stats.len() as f64;
            let b = n * stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (stats.len() - 1) as f64;
            let w = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
            if w == 0.0 {
                return if b == 0.0 { 1.0 } else { f64::INFINITY };
            }
            (((n - 1.0) / n * w + b / n) / w).sqrt()
        })
        .collect()
}

/// Linear-interpolated percentile of sorted data, `q ∈ [0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    /// 2.5th percentile.
    pub hdi_low: f64,
    /// 97.5th percentile.
    pub hdi_high: f64,
    pub r_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub parameters: Vec<ParamSummary>,
    /// `ω_i / 2π` for each component, in cycles per unit time.
    pub frequencies: Vec<ParamSummary>,
    /// Index (0-based) of the component with the largest mean `|A|`.
    pub dominant_component: usize,
    pub acceptance_rate: f64,
    pub n_draws: usize,
    pub seed: u64,
    pub degenerate_data: bool,
}

impl FitSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }
}

fn summarize_values(name: String, mut v: Vec<f64>, r_hat: f64) -> ParamSummary {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.sort_by(f64::total_cmp);
    ParamSummary { name, mean, hdi_low: percentile(&v, 2.5), hdi_high: percentile(&v, 97.5), r_hat }
}

/// Posterior means and central 95% intervals.
pub fn summarize(p: &Posterior) -> Result<FitSummary> {
    if p.samples.len() < 1000 {
        return Err(invalid(format!("{} draws (need at least 1000)", p.samples.len())));
    }
    let column = |j: usize| p.samples.iter().map(|x| x[j]).collect::<Vec<f64>>();
    let parameters: Vec<ParamSummary> = p
        .param_names
        .iter()
        .enumerate()
        .map(|(j, name)| summarize_values(name.clone(), column(j), p.r_hat.get(j).copied().unwrap_or(f64::NAN)))
        .collect();
    let frequencies = (0..p.k)
        .map(|i| {
            summarize_values(
                format!("f{}", i + 1),
                column(i).into_iter().map(|w| w / TAU).collect(),
                p.r_hat.get(i).copied().unwrap_or(f64::NAN),
            )
        })
        .collect();
    let dominant_component = (0..p.k)
        .max_by(|&a, &b| {
            let ma = column(p.k + a).iter().sum::<f64>().abs();
            let mb = column(p.k + b).iter().sum::<f64>().abs();
            ma.total_cmp(&mb)
        })
        .unwrap_or(0);
    Ok(FitSummary {
        parameters,
        frequencies,
        dominant_component,
        acceptance_rate: p.acceptance_rate,
        n_draws: p.samples.len(),
        seed: p.seed,
        degenerate_data: p.degenerate_data,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveBand {
    pub series_id: String,
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl PredictiveBand {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# su3sim predictive v1\nmt,mean,low,high,series_id\n");
        for j in 0..self.t.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_num(self.t[j]),
                fmt_num(self.mean[j]),
                fmt_num(self.low[j]),
                fmt_num(self.high[j]),
                self.series_id
            ));
        }
        out
    }
}

/// Draws parameters from the posterior and observations from the likelihood
/// for series `series`, then reports the per-time mean and 2.5/97.5 percentiles.
pub fn posterior_predictive(p: &Posterior, series: usize, times: &[f64], n_draws: usize, seed: u64) -> Result<PredictiveBand> {
    if p.samples.is_empty() || series >= p.series_ids.len() || n_draws == 0 {
        return Err(invalid("posterior predictive needs draws and a valid series index"));
    }
    let model = FitModel::with_k(p.k);
    let n_series = p.series_ids.len();
    let l = Layout { k: p.k, s: n_series };
    let mut rng = rng_from_seed(seed);
    let mut ys = vec![Vec::with_capacity(n_draws); times.len()];
    for _ in 0..n_draws {
        let theta = &p.samples[rng.random_range(0..p.samples.len())];
        let noise = Normal::new(0.0, theta[l.sigma(series)]).map_err(|e| invalid(e.to_string()))?;
        for (j, &t) in times.iter().enumerate() {
            ys[j].push(model_mean(&model, n_series, theta, series, t) + noise.sample(&mut rng));
        }
    }
    let mut band = PredictiveBand {
        series_id: p.series_ids[series].clone(),
        t: times.to_vec(),
        mean: Vec::new(),
        low: Vec::new(),
        high: Vec::new(),
    };
    for mut v in ys {
        band.mean.push(v.iter().sum::<f64>() / v.len() as f64);
        v.sort_by(f64::total_cmp);
        band.low.push(percentile(&v, 2.5));
        band.high.push(percentile(&v, 97.5));
    }
    Ok(band)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(omega: f64, amp: f64, phase: f64, offset: f64, sigma: f64, seed: u64) -> Series {
        let mut rng = rng_from_seed(seed);
        let t: Vec<f64> = (0..=80).map(|j| j as f64 * 0.1).collect();
        let y = t
            .iter()
            .map(|&t| offset + amp * (omega * t + phase).cos() + sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        Series::new("0", t.clone(), y, vec![sigma; t.len()]).unwrap()
    }

    #[test]
    fn outside_window_is_impossible() {
        let m = FitModel::with_k(1);
        let d = vec![Series::exact("a", vec![0.0], vec![1.0]).unwrap()];
        assert_eq!(log_posterior(&m, &d, &[100.0, 1.0, 0.0, 0.0, 0.1]), f64::NEG_INFINITY);
        assert_eq!(log_posterior(&m, &d, &[1.0, 1.0, 0.0, 0.0, -0.1]), f64::NEG_INFINITY);
    }

    #[test]
    fn on_curve_point_gives_normalisation() {
        let m = FitModel::with_k(1);
        let d = vec![Series::exact("a", vec![0.0], vec![4.0]).unwrap()];
        let sigma = 0.7;
        let ll = log_likelihood(&m, &d, &[1.0, 1.0, 0.0, 3.0, sigma]);
        assert!((ll - (-(2.0 * PI * sigma * sigma).ln() / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn duplicate_series_double_likelihood() {
        let m = FitModel::with_k(1);
        let s = synthetic(1.5, 1.0, 0.2, 3.0, 0.1, 1);
        let one = log_likelihood(&m, std::slice::from_ref(&s), &[1.4, 0.9, 0.1, 3.0, 0.2]);
        let mut s2 = s.clone();
        s2.id = "1".into();
        let two = log_likelihood(&m, &[s, s2], &[1.4, 0.9, 0.1, 3.0, 3.0, 0.2, 0.2]);
        assert!((two - 2.0 * one).abs() < 1e-9);
    }

    #[test]
    fn ordering_relabels_only() {
        let m = FitModel::with_k(2);
        let mut th = vec![1.0, 2.0, 0.1, 0.2, 0.3, 0.4, 0.0, 0.1];
        order_components(&m, 1, &mut th);
        assert_eq!(th, vec![2.0, 1.0, 0.2, 0.1, 0.4, 0.3, 0.0, 0.1]);
    }

    #[test]
    fn recovers_synthetic_frequency() {
        let omega = TAU * 0.25;
        let data = vec![synthetic(omega, 1.0, 0.0, 3.0, 0.05, 11)];
        let cfg = SamplerConfig { n_samples: 6000, burn_in: 2000, n_chains: 2, ..Default::default() };
        let post = sample(&FitModel::with_k(1), &data, &cfg, 7).unwrap();
        let s = summarize(&post).unwrap();
        assert!((s.get("omega1").unwrap().mean / omega - 1.0).abs() < 0.02);
        assert!((s.get("offset[0]").unwrap().mean / 3.0 - 1.0).abs() < 0.02);
        assert!(post.acceptance_rate > 0.1 && post.acceptance_rate < 0.6, "{}", post.acceptance_rate);
        let again = sample(&FitModel::with_k(1), &data, &cfg, 7).unwrap();
        assert_eq!(post.samples, again.samples);
    }

    #[test]
    fn identical_draws_zero_width() {
        let p = Posterior {
            param_names: vec!["omega1".into(), "amp1".into()],
            k: 1,
            series_ids: vec!["0".into()],
            samples: vec![vec![2.0, 1.0]; 1200],
            n_chains: 1,
            acceptance_rate: 0.3,
            seed: 0,
            r_hat: vec![1.0, 1.0],
            degenerate_data: false,
        };
        let s = summarize(&p).unwrap();
        let w = s.get("omega1").unwrap();
        assert_eq!((w.hdi_low, w.mean, w.hdi_high), (2.0, 2.0, 2.0));
    }

    #[test]
    fn percentile_interval_spans_both_modes() {
        let mut v: Vec<f64> = (0..1000).map(|j| if j % 2 == 0 { -1.0 } else { 1.0 }).collect();
        v.sort_by(f64::total_cmp);
        assert_eq!(percentile(&v, 2.5), -1.0);
        assert_eq!(percentile(&v, 97.5), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let text = "# su3sim experiment v1\nmt,value,err,series_id\n0,1.0,0.1,a\n0.5,2.0,0.1,a\n0,3.0,0.2,b\n";
        let s = read_series_csv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].y, vec![1.0, 2.0]);
        assert!(read_series_csv("mt,val\n1,2\n".as_bytes()).is_err());
        assert!(read_series_csv("mt,value,err\n1,x,0\n".as_bytes()).is_err());
    }
}
