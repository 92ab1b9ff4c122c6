//! Shot-based noisy execution: gate noise, readout confusion, Pauli twirling
//! and readout calibration.
//!
//! Noise is attached to gates as follows: single-qubit depolarising after
//! every single-qubit gate; after every CNOT a coherent `exp(−iε Z_c Z_t / 2)`
//! rotation, two-qubit depolarising on the pair and, optionally, depolarising
//! of the whole register; independent bit flips at readout.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_gate, bit_of, conjugate_by_cnot, Circuit, Gate};
use crate::dynamics::QuantumState;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};
use crate::pauli::{check_dense, Letter, PauliString};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Largest register the density-matrix path accepts.
pub const DENSITY_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Two-qubit depolarising probability after each CNOT.
    pub cnot_depolarizing_p: f64,
    /// `ε` of the coherent `exp(−iε Z⊗Z/2)` after each CNOT, in radians.
    pub cnot_coherent_zz_angle: f64,
    /// Single-qubit depolarising probability after each single-qubit gate.
    pub single_qubit_pauli_p: f64,
    /// Per-qubit `[p(1→0), p(0→1)]`; a single entry applies to every qubit.
    pub readout_flip: Vec<[f64; 2]>,
    /// Whole-register depolarising probability after each CNOT.
    pub global_depolarizing_p: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            cnot_depolarizing_p: 5.2e-3,
            cnot_coherent_zz_angle: 0.02,
            single_qubit_pauli_p: 2e-4,
            readout_flip: vec![[0.015, 0.015]],
            global_depolarizing_p: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        NoiseModel {
            cnot_depolarizing_p: 0.0,
            cnot_coherent_zz_angle: 0.0,
            single_qubit_pauli_p: 0.0,
            readout_flip: Vec::new(),
            global_depolarizing_p: 0.0,
        }
    }

    /// Only whole-register depolarising after each CNOT.
    pub fn global_depolarizing(p: f64) -> Self {
        NoiseModel { global_depolarizing_p: p, ..Self::ideal() }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidProbability { name, value: v })
            }
        };
        check("cnot_depolarizing_p", self.cnot_depolarizing_p)?;
        check("single_qubit_pauli_p", self.single_qubit_pauli_p)?;
        check("global_depolarizing_p", self.global_depolarizing_p)?;
        for r in &self.readout_flip {
            check("readout_flip", r[0])?;
            check("readout_flip", r[1])?;
        }
        if !self.cnot_coherent_zz_angle.is_finite() {
            return Err(Error::InvalidParams("coherent ZZ angle must be finite".into()));
        }
        Ok(())
    }

    /// `[p(1→0), p(0→1)]` for register position `q`.
    pub fn readout_for(&self, q: usize) -> [f64; 2] {
        match self.readout_flip.len() {
            0 => [0.0, 0.0],
            1 => self.readout_flip[0],
            _ => self.readout_flip.get(q).copied().unwrap_or([0.0, 0.0]),
        }
    }

    fn has_readout_noise(&self) -> bool {
        self.readout_flip.iter().any(|r| r[0] > 0.0 || r[1] > 0.0)
    }
}

/// Measurement record; bitstrings list qubit 1 first, `0` = spin up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl ShotCounts {
    pub fn from_indices(n_qubits: usize, outcomes: impl IntoIterator<Item = usize>) -> Self {
        let mut hist = vec![0u64; 1 << n_qubits];
        for o in outcomes {
            hist[o] += 1;
        }
        Self::from_histogram(n_qubits, &hist)
    }

    pub fn from_histogram(n_qubits: usize, hist: &[u64]) -> Self {
        let counts: BTreeMap<String, u64> = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (format!("{i:0n_qubits$b}"), c))
            .collect();
        ShotCounts { shots: hist.iter().sum(), counts }
    }

    /// Width implied by the bitstrings, if any were recorded.
    pub fn n_qubits(&self) -> Option<usize> {
        self.counts.keys().next().map(|k| k.len())
    }

    /// Histogram over basis indices.
    pub fn histogram(&self, n_qubits: usize) -> Result<Vec<u64>> {
        let mut h = vec![0u64; 1 << n_qubits];
        for (k, &c) in &self.counts {
            if k.len() != n_qubits {
                return Err(Error::Parse(format!("bitstring {k:?} for {n_qubits} qubits")));
            }
            let i = usize::from_str_radix(k, 2).map_err(|_| Error::Parse(format!("bitstring {k:?}")))?;
            h[i] += c;
        }
        Ok(h)
    }

    pub fn frequencies(&self, n_qubits: usize) -> Result<Vec<f64>> {
        if self.shots == 0 {
            return Err(Error::InvalidParams("no shots recorded".into()));
        }
        Ok(self.histogram(n_qubits)?.into_iter().map(|c| c as f64 / self.shots as f64).collect())
    }

    pub fn merge(&mut self, other: &ShotCounts) {
        self.shots += other.shots;
        for (k, &c) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += c;
        }
    }
}

/// Mixed state on a small register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n_qubits: usize,
    rho: CMatrix,
}

impl DensityState {
    pub fn from_pure(psi: &QuantumState) -> Result<Self> {
        check_dense(psi.n_qubits(), DENSITY_LIMIT)?;
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Ok(DensityState { n_qubits: psi.n_qubits(), rho: &v * v.adjoint() })
    }

    /// Wraps an arbitrary square matrix; channels act linearly on it.
    pub fn from_matrix(n_qubits: usize, rho: CMatrix) -> Result<Self> {
        if rho.nrows() != 1 << n_qubits || rho.ncols() != 1 << n_qubits {
            return Err(Error::InvalidParams("matrix size does not match the register".into()));
        }
        Ok(DensityState { n_qubits, rho })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re.max(0.0)).collect()
    }

    /// `ρ → U ρ U†` for one gate.
    pub fn apply_gate(&mut self, g: &Gate) {
        let n = self.n_qubits;
        let dim = self.rho.nrows();
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            for i in 0..dim {
                col[i] = self.rho[(i, j)];
            }
            apply_gate(n, g, &mut col);
            for i in 0..dim {
                self.rho[(i, j)] = col[i];
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                col[j] = self.rho[(i, j)].conj();
            }
            apply_gate(n, g, &mut col);
            for j in 0..dim {
                self.rho[(i, j)] = col[j].conj();
            }
        }
    }

    fn apply_pauli(&mut self, p: &PauliString) {
        let (xi, zi) = p.index_masks();
        let ny = (p.x_mask() & p.z_mask()).count_ones();
        let dim = self.rho.nrows();
        let phase = |b: usize| {
            let k = ny as i64 + if (zi & b).count_ones() % 2 == 1 { 2 } else { 0 };
            crate::pauli::Phase::from_power(k).to_complex()
        };
        let old = self.rho.clone();
        for i in 0..dim {
            for j in 0..dim {
                // P|j⟩ = φ_j |j⊕x⟩, so (PρP†)[i⊕x, j⊕x] = φ_i ρ[i, j] φ_j*.
                self.rho[(i ^ xi, j ^ xi)] = phase(i) * old[(i, j)] * phase(j).conj();
            }
        }
    }

    /// `ρ → (1−p)ρ + p·(average of PρP over all Paulis on `qubits`)`.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let k = qubits.len();
        let mut acc = CMatrix::zeros(self.rho.nrows(), self.rho.ncols());
        for code in 0..(1usize << (2 * k)) {
            let mut s = PauliString::identity(self.n_qubits);
            for (m, &q) in qubits.iter().enumerate() {
                s.set(q, letter_from_code(code >> (2 * m) & 3));
            }
            let mut copy = self.clone();
            copy.apply_pauli(&s);
            acc += copy.rho;
        }
        let weight = Complex64::new(p / (1usize << (2 * k)) as f64, 0.0);
        self.rho = &self.rho * Complex64::new(1.0 - p, 0.0) + acc * weight;
    }

    /// `ρ → (1−p)ρ + p·Tr(ρ)·1/d`.
    pub fn depolarize_global(&mut self, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.rho.nrows();
        let tr: Complex64 = (0..dim).map(|i| self.rho[(i, i)]).sum();
        self.rho *= Complex64::new(1.0 - p, 0.0);
        for i in 0..dim {
            self.rho[(i, i)] += tr * (p / dim as f64);
        }
    }

    fn apply_coherent_zz(&mut self, c: usize, t: usize, eps: f64) {
        if eps == 0.0 {
            return;
        }
        let phases = zz_phases(self.n_qubits, c, t, eps);
        let dim = self.rho.nrows();
        for i in 0..dim {
            for j in 0..dim {
                self.rho[(i, j)] *= phases[i] * phases[j].conj();
            }
        }
    }

    /// One gate followed by its noise.
    pub fn apply_noisy_gate(&mut self, g: &Gate, noise: &NoiseModel) {
        self.apply_gate(g);
        match *g {
            Gate::Cnot { control, target } => {
                self.apply_coherent_zz(control, target, noise.cnot_coherent_zz_angle);
                self.depolarize(&[control, target], noise.cnot_depolarizing_p);
                self.depolarize_global(noise.global_depolarizing_p);
            }
            _ => {
                let q = g.qubits()[0];
                self.depolarize(&[q], noise.single_qubit_pauli_p);
            }
        }
    }
}

fn letter_from_code(code: usize) -> Letter {
    match code {
        0 => Letter::I,
        1 => Letter::X,
        2 => Letter::Y,
        _ => Letter::Z,
    }
}

fn zz_phases(n_qubits: usize, c: usize, t: usize, eps: f64) -> Vec<Complex64> {
    let (cb, tb) = (bit_of(n_qubits, c), bit_of(n_qubits, t));
    (0..1usize << n_qubits)
        .map(|i| {
            let parity = ((i & cb != 0) as u8) ^ ((i & tb != 0) as u8);
            let zz = if parity == 0 { 1.0 } else { -1.0 };
            Complex64::from_polar(1.0, -eps * zz / 2.0)
        })
        .collect()
}

/// Applies readout flips to an ideal outcome distribution.
pub fn apply_readout(probs: &[f64], n_qubits: usize, noise: &NoiseModel) -> Vec<f64> {
    let mut p = probs.to_vec();
    for q in 0..n_qubits {
        let [p10, p01] = noise.readout_for(q);
        if p10 == 0.0 && p01 == 0.0 {
            continue;
        }
        let b = bit_of(n_qubits, q);
        for i in 0..p.len() {
            if i & b == 0 {
                let (a0, a1) = (p[i], p[i | b]);
                p[i] = a0 * (1.0 - p01) + a1 * p10;
                p[i | b] = a0 * p01 + a1 * (1.0 - p10);
            }
        }
    }
    p
}

/// Exact noisy outcome distribution (density-matrix path), readout included.
pub fn noisy_distribution(c: &Circuit, noise: &NoiseModel, initial: &QuantumState) -> Result<Vec<f64>> {
    noise.validate()?;
    if initial.n_qubits() != c.n_qubits() {
        return Err(Error::QubitMismatch { left: c.n_qubits(), right: initial.n_qubits() });
    }
    let mut rho = DensityState::from_pure(initial)?;
    for g in c.gates() {
        rho.apply_noisy_gate(g, noise);
    }
    Ok(apply_readout(&rho.probabilities(), c.n_qubits(), noise))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisyMethod {
    /// Exact density-matrix evolution, then multinomial sampling.
    #[default]
    Density,
    /// One stochastic Pauli trajectory per shot.
    Trajectory,
}

fn sample_distribution(probs: &[f64], shots: u64, rng: &mut SimRng) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0))).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut hist = vec![0u64; probs.len()];
    for _ in 0..shots {
        hist[dist.sample(rng)] += 1;
    }
    Ok(hist)
}

/// Samples `shots` Z-basis measurements of `c` applied to `|0…0⟩`.
pub fn run_noisy(c: &Circuit, noise: &NoiseModel, shots: u64, seed: u64) -> Result<ShotCounts> {
    run_noisy_from(c, noise, shots, seed, &QuantumState::basis(c.n_qubits(), 0), NoisyMethod::Density)
}

/// [`run_noisy`] from an arbitrary initial state with a chosen method.
pub fn run_noisy_from(
    c: &Circuit,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    initial: &QuantumState,
    method: NoisyMethod,
) -> Result<ShotCounts> {
    noise.validate()?;
    let n = c.n_qubits();
    match method {
        NoisyMethod::Density => {
            let probs = noisy_distribution(c, noise, initial)?;
            let mut rng = rng_from_seed(seed);
            Ok(ShotCounts::from_histogram(n, &sample_distribution(&probs, shots, &mut rng)?))
        }
        NoisyMethod::Trajectory => {
            const BATCH: u64 = 1024;
            let batches = shots.div_ceil(BATCH);
            let hists: Vec<Vec<u64>> = (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut rng = rng_from_seed(derive_seed(seed, b));
                    let count = BATCH.min(shots - b * BATCH);
                    let mut hist = vec![0u64; 1 << n];
                    for _ in 0..count {
                        hist[trajectory_shot(c, noise, initial, &mut rng)] += 1;
                    }
                    hist
                })
                .collect();
            let mut total = vec![0u64; 1 << n];
            for h in hists {
                for (t, x) in total.iter_mut().zip(h) {
                    *t += x;
                }
            }
            Ok(ShotCounts::from_histogram(n, &total))
        }
    }
}

fn random_pauli_on(rng: &mut SimRng, n_qubits: usize, qubits: &[usize]) -> PauliString {
    let mut s = PauliString::identity(n_qubits);
    for &q in qubits {
        s.set(q, letter_from_code(rng.random_range(0..4)));
    }
    s
}

fn apply_pauli_state(n: usize, s: &PauliString, amps: &mut [Complex64]) {
    for q in s.support() {
        if let Some(g) = Gate::pauli(s.letter(q), q) {
            apply_gate(n, &g, amps);
        }
    }
}

/// One noisy shot: Pauli errors sampled per gate, then a readout-flipped measurement.
fn trajectory_shot(c: &Circuit, noise: &NoiseModel, initial: &QuantumState, rng: &mut SimRng) -> usize {
    let n = c.n_qubits();
    let mut amps = initial.amplitudes().to_vec();
    let all: Vec<usize> = (0..n).collect();
    for g in c.gates() {
        apply_gate(n, g, &mut amps);
        match *g {
            Gate::Cnot { control, target } => {
                if noise.cnot_coherent_zz_angle != 0.0 {
                    for (a, ph) in amps.iter_mut().zip(zz_phases(n, control, target, noise.cnot_coherent_zz_angle)) {
                        *a *= ph;
                    }
                }
                if noise.cnot_depolarizing_p > 0.0 && rng.random::<f64>() < noise.cnot_depolarizing_p {
                    let s = random_pauli_on(rng, n, &[control, target]);
                    apply_pauli_state(n, &s, &mut amps);
                }
                if noise.global_depolarizing_p > 0.0 && rng.random::<f64>() < noise.global_depolarizing_p {
                    let s = random_pauli_on(rng, n, &all);
                    apply_pauli_state(n, &s, &mut amps);
                }
            }
            _ => {
                if noise.single_qubit_pauli_p > 0.0 && rng.random::<f64>() < noise.single_qubit_pauli_p {
                    let s = random_pauli_on(rng, n, &g.qubits());
                    apply_pauli_state(n, &s, &mut amps);
                }
            }
        }
    }
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let dist = WeightedIndex::new(&probs).expect("normalised state");
    let mut outcome = dist.sample(rng);
    if noise.has_readout_noise() {
        for q in 0..n {
            let b = bit_of(n, q);
            let [p10, p01] = noise.readout_for(q);
            let flip = if outcome & b != 0 { p10 } else { p01 };
            if flip > 0.0 && rng.random::<f64>() < flip {
                outcome ^= b;
            }
        }
    }
    outcome
}

/// Frame that follows a CNOT when `(pc, pt)` precedes it, so the pair
/// leaves the ideal gate unchanged up to sign.
pub fn twirl_frame(pc: Letter, pt: Letter) -> (Letter, Letter) {
    let s = PauliString::from_sparse(2, &[(0, pc), (1, pt)]);
    let (_, img) = conjugate_by_cnot(&s, 0, 1);
    (img.letter(0), img.letter(1))
}

/// Surrounds every CNOT with a uniformly random Pauli pair and its
/// conjugate, leaving the noiseless unitary unchanged up to global phase.
pub fn twirl(c: &Circuit, seed: u64) -> Circuit {
    let mut rng = rng_from_seed(seed);
    let mut out = Circuit::new(c.n_qubits());
    out.metadata = c.metadata.clone();
    for g in c.gates() {
        if let Gate::Cnot { control, target } = *g {
            let pc = letter_from_code(rng.random_range(0..4));
            let pt = letter_from_code(rng.random_range(0..4));
            let (ac, at) = twirl_frame(pc, pt);
            let frame = |l: Letter, q: usize| Gate::pauli(l, q);
            let gates = [frame(pc, control), frame(pt, target), Some(*g), frame(ac, control), frame(at, target)];
            out.extend(gates.into_iter().flatten()).expect("valid gates");
        } else {
            out.push(*g).expect("valid gate");
        }
    }
    out
}

/// Pauli transfer matrix `R_ij = Tr(P_i E(P_j)) / d` of a channel on `n_qubits`.
pub fn pauli_transfer_matrix(n_qubits: usize, channel: impl Fn(&mut DensityState)) -> DMatrix<f64> {
    let d = 1usize << n_qubits;
    let m = d * d;
    let paulis: Vec<PauliString> = (0..m)
        .map(|code| {
            let mut s = PauliString::identity(n_qubits);
            for q in 0..n_qubits {
                s.set(q, letter_from_code(code >> (2 * q) & 3));
            }
            s
        })
        .collect();
    let dense: Vec<CMatrix> = paulis.iter().map(|p| p.to_dense().expect("small register")).collect();
    let mut r = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let mut st = DensityState { n_qubits, rho: dense[j].clone() };
        channel(&mut st);
        for i in 0..m {
            let tr: Complex64 = (&dense[i] * &st.rho).trace();
            r[(i, j)] = tr.re / d as f64;
        }
    }
    r
}

/// Error channel of a noisy CNOT (noise after the ideal gate, with the gate
/// itself undone) averaged over twirl frames. `samples = None` averages all
/// 16 frames exactly; otherwise frames are drawn at random.
pub fn twirled_cnot_error_ptm(noise: &NoiseModel, samples: Option<usize>, seed: u64) -> DMatrix<f64> {
    let frames: Vec<(Letter, Letter)> = match samples {
        None => (0..16).map(|k| (letter_from_code(k & 3), letter_from_code(k >> 2))).collect(),
        Some(n) => {
            let mut rng = rng_from_seed(seed);
            (0..n)
                .map(|_| (letter_from_code(rng.random_range(0..4)), letter_from_code(rng.random_range(0..4))))
                .collect()
        }
    };
    let count = frames.len() as f64;
    let cx = Gate::Cnot { control: 0, target: 1 };
    pauli_transfer_matrix(2, |st| {
        let mut acc = CMatrix::zeros(4, 4);
        for &(pc, pt) in &frames {
            let (ac, at) = twirl_frame(pc, pt);
            let mut s = st.clone();
            // frame, CNOT, noise, conjugate frame, then undo the ideal CNOT.
            for g in [Gate::pauli(pc, 0), Gate::pauli(pt, 1)].into_iter().flatten() {
                s.apply_gate(&g);
            }
            s.apply_gate(&cx);
            s.apply_coherent_zz(0, 1, noise.cnot_coherent_zz_angle);
            s.depolarize(&[0, 1], noise.cnot_depolarizing_p);
            for g in [Gate::pauli(ac, 0), Gate::pauli(at, 1)].into_iter().flatten() {
                s.apply_gate(&g);
            }
            s.apply_gate(&cx);
            acc += s.rho;
        }
        st.rho = acc * Complex64::new(1.0 / count, 0.0);
    })
}

/// Largest off-diagonal magnitude of a square matrix.
pub fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                best = best.max(m[(i, j)].abs());
            }
        }
    }
    best
}

/// `2^n` circuits; circuit `k` prepares basis state `k` with X gates.
pub fn calibration_circuits(n_qubits: usize) -> Result<Vec<Circuit>> {
    check_dense(n_qubits, 12)?;
    (0..1usize << n_qubits)
        .map(|k| {
            let mut c = Circuit::new(n_qubits);
            for q in 0..n_qubits {
                if k & bit_of(n_qubits, q) != 0 {
                    c.push(Gate::X(q))?;
                }
            }
            c.metadata.model = format!("calibration {k:0n_qubits$b}");
            Ok(c)
        })
        .collect()
}

/// Column-stochastic map: entry `(i, j)` = P(observe `i` | prepared `j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    pub n_qubits: usize,
    /// Row-major entries.
    pub matrix: Vec<Vec<f64>>,
}

impl CalibrationMap {
    pub fn identity(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        CalibrationMap {
            n_qubits,
            matrix: (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        }
    }

    /// Exact map implied by a noise model's readout flips.
    pub fn from_noise(n_qubits: usize, noise: &NoiseModel) -> Self {
        let d = 1 << n_qubits;
        let mut m = vec![vec![0.0; d]; d];
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let col = apply_readout(&e, n_qubits, noise);
            for i in 0..d {
                m[i][j] = col[i];
            }
        }
        CalibrationMap { n_qubits, matrix: m }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let d = self.matrix.len();
        DMatrix::from_fn(d, d, |i, j| self.matrix[i][j])
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.to_dmatrix().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Builds the map from one count set per prepared basis state, in index order.
pub fn build_confusion(cal_counts: &[ShotCounts]) -> Result<CalibrationMap> {
    let d = cal_counts.len();
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::Calibration(format!("{d} calibration count sets (need 2^n)")));
    }
    let n = d.trailing_zeros() as usize;
    let shots = cal_counts[0].shots;
    let mut m = vec![vec![0.0; d]; d];
    for (j, c) in cal_counts.iter().enumerate() {
        if c.shots == 0 {
            return Err(Error::Calibration(format!("column {j} has no shots")));
        }
        if c.shots != shots {
            return Err(Error::Calibration(format!("column {j} has {} shots, expected {shots}", c.shots)));
        }
        let f = c.frequencies(n).map_err(|e| Error::Calibration(e.to_string()))?;
        for i in 0..d {
            m[i][j] = f[i];
        }
    }
    Ok(CalibrationMap { n_qubits: n, matrix: m })
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCorrection {
    pub probabilities: Vec<f64>,
    pub condition_number: f64,
    /// The map was numerically singular and the pseudo-inverse was used.
    pub used_pseudo_inverse: bool,
}

const SINGULAR_CONDITION: f64 = 1e12;

/// Least-squares solution of `M p = f` constrained to the simplex.
pub fn correct_readout(counts: &ShotCounts, map: &CalibrationMap) -> Result<ReadoutCorrection> {
    let f = counts.frequencies(map.n_qubits)?;
    correct_frequencies(&f, map)
}

/// [`correct_readout`] on a frequency vector.
pub fn correct_frequencies(f: &[f64], map: &CalibrationMap) -> Result<ReadoutCorrection> {
    let d = 1usize << map.n_qubits;
    if f.len() != d || map.matrix.len() != d {
        return Err(Error::Calibration("frequency vector and map sizes differ".into()));
    }
    let m = map.to_dmatrix();
    let cond = map.condition_number();
    let fv = nalgebra::DVector::from_column_slice(f);
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let pinv = svd.pseudo_inverse(1e-12).map_err(|e| Error::Calibration(e.to_string()))?;
    let start = project_to_simplex((&pinv * &fv).as_slice());
    if !(cond < SINGULAR_CONDITION) {
        return Ok(ReadoutCorrection { probabilities: start, condition_number: cond, used_pseudo_inverse: true });
    }
    // Accelerated projected gradient on ½‖Mp − f‖².
    let step = 1.0 / (sigma_max * sigma_max);
    let mtm = m.transpose() * &m;
    let mtf = m.transpose() * &fv;
    let mut p = nalgebra::DVector::from_vec(start);
    let mut y = p.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = &mtm * &y - &mtf;
        let next = nalgebra::DVector::from_vec(project_to_simplex((&y - grad * step).as_slice()));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &p) * ((t - 1.0) / t_next);
        let delta = (&next - &p).norm();
        p = next;
        t = t_next;
        if delta < 1e-14 {
            break;
        }
    }
    Ok(ReadoutCorrection { probabilities: p.iter().copied().collect(), condition_number: cond, used_pseudo_inverse: false })
}

/// `Σ_i p_i ⟨i|O|i⟩` for a diagonal observable given by its diagonal.
pub fn diagonal_expectation(probs: &[f64], diag: &[f64]) -> f64 {
    probs.iter().zip(diag).map(|(p, d)| p * d).sum()
}
