//! Dense statevector evolution: the exact reference every circuit and every
//! mitigated estimate is judged against.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, HermitianEigen, ZERO};
use crate::pauli::{check_dense, OperatorSum, PauliString, DENSE_LIMIT};

/// Normalisation tolerance for states handed to the evolution routines.
pub const NORM_TOL: f64 = 1e-10;

/// Pure state on `n_qubits`; basis index bit `n−1−p` holds register position `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(invalid(format!("{} amplitudes for {n_qubits} qubits", amplitudes.len())));
        }
        let n = linalg::norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state norm {n} differs from 1")));
        }
        Ok(QuantumState { n_qubits, amplitudes })
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(invalid(format!("{} amplitudes for {n_qubits} qubits", amplitudes.len())));
        }
        let n = linalg::norm(&amplitudes);
        if n < 1e-300 {
            return Err(invalid("cannot normalise the zero vector"));
        }
        for a in &mut amplitudes {
            *a /= n;
        }
        Ok(QuantumState { n_qubits, amplitudes })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(index < 1usize << n_qubits);
        let mut amplitudes = vec![ZERO; 1usize << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        QuantumState { n_qubits, amplitudes }
    }

    /// Basis state from a spin pattern, qubit 1 first. Accepts `u`/`↑`/`0`
    /// for spin up and `d`/`↓`/`1` for spin down.
    pub fn from_spins(pattern: &str) -> Result<Self> {
        let mut index = 0usize;
        let mut n = 0usize;
        for c in pattern.chars() {
            let bit = match c {
                'u' | 'U' | '↑' | '0' => 0,
                'd' | 'D' | '↓' | '1' => 1,
                other => return Err(Error::Parse(format!("unknown spin symbol {other:?}"))),
            };
            index = index << 1 | bit;
            n += 1;
        }
        if n == 0 || n > 30 {
            return Err(Error::Parse(format!("spin pattern of length {n}")));
        }
        Ok(Self::basis(n, index))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `⟨ψ|O|ψ⟩`, real part. The imaginary part is below round-off for Hermitian `O`.
    pub fn expectation(&self, o: &OperatorSum) -> Result<f64> {
        Ok(self.expectation_complex(o)?.re)
    }

    pub fn expectation_complex(&self, o: &OperatorSum) -> Result<Complex64> {
        if o.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch { left: o.n_qubits(), right: self.n_qubits });
        }
        o.expectation(&self.amplitudes)
    }

    /// Total probability on basis states whose diagonal value of `o` equals `level`.
    pub fn sector_weight(&self, o: &OperatorSum, level: f64) -> Result<f64> {
        let diag = o.diagonal()?;
        if diag.len() != self.amplitudes.len() {
            return Err(Error::QubitMismatch { left: o.n_qubits(), right: self.n_qubits });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&diag)
            .filter(|(_, d)| (d.re - level).abs() < 1e-9)
            .map(|(a, _)| a.norm_sqr())
            .sum())
    }
}

/// `⟨ψ|O|ψ⟩` as a free function.
pub fn expectation(psi: &QuantumState, o: &OperatorSum) -> Result<f64> {
    psi.expectation(o)
}

/// Cached Hermitian eigendecomposition of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_qubits: usize,
    eigen: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &OperatorSum) -> Result<Self> {
        check_dense(h.n_qubits(), DENSE_LIMIT)?;
        h.ensure_hermitian()?;
        let dense = h.real_part().to_dense()?;
        Ok(Propagator { n_qubits: h.n_qubits(), eigen: linalg::hermitian_eigen(&dense) })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn energies(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// Coordinates of `psi` in the eigenbasis.
    pub fn coefficients(&self, psi: &QuantumState) -> Vec<Complex64> {
        let v = &self.eigen.vectors;
        let dim = v.nrows();
        (0..dim)
            .map(|k| (0..dim).map(|j| v[(j, k)].conj() * psi.amplitudes[j]).sum())
            .collect()
    }

    /// `e^{−itH}|ψ⟩`.
    pub fn evolve(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        if psi.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: psi.n_qubits });
        }
        let c = self.coefficients(psi);
        Ok(self.evolve_coefficients(&c, t))
    }

    fn evolve_coefficients(&self, c: &[Complex64], t: f64) -> QuantumState {
        let v = &self.eigen.vectors;
        let dim = v.nrows();
        let phased: Vec<Complex64> =
            c.iter().zip(&self.eigen.values).map(|(ck, &e)| ck * Complex64::from_polar(1.0, -e * t)).collect();
        let mut out = vec![ZERO; dim];
        for (k, pk) in phased.iter().enumerate() {
            if *pk == ZERO {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += v[(j, k)] * pk;
            }
        }
        QuantumState { n_qubits: self.n_qubits, amplitudes: out }
    }
}

/// `e^{−itH}|ψ₀⟩` via a one-off eigendecomposition. Rejects non-Hermitian `h`.
pub fn exact_evolve(h: &OperatorSum, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
    Propagator::new(h)?.evolve(psi0, t)
}

/// Propagators keyed by a fingerprint of the simplified operator.
#[derive(Debug, Default)]
pub struct PropagatorCache {
    entries: Mutex<HashMap<u64, Arc<Propagator>>>,
}

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, h: &OperatorSum) -> Result<Arc<Propagator>> {
        let key = fingerprint(h);
        if let Some(p) = self.entries.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(Propagator::new(h)?);
        self.entries.lock().expect("cache poisoned").insert(key, Arc::clone(&p));
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn fingerprint(h: &OperatorSum) -> u64 {
    let s = h.simplify();
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    s.n_qubits().hash(&mut hasher);
    s.constant_term().re.to_bits().hash(&mut hasher);
    s.constant_term().im.to_bits().hash(&mut hasher);
    for t in s.terms() {
        t.string.hash(&mut hasher);
        t.coeff.re.to_bits().hash(&mut hasher);
        t.coeff.im.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

/// Observable time series on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// `m̃·t`, absent when `m̃ = 0`.
    pub mt: Option<Vec<f64>>,
    pub labels: Vec<String>,
    /// `values[k][i]` is observable `k` at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl EvolutionResult {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|k| self.values[k].as_slice())
    }

    /// Long-format CSV: `time,mt,observable,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# su3sim evolution v1\ntime,mt,observable,value\n");
        for (i, &t) in self.times.iter().enumerate() {
            let mt = self.mt.as_ref().map(|m| crate::config::fmt_num(m[i])).unwrap_or_default();
            for (k, label) in self.labels.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    crate::config::fmt_num(t),
                    mt,
                    label,
                    crate::config::fmt_num(self.values[k][i])
                ));
            }
        }
        out
    }
}

/// Evaluates each observable along `e^{−itH}|ψ₀⟩` at every grid time.
/// Time points are processed in parallel and merged in grid order.
pub fn observable_series(
    h: &OperatorSum,
    psi0: &QuantumState,
    observables: &[(String, OperatorSum)],
    times: &[f64],
    m_tilde: f64,
) -> Result<EvolutionResult> {
    let prop = Propagator::new(h)?;
    series_with(&prop, psi0, observables, times, m_tilde)
}

/// [`observable_series`] with a caller-supplied propagator.
pub fn series_with(
    prop: &Propagator,
    psi0: &QuantumState,
    observables: &[(String, OperatorSum)],
    times: &[f64],
    m_tilde: f64,
) -> Result<EvolutionResult> {
    if psi0.n_qubits != prop.n_qubits {
        return Err(Error::QubitMismatch { left: prop.n_qubits, right: psi0.n_qubits });
    }
    for (_, o) in observables {
        if o.n_qubits() != prop.n_qubits {
            return Err(Error::QubitMismatch { left: prop.n_qubits, right: o.n_qubits() });
        }
    }
    let c = prop.coefficients(psi0);
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let psi = prop.evolve_coefficients(&c, t);
            observables.iter().map(|(_, o)| psi.expectation(o)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = (0..observables.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    Ok(EvolutionResult {
        times: times.to_vec(),
        mt: (m_tilde != 0.0).then(|| times.iter().map(|t| t * m_tilde).collect()),
        labels: observables.iter().map(|(l, _)| l.clone()).collect(),
        values,
    })
}

/// `exp(iθP)ψ = cos θ·ψ + i sin θ·Pψ`, in place.
pub fn apply_pauli_exp(p: &PauliString, theta: f64, amps: &mut [Complex64]) {
    let (c, s) = (theta.cos(), theta.sin());
    let old = amps.to_vec();
    for (b, &a) in old.iter().enumerate() {
        amps[b] *= c;
        let (ph, out) = p.apply_to_basis(b);
        amps[out] += Complex64::new(0.0, s) * ph * a;
    }
}

/// First-order product formula: `steps` repetitions of `Π_k exp(−i dt c_k P_k)`
/// over the terms of `h` in stored order, `dt = t / steps`. The constant term
/// only contributes a global phase and is skipped.
pub fn trotter_evolve(h: &OperatorSum, psi0: &QuantumState, t: f64, steps: usize) -> Result<QuantumState> {
    if h.n_qubits() != psi0.n_qubits {
        return Err(Error::QubitMismatch { left: h.n_qubits(), right: psi0.n_qubits });
    }
    if steps == 0 {
        return Err(invalid("Trotter evolution needs at least one step"));
    }
    h.ensure_hermitian()?;
    let h = h.real_part();
    let dt = t / steps as f64;
    let mut amps = psi0.amplitudes.clone();
    for _ in 0..steps {
        for term in h.terms() {
            apply_pauli_exp(&term.string, -dt * term.coeff.re, &mut amps);
        }
    }
    Ok(QuantumState { n_qubits: psi0.n_qubits, amplitudes: amps })
}

/// [`observable_series`] under [`trotter_evolve`] with a fixed step count per time.
pub fn trotter_series(
    h: &OperatorSum,
    psi0: &QuantumState,
    observables: &[(String, OperatorSum)],
    times: &[f64],
    steps: usize,
    m_tilde: f64,
) -> Result<EvolutionResult> {
    for (_, o) in observables {
        if o.n_qubits() != h.n_qubits() {
            return Err(Error::QubitMismatch { left: h.n_qubits(), right: o.n_qubits() });
        }
    }
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let psi = trotter_evolve(h, psi0, t, steps)?;
            observables.iter().map(|(_, o)| psi.expectation(o)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = (0..observables.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    Ok(EvolutionResult {
        times: times.to_vec(),
        mt: (m_tilde != 0.0).then(|| times.iter().map(|t| t * m_tilde).collect()),
        labels: observables.iter().map(|(l, _)| l.clone()).collect(),
        values,
    })
}

/// `n_points` equally spaced times on `[0, t_max]`; a single point when `t_max = 0`.
pub fn uniform_grid(t_max: f64, n_points: usize) -> Vec<f64> {
    if t_max == 0.0 || n_points <= 1 {
        return vec![0.0];
    }
    (0..n_points).map(|i| t_max * i as f64 / (n_points - 1) as f64).collect()
}
