//! Gate-level circuit IR over `{RY, RZ, CNOT, X, Y, Z}`, statevector
//! simulation, and the Trotter compilers built on top of it.
//!
//! Gates address 0-based register positions internally; JSON and QASM use
//! 1-based site labels like every other external format.

mod peephole;
mod resources;
mod synth;

pub use peephole::peephole;
pub use resources::{estimate_cnots, naive_cnot_count, resource_report, CnotEstimate, ResourceReport, TermResource};
pub use synth::{
    reduced3_cnot_layout, synth_pauli_exp, synth_trotter_general, synth_trotter_penta4, synth_trotter_reduced3,
    SynthOptions,
};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::QuantumState;
use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};
use crate::pauli::{check_dense, Letter, PauliString, DENSE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Ry,
    Rz,
    Cnot,
    X,
    Y,
    Z,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cnot => "CNOT",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
        }
    }
}

/// One gate on 0-based register positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `RY(θ) = exp(−iθY/2)`.
    Ry { q: usize, angle: f64 },
    /// `RZ(θ) = exp(−iθZ/2)`.
    Rz { q: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    X(usize),
    Y(usize),
    Z(usize),
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::X(_) => GateKind::X,
            Gate::Y(_) => GateKind::Y,
            Gate::Z(_) => GateKind::Z,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { q, .. } | Gate::Rz { q, .. } | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn touches(&self, q: usize) -> bool {
        match *self {
            Gate::Ry { q: a, .. } | Gate::Rz { q: a, .. } | Gate::X(a) | Gate::Y(a) | Gate::Z(a) => a == q,
            Gate::Cnot { control, target } => control == q || target == q,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// Pauli letter for the single-qubit Pauli gates.
    pub fn pauli(kind: Letter, q: usize) -> Option<Gate> {
        match kind {
            Letter::I => None,
            Letter::X => Some(Gate::X(q)),
            Letter::Y => Some(Gate::Y(q)),
            Letter::Z => Some(Gate::Z(q)),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { q, angle } => Gate::Ry { q, angle: -angle },
            Gate::Rz { q, angle } => Gate::Rz { q, angle: -angle },
            g => g,
        }
    }

    /// 2×2 matrix of a single-qubit gate.
    pub fn single_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let i = Complex64::new(0.0, 1.0);
        Some(match *self {
            Gate::Ry { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
            }
            Gate::Rz { angle, .. } => {
                [[Complex64::from_polar(1.0, -angle / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, angle / 2.0)]]
            }
            Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Y(_) => [[ZERO, -i], [i, ZERO]],
            Gate::Z(_) => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::Cnot { .. } => return None,
        })
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= n_qubits {
                return Err(invalid(format!("gate on qubit {} of a {n_qubits}-qubit circuit", q + 1)));
            }
        }
        if let Gate::Cnot { control, target } = *self {
            if control == target {
                return Err(invalid(format!("CNOT with control = target = {}", control + 1)));
            }
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(invalid("non-finite rotation angle"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Ry { q, angle } => write!(f, "RY{}({angle})", q + 1),
            Gate::Rz { q, angle } => write!(f, "RZ{}({angle})", q + 1),
            Gate::Cnot { control, target } => write!(f, "CX{}{}", control + 1, target + 1),
            Gate::X(q) => write!(f, "X{}", q + 1),
            Gate::Y(q) => write!(f, "Y{}", q + 1),
            Gate::Z(q) => write!(f, "Z{}", q + 1),
        }
    }
}

/// One `exp(iθP)` factor a synthesised circuit implements, in emission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub step: usize,
    pub label: String,
    /// Pauli string, qubit 1 first.
    pub string: String,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CircuitMetadata {
    #[serde(default)]
    pub trotter_steps: usize,
    #[serde(default)]
    pub dt: f64,
    #[serde(default)]
    pub model: String,
    /// Allowed CNOT pairs (1-based, unordered); `None` means all-to-all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<Vec<[usize; 2]>>,
    /// Ordered factorisation the circuit realises (up to global phase).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    pub metadata: CircuitMetadata,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "a circuit needs at least one qubit");
        Circuit { n_qubits, gates: Vec::new(), metadata: CircuitMetadata::default() }
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.check(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// Appends `other`'s gates; metadata of `self` is kept.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: other.n_qubits });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub(crate) fn set_gates(&mut self, gates: Vec<Gate>) {
        self.gates = gates;
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| g.angle().is_some()).count()
    }

    /// Number of layers when every gate is scheduled as early as its wires allow.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.n_qubits];
        for g in &self.gates {
            let qs = g.qubits();
            let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = l;
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// Gate-wise inverse: reversed order, negated rotation angles.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            metadata: CircuitMetadata { model: self.metadata.model.clone(), ..CircuitMetadata::default() },
        }
    }

    /// Pairs of qubits joined by at least one CNOT (1-based, sorted).
    pub fn coupled_pairs(&self) -> Vec<[usize; 2]> {
        let mut pairs: Vec<[usize; 2]> = self
            .gates
            .iter()
            .filter_map(|g| match *g {
                Gate::Cnot { control, target } => Some([control.min(target) + 1, control.max(target) + 1]),
                _ => None,
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Applies the circuit to a state vector in place.
    pub fn apply(&self, amps: &mut [Complex64]) -> Result<()> {
        if amps.len() != 1usize << self.n_qubits {
            return Err(invalid(format!("state of length {} for {} qubits", amps.len(), self.n_qubits)));
        }
        for g in &self.gates {
            apply_gate(self.n_qubits, g, amps);
        }
        Ok(())
    }

    pub fn run(&self, psi: &QuantumState) -> Result<QuantumState> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: psi.n_qubits() });
        }
        let mut amps = psi.amplitudes().to_vec();
        self.apply(&mut amps)?;
        QuantumState::normalized(self.n_qubits, amps)
    }

    pub fn to_json_value(&self) -> CircuitJson {
        CircuitJson {
            n_qubits: self.n_qubits,
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    kind: g.kind(),
                    qubits: g.qubits().into_iter().map(|q| q + 1).collect(),
                    angle: g.angle(),
                })
                .collect(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("circuit JSON is always serialisable")
    }

    pub fn from_json_value(v: &CircuitJson) -> Result<Circuit> {
        if v.n_qubits == 0 || v.n_qubits > 64 {
            return Err(Error::Parse(format!("n_qubits = {}", v.n_qubits)));
        }
        let mut c = Circuit::new(v.n_qubits);
        for g in &v.gates {
            if g.qubits.contains(&0) {
                return Err(Error::Parse("qubit labels are 1-based".into()));
            }
            let q: Vec<usize> = g.qubits.iter().map(|&q| q - 1).collect();
            let need = if g.kind == GateKind::Cnot { 2 } else { 1 };
            if q.len() != need {
                return Err(Error::Parse(format!("{} takes {need} qubit(s), got {}", g.kind.name(), q.len())));
            }
            let angle = || g.angle.ok_or_else(|| Error::Parse(format!("{} needs an angle", g.kind.name())));
            let gate = match g.kind {
                GateKind::Ry => Gate::Ry { q: q[0], angle: angle()? },
                GateKind::Rz => Gate::Rz { q: q[0], angle: angle()? },
                GateKind::Cnot => Gate::Cnot { control: q[0], target: q[1] },
                GateKind::X => Gate::X(q[0]),
                GateKind::Y => Gate::Y(q[0]),
                GateKind::Z => Gate::Z(q[0]),
            };
            c.push(gate)?;
        }
        c.metadata = v.metadata.clone();
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        Self::from_json_value(&serde_json::from_str(text)?)
    }

    /// OpenQASM 2.0 text with a final measurement of every qubit.
    pub fn to_qasm(&self) -> String {
        let mut s = format!(
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{n}];\ncreg c[{n}];\n",
            n = self.n_qubits
        );
        for g in &self.gates {
            let line = match *g {
                Gate::Ry { q, angle } => format!("ry({angle:.17}) q[{q}];"),
                Gate::Rz { q, angle } => format!("rz({angle:.17}) q[{q}];"),
                Gate::Cnot { control, target } => format!("cx q[{control}],q[{target}];"),
                Gate::X(q) => format!("x q[{q}];"),
                Gate::Y(q) => format!("y q[{q}];"),
                Gate::Z(q) => format!("z q[{q}];"),
            };
            s.push_str(&line);
            s.push('\n');
        }
        s.push_str("measure q -> c;\n");
        s
    }
}

/// Wire form of a [`Circuit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub n_qubits: usize,
    pub gates: Vec<GateJson>,
    #[serde(default)]
    pub metadata: CircuitMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[inline]
pub(crate) fn bit_of(n_qubits: usize, q: usize) -> usize {
    1usize << (n_qubits - 1 - q)
}

/// Applies one gate to a state vector.
pub(crate) fn apply_gate(n_qubits: usize, g: &Gate, amps: &mut [Complex64]) {
    match *g {
        Gate::Cnot { control, target } => {
            let cb = bit_of(n_qubits, control);
            let tb = bit_of(n_qubits, target);
            for i in 0..amps.len() {
                if i & cb != 0 && i & tb == 0 {
                    amps.swap(i, i | tb);
                }
            }
        }
        Gate::Z(q) => {
            let b = bit_of(n_qubits, q);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & b != 0 {
                    *a = -*a;
                }
            }
        }
        Gate::Rz { q, angle } => {
            let b = bit_of(n_qubits, q);
            let (p0, p1) = (Complex64::from_polar(1.0, -angle / 2.0), Complex64::from_polar(1.0, angle / 2.0));
            for (i, a) in amps.iter_mut().enumerate() {
                *a *= if i & b != 0 { p1 } else { p0 };
            }
        }
        _ => {
            let m = g.single_matrix().expect("single-qubit gate");
            let q = g.qubits()[0];
            let b = bit_of(n_qubits, q);
            for i in 0..amps.len() {
                if i & b == 0 {
                    let (a0, a1) = (amps[i], amps[i | b]);
                    amps[i] = m[0][0] * a0 + m[0][1] * a1;
                    amps[i | b] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

/// Dense unitary: the ordered product of gate matrices (first gate rightmost).
pub fn circuit_unitary(c: &Circuit) -> Result<CMatrix> {
    check_dense(c.n_qubits, DENSE_LIMIT)?;
    let dim = 1usize << c.n_qubits;
    let mut u = CMatrix::zeros(dim, dim);
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|a| *a = ZERO);
        col[j] = ONE;
        c.apply(&mut col)?;
        for (i, a) in col.iter().enumerate() {
            u[(i, j)] = *a;
        }
    }
    Ok(u)
}

/// `exp(iθP) = cos θ·1 + i sin θ·P`.
pub fn pauli_exp_dense(p: &PauliString, theta: f64) -> Result<CMatrix> {
    let dim = 1usize << p.n_qubits();
    let mut m = p.to_dense()? * Complex64::new(0.0, theta.sin());
    for k in 0..dim {
        m[(k, k)] += theta.cos();
    }
    Ok(m)
}

/// Ordered product of the factors recorded in the circuit metadata.
pub fn declared_product(c: &Circuit) -> Result<CMatrix> {
    check_dense(c.n_qubits, DENSE_LIMIT)?;
    let dim = 1usize << c.n_qubits;
    let mut u = CMatrix::identity(dim, dim);
    for f in &c.metadata.factors {
        let p: PauliString = f.string.parse()?;
        if p.n_qubits() != c.n_qubits {
            return Err(Error::QubitMismatch { left: c.n_qubits, right: p.n_qubits() });
        }
        u = pauli_exp_dense(&p, f.theta)? * u;
    }
    Ok(u)
}

/// `C P C` for `C = CNOT(control → target)`, returned as `(sign, string)`.
pub fn conjugate_by_cnot(p: &PauliString, control: usize, target: usize) -> (f64, PauliString) {
    let (x, z) = (p.x_mask(), p.z_mask());
    let xc = x >> control & 1;
    let zc = z >> control & 1;
    let xt = x >> target & 1;
    let zt = z >> target & 1;
    let flip = xc & zt & (xt ^ zc ^ 1);
    let nx = x ^ (xc << target);
    let nz = z ^ (zt << control);
    (if flip == 1 { -1.0 } else { 1.0 }, PauliString::from_masks(p.n_qubits(), nx, nz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_entry, phase_aligned_distance};

    #[test]
    fn empty_circuit_is_identity() {
        let u = circuit_unitary(&Circuit::new(2)).unwrap();
        assert!(max_abs_entry(&(u - CMatrix::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn cnot_squared_is_identity() {
        let cx = Gate::Cnot { control: 0, target: 1 };
        let c = Circuit::from_gates(2, vec![cx, cx]).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert!(max_abs_entry(&(u - CMatrix::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn cnot_matrix_convention() {
        // Control is qubit 1 (most significant bit).
        let c = Circuit::from_gates(2, vec![Gate::Cnot { control: 0, target: 1 }]).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert_eq!(u[(3, 2)], ONE);
        assert_eq!(u[(2, 3)], ONE);
        assert_eq!(u[(1, 1)], ONE);
    }

    #[test]
    fn rotation_conventions() {
        let c = Circuit::from_gates(1, vec![Gate::Rz { q: 0, angle: 0.3 }]).unwrap();
        let want = pauli_exp_dense(&"Z".parse().unwrap(), -0.15).unwrap();
        assert!(phase_aligned_distance(&circuit_unitary(&c).unwrap(), &want) < 1e-14);
        let c = Circuit::from_gates(1, vec![Gate::Ry { q: 0, angle: 0.3 }]).unwrap();
        let want = pauli_exp_dense(&"Y".parse().unwrap(), -0.15).unwrap();
        assert!(max_abs_entry(&(circuit_unitary(&c).unwrap() - want)) < 1e-14);
    }

    #[test]
    fn cnot_conjugation_matches_dense() {
        let cx = circuit_unitary(&Circuit::from_gates(2, vec![Gate::Cnot { control: 0, target: 1 }]).unwrap()).unwrap();
        for s in ["XI", "IX", "YI", "IY", "ZI", "IZ", "YY", "XZ", "ZX", "YZ", "ZY", "XY", "YX"] {
            let p: PauliString = s.parse().unwrap();
            let (sign, q) = conjugate_by_cnot(&p, 0, 1);
            let lhs = &cx * p.to_dense().unwrap() * &cx;
            let rhs = q.to_dense().unwrap() * Complex64::new(sign, 0.0);
            assert!(max_abs_entry(&(lhs - rhs)) < 1e-15, "{s}");
        }
    }

    #[test]
    fn invalid_gates_rejected() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(c.push(Gate::X(2)).is_err());
        assert!(c.push(Gate::Rz { q: 0, angle: f64::NAN }).is_err());
    }

    #[test]
    fn json_round_trip_uses_labels() {
        let mut c = Circuit::from_gates(2, vec![Gate::Cnot { control: 0, target: 1 }, Gate::Rz { q: 1, angle: 0.24 }]).unwrap();
        c.metadata.trotter_steps = 1;
        let text = c.to_json();
        assert!(text.contains("\"CNOT\""));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["gates"][0]["qubits"], serde_json::json!([1, 2]));
        assert_eq!(Circuit::from_json(&text).unwrap(), c);
    }

    #[test]
    fn qasm_export() {
        let c = Circuit::from_gates(2, vec![Gate::Cnot { control: 0, target: 1 }, Gate::Y(1)]).unwrap();
        let q = c.to_qasm();
        assert!(q.contains("cx q[0],q[1];"));
        assert!(q.contains("y q[1];"));
    }

    #[test]
    fn depth_and_inverse() {
        let c = Circuit::from_gates(
            3,
            vec![Gate::Rz { q: 0, angle: 0.1 }, Gate::Rz { q: 2, angle: 0.2 }, Gate::Cnot { control: 0, target: 1 }],
        )
        .unwrap();
        assert_eq!(c.depth(), 2);
        let mut both = c.clone();
        both.append(&c.inverse()).unwrap();
        let u = circuit_unitary(&both).unwrap();
        assert!(max_abs_entry(&(u - CMatrix::identity(8, 8))) < 1e-14);
    }
}
