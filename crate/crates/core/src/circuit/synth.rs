//! Pauli-exponential synthesis and the Trotter-step compilers.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::FRAC_PI_2;

use super::{conjugate_by_cnot, peephole, Circuit, Factor, Gate};
use crate::error::{invalid, Error, Result};
use crate::model;
use crate::pauli::{Letter, OperatorSum, PauliString};

/// Knobs shared by the Trotter compilers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthOptions {
    /// Allowed CNOT pairs as 0-based unordered pairs; `None` is all-to-all.
    pub connectivity: Option<Vec<(usize, usize)>>,
    /// Run [`peephole`] on the result.
    pub peephole: bool,
    /// Wrap the reduced three-qubit circuit in the `RZ(±π/2)` layers that map
    /// between the model's X/Z form and the Y/Z form the body is written in.
    pub frame_gates: bool,
}

impl SynthOptions {
    pub fn optimized() -> Self {
        SynthOptions { peephole: true, ..Self::default() }
    }
}

fn adjacency(n_qubits: usize, connectivity: Option<&[(usize, usize)]>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n_qubits];
    match connectivity {
        None => {
            for (a, row) in adj.iter_mut().enumerate() {
                row.extend((0..n_qubits).filter(|&b| b != a));
            }
        }
        Some(pairs) => {
            for &(a, b) in pairs {
                if a < n_qubits && b < n_qubits && a != b {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
            for row in &mut adj {
                row.sort_unstable();
                row.dedup();
            }
        }
    }
    adj
}

/// CNOT ladder collecting the parity of `support` into `target`, restricted to
/// connectivity edges inside the support. Deepest nodes first.
fn parity_ladder(
    p: &PauliString,
    support: &[usize],
    target: usize,
    connectivity: Option<&[(usize, usize)]>,
) -> Result<Vec<Gate>> {
    let adj = adjacency(p.n_qubits(), connectivity);
    let in_support = |q: usize| support.contains(&q);
    let mut depth: HashMap<usize, usize> = HashMap::from([(target, 0)]);
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([target]);
    let mut order = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if in_support(v) && !depth.contains_key(&v) {
                depth.insert(v, depth[&u] + 1);
                parent.insert(v, u);
                order.push(v);
                queue.push_back(v);
            }
        }
    }
    if order.len() + 1 != support.len() {
        return Err(Error::Routing {
            string: p.to_string(),
            reason: "support is not connected under the allowed CNOT pairs".into(),
        });
    }
    order.sort_by(|a, b| depth[b].cmp(&depth[a]).then(a.cmp(b)));
    Ok(order.into_iter().map(|c| Gate::Cnot { control: c, target: parent[&c] }).collect())
}

/// Gates realising `exp(iθP)` exactly (no global phase).
///
/// A string with a single `Y` and otherwise `Z` letters rotates that qubit with
/// `RY`; everything else is basis-changed to `Z` and rotated with `RZ` on the
/// last support qubit. A weight-`m` string costs `2(m−1)` CNOTs.
pub fn synth_pauli_exp(p: &PauliString, theta: f64, connectivity: Option<&[(usize, usize)]>) -> Result<Vec<Gate>> {
    if p.is_identity() {
        return Err(invalid("cannot synthesise the exponential of the identity string"));
    }
    let support = p.support();
    let letters: Vec<Letter> = support.iter().map(|&q| p.letter(q)).collect();
    let n_x = letters.iter().filter(|&&l| l == Letter::X).count();
    let ys: Vec<usize> = support.iter().copied().filter(|&q| p.letter(q) == Letter::Y).collect();
    let y_target = n_x == 0 && ys.len() == 1;
    let target = if y_target { ys[0] } else { *support.last().expect("non-empty support") };

    let mut pre = Vec::new();
    let mut sign = 1.0;
    for &q in &support {
        if y_target && q == target {
            continue;
        }
        match p.letter(q) {
            Letter::X => {
                // RY(π/2) X RY(−π/2) = −Z
                pre.push(Gate::Ry { q, angle: FRAC_PI_2 });
                sign = -sign;
            }
            Letter::Y => {
                // RZ(π/2) then RY(π/2) sends Y to Z
                pre.push(Gate::Rz { q, angle: FRAC_PI_2 });
                pre.push(Gate::Ry { q, angle: FRAC_PI_2 });
            }
            _ => {}
        }
    }
    // Undo the basis changes in reverse order.
    let post: Vec<Gate> = {
        let mut v = Vec::new();
        for &q in support.iter().rev() {
            if y_target && q == target {
                continue;
            }
            match p.letter(q) {
                Letter::X => v.push(Gate::Ry { q, angle: -FRAC_PI_2 }),
                Letter::Y => {
                    v.push(Gate::Ry { q, angle: -FRAC_PI_2 });
                    v.push(Gate::Rz { q, angle: -FRAC_PI_2 });
                }
                _ => {}
            }
        }
        v
    };

    let ladder = parity_ladder(p, &support, target, connectivity)?;
    let rotation = if y_target {
        Gate::Ry { q: target, angle: -2.0 * theta * sign }
    } else {
        Gate::Rz { q: target, angle: -2.0 * theta * sign }
    };

    let mut gates = pre;
    gates.extend(ladder.iter().copied());
    gates.push(rotation);
    gates.extend(ladder.iter().rev().copied());
    gates.extend(post);
    Ok(gates)
}

/// First-order Trotter circuit that exponentiates every Pauli string of `h`
/// separately, in the order of `h.simplify()`. No peephole unless requested.
pub fn synth_trotter_general(h: &OperatorSum, dt: f64, steps: usize, opts: &SynthOptions) -> Result<Circuit> {
    h.ensure_hermitian()?;
    let h = h.real_part();
    let mut c = Circuit::new(h.n_qubits());
    for step in 0..steps {
        for (k, t) in h.terms().iter().enumerate() {
            let theta = -dt * t.coeff.re;
            c.extend(synth_pauli_exp(&t.string, theta, opts.connectivity.as_deref())?)?;
            c.metadata.factors.push(Factor { step, label: format!("h{k}"), string: t.string.to_string(), theta });
        }
    }
    c.metadata.trotter_steps = steps;
    c.metadata.dt = dt;
    c.metadata.model = "general".into();
    c.metadata.connectivity = opts.connectivity.as_ref().map(|v| v.iter().map(|&(a, b)| [a + 1, b + 1]).collect());
    Ok(finish(c, opts))
}

fn finish(c: Circuit, opts: &SynthOptions) -> Circuit {
    if opts.peephole {
        peephole(&c)
    } else {
        c
    }
}

/// CNOT layout of one reduced three-qubit Trotter step (0-based pairs): a
/// five-CNOT half followed by the same half with qubits 1 and 3 swapped. No
/// gate couples qubits 1 and 3, and two consecutive steps compose to the
/// identity network.
pub fn reduced3_cnot_layout() -> [(usize, usize); 10] {
    let half = [(0, 1), (1, 2), (0, 1), (2, 1), (0, 1)];
    let swap = |q: usize| match q {
        0 => 2,
        2 => 0,
        q => q,
    };
    let mut out = [(0, 0); 10];
    for (k, &(c, t)) in half.iter().enumerate() {
        out[k] = (c, t);
        out[k + 5] = (swap(c), swap(t));
    }
    out
}

/// Linear map of a CNOT network on basis-index bits, as row masks over register positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Gf2Map([u8; 3]);

impl Gf2Map {
    const IDENTITY: Gf2Map = Gf2Map([1, 2, 4]);

    fn cnot(self, c: usize, t: usize) -> Gf2Map {
        let mut rows = self.0;
        rows[t] ^= rows[c];
        Gf2Map(rows)
    }
}

/// Shortest CNOT sequence over `pairs` taking the network `from` back to the identity.
fn return_to_identity(from: Gf2Map, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut prev: HashMap<Gf2Map, Option<(Gf2Map, (usize, usize))>> = HashMap::from([(from, None)]);
    let mut queue = VecDeque::from([from]);
    while let Some(m) = queue.pop_front() {
        if m == Gf2Map::IDENTITY {
            let mut path = Vec::new();
            let mut cur = m;
            while let Some(Some((p, g))) = prev.get(&cur).copied() {
                path.push(g);
                cur = p;
            }
            path.reverse();
            return path;
        }
        for &(c, t) in pairs {
            let n = m.cnot(c, t);
            if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(n) {
                e.insert(Some((m, (c, t))));
                queue.push_back(n);
            }
        }
    }
    unreachable!("CNOTs on a connected graph generate every invertible network")
}

struct FrameTerm {
    label: &'static str,
    string: PauliString,
    theta: f64,
    image: PauliString,
    image_sign: f64,
}

/// Reduced three-qubit Trotter chain of `steps` first-order steps.
///
/// The body acts on the Y/Z form of the Hamiltonian (X mapped to Y by
/// `exp(−iπ/4 ΣZ)`), which leaves Z-basis preparation and measurement
/// untouched. Rotations are placed where the running CNOT frame maps a term
/// to a single-qubit Z or Y, so each step costs exactly the 10 layout CNOTs;
/// an odd chain is closed with the shortest CNOT sequence that restores the
/// identity frame. The emitted factor order is recorded in the metadata.
pub fn synth_trotter_reduced3(dt: f64, m_tilde: f64, x: f64, steps: usize, opts: &SynthOptions) -> Result<Circuit> {
    if !(dt.is_finite() && m_tilde.is_finite() && x.is_finite() && x > 0.0) {
        return Err(invalid("reduced3 synthesis needs finite dt, m_tilde and x > 0"));
    }
    let allowed = [(0usize, 1usize), (1, 0), (1, 2), (2, 1)];
    if let Some(conn) = &opts.connectivity {
        for &(c, t) in &reduced3_cnot_layout() {
            if !conn.iter().any(|&(a, b)| (a, b) == (c, t) || (b, a) == (c, t)) {
                return Err(Error::Routing {
                    string: "reduced3 layout".into(),
                    reason: format!("pair ({}, {}) not available", c + 1, t + 1),
                });
            }
        }
    }
    let kin = dt / 2.0;
    let ele = dt / (6.0 * x);
    let mas = dt * m_tilde;
    let spec: [(&'static str, &str, f64); 9] = [
        ("K1", "YZZ", kin),
        ("K2", "ZYZ", kin),
        ("K3", "ZZY", kin),
        ("E12", "ZZI", ele),
        ("E13", "ZIZ", ele),
        ("E23", "IZZ", ele),
        ("M1", "ZII", mas),
        ("M2", "IZI", mas),
        ("M3", "IIZ", mas),
    ];
    let mut terms: Vec<FrameTerm> = spec
        .iter()
        .map(|&(label, s, theta)| {
            let string: PauliString = s.parse().expect("static string");
            FrameTerm { label, string, theta, image: string, image_sign: 1.0 }
        })
        .collect();

    let layout = reduced3_cnot_layout();
    let mut c = Circuit::new(3);
    if opts.frame_gates {
        for q in 0..3 {
            c.push(Gate::Rz { q, angle: FRAC_PI_2 })?;
        }
    }
    let mut network = Gf2Map::IDENTITY;
    let mut factors = Vec::new();
    for step in 0..steps {
        let mut pending: Vec<usize> = (0..terms.len()).collect();
        for slot in 0..=layout.len() {
            pending.retain(|&k| {
                let t = &terms[k];
                if t.image.weight() != 1 {
                    return true;
                }
                let q = t.image.support()[0];
                let angle = -2.0 * t.theta * t.image_sign;
                let gate = match t.image.letter(q) {
                    Letter::Z => Gate::Rz { q, angle },
                    Letter::Y => Gate::Ry { q, angle },
                    _ => return true,
                };
                c.push(gate).expect("valid rotation");
                factors.push(Factor { step, label: t.label.to_string(), string: t.string.to_string(), theta: t.theta });
                false
            });
            if slot == layout.len() {
                break;
            }
            let (ctl, tgt) = layout[slot];
            c.push(Gate::Cnot { control: ctl, target: tgt })?;
            network = network.cnot(ctl, tgt);
            for t in &mut terms {
                let (s, img) = conjugate_by_cnot(&t.image, ctl, tgt);
                t.image = img;
                t.image_sign *= s;
            }
        }
        if !pending.is_empty() {
            let missing: Vec<&str> = pending.iter().map(|&k| terms[k].label).collect();
            return Err(invalid(format!("layout leaves terms {missing:?} unplaced in step {step}")));
        }
    }
    for (ctl, tgt) in return_to_identity(network, &allowed) {
        c.push(Gate::Cnot { control: ctl, target: tgt })?;
    }
    if opts.frame_gates {
        for q in 0..3 {
            c.push(Gate::Rz { q, angle: -FRAC_PI_2 })?;
        }
        // The wrapped circuit realises the factors in the model's X/Z form.
        for f in &mut factors {
            f.string = f.string.replace('Y', "X");
        }
    }
    c.metadata.factors = factors;
    c.metadata.trotter_steps = steps;
    c.metadata.dt = dt;
    c.metadata.model = "reduced3".into();
    c.metadata.connectivity = Some(vec![[1, 2], [2, 3]]);
    Ok(finish(c, opts))
}

/// Four-qubit pentaquark Trotter chain. Per-string synthesis on a linear
/// chain 2–3–5–6; 18 CNOTs per step.
pub fn synth_trotter_penta4(dt: f64, m_tilde: f64, x: f64, steps: usize, opts: &SynthOptions) -> Result<Circuit> {
    if !(dt.is_finite() && m_tilde.is_finite() && x.is_finite() && x > 0.0) {
        return Err(invalid("penta4 synthesis needs finite dt, m_tilde and x > 0"));
    }
    let h = model::penta4_parts(m_tilde, x).total();
    let mut o = opts.clone();
    if o.connectivity.is_none() {
        o.connectivity = Some(vec![(0, 1), (1, 2), (2, 3)]);
    }
    let mut c = synth_trotter_general(&h, dt, steps, &SynthOptions { peephole: false, ..o.clone() })?;
    c.metadata.model = "penta4".into();
    Ok(finish(c, &o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_unitary, declared_product, pauli_exp_dense};
    use crate::linalg::phase_aligned_distance;

    fn check_exp(s: &str, theta: f64, conn: Option<&[(usize, usize)]>) -> Vec<Gate> {
        let p: PauliString = s.parse().unwrap();
        let gates = synth_pauli_exp(&p, theta, conn).unwrap();
        let c = Circuit::from_gates(p.n_qubits(), gates.clone()).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let want = pauli_exp_dense(&p, theta).unwrap();
        let d = crate::linalg::max_abs_entry(&(u - want));
        assert!(d < 1e-12, "{s}: {d}");
        gates
    }

    #[test]
    fn printed_identities() {
        let g = check_exp("ZZ", 0.3, None);
        assert_eq!(
            g,
            vec![Gate::Cnot { control: 0, target: 1 }, Gate::Rz { q: 1, angle: -0.6 }, Gate::Cnot { control: 0, target: 1 }]
        );
        let g = check_exp("ZYZ", 0.3, None);
        assert_eq!(
            g,
            vec![
                Gate::Cnot { control: 0, target: 1 },
                Gate::Cnot { control: 2, target: 1 },
                Gate::Ry { q: 1, angle: -0.6 },
                Gate::Cnot { control: 2, target: 1 },
                Gate::Cnot { control: 0, target: 1 },
            ]
        );
    }

    #[test]
    fn assorted_strings_are_exact() {
        for s in ["X", "Y", "Z", "XZZX", "YZZY", "XYZI", "IYYI", "XIIX", "ZIIY", "YXZ", "IXI"] {
            let g = check_exp(s, 0.37, None);
            let p: PauliString = s.parse().unwrap();
            assert_eq!(g.iter().filter(|g| g.is_two_qubit()).count(), 2 * (p.weight() - 1));
        }
        check_exp("ZZZ", -1.1, Some(&[(0, 1), (1, 2)]));
        check_exp("YZZX", 0.2, Some(&[(0, 1), (1, 2), (2, 3)]));
    }

    #[test]
    fn routing_failure_reported() {
        let p: PauliString = "ZIZ".parse().unwrap();
        assert!(matches!(synth_pauli_exp(&p, 0.1, Some(&[(0, 1), (1, 2)])), Err(Error::Routing { .. })));
        assert!(synth_pauli_exp(&"II".parse().unwrap(), 0.1, None).is_err());
    }

    #[test]
    fn reduced3_layout_properties() {
        let l = reduced3_cnot_layout();
        assert!(l.iter().all(|&(c, t)| !matches!((c, t), (0, 2) | (2, 0))));
        let mut m = Gf2Map::IDENTITY;
        for _ in 0..2 {
            for &(c, t) in &l {
                m = m.cnot(c, t);
            }
        }
        assert_eq!(m, Gf2Map::IDENTITY);
    }

    #[test]
    fn reduced3_matches_declared_product() {
        for steps in [1usize, 2, 3, 4] {
            let c = synth_trotter_reduced3(0.1, 1.2, 0.8, steps, &SynthOptions::optimized()).unwrap();
            let d = phase_aligned_distance(&circuit_unitary(&c).unwrap(), &declared_product(&c).unwrap());
            assert!(d < 1e-10, "steps={steps}: {d}");
            assert_eq!(c.metadata.factors.len(), 9 * steps);
        }
        let c = synth_trotter_reduced3(0.1, 1.2, 0.8, 4, &SynthOptions::optimized()).unwrap();
        assert_eq!(c.cnot_count(), 40);
    }

    #[test]
    fn reduced3_frame_wrapped_matches_model_form() {
        let c = synth_trotter_reduced3(0.2, 0.7, 1.1, 2, &SynthOptions { frame_gates: true, ..SynthOptions::default() })
            .unwrap();
        assert!(c.metadata.factors.iter().all(|f| !f.string.contains('Y')));
        let d = phase_aligned_distance(&circuit_unitary(&c).unwrap(), &declared_product(&c).unwrap());
        assert!(d < 1e-10);
    }

    #[test]
    fn penta4_counts_and_product() {
        let c = synth_trotter_penta4(0.3, 0.1, 3.0, 1, &SynthOptions::optimized()).unwrap();
        assert!(c.cnot_count() <= 18);
        let d = phase_aligned_distance(&circuit_unitary(&c).unwrap(), &declared_product(&c).unwrap());
        assert!(d < 1e-10);
        let raw = synth_trotter_penta4(0.3, 0.1, 3.0, 1, &SynthOptions::default()).unwrap();
        assert_eq!(raw.cnot_count(), 18);
    }
}
