//! Local rewrites that preserve the circuit unitary.

use std::f64::consts::PI;

use super::{Circuit, Gate};

const ANGLE_EPS: f64 = 1e-12;

/// Rotation angle reduced to `(−2π, 2π]`; rotations are `4π`-periodic.
fn wrap(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(4.0 * PI);
    if a > 2.0 * PI {
        a -= 4.0 * PI;
    }
    a
}

fn is_trivial(g: &Gate) -> bool {
    g.angle().is_some_and(|a| wrap(a).abs() < ANGLE_EPS)
}

/// Cancels and merges wire-adjacent gates until nothing changes:
///
/// * identical CNOTs and identical Pauli gates with nothing in between on their wires,
/// * same-axis rotations on one qubit (merged, dropped when the sum is zero),
/// * runs of consecutive CNOTs whose network is the identity.
pub fn peephole(c: &Circuit) -> Circuit {
    let mut gates: Vec<Option<Gate>> = c.gates().iter().copied().map(Some).collect();
    loop {
        let mut changed = false;
        for g in gates.iter_mut() {
            if g.as_ref().is_some_and(is_trivial) {
                *g = None;
                changed = true;
            }
        }
        for i in 0..gates.len() {
            let Some(gi) = gates[i] else { continue };
            let qs = gi.qubits();
            let next = (i + 1..gates.len()).find(|&j| gates[j].is_some_and(|g| qs.iter().any(|&q| g.touches(q))));
            let Some(j) = next else { continue };
            let gj = gates[j].expect("found non-empty");
            match (gi, gj) {
                (Gate::Cnot { .. }, Gate::Cnot { .. }) | (Gate::X(_), Gate::X(_)) | (Gate::Y(_), Gate::Y(_)) | (Gate::Z(_), Gate::Z(_))
                    if gi == gj =>
                {
                    gates[i] = None;
                    gates[j] = None;
                    changed = true;
                }
                (Gate::Rz { q: a, angle: x }, Gate::Rz { q: b, angle: y }) if a == b => {
                    gates[i] = None;
                    gates[j] = Some(Gate::Rz { q: a, angle: x + y });
                    changed = true;
                }
                (Gate::Ry { q: a, angle: x }, Gate::Ry { q: b, angle: y }) if a == b => {
                    gates[i] = None;
                    gates[j] = Some(Gate::Ry { q: a, angle: x + y });
                    changed = true;
                }
                _ => {}
            }
        }
        changed |= drop_identity_cnot_runs(&mut gates, c.n_qubits());
        if !changed {
            break;
        }
    }
    let mut out = c.clone();
    out.set_gates(gates.into_iter().flatten().collect());
    out
}

/// Removes runs of consecutive CNOTs that compose to the identity network.
fn drop_identity_cnot_runs(gates: &mut [Option<Gate>], n_qubits: usize) -> bool {
    let live: Vec<usize> = (0..gates.len()).filter(|&k| gates[k].is_some()).collect();
    let identity: Vec<u64> = (0..n_qubits).map(|q| 1u64 << q).collect();
    let mut changed = false;
    let mut a = 0;
    while a < live.len() {
        if !matches!(gates[live[a]], Some(Gate::Cnot { .. })) {
            a += 1;
            continue;
        }
        let mut rows = identity.clone();
        let mut end = None;
        for (b, &k) in live.iter().enumerate().skip(a) {
            match gates[k] {
                Some(Gate::Cnot { control, target }) => {
                    rows[target] ^= rows[control];
                    if rows == identity {
                        end = Some(b);
                    }
                }
                _ => break,
            }
        }
        match end {
            Some(b) => {
                for &k in &live[a..=b] {
                    gates[k] = None;
                }
                changed = true;
                a = b + 1;
            }
            None => a += 1,
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_unitary;
    use crate::linalg::phase_aligned_distance;

    #[test]
    fn cnot_pair_cancels() {
        let cx = Gate::Cnot { control: 0, target: 1 };
        let c = Circuit::from_gates(2, vec![cx, cx]).unwrap();
        assert!(peephole(&c).is_empty());
    }

    #[test]
    fn rotations_merge() {
        let c = Circuit::from_gates(2, vec![Gate::Rz { q: 1, angle: 0.2 }, Gate::Rz { q: 1, angle: 0.3 }]).unwrap();
        let p = peephole(&c);
        assert_eq!(p.gates(), &[Gate::Rz { q: 1, angle: 0.5 }]);
    }

    #[test]
    fn blocked_pairs_survive() {
        let cx = Gate::Cnot { control: 0, target: 1 };
        let c = Circuit::from_gates(2, vec![cx, Gate::Ry { q: 1, angle: 0.4 }, cx]).unwrap();
        assert_eq!(peephole(&c).cnot_count(), 2);
        // A gate on an unrelated wire does not block.
        let c = Circuit::from_gates(3, vec![cx, Gate::Ry { q: 2, angle: 0.4 }, cx]).unwrap();
        assert_eq!(peephole(&c).cnot_count(), 0);
    }

    #[test]
    fn identity_network_removed() {
        // Three alternating CNOTs swap, six swap back.
        let a = Gate::Cnot { control: 0, target: 1 };
        let b = Gate::Cnot { control: 1, target: 0 };
        let c = Circuit::from_gates(2, vec![a, b, a, a, b, a]).unwrap();
        assert!(peephole(&c).is_empty());
    }

    #[test]
    fn unitary_preserved() {
        let gates = vec![
            Gate::Rz { q: 0, angle: 0.3 },
            Gate::Cnot { control: 0, target: 1 },
            Gate::Rz { q: 0, angle: -0.1 },
            Gate::Cnot { control: 0, target: 1 },
            Gate::Ry { q: 1, angle: 4.0 * PI },
            Gate::X(2),
            Gate::X(2),
            Gate::Cnot { control: 2, target: 1 },
        ];
        let c = Circuit::from_gates(3, gates).unwrap();
        let p = peephole(&c);
        assert!(p.len() < c.len());
        let d = phase_aligned_distance(&circuit_unitary(&c).unwrap(), &circuit_unitary(&p).unwrap());
        assert!(d < 1e-12);
    }
}
