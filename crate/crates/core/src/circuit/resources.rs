//! Gate counts for synthesised circuits and the general-N CNOT estimate.

use serde::{Deserialize, Serialize};

use super::Circuit;
use crate::error::{invalid, Result};
use crate::model::{self, ModelParams};
use crate::pauli::{OperatorSum, PauliString};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermResource {
    pub label: String,
    pub string: String,
    /// `2(weight − 1)`, the ladder cost of a stand-alone exponential.
    pub cnots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub cnot_count: usize,
    pub depth: usize,
    pub rotation_count: usize,
    pub per_term: Vec<TermResource>,
}

/// Counts for a circuit; the per-term breakdown lists the recorded factors.
pub fn resource_report(c: &Circuit) -> ResourceReport {
    ResourceReport {
        cnot_count: c.cnot_count(),
        depth: c.depth(),
        rotation_count: c.rotation_count(),
        per_term: c
            .metadata
            .factors
            .iter()
            .map(|f| TermResource {
                label: f.label.clone(),
                string: f.string.clone(),
                cnots: f.string.parse::<PauliString>().map(|p| 2 * p.weight().saturating_sub(1)).unwrap_or(0),
            })
            .collect(),
    }
}

/// Per-step CNOT estimate for the full `N`-cell model, split by term family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnotEstimate {
    pub n_sites: usize,
    pub kinetic: i64,
    pub electric_zz: i64,
    pub four_body: i64,
    pub six_body: i64,
    pub total: i64,
}

impl CnotEstimate {
    /// `103N² − 267N + 164`.
    pub fn closed_form(n_sites: usize) -> i64 {
        let n = n_sites as i64;
        103 * n * n - 267 * n + 164
    }
}

/// Family-by-family CNOT estimate for one Trotter step of the full model.
pub fn estimate_cnots(n_sites: usize) -> Result<CnotEstimate> {
    if n_sites < 2 {
        return Err(invalid(format!("n_sites = {n_sites} (need at least 2)")));
    }
    let n = n_sites as i64;
    let q = n * n - 3 * n + 2;
    let kinetic = 36 * (n - 1);
    let electric_zz = 6 * (n - 1) + 9 * q;
    let four_body = 54 * q;
    let six_body = 40 * q;
    Ok(CnotEstimate { n_sites, kinetic, electric_zz, four_body, six_body, total: kinetic + electric_zz + four_body + six_body })
}

fn ladder_cost(h: &OperatorSum, keep: impl Fn(&PauliString) -> bool) -> i64 {
    h.terms().iter().filter(|t| keep(&t.string)).map(|t| 2 * (t.string.weight() as i64 - 1)).sum()
}

/// CNOTs the per-string generator spends on one step of the full model,
/// split into the same families as [`estimate_cnots`].
pub fn naive_cnot_count(n_sites: usize) -> Result<CnotEstimate> {
    let p = ModelParams::full(n_sites, 1.0, 1.0);
    let kin = model::build_kinetic(&p)?;
    let ele = model::build_electric_from_charges(&p)?;
    let kinetic = ladder_cost(&kin, |_| true);
    let electric_zz = ladder_cost(&ele, |s| s.is_diagonal());
    let four_body = ladder_cost(&ele, |s| !s.is_diagonal() && s.weight() == 4);
    let six_body = ladder_cost(&ele, |s| !s.is_diagonal() && s.weight() == 6);
    let other = ladder_cost(&ele, |s| !s.is_diagonal() && s.weight() != 4 && s.weight() != 6);
    Ok(CnotEstimate {
        n_sites,
        kinetic,
        electric_zz,
        four_body,
        six_body,
        total: kinetic + electric_zz + four_body + six_body + other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(CnotEstimate::closed_form(2), 42);
        assert_eq!(CnotEstimate::closed_form(3), 290);
        for n in 2..8 {
            assert_eq!(estimate_cnots(n).unwrap().total, CnotEstimate::closed_form(n));
        }
        let e = estimate_cnots(2).unwrap();
        assert_eq!((e.four_body, e.six_body, e.electric_zz), (0, 0, 6));
        assert!(estimate_cnots(1).is_err());
    }

    #[test]
    fn naive_generator_at_two_sites() {
        let e = naive_cnot_count(2).unwrap();
        assert_eq!(e.kinetic, 36);
        assert_eq!(e.total, 42);
    }
}
