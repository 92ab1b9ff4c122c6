//! Qubit Hamiltonians for one-dimensional SU(3) lattice gauge theory with
//! staggered fermions.
//!
//! Every cell `n = 1..=N` holds three colour qubits with 1-based labels
//! `3n−2, 3n−1, 3n`. Odd cells carry antimatter, even cells matter. Spin up is
//! the `+1` eigenstate of `Z`; an antiquark is a down spin on an odd cell and a
//! quark an up spin on an even cell.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::QuantumState;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::OperatorSum;

/// Logical labels of the four qubits kept by the pentaquark reduction.
pub const PENTA_LOGICAL_LABELS: [usize; 4] = [2, 3, 5, 6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum Variant {
    Full,
    Reduced3,
    Penta4,
    /// Static anticharge at odd cell `n1`, static charge at even cell `n2`.
    StaticCharges { n1: usize, n2: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sites: usize,
    pub m_tilde: f64,
    pub x: f64,
    #[serde(flatten)]
    pub variant: Variant,
}

impl ModelParams {
    pub fn full(n_sites: usize, m_tilde: f64, x: f64) -> Self {
        ModelParams { n_sites, m_tilde, x, variant: Variant::Full }
    }

    pub fn reduced3(m_tilde: f64, x: f64) -> Self {
        ModelParams { n_sites: 2, m_tilde, x, variant: Variant::Reduced3 }
    }

    pub fn penta4(m_tilde: f64, x: f64) -> Self {
        ModelParams { n_sites: 2, m_tilde, x, variant: Variant::Penta4 }
    }

    pub fn static_charges(n_sites: usize, m_tilde: f64, x: f64, n1: usize, n2: usize) -> Self {
        ModelParams { n_sites, m_tilde, x, variant: Variant::StaticCharges { n1, n2 } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(invalid(format!("n_sites = {} (need at least 2)", self.n_sites)));
        }
        if !(self.m_tilde >= 0.0 && self.m_tilde.is_finite()) {
            return Err(invalid(format!("m_tilde = {} (need a finite value ≥ 0)", self.m_tilde)));
        }
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(invalid(format!("x = {} (need a finite value > 0)", self.x)));
        }
        match self.variant {
            Variant::Reduced3 | Variant::Penta4 if self.n_sites != 2 => {
                Err(invalid(format!("the {} variant requires n_sites = 2", self.variant_name())))
            }
            Variant::StaticCharges { n1, n2 } => {
                if !(1 <= n1 && n1 < n2 && n2 <= self.n_sites) {
                    Err(invalid(format!("static charges need 1 ≤ n1 < n2 ≤ N, got n1={n1}, n2={n2}")))
                } else if n1 % 2 == 0 || n2 % 2 == 1 {
                    Err(invalid(format!("static anticharge cell must be odd and charge cell even, got n1={n1}, n2={n2}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self.variant {
            Variant::Full => "full",
            Variant::Reduced3 => "reduced3",
            Variant::Penta4 => "penta4",
            Variant::StaticCharges { .. } => "static_charges",
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self.variant {
            Variant::Full => 3 * self.n_sites,
            Variant::Reduced3 => 3,
            Variant::Penta4 => 4,
            Variant::StaticCharges { .. } => 3 * self.n_sites + 6,
        }
    }
}

/// The three pieces of `H = H_kin + m̃ H_m + H_e / 2x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParts {
    pub kinetic: OperatorSum,
    pub mass: OperatorSum,
    pub electric: OperatorSum,
    pub m_tilde: f64,
    pub x: f64,
}

impl HamiltonianParts {
    pub fn total(&self) -> OperatorSum {
        (self.kinetic.clone() + self.mass.scale(self.m_tilde) + self.electric.scale(1.0 / (2.0 * self.x))).simplify()
    }
}

#[derive(Clone, Copy)]
enum Site {
    Plus,
    Minus,
    Z,
}

/// Ordered product of single-qubit factors at 1-based labels.
fn product(n_qubits: usize, factors: &[(usize, Site)]) -> OperatorSum {
    let mut acc = OperatorSum::constant(n_qubits, 1.0);
    for &(label, s) in factors {
        let p = label - 1;
        let f = match s {
            Site::Plus => OperatorSum::sigma_plus(n_qubits, p),
            Site::Minus => OperatorSum::sigma_minus(n_qubits, p),
            Site::Z => OperatorSum::z(n_qubits, p),
        };
        acc = &acc * &f;
    }
    acc
}

fn with_hc(op: OperatorSum) -> OperatorSum {
    let adj = op.adjoint();
    (op + adj).simplify()
}

fn z(n_qubits: usize, label: usize) -> OperatorSum {
    OperatorSum::z(n_qubits, label - 1)
}

fn zz(n_qubits: usize, a: usize, b: usize) -> OperatorSum {
    &z(n_qubits, a) * &z(n_qubits, b)
}

fn stagger(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Clean-up for constructions that are Hermitian by design.
fn hermitian(op: OperatorSum) -> OperatorSum {
    let s = op.simplify();
    debug_assert!(s.max_imag() < 1e-12, "construction produced a non-Hermitian operator");
    s.real_part()
}

fn require_full(params: &ModelParams) -> Result<()> {
    params.validate()?;
    match params.variant {
        Variant::Full => Ok(()),
        _ => Err(invalid(format!("operation requires the full variant, got {}", params.variant_name()))),
    }
}

fn kinetic_sites(n_sites: usize, n_qubits: usize) -> OperatorSum {
    let mut h = OperatorSum::zero(n_qubits);
    for n in 1..n_sites {
        let a = 3 * n - 2;
        let hop = |i: usize| {
            product(n_qubits, &[(a + i, Site::Plus), (a + i + 1, Site::Z), (a + i + 2, Site::Z), (a + i + 3, Site::Minus)])
        };
        let t = hop(0) - hop(1) + hop(2);
        h = h + with_hc(t).scale(0.5 * stagger(n));
    }
    hermitian(h)
}

fn mass_sites(n_sites: usize, n_qubits: usize) -> OperatorSum {
    let mut h = OperatorSum::zero(n_qubits);
    for n in 1..=n_sites {
        let a = 3 * n - 2;
        let zs = z(n_qubits, a) + z(n_qubits, a + 1) + z(n_qubits, a + 2);
        h = h + zs.scale(0.5 * stagger(n));
        h.add_constant(1.5);
    }
    hermitian(h)
}

/// Hopping term on `3N` qubits.
pub fn build_kinetic(params: &ModelParams) -> Result<OperatorSum> {
    require_full(params)?;
    Ok(kinetic_sites(params.n_sites, 3 * params.n_sites))
}

/// Staggered mass term; its eigenvalue on a basis state counts particles plus antiparticles.
pub fn build_mass(params: &ModelParams) -> Result<OperatorSum> {
    require_full(params)?;
    Ok(mass_sites(params.n_sites, 3 * params.n_sites))
}

/// The eight non-Abelian charges of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSet {
    pub site: usize,
    pub components: [OperatorSum; 8],
}

impl ChargeSet {
    /// `Σ_a (Q^a)²`.
    pub fn casimir(&self) -> OperatorSum {
        let n = self.components[0].n_qubits();
        hermitian(self.components.iter().fold(OperatorSum::zero(n), |acc, q| acc + q * q))
    }
}

/// Charges of cell `site` on a `3·n_sites` register.
pub fn build_charges(site: usize, n_sites: usize) -> Result<ChargeSet> {
    if site == 0 || site > n_sites {
        return Err(invalid(format!("cell {site} outside 1..={n_sites}")));
    }
    Ok(charges_in(site, 3 * n_sites))
}

/// Charges of cell `site` on an arbitrary register wide enough to hold it.
pub fn charges_in(site: usize, n_qubits: usize) -> ChargeSet {
    assert!(site >= 1 && 3 * site <= n_qubits, "cell {site} does not fit in {n_qubits} qubits");
    let (a, b, c) = (3 * site - 2, 3 * site - 1, 3 * site);
    let s = stagger(site);
    let half = 0.5;
    let i_half = Complex64::new(0.0, 0.5);

    let ab = product(n_qubits, &[(a, Site::Plus), (b, Site::Minus)]);
    let q1 = with_hc(ab).scale(s * half);

    let ba = product(n_qubits, &[(b, Site::Plus), (a, Site::Minus)]);
    let q2 = (ba.clone() - ba.adjoint()).scale(i_half * s);

    let q3 = (z(n_qubits, a) - z(n_qubits, b)).scale(0.25);

    let azc = product(n_qubits, &[(a, Site::Plus), (b, Site::Z), (c, Site::Minus)]);
    let q4 = with_hc(azc.clone()).scale(-half);
    let q5 = (azc.clone() - azc.adjoint()).scale(i_half);

    let bc = product(n_qubits, &[(b, Site::Plus), (c, Site::Minus)]);
    let q6 = with_hc(bc).scale(s * half);

    let cb = product(n_qubits, &[(c, Site::Plus), (b, Site::Minus)]);
    let q7 = (cb.clone() - cb.adjoint()).scale(i_half * s);

    let q8 = (z(n_qubits, a) + z(n_qubits, b) - z(n_qubits, c).scale(2.0)).scale(1.0 / (4.0 * 3f64.sqrt()));

    ChargeSet { site, components: [q1, q2, q3, q4, q5, q6, q7, q8].map(hermitian) }
}

/// `Q_tot^a = Σ_n Q_n^a` for each `a`.
pub fn total_charges(n_sites: usize) -> [OperatorSum; 8] {
    let nq = 3 * n_sites;
    let sets: Vec<ChargeSet> = (1..=n_sites).map(|n| charges_in(n, nq)).collect();
    std::array::from_fn(|a| hermitian(sets.iter().fold(OperatorSum::zero(nq), |acc, s| acc + s.components[a].clone())))
}

fn electric_from_charge_sets(sets: &[ChargeSet], n_links: usize, n_qubits: usize) -> OperatorSum {
    let mut h = OperatorSum::zero(n_qubits);
    for k in 1..=n_links {
        for a in 0..8 {
            let cum = sets[..k].iter().fold(OperatorSum::zero(n_qubits), |acc, s| acc + s.components[a].clone());
            h = h + &cum * &cum;
        }
    }
    hermitian(h)
}

/// `Σ_{n=1}^{N−1} (Σ_{m≤n} Q_m)²`, expanded.
pub fn build_electric_from_charges(params: &ModelParams) -> Result<OperatorSum> {
    require_full(params)?;
    let nq = 3 * params.n_sites;
    let sets: Vec<ChargeSet> = (1..=params.n_sites).map(|n| charges_in(n, nq)).collect();
    Ok(electric_from_charge_sets(&sets, params.n_sites - 1, nq))
}

/// Long-range spin form of the colour electric energy, term by term.
pub fn build_electric_explicit(params: &ModelParams) -> Result<OperatorSum> {
    require_full(params)?;
    let big_n = params.n_sites;
    let nq = 3 * big_n;
    let mut h = OperatorSum::zero(nq);
    for n in 1..big_n {
        let (a, b, c) = (3 * n - 2, 3 * n - 1, 3 * n);
        let w = (big_n - n) as f64 / 3.0;
        let mut local = OperatorSum::constant(nq, 3.0);
        local = local - zz(nq, a, b) - zz(nq, a, c) - zz(nq, b, c);
        h = h + local.scale(w);
    }
    for n in 1..big_n.saturating_sub(1) {
        for m in (n + 1)..big_n {
            let w = (big_n - m) as f64;
            let (an, bn, cn) = (3 * n - 2, 3 * n - 1, 3 * n);
            let (am, bm, cm) = (3 * m - 2, 3 * m - 1, 3 * m);
            let sign = stagger(n + m);
            let four = product(nq, &[(an, Site::Plus), (bn, Site::Minus), (bm, Site::Plus), (am, Site::Minus)])
                + product(nq, &[(bn, Site::Plus), (cn, Site::Minus), (bm, Site::Minus), (cm, Site::Plus)]);
            h = h + with_hc(four).scale(w * sign);
            let six = product(
                nq,
                &[(an, Site::Plus), (bn, Site::Z), (cn, Site::Minus), (am, Site::Minus), (bm, Site::Z), (cm, Site::Plus)],
            );
            h = h + with_hc(six).scale(w);
            let d = -w / 12.0;
            h = h + (&z(nq, am) * &(z(nq, bn) + z(nq, cn) - z(nq, an).scale(2.0))).scale(d);
            h = h + (&z(nq, bm) * &(z(nq, cn) + z(nq, an) - z(nq, bn).scale(2.0))).scale(d);
            h = h + (&z(nq, cm) * &(z(nq, an) + z(nq, bn) - z(nq, cn).scale(2.0))).scale(d);
        }
    }
    Ok(hermitian(h))
}

/// Kinetic, mass and (charge-built) electric pieces of the full model.
pub fn full_parts(params: &ModelParams) -> Result<HamiltonianParts> {
    require_full(params)?;
    Ok(HamiltonianParts {
        kinetic: build_kinetic(params)?,
        mass: build_mass(params)?,
        electric: build_electric_from_charges(params)?,
        m_tilde: params.m_tilde,
        x: params.x,
    })
}

/// `H = H_kin + m̃ H_m + H_e / 2x` on `3N` qubits.
pub fn build_full(params: &ModelParams) -> Result<OperatorSum> {
    Ok(full_parts(params)?.total())
}

/// Pieces of the CP-reduced three-qubit model.
pub fn reduced3_parts(m_tilde: f64, x: f64) -> HamiltonianParts {
    let nq = 3;
    let kinetic = ["XZZ", "ZXZ", "ZZX"]
        .iter()
        .fold(OperatorSum::zero(nq), |acc, s| acc + OperatorSum::from_term(-0.5, s.parse().expect("static string")));
    let mass = OperatorSum::constant(nq, 3.0) - z(nq, 1) - z(nq, 2) - z(nq, 3);
    let electric = (OperatorSum::constant(nq, 3.0) - zz(nq, 1, 2) - zz(nq, 1, 3) - zz(nq, 2, 3)).scale(1.0 / 3.0);
    HamiltonianParts { kinetic: kinetic.simplify(), mass: mass.simplify(), electric: electric.simplify(), m_tilde, x }
}

pub fn build_reduced3(params: &ModelParams) -> Result<OperatorSum> {
    params.validate()?;
    if params.n_sites != 2 {
        return Err(invalid("the three-qubit reduction exists only for n_sites = 2"));
    }
    Ok(reduced3_parts(params.m_tilde, params.x).total())
}

/// Pieces of the four-qubit pentaquark model on logical labels (2, 3, 5, 6),
/// stored at register positions 0..4 in that order.
pub fn penta4_parts(m_tilde: f64, x: f64) -> HamiltonianParts {
    let nq = 4;
    let lq = |label: usize| PENTA_LOGICAL_LABELS.iter().position(|&l| l == label).expect("pentaquark label") + 1;
    let t1 = product(nq, &[(lq(2), Site::Plus), (lq(3), Site::Z), (lq(5), Site::Minus)]);
    let t2 = product(nq, &[(lq(3), Site::Plus), (lq(5), Site::Z), (lq(6), Site::Minus)]);
    let kinetic = with_hc(t2 - t1).scale(-0.5);
    let mass = (OperatorSum::constant(nq, 6.0) - z(nq, lq(2)) - z(nq, lq(3)) + z(nq, lq(5)) + z(nq, lq(6))).scale(0.5);
    let electric =
        (OperatorSum::constant(nq, 3.0) - z(nq, lq(2)) - z(nq, lq(3)) - zz(nq, lq(2), lq(3))).scale(1.0 / 3.0);
    HamiltonianParts { kinetic: hermitian(kinetic), mass: hermitian(mass), electric: hermitian(electric), m_tilde, x }
}

pub fn build_penta4(params: &ModelParams) -> Result<OperatorSum> {
    params.validate()?;
    if params.n_sites != 2 {
        return Err(invalid("the pentaquark reduction exists only for n_sites = 2"));
    }
    Ok(penta4_parts(params.m_tilde, params.x).total())
}

/// Heavy-charge electric contributions `(h_qq, h_qQ)` on `3N + 6` qubits;
/// the heavy charges live on cells `N+1` (anticharge) and `N+2` (charge).
pub fn build_static_charge_terms(params: &ModelParams) -> Result<(OperatorSum, OperatorSum)> {
    params.validate()?;
    let Variant::StaticCharges { n1, n2 } = params.variant else {
        return Err(invalid("operation requires the static_charges variant"));
    };
    let big_n = params.n_sites;
    let nq = 3 * big_n + 6;
    let q1 = charges_in(big_n + 1, nq);
    let q2 = charges_in(big_n + 2, nq);
    let light: Vec<ChargeSet> = (1..=big_n).map(|n| charges_in(n, nq)).collect();

    let (w1, w2) = ((big_n - n1) as f64, (big_n - n2) as f64);
    let mut h_qq = OperatorSum::zero(nq);
    for a in 0..8 {
        let (x1, x2) = (&q1.components[a], &q2.components[a]);
        h_qq = h_qq + (x1 * x1).scale(w1) + (x2 * x2).scale(w2) + (x1 * x2).scale(2.0 * w2);
    }

    let mut h_qq_light = OperatorSum::zero(nq);
    for a in 0..8 {
        for n in 1..big_n {
            let c1 = (big_n - n1.max(n)) as f64;
            let c2 = (big_n - n2.max(n)) as f64;
            let heavy = q1.components[a].scale(c1) + q2.components[a].scale(c2);
            h_qq_light = h_qq_light + (&light[n - 1].components[a] * &heavy).scale(2.0);
        }
    }
    Ok((hermitian(h_qq), hermitian(h_qq_light)))
}

/// Full Hamiltonian with static charges: light kinetic and mass terms plus
/// the electric energy of light and heavy charges combined.
pub fn build_with_static_charges(params: &ModelParams) -> Result<OperatorSum> {
    let (h_qq, h_qq_light) = build_static_charge_terms(params)?;
    let nq = params.n_qubits();
    let light = ModelParams::full(params.n_sites, params.m_tilde, params.x);
    let parts = full_parts(&light)?;
    let electric = parts.electric.extend_to(nq)? + h_qq + h_qq_light;
    Ok(HamiltonianParts {
        kinetic: parts.kinetic.extend_to(nq)?,
        mass: parts.mass.extend_to(nq)?,
        electric,
        m_tilde: params.m_tilde,
        x: params.x,
    }
    .total())
}

/// Hamiltonian for any variant.
pub fn build_hamiltonian(params: &ModelParams) -> Result<OperatorSum> {
    params.validate()?;
    match params.variant {
        Variant::Full => build_full(params),
        Variant::Reduced3 => build_reduced3(params),
        Variant::Penta4 => build_penta4(params),
        Variant::StaticCharges { .. } => build_with_static_charges(params),
    }
}

/// Decomposed Hamiltonian for the variants that have a three-piece form.
pub fn hamiltonian_parts(params: &ModelParams) -> Result<HamiltonianParts> {
    params.validate()?;
    match params.variant {
        Variant::Full => full_parts(params),
        Variant::Reduced3 => Ok(reduced3_parts(params.m_tilde, params.x)),
        Variant::Penta4 => Ok(penta4_parts(params.m_tilde, params.x)),
        Variant::StaticCharges { .. } => Err(invalid("static-charge models have no three-piece decomposition")),
    }
}

/// Particle-number observable reported for each variant. The pentaquark
/// register counts the frozen light quark and the heavy diquark as `+2`.
pub fn particle_number(params: &ModelParams) -> Result<OperatorSum> {
    params.validate()?;
    match params.variant {
        Variant::Full => build_mass(params),
        Variant::Reduced3 => Ok(reduced3_parts(params.m_tilde, params.x).mass),
        Variant::Penta4 => {
            let mut n = penta4_parts(params.m_tilde, params.x).mass;
            n.add_constant(2.0);
            Ok(n)
        }
        Variant::StaticCharges { .. } => {
            let light = ModelParams::full(params.n_sites, params.m_tilde, params.x);
            build_mass(&light)?.extend_to(params.n_qubits())
        }
    }
}

/// `B = (1/6) Σ Z` over `3N` qubits.
pub fn baryon_number(n_sites: usize) -> OperatorSum {
    let nq = 3 * n_sites;
    (1..=nq).fold(OperatorSum::zero(nq), |acc, l| acc + z(nq, l)).scale(1.0 / 6.0)
}

/// Light redness, greenness and blueness at `N = 2`: `(Z_c + Z_{c+3}) / 2`.
pub fn light_colour_numbers() -> [OperatorSum; 3] {
    std::array::from_fn(|c| (z(6, c + 1) + z(6, c + 4)).scale(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    Vac,
    Meson,
    Tetraquark,
    Baryonium,
    PentaBaryonFull,
    PentaBaryonRed,
}

impl StateLabel {
    pub const ALL: [StateLabel; 6] = [
        StateLabel::Vac,
        StateLabel::Meson,
        StateLabel::Tetraquark,
        StateLabel::Baryonium,
        StateLabel::PentaBaryonFull,
        StateLabel::PentaBaryonRed,
    ];

    /// The four strong-coupling states of the three-qubit register.
    pub const STRONG_COUPLING: [StateLabel; 4] =
        [StateLabel::Vac, StateLabel::Meson, StateLabel::Tetraquark, StateLabel::Baryonium];

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Vac => "vac",
            StateLabel::Meson => "meson",
            StateLabel::Tetraquark => "tetraquark",
            StateLabel::Baryonium => "baryonium",
            StateLabel::PentaBaryonFull => "penta_baryon_full",
            StateLabel::PentaBaryonRed => "penta_baryon_red",
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StateLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown state label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedState {
    pub label: StateLabel,
    pub state: QuantumState,
}

fn superpose(terms: &[(f64, &str)]) -> QuantumState {
    let n = terms[0].1.len();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for &(c, pattern) in terms {
        let b = QuantumState::from_spins(pattern).expect("static spin pattern");
        for (a, bb) in amps.iter_mut().zip(b.amplitudes()) {
            *a += bb * c;
        }
    }
    QuantumState::normalized(n, amps).expect("non-zero superposition")
}

/// Named state in its natural register: three qubits for the strong-coupling
/// states, four for the reduced pentaquark state, six for the full one.
pub fn named_state(label: StateLabel) -> NamedState {
    let state = match label {
        StateLabel::Vac => superpose(&[(1.0, "uuu")]),
        StateLabel::Meson => superpose(&[(1.0, "duu"), (1.0, "udu"), (1.0, "uud")]),
        StateLabel::Tetraquark => superpose(&[(1.0, "ddu"), (1.0, "dud"), (1.0, "udd")]),
        StateLabel::Baryonium => superpose(&[(1.0, "ddd")]),
        StateLabel::PentaBaryonRed => superpose(&[(1.0, "uudd")]),
        StateLabel::PentaBaryonFull => superpose(&[(1.0, "uuuudd"), (-1.0, "uuudud"), (-1.0, "uuuddu")]),
    };
    NamedState { label, state }
}

pub fn named_states() -> Vec<NamedState> {
    StateLabel::ALL.into_iter().map(named_state).collect()
}

/// `Σ c_ijk |ijk⟩ ⊗ XXX|ijk⟩`: the CP-even, `B = 0` six-qubit image of a
/// three-qubit state.
pub fn cp_embed(state3: &QuantumState) -> Result<QuantumState> {
    if state3.n_qubits() != 3 {
        return Err(Error::QubitMismatch { left: 3, right: state3.n_qubits() });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 64];
    for (i, &c) in state3.amplitudes().iter().enumerate() {
        amps[i * 8 + (i ^ 7)] = c;
    }
    QuantumState::normalized(6, amps)
}

/// Eigenvalue with squared overlaps against each reference state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub eigenvalue: f64,
    pub overlaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub labels: Vec<String>,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    /// Row whose overlap with reference `k` is largest.
    pub fn dominant_row(&self, k: usize) -> usize {
        (0..self.rows.len())
            .max_by(|&a, &b| self.rows[a].overlaps[k].total_cmp(&self.rows[b].overlaps[k]))
            .expect("non-empty spectrum")
    }
}

const DEGENERACY_TOL: f64 = 1e-9;

fn sort_rows(rows: &mut [SpectrumRow]) {
    rows.sort_by(|a, b| {
        if (a.eigenvalue - b.eigenvalue).abs() > DEGENERACY_TOL {
            a.eigenvalue.total_cmp(&b.eigenvalue)
        } else {
            // Descending overlap with the references, in reference order.
            b.overlaps
                .iter()
                .zip(&a.overlaps)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        }
    });
}

/// Eigendecomposition of `h` with squared overlaps of every eigenvector with
/// each reference state.
pub fn spectrum_overlaps(h: &OperatorSum, basis: &[NamedState]) -> Result<SpectrumTable> {
    for b in basis {
        if b.state.n_qubits() != h.n_qubits() {
            return Err(Error::QubitMismatch { left: h.n_qubits(), right: b.state.n_qubits() });
        }
    }
    h.ensure_hermitian()?;
    let eig = linalg::hermitian_eigen(&h.real_part().to_dense()?);
    let mut rows: Vec<SpectrumRow> = (0..eig.values.len())
        .map(|k| {
            let col: Vec<Complex64> = eig.vectors.column(k).iter().copied().collect();
            SpectrumRow {
                eigenvalue: eig.values[k],
                overlaps: basis.iter().map(|b| linalg::inner(&col, b.state.amplitudes()).norm_sqr()).collect(),
            }
        })
        .collect();
    sort_rows(&mut rows);
    Ok(SpectrumTable { labels: basis.iter().map(|b| b.label.to_string()).collect(), rows })
}

/// Spectrum of `h` restricted to basis states where the diagonal operator
/// `sector` takes the value `level`.
pub fn sector_spectrum(h: &OperatorSum, sector: &OperatorSum, level: f64) -> Result<Vec<f64>> {
    if h.n_qubits() != sector.n_qubits() {
        return Err(Error::QubitMismatch { left: h.n_qubits(), right: sector.n_qubits() });
    }
    h.ensure_hermitian()?;
    let diag = sector.diagonal()?;
    let keep: Vec<usize> = (0..diag.len()).filter(|&i| (diag[i].re - level).abs() < 1e-9).collect();
    if keep.is_empty() {
        return Ok(Vec::new());
    }
    let dense = h.real_part().to_dense()?;
    let sub = CMatrix::from_fn(keep.len(), keep.len(), |i, j| dense[(keep[i], keep[j])]);
    Ok(linalg::hermitian_eigen(&sub).values)
}

/// Spectrum of `h` projected onto the span of orthonormal `basis` states.
pub fn subspace_spectrum(h: &OperatorSum, basis: &[QuantumState]) -> Result<Vec<f64>> {
    h.ensure_hermitian()?;
    let h = h.real_part();
    let images: Vec<Vec<Complex64>> = basis.iter().map(|b| h.apply(b.amplitudes())).collect::<Result<_>>()?;
    let k = basis.len();
    let sub = CMatrix::from_fn(k, k, |i, j| linalg::inner(basis[i].amplitudes(), &images[j]));
    Ok(linalg::hermitian_eigen(&sub).values)
}

/// The eight CP-embedded images of the three-qubit computational basis.
pub fn cp_even_basis() -> Vec<QuantumState> {
    (0..8).map(|i| cp_embed(&QuantumState::basis(3, i)).expect("three-qubit input")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expect(op: &OperatorSum, s: &QuantumState) -> f64 {
        s.expectation(op).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::full(1, 1.0, 1.0).validate().is_err());
        assert!(ModelParams::full(2, -1.0, 1.0).validate().is_err());
        assert!(ModelParams::full(2, 1.0, 0.0).validate().is_err());
        assert!(ModelParams { n_sites: 3, ..ModelParams::reduced3(1.0, 1.0) }.validate().is_err());
        assert!(ModelParams::static_charges(2, 1.0, 1.0, 1, 2).validate().is_ok());
        assert!(ModelParams::static_charges(2, 1.0, 1.0, 2, 2).validate().is_err());
        assert!(ModelParams::static_charges(4, 1.0, 1.0, 2, 4).validate().is_err());
    }

    #[test]
    fn params_json_shape() {
        let p = ModelParams::static_charges(2, 0.1, 3.0, 1, 2);
        let v: serde_json::Value = serde_json::to_value(p).unwrap();
        assert_eq!(v["variant"], "static_charges");
        assert_eq!(v["n1"], 1);
        let back: ModelParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let r: ModelParams = serde_json::from_str(r#"{"n_sites":2,"m_tilde":1.2,"x":0.8,"variant":"reduced3"}"#).unwrap();
        assert_eq!(r.variant, Variant::Reduced3);
    }

    #[test]
    fn reduced_mass_has_three_z_terms() {
        let m = reduced3_parts(1.0, 1.0).mass;
        assert_eq!(m.terms().len(), 3);
        assert_eq!(m.constant_term().re, 3.0);
    }

    #[test]
    fn mass_n2_matches_printed_form() {
        let h = build_mass(&ModelParams::full(2, 1.0, 1.0)).unwrap();
        let printed = (OperatorSum::constant(6, 6.0) - z(6, 1) - z(6, 2) - z(6, 3) + z(6, 4) + z(6, 5) + z(6, 6)).scale(0.5);
        assert!((h - printed).simplify().is_zero());
    }

    #[test]
    fn kinetic_string_counts() {
        for n_sites in [2usize, 3] {
            let k = build_kinetic(&ModelParams::full(n_sites, 1.0, 1.0)).unwrap();
            // Each σ⁺ZZσ⁻ + h.c. pair contributes XZZX and YZZY.
            assert_eq!(k.terms().len(), 2 * 3 * (n_sites - 1));
            for t in k.terms() {
                assert_eq!(t.string.weight(), 4);
                assert!((t.coeff.re.abs() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_site_casimir() {
        let cas = charges_in(1, 3).casimir();
        let d = cas.to_dense().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(d[(i, j)].norm() < 1e-14);
                }
            }
        }
        let vac = QuantumState::from_spins("uuu").unwrap();
        let one = QuantumState::from_spins("duu").unwrap();
        assert!(expect(&cas, &vac).abs() < 1e-14);
        assert!((expect(&cas, &one) - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn q3_formula() {
        let q = build_charges(2, 2).unwrap();
        let expected = (z(6, 4) - z(6, 5)).scale(0.25);
        assert!((q.components[2].clone() - expected).simplify().is_zero());
    }

    #[test]
    fn cp_embedding_of_vacuum_and_baryonium() {
        let v = cp_embed(&named_state(StateLabel::Vac).state).unwrap();
        assert_eq!(v, QuantumState::from_spins("uuuddd").unwrap());
        let b = cp_embed(&named_state(StateLabel::Baryonium).state).unwrap();
        assert_eq!(b, QuantumState::from_spins("dddu uu".replace(' ', "").as_str()).unwrap());
    }

    #[test]
    fn strong_coupling_ground_state_is_vacuum() {
        let p = ModelParams::full(2, 5.0, 0.2);
        let parts = full_parts(&p).unwrap();
        let h = (parts.mass.scale(p.m_tilde) + parts.electric.scale(1.0 / (2.0 * p.x))).simplify();
        let eig = linalg::hermitian_eigen(&h.to_dense().unwrap());
        let vac = cp_embed(&named_state(StateLabel::Vac).state).unwrap();
        assert!(eig.values[0].abs() < 1e-12);
        assert!((eig.values[1] - eig.values[0]) > 1.0);
        assert!(expect(&h, &vac).abs() < 1e-12);
    }

    #[test]
    fn spectrum_sorted_and_bounded() {
        let h = build_reduced3(&ModelParams::reduced3(1.2, 0.8)).unwrap();
        let basis: Vec<NamedState> = StateLabel::STRONG_COUPLING.into_iter().map(named_state).collect();
        let t = spectrum_overlaps(&h, &basis).unwrap();
        assert_eq!(t.rows.len(), 8);
        for w in t.rows.windows(2) {
            assert!(w[0].eigenvalue <= w[1].eigenvalue + DEGENERACY_TOL);
        }
        for r in &t.rows {
            let s: f64 = r.overlaps.iter().sum();
            assert!(s <= 1.0 + 1e-12 && r.overlaps.iter().all(|&o| (0.0..=1.0 + 1e-12).contains(&o)));
        }
    }
}
