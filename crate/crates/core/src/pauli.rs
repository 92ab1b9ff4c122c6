//! Pauli strings, weighted Pauli sums and their dense realisation.
//!
//! Register position `p` (0-based) corresponds to the 1-based site label
//! `p + 1` used in every external format. In dense matrices the first qubit is
//! the leftmost Kronecker factor, i.e. the most significant bit of the basis
//! index, and `|0⟩ = |↑⟩` is the `+1` eigenstate of `Z`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Default qubit limit for anything that materialises a `2^n × 2^n` matrix.
pub const DENSE_LIMIT: usize = 12;

/// Coefficients with magnitude below this are dropped by [`OperatorSum::simplify`].
pub const COEFF_EPS: f64 = 1e-12;

/// Widest register a [`PauliString`] can describe.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn matrix(self) -> CMatrix {
        use crate::linalg::I as IM;
        match self {
            Letter::I => CMatrix::identity(2, 2),
            Letter::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Letter::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -IM, IM, ZERO]),
            Letter::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

/// A power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor product of single-qubit Paulis, packed as X/Z bit masks.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n_qubits), "unsupported register width {n_qubits}");
        PauliString { n_qubits, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Self {
        let mut s = Self::identity(n_qubits);
        let keep = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        s.x = x & keep;
        s.z = z & keep;
        s
    }

    /// Single non-identity letter at register position `pos`.
    pub fn single(n_qubits: usize, pos: usize, letter: Letter) -> Self {
        let mut s = Self::identity(n_qubits);
        s.set(pos, letter);
        s
    }

    /// Letters at the given register positions, identity elsewhere.
    pub fn from_sparse(n_qubits: usize, letters: &[(usize, Letter)]) -> Self {
        let mut s = Self::identity(n_qubits);
        for &(p, l) in letters {
            s.set(p, l);
        }
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, pos: usize) -> Letter {
        assert!(pos < self.n_qubits);
        Letter::from_bits(self.x >> pos & 1 == 1, self.z >> pos & 1 == 1)
    }

    pub fn set(&mut self, pos: usize, letter: Letter) {
        assert!(pos < self.n_qubits, "position {pos} outside {}-qubit register", self.n_qubits);
        let (x, z) = letter.bits();
        let bit = 1u64 << pos;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n_qubits).map(move |p| self.letter(p))
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|&p| (self.x | self.z) >> p & 1 == 1).collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `self · other = phase · product`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: other.n_qubits });
        }
        Ok(self.multiply_unchecked(other))
    }

    fn multiply_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        // P = i^{|x∧z|} X^x Z^z, and Z^z1 X^x2 = (-1)^{|z1∧x2|} X^x2 Z^z1.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones() as i64 + (other.x & other.z).count_ones() as i64
            - (x & z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64;
        (Phase::from_power(k), PauliString { n_qubits: self.n_qubits, x, z })
    }

    /// Masks re-expressed in basis-index bit order (qubit 1 = most significant bit).
    pub fn index_masks(&self) -> (usize, usize) {
        let n = self.n_qubits;
        let mut xi = 0usize;
        let mut zi = 0usize;
        for p in 0..n {
            let bit = 1usize << (n - 1 - p);
            if self.x >> p & 1 == 1 {
                xi |= bit;
            }
            if self.z >> p & 1 == 1 {
                zi |= bit;
            }
        }
        (xi, zi)
    }

    /// `P|b⟩ = amplitude · |b'⟩` for a computational basis index `b`.
    pub fn apply_to_basis(&self, b: usize) -> (Complex64, usize) {
        let (xi, zi) = self.index_masks();
        apply_masks(xi, zi, (self.x & self.z).count_ones(), b)
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        check_dense(self.n_qubits, DENSE_LIMIT)?;
        let dim = 1usize << self.n_qubits;
        let (xi, zi) = self.index_masks();
        let ny = (self.x & self.z).count_ones();
        let mut m = CMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (amp, out) = apply_masks(xi, zi, ny, b);
            m[(out, b)] = amp;
        }
        Ok(m)
    }
}

#[inline]
fn apply_masks(xi: usize, zi: usize, n_y: u32, b: usize) -> (Complex64, usize) {
    let sign = if (zi & b).count_ones() % 2 == 1 { 2 } else { 0 };
    (Phase::from_power(n_y as i64 + sign).to_complex(), b ^ xi)
}

pub(crate) fn check_dense(n_qubits: usize, limit: usize) -> Result<()> {
    if n_qubits > limit {
        Err(Error::DenseLimit { n_qubits, limit })
    } else {
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Parse(format!("Pauli string of length {n}")));
        }
        let mut out = PauliString::identity(n);
        for (p, c) in s.chars().enumerate() {
            let l = match c.to_ascii_uppercase() {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                other => return Err(Error::Parse(format!("unknown Pauli letter {other:?}"))),
            };
            out.set(p, l);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: impl Into<Complex64>, string: PauliString) -> Self {
        PauliTerm { coeff: coeff.into(), string }
    }
}

/// `constant · 1 + Σ coeff_k · P_k` on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    constant: Complex64,
}

impl OperatorSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n_qubits));
        OperatorSum { n_qubits, terms: Vec::new(), constant: ZERO }
    }

    pub fn constant(n_qubits: usize, c: impl Into<Complex64>) -> Self {
        let mut s = Self::zero(n_qubits);
        s.constant = c.into();
        s
    }

    pub fn from_term(coeff: impl Into<Complex64>, string: PauliString) -> Self {
        let mut s = Self::zero(string.n_qubits());
        s.push(coeff, string);
        s
    }

    /// `coeff · letter` on register position `pos`.
    pub fn single(n_qubits: usize, pos: usize, letter: Letter, coeff: impl Into<Complex64>) -> Self {
        Self::from_term(coeff, PauliString::single(n_qubits, pos, letter))
    }

    pub fn z(n_qubits: usize, pos: usize) -> Self {
        Self::single(n_qubits, pos, Letter::Z, 1.0)
    }

    /// `σ⁺ = (X + iY)/2 = |↑⟩⟨↓|`.
    pub fn sigma_plus(n_qubits: usize, pos: usize) -> Self {
        Self::single(n_qubits, pos, Letter::X, 0.5) + Self::single(n_qubits, pos, Letter::Y, Complex64::new(0.0, 0.5))
    }

    /// `σ⁻ = (X − iY)/2 = |↓⟩⟨↑|`.
    pub fn sigma_minus(n_qubits: usize, pos: usize) -> Self {
        Self::single(n_qubits, pos, Letter::X, 0.5) + Self::single(n_qubits, pos, Letter::Y, Complex64::new(0.0, -0.5))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn constant_term(&self) -> Complex64 {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.norm() < COEFF_EPS
    }

    /// Appends a term without merging; identity strings go to the constant.
    pub fn push(&mut self, coeff: impl Into<Complex64>, string: PauliString) {
        assert_eq!(string.n_qubits(), self.n_qubits, "term width must match the sum");
        let coeff = coeff.into();
        if string.is_identity() {
            self.constant += coeff;
        } else {
            self.terms.push(PauliTerm { coeff, string });
        }
    }

    pub fn add_constant(&mut self, c: impl Into<Complex64>) {
        self.constant += c.into();
    }

    /// Same operator on a wider register, padded with identities after the
    /// current last qubit.
    pub fn extend_to(&self, n_qubits: usize) -> Result<OperatorSum> {
        if n_qubits < self.n_qubits || n_qubits > MAX_QUBITS {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: n_qubits });
        }
        let mut out = OperatorSum::constant(n_qubits, self.constant);
        for t in &self.terms {
            out.push(t.coeff, PauliString::from_masks(n_qubits, t.string.x, t.string.z));
        }
        Ok(out)
    }

    /// Relabels register positions: qubit `p` of `self` lands on `map[p]` of
    /// an `n_qubits` register.
    pub fn remap(&self, n_qubits: usize, map: &[usize]) -> Result<OperatorSum> {
        if map.len() != self.n_qubits || map.iter().any(|&p| p >= n_qubits) {
            return Err(Error::InvalidParams(format!("bad qubit map {map:?} into {n_qubits} qubits")));
        }
        let mut out = OperatorSum::constant(n_qubits, self.constant);
        for t in &self.terms {
            let mut s = PauliString::identity(n_qubits);
            for (p, &q) in map.iter().enumerate() {
                s.set(q, t.string.letter(p));
            }
            out.push(t.coeff, s);
        }
        Ok(out)
    }

    /// Merges duplicate strings and drops terms below [`COEFF_EPS`].
    pub fn simplify(&self) -> OperatorSum {
        self.simplify_with(COEFF_EPS)
    }

    /// Like [`simplify`](Self::simplify) with a custom drop threshold.
    pub fn simplify_with(&self, eps: f64) -> OperatorSum {
        let mut index: HashMap<PauliString, usize> = HashMap::with_capacity(self.terms.len());
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match index.get(&t.string) {
                Some(&k) => merged[k].coeff += t.coeff,
                None => {
                    index.insert(t.string, merged.len());
                    merged.push(*t);
                }
            }
        }
        merged.retain(|t| t.coeff.norm() >= eps);
        let mut constant = self.constant;
        if constant.norm() < eps {
            constant = ZERO;
        }
        OperatorSum { n_qubits: self.n_qubits, terms: merged, constant }
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> OperatorSum {
        let c = c.into();
        OperatorSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|t| PauliTerm { coeff: t.coeff * c, string: t.string }).collect(),
            constant: self.constant * c,
        }
    }

    pub fn adjoint(&self) -> OperatorSum {
        OperatorSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|t| PauliTerm { coeff: t.coeff.conj(), string: t.string }).collect(),
            constant: self.constant.conj(),
        }
    }

    fn check_width(&self, other: &OperatorSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            Err(Error::QubitMismatch { left: self.n_qubits, right: other.n_qubits })
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_width(other)?;
        let mut out = self.clone();
        out.terms.extend_from_slice(&other.terms);
        out.constant += other.constant;
        Ok(out)
    }

    /// Operator product, simplified.
    pub fn try_mul(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_width(other)?;
        let mut out = OperatorSum::zero(self.n_qubits);
        out.constant = self.constant * other.constant;
        for t in &other.terms {
            out.push(self.constant * t.coeff, t.string);
        }
        for s in &self.terms {
            out.push(s.coeff * other.constant, s.string);
            for t in &other.terms {
                let (phase, p) = s.string.multiply_unchecked(&t.string);
                out.push(s.coeff * t.coeff * phase.to_complex(), p);
            }
        }
        Ok(out.simplify())
    }

    /// `a·b − b·a`, simplified. Only anticommuting string pairs contribute.
    pub fn commutator(a: &OperatorSum, b: &OperatorSum) -> Result<OperatorSum> {
        a.check_width(b)?;
        let mut out = OperatorSum::zero(a.n_qubits);
        for s in &a.terms {
            for t in &b.terms {
                if !s.string.commutes_with(&t.string) {
                    let (phase, p) = s.string.multiply_unchecked(&t.string);
                    out.push(s.coeff * t.coeff * phase.to_complex() * 2.0, p);
                }
            }
        }
        Ok(out.simplify())
    }

    pub fn max_imag(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.im.abs())
            .fold(self.constant.im.abs(), f64::max)
    }

    /// Hermitian iff every simplified coefficient is real.
    pub fn is_hermitian(&self, eps: f64) -> bool {
        self.simplify().max_imag() <= eps
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let m = self.simplify().max_imag();
        if m > 1e-10 {
            Err(Error::NonHermitian { max_imag: m })
        } else {
            Ok(())
        }
    }

    /// Sum with imaginary parts discarded; use after [`ensure_hermitian`](Self::ensure_hermitian).
    pub fn real_part(&self) -> OperatorSum {
        OperatorSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|t| PauliTerm { coeff: Complex64::new(t.coeff.re, 0.0), string: t.string }).collect(),
            constant: Complex64::new(self.constant.re, 0.0),
        }
        .simplify()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.string.is_diagonal())
    }

    /// Diagonal entries of a Z-only operator.
    pub fn diagonal(&self) -> Result<Vec<Complex64>> {
        if !self.is_diagonal() {
            return Err(Error::InvalidParams("operator is not diagonal in the Z basis".into()));
        }
        check_dense(self.n_qubits, 24)?;
        let dim = 1usize << self.n_qubits;
        let prepared: Vec<(Complex64, usize)> = self.terms.iter().map(|t| (t.coeff, t.string.index_masks().1)).collect();
        Ok((0..dim)
            .map(|b| {
                prepared.iter().fold(self.constant, |acc, &(c, zi)| {
                    if (zi & b).count_ones() % 2 == 1 {
                        acc - c
                    } else {
                        acc + c
                    }
                })
            })
            .collect())
    }

    /// Matrix-free `O|ψ⟩`.
    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits;
        if psi.len() != dim {
            return Err(Error::InvalidParams(format!("state of length {} on {} qubits", psi.len(), self.n_qubits)));
        }
        let prepared: Vec<(Complex64, usize, usize, u32)> = self
            .terms
            .iter()
            .map(|t| {
                let (xi, zi) = t.string.index_masks();
                (t.coeff, xi, zi, (t.string.x & t.string.z).count_ones())
            })
            .collect();
        let mut out: Vec<Complex64> = psi.iter().map(|a| a * self.constant).collect();
        for (b, &amp) in psi.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            for &(c, xi, zi, ny) in &prepared {
                let (ph, tgt) = apply_masks(xi, zi, ny, b);
                out[tgt] += c * ph * amp;
            }
        }
        Ok(out)
    }

    /// `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<Complex64> {
        let o = self.apply(psi)?;
        Ok(linalg::inner(psi, &o))
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        self.to_dense_with_limit(DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<CMatrix> {
        check_dense(self.n_qubits, limit)?;
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::identity(dim, dim) * self.constant;
        for t in &self.terms {
            let (xi, zi) = t.string.index_masks();
            let ny = (t.string.x & t.string.z).count_ones();
            for b in 0..dim {
                let (ph, out) = apply_masks(xi, zi, ny, b);
                m[(out, b)] += t.coeff * ph;
            }
        }
        Ok(m)
    }

    /// Largest entry magnitude of the dense realisation, computed column by
    /// column so it works up to the dense limit without a `4^n` allocation.
    pub fn dense_max_abs_entry(&self) -> Result<f64> {
        check_dense(self.n_qubits, DENSE_LIMIT)?;
        let dim = 1usize << self.n_qubits;
        let prepared: Vec<(Complex64, usize, usize, u32)> = self
            .terms
            .iter()
            .map(|t| {
                let (xi, zi) = t.string.index_masks();
                (t.coeff, xi, zi, (t.string.x & t.string.z).count_ones())
            })
            .collect();
        let mut col: HashMap<usize, Complex64> = HashMap::new();
        let mut best: f64 = 0.0;
        for b in 0..dim {
            col.clear();
            col.insert(b, self.constant);
            for &(c, xi, zi, ny) in &prepared {
                let (ph, tgt) = apply_masks(xi, zi, ny, b);
                *col.entry(tgt).or_insert(ZERO) += c * ph;
            }
            best = col.values().fold(best, |acc, z| acc.max(z.norm()));
        }
        Ok(best)
    }

    /// Spectral norm of the dense realisation.
    pub fn spectral_norm(&self) -> Result<f64> {
        let s = self.simplify();
        if s.is_zero() {
            return Ok(0.0);
        }
        if s.terms.is_empty() {
            return Ok(s.constant.norm());
        }
        if s.terms.len() == 1 && s.constant == ZERO {
            // c·P has singular values |c|.
            return Ok(s.terms[0].coeff.norm());
        }
        Ok(linalg::spectral_norm(&s.to_dense()?))
    }

    pub fn to_json_value(&self) -> OperatorSumJson {
        OperatorSumJson {
            n_qubits: self.n_qubits,
            constant: self.constant.re,
            constant_im: if self.constant.im != 0.0 { Some(self.constant.im) } else { None },
            terms: self
                .terms
                .iter()
                .map(|t| TermJson { coeff_re: t.coeff.re, coeff_im: t.coeff.im, string: t.string.to_string() })
                .collect(),
        }
    }

    pub fn from_json_value(v: &OperatorSumJson) -> Result<OperatorSum> {
        if v.n_qubits == 0 || v.n_qubits > MAX_QUBITS {
            return Err(Error::Parse(format!("n_qubits = {}", v.n_qubits)));
        }
        let mut s = OperatorSum::constant(v.n_qubits, Complex64::new(v.constant, v.constant_im.unwrap_or(0.0)));
        for t in &v.terms {
            let string: PauliString = t.string.parse()?;
            if string.n_qubits() != v.n_qubits {
                return Err(Error::QubitMismatch { left: v.n_qubits, right: string.n_qubits() });
            }
            s.push(Complex64::new(t.coeff_re, t.coeff_im), string);
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("operator JSON is always serialisable")
    }

    pub fn from_json(text: &str) -> Result<OperatorSum> {
        let v: OperatorSumJson = serde_json::from_str(text)?;
        Self::from_json_value(&v)
    }
}

/// Wire form of an [`OperatorSum`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OperatorSumJson {
    pub n_qubits: usize,
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_im: Option<f64>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub coeff_re: f64,
    pub coeff_im: f64,
    pub string: String,
}

impl Add for OperatorSum {
    type Output = OperatorSum;
    fn add(self, rhs: OperatorSum) -> OperatorSum {
        self.try_add(&rhs).expect("operator width mismatch")
    }
}

impl Sub for OperatorSum {
    type Output = OperatorSum;
    fn sub(self, rhs: OperatorSum) -> OperatorSum {
        self.try_add(&(-rhs)).expect("operator width mismatch")
    }
}

impl Neg for OperatorSum {
    type Output = OperatorSum;
    fn neg(self) -> OperatorSum {
        self.scale(-1.0)
    }
}

impl Mul for &OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: &OperatorSum) -> OperatorSum {
        self.try_mul(rhs).expect("operator width mismatch")
    }
}

impl Mul<f64> for OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: f64) -> OperatorSum {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: Complex64) -> OperatorSum {
        self.scale(rhs)
    }
}

impl std::iter::Sum for OperatorSum {
    fn sum<It: Iterator<Item = OperatorSum>>(mut iter: It) -> OperatorSum {
        let first = iter.next().expect("cannot sum an empty iterator of operators");
        iter.fold(first, |acc, x| acc + x)
    }
}

/// `Σ_{j,k} ‖[h_j, h_k]‖` over ordered pairs, the first-order Trotter error
/// prefactor. Symmetric in the pair, so each unordered pair is counted twice.
pub fn alpha_bound(h_terms: &[OperatorSum]) -> Result<f64> {
    let Some(first) = h_terms.first() else { return Ok(0.0) };
    for h in h_terms {
        first.check_width(h)?;
    }
    let mut total = 0.0;
    for j in 0..h_terms.len() {
        for k in (j + 1)..h_terms.len() {
            let c = OperatorSum::commutator(&h_terms[j], &h_terms[k])?;
            if !c.is_zero() {
                total += 2.0 * c.spectral_norm()?;
            }
        }
    }
    Ok(total)
}

/// One [`OperatorSum`] per Pauli string of `h` (the constant is dropped).
pub fn split_by_string(h: &OperatorSum) -> Vec<OperatorSum> {
    h.simplify().terms().iter().map(|t| OperatorSum::from_term(t.coeff, t.string)).collect()
}
