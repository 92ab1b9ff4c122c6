//! Small dense complex linear algebra on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = Vec<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues (ascending) and column eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = m.nrows();
    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.iter().all(|z| z.norm() == 0.0) {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0_f64, |acc, &v| acc.max(v)).max(0.0).sqrt()
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `min_φ ‖a − e^{iφ} b‖_F`, i.e. the Frobenius distance once the global
/// phase has been aligned.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    aligned_distance(a.as_slice(), b.as_slice())
}

/// Same as [`phase_aligned_distance`] for state vectors.
pub fn state_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    aligned_distance(a, b)
}

fn aligned_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    // Differences are summed directly; the expanded form loses precision.
    let overlap: Complex64 = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    a.iter().zip(b).map(|(x, y)| (x - phase * y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat_vec(m: &CMatrix, v: &[Complex64]) -> CVector {
    let n = m.nrows();
    let mut out = vec![ZERO; n];
    for (j, &vj) in v.iter().enumerate() {
        if vj == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    let prod = m.adjoint() * m;
    let id = CMatrix::identity(m.nrows(), m.ncols());
    max_abs_entry(&(prod - id)) < tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(2.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)],
        );
        let e = hermitian_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let a = CMatrix::identity(4, 4);
        let b = a.map(|z| z * Complex64::from_polar(1.0, 0.7));
        assert!(phase_aligned_distance(&a, &b) < 1e-12);
        assert!(phase_aligned_distance(&a, &(b * Complex64::new(0.5, 0.0))) > 0.5);
    }

    #[test]
    fn spectral_norm_of_pauli_is_one() {
        let y = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        assert!((spectral_norm(&y) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&CMatrix::zeros(3, 3)), 0.0);
    }
}
