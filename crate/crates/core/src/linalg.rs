//! Dense complex linear algebra helpers for the verification paths.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Spectral norm of a Hermitian matrix, `max |λ|`.
pub fn hermitian_spectral_norm(h: &CMatrix) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let eig = SymmetricEigen::new(h.clone());
    eig.eigenvalues.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Largest singular value of an arbitrary square matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().fold(0.0, |acc, v| acc.max(*v))
}

/// `exp(-i·h·dt)` for Hermitian `h` via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, dt: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, -lam * dt)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(u.nrows(), u.ncols()))
}

pub fn apply(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let x = DVector::from_column_slice(v);
    (m * x).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_pauli_z() {
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let u = expm_hermitian(&z, std::f64::consts::PI);
        let minus_identity = -CMatrix::identity(2, 2);
        assert!(max_abs_diff(&u, &minus_identity) < 1e-14);
        assert!(unitarity_deviation(&u) < 1e-14);
    }

    #[test]
    fn norms_of_pauli_y() {
        let y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert!((hermitian_spectral_norm(&y) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&y) - 1.0).abs() < 1e-14);
    }
}
