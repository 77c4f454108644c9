//! Small dense complex matrices (single- and two-mode operators).

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let id = CMatrix::identity(m.nrows(), m.ncols());
    (m.adjoint() * m - id).iter().all(|z| z.norm() <= tol)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(-i G)` for Hermitian `G`.
pub fn expm_hermitian(g: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(g);
    let n = g.nrows();
    let phases = CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, -vals[r])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &vecs * phases * vecs.adjoint()
}

/// Sum of absolute eigenvalues over two: trace distance for a Hermitian difference.
pub fn trace_norm_half(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}

pub(crate) fn row_major(m: &CMatrix) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            v.push(m[(r, c)]);
        }
    }
    v
}

pub(crate) fn from_row_major(n: usize, data: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| data[r * n + c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_pauli_y() {
        let y = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&y);
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        let recon = &vecs * CMatrix::from_diagonal(&nalgebra::DVector::from_fn(2, |i, _| Complex64::new(vals[i], 0.0))) * vecs.adjoint();
        assert!((recon - &y).iter().all(|z| z.norm() < 1e-12));
        let u = expm_hermitian(&y);
        assert!(is_unitary(&u, 1e-12));
    }
}
