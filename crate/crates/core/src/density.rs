use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::linalg::{self, CMatrix};
use crate::state::{ModeId, PureState};
use crate::tensor::{self, ZERO};

/// Density operator over a few modes sharing one grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    grid: ModeGrid,
    labels: Vec<ModeId>,
    dim: usize,
    matrix: Vec<Complex64>,
}

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const PSD_TOLERANCE: f64 = 1e-8;

impl DensityState {
    pub(crate) fn from_matrix_unchecked(grid: ModeGrid, labels: Vec<ModeId>, matrix: Vec<Complex64>) -> Result<Self> {
        let dim = tensor::checked_dim(grid.n_points(), labels.len()).ok_or(Error::ShapeMismatch("dimension overflow"))?;
        if matrix.len() != dim * dim {
            return Err(Error::ShapeMismatch("density matrix is not N^M x N^M"));
        }
        Ok(Self {
            grid,
            labels,
            dim,
            matrix,
        })
    }

    /// Validating constructor: Hermitian and unit trace within 1e-10.
    pub fn from_matrix(grid: ModeGrid, labels: Vec<ModeId>, matrix: Vec<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(grid, labels, matrix)?;
        if !rho.is_hermitian(HERMITIAN_TOLERANCE) {
            return Err(Error::NonHermitian);
        }
        if (rho.trace().re - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: "trace must be 1",
            });
        }
        Ok(rho)
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = state.amplitudes();
        let d = a.len();
        let mut m = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = a[i] * a[j].conj();
            }
        }
        Self {
            grid: *state.grid(),
            labels: state.labels().to_vec(),
            dim: d,
            matrix: m,
        }
    }

    pub fn maximally_mixed(grid: ModeGrid, labels: Vec<ModeId>) -> Result<Self> {
        let dim = tensor::checked_dim(grid.n_points(), labels.len()).ok_or(Error::ShapeMismatch("dimension overflow"))?;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self::from_matrix_unchecked(grid, labels, m)
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn labels(&self) -> &[ModeId] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> CMatrix {
        linalg::from_row_major(self.dim, &self.matrix)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.matrix[i * self.dim + i]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim;
        (0..d).all(|i| (i..d).all(|j| (self.matrix[i * d + j] - self.matrix[j * d + i].conj()).norm() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.to_matrix()).0[0]
    }

    /// Hermitian, unit trace, and positive semidefinite within the crate tolerances.
    pub fn is_physical(&self) -> bool {
        self.is_hermitian(HERMITIAN_TOLERANCE)
            && (self.trace().re - 1.0).abs() <= TRACE_TOLERANCE
            && self.min_eigenvalue() >= -PSD_TOLERANCE
    }

    fn check_compatible(&self, other: &DensityState) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.labels != other.labels {
            return Err(Error::ShapeMismatch("density states over different modes"));
        }
        Ok(())
    }

    pub fn trace_distance(&self, other: &DensityState) -> Result<f64> {
        self.check_compatible(other)?;
        let diff = self.to_matrix() - other.to_matrix();
        Ok(linalg::trace_norm_half(&diff))
    }

    /// `<psi| rho |psi>`; the pure state must carry the same labels.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let psi = psi.reorder(&self.labels)?;
        let a = psi.amplitudes();
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            let row: Complex64 = self.matrix[i * d..(i + 1) * d].iter().zip(a).map(|(m, x)| m * x).sum();
            acc += a[i].conj() * row;
        }
        Ok(acc.re.clamp(0.0, 1.0))
    }

    fn mode_position(&self, mode: ModeId) -> Result<usize> {
        self.labels.iter().position(|&l| l == mode).ok_or(Error::UnknownMode(mode))
    }

    /// Row stride (left action) and column stride (right action) of a mode,
    /// treating the matrix as a tensor with 2M axes.
    fn axis_strides(&self, mode: ModeId) -> Result<(usize, usize)> {
        let p = self.mode_position(mode)?;
        let st = tensor::strides(self.grid.n_points(), self.labels.len())[p];
        Ok((st * self.dim, st))
    }

    /// `(O on mode) rho`.
    pub fn apply_left(&self, op: &CMatrix, mode: ModeId) -> Result<Self> {
        let (row, _) = self.axis_strides(mode)?;
        let m = linalg::row_major(op);
        Ok(self.with_matrix(tensor::apply_axis(&self.matrix, self.grid.n_points(), row, &m)))
    }

    /// `rho (O on mode)`.
    pub fn apply_right(&self, op: &CMatrix, mode: ModeId) -> Result<Self> {
        let (_, col) = self.axis_strides(mode)?;
        let m = linalg::row_major(&op.transpose());
        Ok(self.with_matrix(tensor::apply_axis(&self.matrix, self.grid.n_points(), col, &m)))
    }

    /// `O rho O^dagger` with `O` acting on one mode.
    pub fn conjugate(&self, op: &CMatrix, mode: ModeId) -> Result<Self> {
        self.apply_left(op, mode)?.apply_right(&op.adjoint(), mode)
    }

    pub(crate) fn with_matrix(&self, matrix: Vec<Complex64>) -> Self {
        Self {
            grid: self.grid,
            labels: self.labels.clone(),
            dim: self.dim,
            matrix,
        }
    }

    /// Replace the matrix by its Hermitian part.
    pub fn symmetrized(mut self) -> Self {
        let d = self.dim;
        for i in 0..d {
            for j in i..d {
                let a = self.matrix[i * d + j];
                let b = self.matrix[j * d + i];
                let h = (a + b.conj()) * 0.5;
                self.matrix[i * d + j] = h;
                self.matrix[j * d + i] = h.conj();
            }
        }
        self
    }

    /// `Tr(O rho)` for an operator on one mode.
    pub fn expectation(&self, op: &CMatrix, mode: ModeId) -> Result<Complex64> {
        Ok(self.apply_left(op, mode)?.trace())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::state::{gaussian_state, position_eigenstate};

    #[test]
    fn pure_projector_is_physical() {
        let g = make_grid(6, 1.0).unwrap();
        let psi = gaussian_state(&g, 2.0, 0.5, 1.0).unwrap();
        let rho = DensityState::from_pure(&psi);
        assert!(rho.is_physical());
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((rho.fidelity_with_pure(&psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors() {
        let g = make_grid(4, 1.0).unwrap();
        let a = DensityState::from_pure(&position_eigenstate(&g, 0).unwrap());
        let b = DensityState::from_pure(&position_eigenstate(&g, 1).unwrap());
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-12);
        assert!(a.trace_distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn validating_constructor_rejects_bad_trace() {
        let g = make_grid(2, 1.0).unwrap();
        let m = vec![Complex64::new(1.0, 0.0), ZERO, ZERO, Complex64::new(1.0, 0.0)];
        assert!(DensityState::from_matrix(g, vec![ModeId(0)], m).is_err());
    }

    #[test]
    fn left_and_right_actions_match_dense_kron() {
        // two modes, operator on the second one compared with explicit I (x) O
        let g = make_grid(3, 1.0).unwrap();
        let psi = PureState::new(
            g,
            vec![ModeId(0), ModeId(1)],
            (0..9).map(|i| Complex64::new(1.0 + i as f64, (i * i) as f64 * 0.1)).collect(),
        )
        .unwrap();
        let rho = DensityState::from_pure(&psi);
        let o = CMatrix::from_fn(3, 3, |r, c| Complex64::new((r + 2 * c) as f64, r as f64 - c as f64));
        let big = CMatrix::identity(3, 3).kronecker(&o);
        let expect_left = &big * rho.to_matrix();
        let expect_right = rho.to_matrix() * &big;
        let l = rho.apply_left(&o, ModeId(1)).unwrap().to_matrix();
        let r = rho.apply_right(&o, ModeId(1)).unwrap().to_matrix();
        assert!((l - expect_left).iter().all(|z| z.norm() < 1e-10));
        assert!((r - expect_right).iter().all(|z| z.norm() < 1e-10));
    }
}
