//! Position/momentum operators, polynomial error unitaries, and the
//! comparison-conditioned voting gates.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::linalg::{self, CMatrix};
use crate::state::{dft_kernel, Direction, ModeId, PureState};
use crate::tensor;

/// One term `q P^m X^n` of an operator polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyTerm {
    pub m: u32,
    pub n: u32,
    pub coeff: Complex64,
}

/// Polynomial `sum q_mn P^m X^n`, operator order fixed as written (P powers on
/// the left). Serialized as a JSON list of `[m, n, re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, u32, f64, f64)>", into = "Vec<(u32, u32, f64, f64)>")]
pub struct PolySpec {
    terms: Vec<PolyTerm>,
}

impl TryFrom<Vec<(u32, u32, f64, f64)>> for PolySpec {
    type Error = Error;
    fn try_from(raw: Vec<(u32, u32, f64, f64)>) -> Result<Self> {
        PolySpec::new(
            raw.into_iter()
                .map(|(m, n, re, im)| PolyTerm {
                    m,
                    n,
                    coeff: Complex64::new(re, im),
                })
                .collect(),
        )
    }
}

impl From<PolySpec> for Vec<(u32, u32, f64, f64)> {
    fn from(p: PolySpec) -> Self {
        p.terms.iter().map(|t| (t.m, t.n, t.coeff.re, t.coeff.im)).collect()
    }
}

impl PolySpec {
    pub fn new(terms: Vec<PolyTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        for (i, t) in terms.iter().enumerate() {
            if !t.coeff.re.is_finite() || !t.coeff.im.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "coeff",
                    reason: "must be finite",
                });
            }
            if terms[..i].iter().any(|u| u.m == t.m && u.n == t.n) {
                return Err(Error::DuplicateTerm { m: t.m, n: t.n });
            }
        }
        Ok(Self { terms })
    }

    /// Real coefficients given as `(m, n, q)`.
    pub fn real(terms: &[(u32, u32, f64)]) -> Result<Self> {
        Self::new(
            terms
                .iter()
                .map(|&(m, n, q)| PolyTerm {
                    m,
                    n,
                    coeff: Complex64::new(q, 0.0),
                })
                .collect(),
        )
    }

    /// `c * P`.
    pub fn linear_p(c: f64) -> Self {
        Self::real(&[(1, 0, c)]).unwrap()
    }

    /// `c * X`.
    pub fn linear_x(c: f64) -> Self {
        Self::real(&[(0, 1, c)]).unwrap()
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im == 0.0)
    }

    pub fn only_p(&self) -> bool {
        self.terms.iter().all(|t| t.n == 0)
    }

    pub fn only_x(&self) -> bool {
        self.terms.iter().all(|t| t.m == 0)
    }

    /// Evaluate as a polynomial in one variable, ignoring which power slot is used.
    fn eval_single(&self, v: f64) -> Complex64 {
        self.terms.iter().map(|t| t.coeff * powi(v, t.m + t.n)).sum()
    }
}

fn powi(v: f64, k: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..k {
        r *= v;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    X,
    P,
    Mixed,
}

pub fn dft_matrix(grid: &ModeGrid, direction: Direction) -> CMatrix {
    linalg::from_row_major(grid.n_points(), &dft_kernel(grid.n_points(), direction))
}

/// `X = diag(x_j)`.
pub fn position_operator(grid: &ModeGrid) -> CMatrix {
    let n = grid.n_points();
    CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::new(grid.position(r), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn momentum_diagonal(grid: &ModeGrid, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let n = grid.n_points();
    let fwd = dft_matrix(grid, Direction::Forward);
    let diag = CMatrix::from_fn(n, n, |r, c| if r == c { f(grid.signed_momentum(r)) } else { Complex64::new(0.0, 0.0) });
    fwd.adjoint() * diag * fwd
}

/// `P = F^dagger diag(p_k) F` with momenta on the signed branch `(-pi/d, pi/d]`.
///
/// `[X, P] = i` holds only approximately, for smooth states away from the wrap.
pub fn momentum_operator(grid: &ModeGrid) -> CMatrix {
    momentum_diagonal(grid, |p| Complex64::new(p, 0.0))
}

/// The operator `sum q_mn P^m X^n` itself (not exponentiated).
pub fn poly_operator(grid: &ModeGrid, spec: &PolySpec) -> CMatrix {
    let n = grid.n_points();
    let x = position_operator(grid);
    let p = momentum_operator(grid);
    let mut out = CMatrix::zeros(n, n);
    for t in spec.terms() {
        out += (matrix_power(&p, t.m) * matrix_power(&x, t.n)).map(|z| z * t.coeff);
    }
    out
}

fn matrix_power(m: &CMatrix, k: u32) -> CMatrix {
    let mut r = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        r = &r * m;
    }
    r
}

/// Generator used for mixed errors and Hamiltonians: real-coefficient terms are
/// symmetrized as `(P^m X^n + X^n P^m) / 2`; complex ones are taken as written.
pub fn hermitian_generator(grid: &ModeGrid, spec: &PolySpec) -> CMatrix {
    let n = grid.n_points();
    let x = position_operator(grid);
    let p = momentum_operator(grid);
    let mut out = CMatrix::zeros(n, n);
    for t in spec.terms() {
        let pm = matrix_power(&p, t.m);
        let xn = matrix_power(&x, t.n);
        if spec.is_real() {
            out += (&pm * &xn + &xn * &pm).map(|z| z * t.coeff * 0.5);
        } else {
            out += (&pm * &xn).map(|z| z * t.coeff);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpRepr {
    /// Row-major-free dense matrix over the `N^arity` joint index.
    Dense(CMatrix),
    /// `|s> -> |perm[s]>` on the joint index.
    Permutation(Vec<usize>),
}

/// Operator on `arity` modes of one grid. Only the explicit opt-in
/// constructors produce operators with `unitary == false`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    grid: ModeGrid,
    arity: usize,
    repr: OpRepr,
    unitary: bool,
}

pub const UNITARY_TOLERANCE: f64 = 1e-10;

impl UnitaryOp {
    fn sub_dim(grid: &ModeGrid, arity: usize) -> Result<usize> {
        tensor::checked_dim(grid.n_points(), arity).ok_or(Error::ShapeMismatch("operator dimension overflow"))
    }

    pub fn from_matrix(grid: ModeGrid, arity: usize, m: CMatrix) -> Result<Self> {
        let d = Self::sub_dim(&grid, arity)?;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::ShapeMismatch("operator matrix is not N^arity square"));
        }
        if !linalg::is_unitary(&m, UNITARY_TOLERANCE) {
            return Err(Error::NonUnitary);
        }
        Ok(Self {
            grid,
            arity,
            repr: OpRepr::Dense(m),
            unitary: true,
        })
    }

    /// Opt-in: wrap an arbitrary (possibly non-unitary) matrix.
    pub fn general(grid: ModeGrid, arity: usize, m: CMatrix) -> Result<Self> {
        let d = Self::sub_dim(&grid, arity)?;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::ShapeMismatch("operator matrix is not N^arity square"));
        }
        let unitary = linalg::is_unitary(&m, UNITARY_TOLERANCE);
        Ok(Self {
            grid,
            arity,
            repr: OpRepr::Dense(m),
            unitary,
        })
    }

    pub fn from_permutation(grid: ModeGrid, arity: usize, perm: Vec<usize>) -> Result<Self> {
        let d = Self::sub_dim(&grid, arity)?;
        if perm.len() != d {
            return Err(Error::ShapeMismatch("permutation length is not N^arity"));
        }
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::ShapeMismatch("not a permutation"));
            }
            seen[p] = true;
        }
        Ok(Self {
            grid,
            arity,
            repr: OpRepr::Permutation(perm),
            unitary: true,
        })
    }

    pub fn identity(grid: ModeGrid) -> Self {
        Self::from_permutation(grid, 1, (0..grid.n_points()).collect()).unwrap()
    }

    /// Cyclic translation `|x_j> -> |x_{j+s}>`.
    pub fn shift(grid: ModeGrid, s: i64) -> Self {
        let perm = (0..grid.n_points()).map(|j| grid.wrap(j as i64 + s)).collect();
        Self::from_permutation(grid, 1, perm).unwrap()
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn repr(&self) -> &OpRepr {
        &self.repr
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn matrix(&self) -> CMatrix {
        match &self.repr {
            OpRepr::Dense(m) => m.clone(),
            OpRepr::Permutation(p) => {
                let d = p.len();
                let mut m = CMatrix::zeros(d, d);
                for (s, &t) in p.iter().enumerate() {
                    m[(t, s)] = Complex64::new(1.0, 0.0);
                }
                m
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            OpRepr::Dense(m) => OpRepr::Dense(m.adjoint()),
            OpRepr::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (s, &t) in p.iter().enumerate() {
                    inv[t] = s;
                }
                OpRepr::Permutation(inv)
            }
        };
        Self {
            grid: self.grid,
            arity: self.arity,
            repr,
            unitary: self.unitary,
        }
    }

    /// `self` after `other` (both on the same modes).
    pub fn compose(&self, other: &UnitaryOp) -> Result<Self> {
        if self.grid != other.grid || self.arity != other.arity {
            return Err(Error::ShapeMismatch("compose needs equal grids and arity"));
        }
        match (&self.repr, &other.repr) {
            (OpRepr::Permutation(a), OpRepr::Permutation(b)) => {
                Self::from_permutation(self.grid, self.arity, b.iter().map(|&s| a[s]).collect())
            }
            _ => Ok(Self {
                grid: self.grid,
                arity: self.arity,
                repr: OpRepr::Dense(self.matrix() * other.matrix()),
                unitary: self.unitary && other.unitary,
            }),
        }
    }
}

fn integer_multiple(v: f64, unit: f64) -> Option<i64> {
    let r = v / unit;
    let k = libm::round(r);
    if (r - k).abs() < 1e-12 {
        Some(k as i64)
    } else {
        None
    }
}

/// Error unitary built from a polynomial.
///
/// * `Variable::P`: `exp(-i Q(P))`, diagonal in momentum with phases
///   `exp(-i Q(p_k))` on the signed branch. `Q(p) = s*d*p` gives the exact
///   translation by `s` sites.
/// * `Variable::X`: `exp(+i R(X))`, diagonal in position.
/// * `Variable::Mixed`: `exp(-i G)` for the Hermitian generator `G`; fails with
///   `NonHermitian` otherwise (see [`poly_general`] for the opt-in path).
pub fn poly_unitary(grid: &ModeGrid, spec: &PolySpec, variable: Variable) -> Result<UnitaryOp> {
    match variable {
        Variable::P => {
            if !spec.only_p() {
                return Err(Error::WrongVariable("P"));
            }
            if !spec.is_real() {
                return Err(Error::NonUnitary);
            }
            if let [t] = spec.terms() {
                if t.m == 1 {
                    if let Some(s) = integer_multiple(t.coeff.re, grid.spacing()) {
                        return Ok(UnitaryOp::shift(*grid, s));
                    }
                }
            }
            if spec.terms().iter().all(|t| t.m == 0) {
                let phase = Complex64::from_polar(1.0, -spec.eval_single(0.0).re);
                let id = CMatrix::identity(grid.n_points(), grid.n_points()).map(|z| z * phase);
                return UnitaryOp::from_matrix(*grid, 1, id);
            }
            let m = momentum_diagonal(grid, |p| Complex64::from_polar(1.0, -spec.eval_single(p).re));
            UnitaryOp::from_matrix(*grid, 1, m)
        }
        Variable::X => {
            if !spec.only_x() {
                return Err(Error::WrongVariable("X"));
            }
            if !spec.is_real() {
                return Err(Error::NonUnitary);
            }
            let n = grid.n_points();
            let m = CMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    Complex64::from_polar(1.0, spec.eval_single(grid.position(r)).re)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            UnitaryOp::from_matrix(*grid, 1, m)
        }
        Variable::Mixed => {
            let g = hermitian_generator(grid, spec);
            let scale = g.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if !linalg::is_hermitian(&g, 1e-10 * scale) {
                return Err(Error::NonHermitian);
            }
            UnitaryOp::from_matrix(*grid, 1, linalg::expm_hermitian(&g))
        }
    }
}

/// Opt-in: the raw expansion `sum q_mn P^m X^n` as a (generally non-unitary)
/// single-mode operator.
pub fn poly_general(grid: &ModeGrid, spec: &PolySpec) -> UnitaryOp {
    UnitaryOp::general(*grid, 1, poly_operator(grid, spec)).expect("single-mode operator has matching shape")
}

fn check_targets(state: &PureState, op: &UnitaryOp, modes: &[ModeId]) -> Result<Vec<usize>> {
    if op.grid != *state.grid() {
        return Err(Error::GridMismatch);
    }
    if op.arity != modes.len() {
        return Err(Error::ArityMismatch {
            expected: op.arity,
            got: modes.len(),
        });
    }
    state.strides_of(modes)
}

fn apply_raw(state: &PureState, op: &UnitaryOp, strides: &[usize]) -> Result<Vec<Complex64>> {
    let n = state.grid().n_points();
    match &op.repr {
        OpRepr::Dense(m) => {
            let rm = linalg::row_major(m);
            Ok(if strides.len() == 1 {
                tensor::apply_axis(state.amplitudes(), n, strides[0], &rm)
            } else {
                tensor::apply_block(state.amplitudes(), n, strides, &rm)
            })
        }
        OpRepr::Permutation(p) => tensor::permute_digits(state.amplitudes(), n, strides, |d| {
            let mut s = 0;
            for &x in d.iter() {
                s = s * n + x;
            }
            let mut t = p[s];
            for x in d.iter_mut().rev() {
                *x = t % n;
                t /= n;
            }
        }),
    }
}

/// Apply a unitary on the named modes (first mode = most significant digit of
/// the operator's joint index).
pub fn apply(state: &PureState, op: &UnitaryOp, modes: &[ModeId]) -> Result<PureState> {
    if !op.unitary {
        return Err(Error::NonUnitary);
    }
    let strides = check_targets(state, op, modes)?;
    Ok(state.map_amplitudes(apply_raw(state, op, &strides)?))
}

/// Opt-in application of a possibly non-unitary operator. Returns the
/// renormalized state and the squared norm before renormalization.
pub fn apply_general(state: &PureState, op: &UnitaryOp, modes: &[ModeId]) -> Result<(PureState, f64)> {
    let strides = check_targets(state, op, modes)?;
    let amps = apply_raw(state, op, &strides)?;
    let norm = tensor::norm_sqr(&amps);
    let out = PureState::new(*state.grid(), state.labels().to_vec(), amps)?;
    Ok((out, norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

/// `|x_a>_src |x_b>_dst -> |x_a>_src |x_{b +- a}>_dst`.
pub fn sum_gate(state: &PureState, src: ModeId, dst: ModeId, sign: Sign) -> Result<PureState> {
    if src == dst {
        return Err(Error::DuplicateMode(src));
    }
    let n = state.grid().n_points();
    let strides = state.strides_of(&[src, dst])?;
    let amps = tensor::permute_digits(state.amplitudes(), n, &strides, |d| {
        d[1] = match sign {
            Sign::Plus => (d[1] + d[0]) % n,
            Sign::Minus => (d[1] + n - d[0]) % n,
        };
    })?;
    Ok(state.map_amplitudes(amps))
}

/// How two grid values are judged equal by the voting gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// Exact index equality.
    #[default]
    Exact,
    /// Equal when both fall in the same block of `width` consecutive sites.
    Bucket { width: usize },
    /// Equal when the cyclic distance is below `width` sites.
    Window { width: usize },
}

impl Comparison {
    pub fn matches(&self, a: usize, b: usize, n: usize) -> bool {
        match *self {
            Comparison::Exact => a == b,
            Comparison::Bucket { width } => a / width.max(1) == b / width.max(1),
            Comparison::Window { width } => {
                let d = a.abs_diff(b);
                d.min(n - d) < width.max(1)
            }
        }
    }
}

/// Ancilla value after the comparison-conditioned add on basis values `(a, b, c, e)`.
#[inline]
pub fn compare_add_digits(cmp: Comparison, n: usize, a: usize, b: usize, c: usize, e: usize) -> usize {
    if cmp.matches(a, b, n) {
        (e + c + n - a) % n
    } else {
        e
    }
}

/// Value of the checked mode after the comparison-conditioned subtract.
#[inline]
pub fn compare_subtract_digits(cmp: Comparison, n: usize, a: usize, b: usize, c: usize, e: usize) -> usize {
    if cmp.matches(a, b, n) {
        (c + n - e) % n
    } else {
        c
    }
}

fn distinct4(i: ModeId, j: ModeId, k: ModeId, anc: ModeId) -> Result<()> {
    let m = [i, j, k, anc];
    for a in 0..4 {
        for b in a + 1..4 {
            if m[a] == m[b] {
                return Err(Error::DuplicateMode(m[a]));
            }
        }
    }
    Ok(())
}

/// If `x_i = x_j`, add `x_k - x_i` to the ancilla.
pub fn compare_add_gate(state: &PureState, i: ModeId, j: ModeId, k: ModeId, anc: ModeId) -> Result<PureState> {
    compare_add_gate_with(state, i, j, k, anc, Comparison::Exact)
}

pub fn compare_add_gate_with(
    state: &PureState,
    i: ModeId,
    j: ModeId,
    k: ModeId,
    anc: ModeId,
    cmp: Comparison,
) -> Result<PureState> {
    distinct4(i, j, k, anc)?;
    let n = state.grid().n_points();
    let strides = state.strides_of(&[i, j, k, anc])?;
    let amps = tensor::permute_digits(state.amplitudes(), n, &strides, |d| {
        d[3] = compare_add_digits(cmp, n, d[0], d[1], d[2], d[3]);
    })?;
    Ok(state.map_amplitudes(amps))
}

/// If `x_i = x_j`, subtract the ancilla value from `x_k`.
pub fn compare_subtract_gate(state: &PureState, i: ModeId, j: ModeId, k: ModeId, anc: ModeId) -> Result<PureState> {
    compare_subtract_gate_with(state, i, j, k, anc, Comparison::Exact)
}

pub fn compare_subtract_gate_with(
    state: &PureState,
    i: ModeId,
    j: ModeId,
    k: ModeId,
    anc: ModeId,
    cmp: Comparison,
) -> Result<PureState> {
    distinct4(i, j, k, anc)?;
    let n = state.grid().n_points();
    let strides = state.strides_of(&[i, j, k, anc])?;
    let amps = tensor::permute_digits(state.amplitudes(), n, &strides, |d| {
        d[2] = compare_subtract_digits(cmp, n, d[0], d[1], d[2], d[3]);
    })?;
    Ok(state.map_amplitudes(amps))
}
