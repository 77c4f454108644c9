use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityState;
use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::tensor::{self, ZERO};

/// Identifier of one mode inside a multi-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(pub u16);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Default amplitude memory budget (512 MiB).
pub const DEFAULT_MEMORY_BUDGET: u128 = 512 * 1024 * 1024;
/// A subsystem counts as pure when its purity is at least `1 - PURITY_TOLERANCE`.
pub const PURITY_TOLERANCE: f64 = 1e-8;
pub const NORM_TOLERANCE: f64 = 1e-10;

const BYTES_PER_AMPLITUDE: u128 = 16;

/// Bytes needed for `n_points^modes` amplitudes. Saturates instead of overflowing.
pub fn required_bytes(n_points: usize, modes: usize) -> u128 {
    let mut b = BYTES_PER_AMPLITUDE;
    for _ in 0..modes {
        b = b.saturating_mul(n_points as u128);
    }
    b
}

pub fn check_capacity(n_points: usize, modes: usize, budget: u128) -> Result<usize> {
    let required = required_bytes(n_points, modes);
    match tensor::checked_dim(n_points, modes) {
        Some(dim) if required <= budget => Ok(dim),
        _ => Err(Error::CapacityExceeded {
            n_points,
            modes,
            required,
            budget,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Normalized amplitude tensor over `labels.len()` modes that share one grid.
///
/// The amplitude at flat index `(j_1, ..., j_M)` (first mode most significant)
/// belongs to the position ket `|x_{j_1} ... x_{j_M}>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    grid: ModeGrid,
    labels: Vec<ModeId>,
    amplitudes: Vec<Complex64>,
}

fn check_labels(labels: &[ModeId]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].contains(a) {
            return Err(Error::DuplicateMode(*a));
        }
    }
    Ok(())
}

impl PureState {
    /// Build a state from raw amplitudes, normalizing them.
    pub fn new(grid: ModeGrid, labels: Vec<ModeId>, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        check_labels(&labels)?;
        if labels.is_empty() {
            return Err(Error::EmptySubset);
        }
        let dim = tensor::checked_dim(grid.n_points(), labels.len()).ok_or(Error::CapacityExceeded {
            n_points: grid.n_points(),
            modes: labels.len(),
            required: required_bytes(grid.n_points(), labels.len()),
            budget: DEFAULT_MEMORY_BUDGET,
        })?;
        if amplitudes.len() != dim {
            return Err(Error::ShapeMismatch("amplitude count is not N^M"));
        }
        let norm = tensor::norm_sqr(&amplitudes).sqrt();
        if norm <= 1e-300 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
        Ok(Self {
            grid,
            labels,
            amplitudes,
        })
    }

    pub(crate) fn from_parts_unchecked(grid: ModeGrid, labels: Vec<ModeId>, amplitudes: Vec<Complex64>) -> Self {
        let s = Self {
            grid,
            labels,
            amplitudes,
        };
        s.debug_check_norm();
        s
    }

    #[inline]
    pub(crate) fn debug_check_norm(&self) {
        debug_assert!(
            (self.norm_sqr() - 1.0).abs() < 1e-9,
            "norm drifted to {}",
            self.norm_sqr()
        );
    }

    /// Product of position eigenstates, one index per label.
    pub fn basis(grid: ModeGrid, labels: Vec<ModeId>, indices: &[usize]) -> Result<Self> {
        check_labels(&labels)?;
        if labels.len() != indices.len() {
            return Err(Error::ShapeMismatch("one index per mode"));
        }
        let dim = check_capacity(grid.n_points(), labels.len(), DEFAULT_MEMORY_BUDGET)?;
        let strides = tensor::strides(grid.n_points(), labels.len());
        let mut flat = 0;
        for (&i, st) in indices.iter().zip(&strides) {
            grid.check_index(i)?;
            flat += i * st;
        }
        let mut amps = vec![ZERO; dim];
        amps[flat] = Complex64::new(1.0, 0.0);
        Ok(Self::from_parts_unchecked(grid, labels, amps))
    }

    /// `|x_0>` on one mode.
    pub fn fresh(grid: ModeGrid, label: ModeId) -> Self {
        let mut amps = vec![ZERO; grid.n_points()];
        amps[0] = Complex64::new(1.0, 0.0);
        Self::from_parts_unchecked(grid, vec![label], amps)
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn labels(&self) -> &[ModeId] {
        &self.labels
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        tensor::norm_sqr(&self.amplitudes)
    }

    pub fn contains(&self, mode: ModeId) -> bool {
        self.labels.contains(&mode)
    }

    pub fn position_of(&self, mode: ModeId) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == mode)
            .ok_or(Error::UnknownMode(mode))
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        tensor::strides(self.grid.n_points(), self.labels.len())
    }

    pub(crate) fn stride_of(&self, mode: ModeId) -> Result<usize> {
        let p = self.position_of(mode)?;
        Ok(self.strides()[p])
    }

    pub(crate) fn strides_of(&self, modes: &[ModeId]) -> Result<Vec<usize>> {
        check_labels(modes)?;
        let all = self.strides();
        modes
            .iter()
            .map(|&m| self.position_of(m).map(|p| all[p]))
            .collect()
    }

    /// Rename a single-mode state.
    pub fn with_label(mut self, label: ModeId) -> Self {
        assert_eq!(self.labels.len(), 1, "with_label needs a single-mode state");
        self.labels[0] = label;
        self
    }

    pub fn relabel(mut self, labels: Vec<ModeId>) -> Result<Self> {
        check_labels(&labels)?;
        if labels.len() != self.labels.len() {
            return Err(Error::ShapeMismatch("relabel needs one label per mode"));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_global_phase(mut self, theta: f64) -> Self {
        let ph = Complex64::from_polar(1.0, theta);
        for a in self.amplitudes.iter_mut() {
            *a *= ph;
        }
        self
    }

    /// Amplitude of a product basis ket, indices given in label order.
    pub fn amplitude_at(&self, indices: &[usize]) -> Complex64 {
        let strides = self.strides();
        let flat: usize = indices.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.amplitudes[flat]
    }

    /// Probability that `mode` is found at position index `index`.
    pub fn marginal_probability(&self, mode: ModeId, index: usize) -> Result<f64> {
        self.grid.check_index(index)?;
        let st = self.stride_of(mode)?;
        Ok(tensor::axis_marginal(&self.amplitudes, self.grid.n_points(), st)[index])
    }

    /// Same axes in a new order. `labels` must be a permutation of the current labels.
    pub fn reorder(&self, labels: &[ModeId]) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::ShapeMismatch("reorder needs a permutation of the labels"));
        }
        if labels == self.labels.as_slice() {
            return Ok(self.clone());
        }
        let old = self.strides_of(labels)?;
        let amps = tensor::gather_axes(&self.amplitudes, self.grid.n_points(), &old);
        Ok(Self::from_parts_unchecked(self.grid, labels.to_vec(), amps))
    }

    /// Reorder so that the modes of `preferred` that are present come first (in
    /// that order), followed by the remaining modes in their current order.
    pub fn reorder_preferring(&self, preferred: &[ModeId]) -> Result<Self> {
        let mut order: Vec<ModeId> = preferred.iter().copied().filter(|m| self.contains(*m)).collect();
        order.dedup();
        for l in &self.labels {
            if !order.contains(l) {
                order.push(*l);
            }
        }
        self.reorder(&order)
    }

    /// Kronecker product in argument order; labels are concatenated.
    pub fn tensor_with_budget(states: &[&PureState], budget: u128) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptySubset)?;
        let grid = first.grid;
        let mut labels = Vec::new();
        for s in states {
            if s.grid != grid {
                return Err(Error::GridMismatch);
            }
            labels.extend_from_slice(&s.labels);
        }
        check_labels(&labels)?;
        check_capacity(grid.n_points(), labels.len(), budget)?;
        let mut amps = first.amplitudes.clone();
        for s in &states[1..] {
            let mut next = Vec::with_capacity(amps.len() * s.amplitudes.len());
            for a in &amps {
                for b in &s.amplitudes {
                    next.push(a * b);
                }
            }
            amps = next;
        }
        Ok(Self::from_parts_unchecked(grid, labels, amps))
    }

    pub fn tensor(states: &[&PureState]) -> Result<Self> {
        Self::tensor_with_budget(states, DEFAULT_MEMORY_BUDGET)
    }

    /// Unitary DFT on one mode's axis. `Forward` maps position amplitudes to
    /// momentum amplitudes with kernel `exp(-2 pi i j k / N) / sqrt(N)`.
    pub fn dft_mode(&self, mode: ModeId, direction: Direction) -> Result<Self> {
        let st = self.stride_of(mode)?;
        let m = dft_kernel(self.grid.n_points(), direction);
        let amps = tensor::apply_axis(&self.amplitudes, self.grid.n_points(), st, &m);
        Ok(Self::from_parts_unchecked(self.grid, self.labels.clone(), amps))
    }

    fn aligned<'a>(&self, other: &'a PureState) -> Result<alloc::borrow::Cow<'a, PureState>> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.labels.len() != other.labels.len() {
            return Err(Error::ShapeMismatch("states have different mode counts"));
        }
        if self.labels == other.labels {
            Ok(alloc::borrow::Cow::Borrowed(other))
        } else {
            Ok(alloc::borrow::Cow::Owned(other.reorder(&self.labels).map_err(|_| {
                Error::ShapeMismatch("states have different mode labels")
            })?))
        }
    }

    /// `<self|other>`, matching modes by label.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        let other = self.aligned(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// `<ref| rho_S |ref>` where `S` is the set of modes of `reference`, all of
    /// which must be present here. Equal to `fidelity` when the mode sets match.
    pub fn subsystem_fidelity(&self, reference: &PureState) -> Result<f64> {
        if self.grid != reference.grid {
            return Err(Error::GridMismatch);
        }
        let rest: Vec<ModeId> = self
            .labels
            .iter()
            .copied()
            .filter(|l| !reference.labels.contains(l))
            .collect();
        let mut order = reference.labels.clone();
        order.extend_from_slice(&rest);
        let me = self.reorder(&order)?;
        let d_ref = reference.dim();
        let d_rest = me.dim() / d_ref;
        let mut total = 0.0;
        for r in 0..d_rest {
            let mut acc = ZERO;
            for (g, a) in reference.amplitudes.iter().enumerate() {
                acc += a.conj() * me.amplitudes[g * d_rest + r];
            }
            total += acc.norm_sqr();
        }
        Ok(total.min(1.0))
    }

    /// View the state as a `dim(group) x dim(rest)` matrix with the group's
    /// modes in the given order.
    fn split(&self, group: &[ModeId]) -> Result<(Self, usize, usize)> {
        if group.is_empty() {
            return Err(Error::EmptySubset);
        }
        check_labels(group)?;
        for g in group {
            self.position_of(*g)?;
        }
        let rest: Vec<ModeId> = self.labels.iter().copied().filter(|l| !group.contains(l)).collect();
        let mut order = group.to_vec();
        order.extend_from_slice(&rest);
        let me = self.reorder(&order)?;
        let d_group = tensor::checked_dim(self.grid.n_points(), group.len()).unwrap();
        let d_rest = me.dim() / d_group;
        Ok((me, d_group, d_rest))
    }

    /// Partial trace over every mode not in `keep`.
    pub fn reduced_density(&self, keep: &[ModeId]) -> Result<DensityState> {
        let (me, dg, dr) = self.split(keep)?;
        let a = &me.amplitudes;
        let mut rho = vec![ZERO; dg * dg];
        for i in 0..dg {
            let ri = &a[i * dr..(i + 1) * dr];
            for j in i..dg {
                let rj = &a[j * dr..(j + 1) * dr];
                let v: Complex64 = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
                rho[i * dg + j] = v;
                rho[j * dg + i] = v.conj();
            }
        }
        DensityState::from_matrix_unchecked(self.grid, keep.to_vec(), rho)
    }

    /// Purity `Tr rho^2` of the reduced state on `group`, computed on whichever
    /// side of the cut is smaller.
    pub fn purity(&self, group: &[ModeId]) -> Result<f64> {
        let (me, dg, dr) = self.split(group)?;
        if dr == 1 {
            return Ok(1.0);
        }
        let a = &me.amplitudes;
        let mut p = 0.0;
        if dg <= dr {
            for i in 0..dg {
                for j in 0..dg {
                    let v: Complex64 = (0..dr).map(|r| a[i * dr + r] * a[j * dr + r].conj()).sum();
                    p += v.norm_sqr();
                }
            }
        } else {
            for r in 0..dr {
                for s in 0..dr {
                    let v: Complex64 = (0..dg).map(|g| a[g * dr + r].conj() * a[g * dr + s]).sum();
                    p += v.norm_sqr();
                }
            }
        }
        Ok(p)
    }

    /// Factor `group` out of the state. Fails with `EntangledAncilla` unless the
    /// group's reduced state has purity at least `1 - PURITY_TOLERANCE`.
    ///
    /// Returns `(rest, group_state)`; the group state carries the modes in the
    /// order given.
    pub fn detach(&self, group: &[ModeId]) -> Result<(Self, Self)> {
        if group.len() == self.labels.len() {
            return Err(Error::ShapeMismatch("cannot detach every mode"));
        }
        let purity = self.purity(group)?;
        if purity < 1.0 - PURITY_TOLERANCE {
            return Err(Error::EntangledAncilla {
                modes: group.to_vec(),
                purity,
            });
        }
        let (me, dg, dr) = self.split(group)?;
        let a = &me.amplitudes;
        let best = (0..dr)
            .max_by(|&r, &s| {
                let nr: f64 = (0..dg).map(|g| a[g * dr + r].norm_sqr()).sum();
                let ns: f64 = (0..dg).map(|g| a[g * dr + s].norm_sqr()).sum();
                nr.partial_cmp(&ns).unwrap_or(core::cmp::Ordering::Equal)
            })
            .unwrap();
        let mut u: Vec<Complex64> = (0..dg).map(|g| a[g * dr + best]).collect();
        let un = tensor::norm_sqr(&u).sqrt();
        u.iter_mut().for_each(|x| *x /= un);
        let mut v: Vec<Complex64> = (0..dr)
            .map(|r| (0..dg).map(|g| u[g].conj() * a[g * dr + r]).sum())
            .collect();
        let vn = tensor::norm_sqr(&v).sqrt();
        v.iter_mut().for_each(|x| *x /= vn);
        let group_state = Self::from_parts_unchecked(self.grid, group.to_vec(), u);
        let rest_labels = me.labels[group.len()..].to_vec();
        let rest = Self::from_parts_unchecked(self.grid, rest_labels, v);
        Ok((rest, group_state))
    }

    /// One amplitude per line: `j1,...,jM,re,im`.
    pub fn write_dump<W: fmt::Write>(&self, w: &mut W) -> fmt::Result {
        let n = self.grid.n_points();
        let strides = self.strides();
        for (i, a) in self.amplitudes.iter().enumerate() {
            for st in &strides {
                write!(w, "{},", tensor::digit(i, *st, n))?;
            }
            writeln!(w, "{:e},{:e}", a.re, a.im)?;
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        self.write_dump(&mut s).expect("writing to a String cannot fail");
        s
    }

    pub(crate) fn map_amplitudes(&self, amplitudes: Vec<Complex64>) -> Self {
        Self::from_parts_unchecked(self.grid, self.labels.clone(), amplitudes)
    }
}

/// Row-major unitary DFT kernel.
pub(crate) fn dft_kernel(n: usize, direction: Direction) -> Vec<Complex64> {
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let scale = 1.0 / (n as f64).sqrt();
    let twiddle: Vec<Complex64> = (0..n)
        .map(|r| Complex64::from_polar(scale, sign * 2.0 * core::f64::consts::PI * r as f64 / n as f64))
        .collect();
    let mut m = vec![ZERO; n * n];
    for k in 0..n {
        for j in 0..n {
            m[k * n + j] = twiddle[(j * k) % n];
        }
    }
    m
}

pub fn position_eigenstate(grid: &ModeGrid, index: usize) -> Result<PureState> {
    PureState::basis(*grid, vec![ModeId(0)], &[index])
}

/// `|p_k>` with position amplitudes `exp(i p_k x_j) / sqrt(N)`.
pub fn momentum_eigenstate(grid: &ModeGrid, index: usize) -> Result<PureState> {
    grid.check_index(index)?;
    let n = grid.n_points();
    let scale = 1.0 / (n as f64).sqrt();
    let amps = (0..n)
        .map(|j| Complex64::from_polar(scale, 2.0 * core::f64::consts::PI * ((j * index) % n) as f64 / n as f64))
        .collect();
    Ok(PureState::from_parts_unchecked(*grid, vec![ModeId(0)], amps))
}

/// Periodically wrapped Gaussian centred at `x0` (mod L) carrying momentum `p0`.
///
/// Widths below the grid spacing are accepted; see [`gaussian_is_resolved`].
pub fn gaussian_state(grid: &ModeGrid, x0: f64, p0: f64, sigma: f64) -> Result<PureState> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be positive",
        });
    }
    if !x0.is_finite() || !p0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0/p0",
            reason: "must be finite",
        });
    }
    let l = grid.period();
    let x0 = {
        let r = x0 % l;
        if r < 0.0 {
            r + l
        } else {
            r
        }
    };
    let amps = (0..grid.n_points())
        .map(|j| {
            let x = grid.position(j);
            let term = |w: i64| {
                let d = x - x0 + w as f64 * l;
                (-(d * d) / (4.0 * sigma * sigma)).exp()
            };
            let mut env = term(0);
            let mut w = 1;
            loop {
                let (a, b) = (term(w), term(-w));
                env += a + b;
                if a < 1e-16 && b < 1e-16 {
                    break;
                }
                w += 1;
            }
            Complex64::from_polar(env, p0 * x)
        })
        .collect();
    PureState::new(*grid, vec![ModeId(0)], amps)
}

/// Whether a Gaussian of width `sigma` is resolved by the grid (`sigma >= spacing`).
pub fn gaussian_is_resolved(grid: &ModeGrid, sigma: f64) -> bool {
    sigma >= grid.spacing()
}

pub fn tensor(states: &[&PureState]) -> Result<PureState> {
    PureState::tensor(states)
}

pub fn dft_mode(state: &PureState, mode: ModeId, direction: Direction) -> Result<PureState> {
    state.dft_mode(mode, direction)
}

pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    a.fidelity(b)
}

pub fn reduced_density(state: &PureState, keep: &[ModeId]) -> Result<DensityState> {
    state.reduced_density(keep)
}

/// Split a single mode off the state: `(rest, ancilla)`.
pub fn detach_ancilla(state: &PureState, mode: ModeId) -> Result<(PureState, PureState)> {
    state.detach(&[mode])
}
