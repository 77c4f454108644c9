//! Error events, Poisson error injection, and master-equation evolution.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityState;
use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::linalg::{self, CMatrix};
use crate::operators::{self, apply, apply_general, poly_unitary, PolySpec, UnitaryOp, Variable};
use crate::state::{ModeId, PureState};
use crate::tensor;

/// What an error does to its mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorKind {
    /// Cyclic translation by `s` sites, `exp(-i s d P)`.
    Shift { s: i64 },
    /// `exp(-i Q(P))`.
    PPoly { spec: PolySpec },
    /// `exp(+i R(X))`.
    XPoly { spec: PolySpec },
    /// `exp(-i G(X, P))` for the Hermitian generator built from `spec`.
    Mixed { spec: PolySpec },
    /// The operator `sum q P^m X^n` itself; only [`apply_error_general`]
    /// accepts it when it is not unitary.
    Expansion { spec: PolySpec },
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::Shift { .. } => "shift",
            ErrorKind::PPoly { .. } => "p_poly",
            ErrorKind::XPoly { .. } => "x_poly",
            ErrorKind::Mixed { .. } => "mixed",
            ErrorKind::Expansion { .. } => "expansion",
        }
    }

    /// Compact parameter column: the shift, or `m:n:re:im` terms joined by `;`.
    pub fn param(&self) -> String {
        match self {
            ErrorKind::Shift { s } => format!("{s}"),
            ErrorKind::PPoly { spec }
            | ErrorKind::XPoly { spec }
            | ErrorKind::Mixed { spec }
            | ErrorKind::Expansion { spec } => {
                let mut out = String::new();
                for (i, t) in spec.terms().iter().enumerate() {
                    if i > 0 {
                        out.push(';');
                    }
                    let _ = write!(out, "{}:{}:{}:{}", t.m, t.n, t.coeff.re, t.coeff.im);
                }
                out
            }
        }
    }

    pub fn operator(&self, grid: &ModeGrid) -> Result<UnitaryOp> {
        match self {
            ErrorKind::Shift { s } => Ok(UnitaryOp::shift(*grid, *s)),
            ErrorKind::PPoly { spec } => poly_unitary(grid, spec, Variable::P),
            ErrorKind::XPoly { spec } => poly_unitary(grid, spec, Variable::X),
            ErrorKind::Mixed { spec } => poly_unitary(grid, spec, Variable::Mixed),
            ErrorKind::Expansion { spec } => Ok(operators::poly_general(grid, spec)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub time: f64,
    pub mode: ModeId,
    #[serde(flatten)]
    pub kind: ErrorKind,
}

pub const EVENT_CSV_HEADER: &str = "t,mode,kind,param";

impl ErrorEvent {
    pub fn new(time: f64, mode: ModeId, kind: ErrorKind) -> Self {
        Self { time, mode, kind }
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.time, self.mode.0, self.kind.name(), self.kind.param())
    }
}

/// Apply a unitary error event. Non-unitary expansions are rejected.
pub fn apply_error(state: &PureState, event: &ErrorEvent) -> Result<PureState> {
    let op = event.kind.operator(state.grid())?;
    apply(state, &op, &[event.mode])
}

/// Opt-in variant that also accepts non-unitary expansions; returns the
/// renormalized state and the squared norm it had before renormalizing.
pub fn apply_error_general(state: &PureState, event: &ErrorEvent) -> Result<(PureState, f64)> {
    let op = event.kind.operator(state.grid())?;
    apply_general(state, &op, &[event.mode])
}

/// Distribution of error kinds for stochastic injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ErrorFamily {
    /// Shift by `s` drawn uniformly from `1..N`.
    #[default]
    UniformShift,
    /// Always the same kind.
    Fixed { error: ErrorKind },
}

impl ErrorFamily {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, grid: &ModeGrid) -> ErrorKind {
        match self {
            ErrorFamily::UniformShift => ErrorKind::Shift {
                s: rng.gen_range(1..grid.n_points()) as i64,
            },
            ErrorFamily::Fixed { error } => error.clone(),
        }
    }
}

/// Probability that a mode suffers at least one error in an interval.
pub fn error_probability(rate: f64, dt: f64) -> f64 {
    -libm::expm1(-rate * dt)
}

/// Errors during `[t0, t0 + dt)`: each mode independently with probability
/// `1 - exp(-rate dt)`, at a uniform time inside the interval.
pub fn sample_errors<R: Rng + ?Sized>(
    rng: &mut R,
    rate: f64,
    dt: f64,
    t0: f64,
    modes: &[ModeId],
    family: &ErrorFamily,
    grid: &ModeGrid,
) -> Result<Vec<ErrorEvent>> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rate",
            reason: "must be finite and nonnegative",
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be finite and positive",
        });
    }
    let p = error_probability(rate, dt);
    let mut events = Vec::new();
    for &mode in modes {
        if rng.gen::<f64>() < p {
            let time = t0 + dt * rng.gen::<f64>();
            events.push(ErrorEvent::new(time, mode, family.draw(rng, grid)));
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub mode: ModeId,
    pub op: PolySpec,
}

/// `L = sqrt(rate) * sum q P^m X^n` acting on one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpOperator {
    pub mode: ModeId,
    pub op: PolySpec,
    pub rate: f64,
}

/// Single-mode Hamiltonian terms and single-mode jump operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LindbladSpec {
    #[serde(default)]
    pub hamiltonian: Vec<HamiltonianTerm>,
    #[serde(default)]
    pub jumps: Vec<JumpOperator>,
}

impl LindbladSpec {
    /// `L = sqrt(rate) * op` on each listed mode.
    pub fn uniform_jumps(modes: &[ModeId], op: &PolySpec, rate: f64) -> Self {
        Self {
            hamiltonian: Vec::new(),
            jumps: modes
                .iter()
                .map(|&mode| JumpOperator {
                    mode,
                    op: op.clone(),
                    rate,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for j in &self.jumps {
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "rate",
                    reason: "must be finite and nonnegative",
                });
            }
        }
        Ok(())
    }
}

/// Per-mode `K = -iH - (1/2) sum L^dagger L` plus the jump matrices, in
/// row-major form with their axis strides resolved for one label order.
struct Generator {
    n: usize,
    drift: Vec<(usize, Vec<Complex64>, Vec<Complex64>)>,
    jumps: Vec<(usize, Vec<Complex64>, Vec<Complex64>)>,
}

impl Generator {
    /// `stride_of` maps a mode to its axis stride in the pure-state layout.
    fn build(grid: &ModeGrid, spec: &LindbladSpec, stride_of: impl Fn(ModeId) -> Result<usize>) -> Result<Self> {
        spec.validate()?;
        let n = grid.n_points();
        let mut per_mode: Vec<(ModeId, CMatrix)> = Vec::new();
        fn slot(per_mode: &mut Vec<(ModeId, CMatrix)>, mode: ModeId, n: usize) -> &mut CMatrix {
            let i = match per_mode.iter().position(|(m, _)| *m == mode) {
                Some(i) => i,
                None => {
                    per_mode.push((mode, CMatrix::zeros(n, n)));
                    per_mode.len() - 1
                }
            };
            &mut per_mode[i].1
        }
        for h in &spec.hamiltonian {
            let g = operators::hermitian_generator(grid, &h.op);
            let scale = g.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if !linalg::is_hermitian(&g, 1e-10 * scale) {
                return Err(Error::NonHermitian);
            }
            *slot(&mut per_mode, h.mode, n) += g.map(|z| z * Complex64::new(0.0, -1.0));
        }
        let mut jumps = Vec::new();
        for j in &spec.jumps {
            let l = operators::poly_operator(grid, &j.op).map(|z| z * j.rate.sqrt());
            let ldl = l.adjoint() * &l;
            *slot(&mut per_mode, j.mode, n) -= ldl.map(|z| z * 0.5);
            jumps.push((stride_of(j.mode)?, linalg::row_major(&l), linalg::row_major(&l.adjoint())));
        }
        let mut drift = Vec::new();
        for (mode, k) in per_mode {
            drift.push((stride_of(mode)?, linalg::row_major(&k), linalg::row_major(&k.adjoint())));
        }
        Ok(Self { n, drift, jumps })
    }

    /// `d rho / dt` for a row-major density matrix of dimension `dim`.
    fn density_rate(&self, rho: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut out = vec![tensor::ZERO; rho.len()];
        let add = |out: &mut Vec<Complex64>, v: Vec<Complex64>| out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        for (st, k, kdag) in &self.drift {
            add(&mut out, tensor::apply_axis(rho, self.n, st * dim, k));
            add(&mut out, tensor::apply_axis(rho, self.n, *st, &transpose(kdag, self.n)));
        }
        for (st, l, ldag) in &self.jumps {
            let left = tensor::apply_axis(rho, self.n, st * dim, l);
            add(&mut out, tensor::apply_axis(&left, self.n, *st, &transpose(ldag, self.n)));
        }
        out
    }

    /// `-i H_eff psi` for the no-jump evolution.
    fn pure_rate(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![tensor::ZERO; psi.len()];
        for (st, k, _) in &self.drift {
            let v = tensor::apply_axis(psi, self.n, *st, k);
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        out
    }
}

fn transpose(m: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut t = vec![tensor::ZERO; n * n];
    for r in 0..n {
        for c in 0..n {
            t[c * n + r] = m[r * n + c];
        }
    }
    t
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

fn rk4<F: Fn(&[Complex64]) -> Vec<Complex64>>(y: &[Complex64], h: f64, f: F) -> Vec<Complex64> {
    let k1 = f(y);
    let k2 = f(&axpy(y, h / 2.0, &k1));
    let k3 = f(&axpy(y, h / 2.0, &k2));
    let k4 = f(&axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(i, y)| y + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
        .collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct LindbladRun {
    pub state: DensityState,
    /// Step-doubling estimate of the local RK4 error, taken at the first and
    /// last step (largest matrix-element deviation).
    pub truncation_estimate: f64,
}

/// Fixed-step RK4 integration of the master equation. The matrix is replaced
/// by its Hermitian part after every step; the trace is not renormalized.
pub fn lindblad_evolve(rho: &DensityState, spec: &LindbladSpec, dt: f64, steps: usize) -> Result<LindbladRun> {
    lindblad_evolve_with(rho, spec, dt, steps, true)
}

/// [`lindblad_evolve`] with the step-doubling diagnostic optional
/// (`truncation_estimate` is zero when it is skipped).
pub fn lindblad_evolve_with(
    rho: &DensityState,
    spec: &LindbladSpec,
    dt: f64,
    steps: usize,
    diagnose: bool,
) -> Result<LindbladRun> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be finite and positive",
        });
    }
    let grid = *rho.grid();
    let m = rho.labels().len();
    let strides = tensor::strides(grid.n_points(), m);
    let gen = Generator::build(&grid, spec, |mode| {
        let p = rho.labels().iter().position(|&l| l == mode).ok_or(Error::UnknownMode(mode))?;
        Ok(strides[p])
    })?;
    let dim = rho.dim();
    let f = |x: &[Complex64]| gen.density_rate(x, dim);
    let mut cur = rho.clone();
    let mut estimate: f64 = 0.0;
    for step in 0..steps {
        let next = rk4(cur.matrix(), dt, f);
        if diagnose && (step == 0 || step + 1 == steps) {
            let half = rk4(&rk4(cur.matrix(), dt / 2.0, f), dt / 2.0, f);
            estimate = estimate.max(max_diff(&next, &half) / 15.0);
        }
        cur = cur.with_matrix(next).symmetrized();
    }
    Ok(LindbladRun {
        state: cur,
        truncation_estimate: estimate,
    })
}

/// Quantum-jump unravelling: each step either applies one jump, chosen with
/// probability `rate ||O psi||^2 dt`, or the RK4 no-jump evolution, then
/// renormalizes. Fails if a step's total jump probability exceeds one.
pub fn trajectory_evolve<R: Rng + ?Sized>(
    state: &PureState,
    spec: &LindbladSpec,
    dt: f64,
    steps: usize,
    rng: &mut R,
) -> Result<PureState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be finite and positive",
        });
    }
    let gen = Generator::build(state.grid(), spec, |m| state.stride_of(m))?;
    let mut psi = state.amplitudes().to_vec();
    let mut kicked = Vec::with_capacity(gen.jumps.len());
    for _ in 0..steps {
        kicked.clear();
        let mut weights = Vec::with_capacity(gen.jumps.len());
        for (st, l, _) in &gen.jumps {
            let v = tensor::apply_axis(&psi, gen.n, *st, l);
            weights.push(tensor::norm_sqr(&v) * dt);
            kicked.push(v);
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "jump probability per step exceeds one",
            });
        }
        let r = rng.gen::<f64>();
        psi = if r < total {
            let mut acc = 0.0;
            let mut pick = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = i;
                    break;
                }
            }
            core::mem::take(&mut kicked[pick])
        } else {
            rk4(&psi, dt, |x| gen.pure_rate(x))
        };
        let norm = tensor::norm_sqr(&psi).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        psi.iter_mut().for_each(|a| *a /= norm);
    }
    Ok(PureState::from_parts_unchecked(*state.grid(), state.labels().to_vec(), psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::state::{gaussian_state, position_eigenstate};

    fn grid(n: usize) -> ModeGrid {
        ModeGrid::new(n, 1.0).unwrap()
    }

    #[test]
    fn shift_event_on_codeword() {
        let g = grid(4);
        let labels = alloc::vec![ModeId(0), ModeId(1), ModeId(2)];
        let s = PureState::basis(g, labels, &[1, 1, 1]).unwrap();
        let e = ErrorEvent::new(0.0, ModeId(1), ErrorKind::Shift { s: 2 });
        let out = apply_error(&s, &e).unwrap();
        assert!((out.amplitude_at(&[1, 3, 1]).norm() - 1.0).abs() < 1e-14);
        assert_eq!(e.csv_row(), "0,1,shift,2");
    }

    #[test]
    fn momentum_kick_moves_p_codeword() {
        let g = grid(8);
        let labels = [ModeId(0), ModeId(1), ModeId(2)];
        let w = crate::codes::p_codeword(&g, 2, labels).unwrap();
        let e = ErrorEvent::new(0.0, ModeId(2), ErrorKind::XPoly {
            spec: PolySpec::linear_x(g.momentum_spacing()),
        });
        let out = apply_error(&w, &e).unwrap();
        let want = crate::codes::p_codeword(&g, 3, labels).unwrap();
        assert!((out.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_statistics_match_binomial() {
        let g = grid(4);
        let modes = [ModeId(0), ModeId(1), ModeId(2)];
        let mut rng = stream_rng(11, 0);
        let trials = 100_000;
        let mut count = 0usize;
        for _ in 0..trials {
            count += sample_errors(&mut rng, 1.0, 0.01, 0.0, &modes, &ErrorFamily::UniformShift, &g)
                .unwrap()
                .len();
        }
        let p = error_probability(1.0, 0.01);
        let n = (3 * trials) as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((count as f64 - n * p).abs() < 3.0 * sigma);
        let none = sample_errors(&mut rng, 0.0, 0.5, 0.0, &modes, &ErrorFamily::UniformShift, &g).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = grid(8);
        let modes = [ModeId(0), ModeId(1)];
        let run = || {
            let mut rng = stream_rng(5, 2);
            (0..100)
                .flat_map(|c| sample_errors(&mut rng, 3.0, 0.1, c as f64 * 0.1, &modes, &ErrorFamily::UniformShift, &g).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn dephasing_matches_closed_form() {
        let g = grid(8);
        let psi = gaussian_state(&g, 4.0, 0.5, 1.5).unwrap();
        let rho = DensityState::from_pure(&psi);
        let gamma = 0.5;
        let spec = LindbladSpec::uniform_jumps(&[ModeId(0)], &PolySpec::linear_x(1.0), gamma);
        let (dt, steps) = (1e-3, 2000);
        let run = lindblad_evolve(&rho, &spec, dt, steps).unwrap();
        let t = dt * steps as f64;
        for j in 0..8 {
            for k in 0..8 {
                let dx = g.position(j) - g.position(k);
                let want = rho.element(j, k) * libm::exp(-gamma * dx * dx * t / 2.0);
                let got = run.state.element(j, k);
                assert!((got - want).norm() <= 0.01 * want.norm() + 1e-12, "{j} {k}");
            }
        }
        assert!((run.state.trace().re - 1.0).abs() < 1e-8);
        assert!(run.truncation_estimate < 1e-10);
    }

    #[test]
    fn no_jumps_is_schrodinger() {
        let g = grid(8);
        let psi = gaussian_state(&g, 3.0, 0.0, 1.2).unwrap();
        let spec = LindbladSpec {
            hamiltonian: alloc::vec![HamiltonianTerm {
                mode: ModeId(0),
                op: PolySpec::real(&[(2, 0, 0.5), (0, 2, 0.1)]).unwrap()
            }],
            jumps: Vec::new(),
        };
        let mut rng = stream_rng(1, 0);
        let traj = trajectory_evolve(&psi, &spec, 1e-3, 500, &mut rng).unwrap();
        let dense = lindblad_evolve(&DensityState::from_pure(&psi), &spec, 1e-3, 500).unwrap();
        let diff = dense.state.trace_distance(&DensityState::from_pure(&traj)).unwrap();
        assert!(diff < 1e-6, "{diff}");
        let unchanged = lindblad_evolve(&DensityState::from_pure(&psi), &LindbladSpec::default(), 0.1, 10).unwrap();
        assert!(unchanged.state.trace_distance(&DensityState::from_pure(&psi)).unwrap() < 1e-14);
    }

    #[test]
    fn maximally_mixed_is_fixed_under_normal_jumps() {
        let g = grid(4);
        let rho = DensityState::maximally_mixed(g, alloc::vec![ModeId(0)]).unwrap();
        let spec = LindbladSpec::uniform_jumps(&[ModeId(0)], &PolySpec::linear_p(1.0), 0.7);
        let out = lindblad_evolve(&rho, &spec, 0.01, 100).unwrap();
        assert!(out.state.trace_distance(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn shift_dual_is_linear_momentum_phase() {
        let g = grid(4);
        let labels = [ModeId(0), ModeId(1), ModeId(2)];
        let to_p = |s: &PureState| {
            labels
                .iter()
                .fold(s.clone(), |acc, m| acc.dft_mode(*m, crate::state::Direction::Forward).unwrap())
        };
        for j in 0..4 {
            let w = crate::codes::x_codeword(&position_eigenstate(&g, j).unwrap(), labels).unwrap();
            for m in labels {
                for s in 0..4i64 {
                    let lhs = to_p(&apply_error(&w, &ErrorEvent::new(0.0, m, ErrorKind::Shift { s })).unwrap());
                    let phase = ErrorKind::XPoly {
                        spec: PolySpec::linear_x(-(s as f64) * g.momentum_spacing()),
                    };
                    let rhs = apply_error(&to_p(&w), &ErrorEvent::new(0.0, m, phase)).unwrap();
                    assert!((lhs.inner(&rhs).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}
