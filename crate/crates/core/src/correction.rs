//! Voting-based correction: the position triple routine, the logical momentum
//! routine, their nine-mode combination, and the triple routine as a channel
//! on density matrices.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{self, spread_x, NineLayout, TripleLayout};
use crate::density::DensityState;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operators::{
    compare_add_digits, compare_subtract_digits, momentum_operator, position_operator, Comparison, Sign,
};
use crate::state::{ModeId, PureState, DEFAULT_MEMORY_BUDGET, PURITY_TOLERANCE};
use crate::tensor;

/// Cyclic voting order. Permutation `(i, j, k)` compares modes `i, j` and
/// writes into ancilla `k`.
pub const VOTING_ORDER: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Tolerance on code-space weight for a report to count as restored.
pub const RESTORE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionOptions {
    pub comparison: Comparison,
    pub budget: u128,
    /// Factor out each ancilla as soon as it is unentangled.
    pub release_ancillae: bool,
    /// Require ancillae that are already present to be in `|x_0>`.
    pub check_fresh: bool,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        Self {
            comparison: Comparison::Exact,
            budget: DEFAULT_MEMORY_BUDGET,
            release_ancillae: true,
            check_fresh: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routine {
    XTriple,
    PLogical,
    FullNine,
}

/// Summary of one ancilla's reduced state after a routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncillaSyndrome {
    pub mode: ModeId,
    pub mean_position: f64,
    pub mean_momentum: f64,
    pub purity: f64,
    /// Unentangled with everything else (purity at least `1 - 1e-8`).
    pub decoupled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub cycle_index: usize,
    pub routine: Routine,
    pub syndromes: Vec<AncillaSyndrome>,
    /// Every ancilla group was factored out of the data, possibly jointly.
    pub data_decoupled: bool,
    pub code_space_weight: f64,
    pub post_fidelity: Option<f64>,
}

impl CorrectionReport {
    pub fn decoupled(&self) -> bool {
        self.syndromes.iter().all(|s| s.decoupled)
    }

    pub fn restored(&self) -> bool {
        self.code_space_weight >= 1.0 - RESTORE_TOLERANCE
    }

    pub fn syndrome(&self, mode: ModeId) -> Option<&AncillaSyndrome> {
        self.syndromes.iter().find(|s| s.mode == mode)
    }
}

/// Result of a routine: the corrected state (with any still-entangled
/// ancillae attached), the factored-out ancilla states, and the report.
#[derive(Debug, Clone)]
pub struct Corrected {
    pub state: PureState,
    pub released: Vec<PureState>,
    pub report: CorrectionReport,
}

impl Corrected {
    /// Ancilla modes still attached to the corrected state.
    pub fn attached_ancillae(&self, data: &[ModeId]) -> Vec<ModeId> {
        self.state.labels().iter().copied().filter(|l| !data.contains(l)).collect()
    }

    /// The released state containing `mode`, if any.
    pub fn released_state(&self, mode: ModeId) -> Option<&PureState> {
        self.released.iter().find(|s| s.contains(mode))
    }
}

fn single_mode_summary(rho: &DensityState, mode: ModeId, decoupled: bool) -> Result<AncillaSyndrome> {
    let grid = *rho.grid();
    let x: CMatrix = position_operator(&grid);
    let p: CMatrix = momentum_operator(&grid);
    let purity = rho.purity();
    Ok(AncillaSyndrome {
        mode,
        mean_position: rho.expectation(&x, mode)?.re,
        mean_momentum: rho.expectation(&p, mode)?.re,
        purity,
        decoupled: decoupled && purity >= 1.0 - PURITY_TOLERANCE,
    })
}

fn summarize(mode: ModeId, released: &[PureState], state: &PureState) -> Result<AncillaSyndrome> {
    if let Some(r) = released.iter().find(|r| r.contains(mode)) {
        let rho = r.reduced_density(&[mode])?;
        return single_mode_summary(&rho, mode, r.n_modes() == 1 || rho.purity() >= 1.0 - PURITY_TOLERANCE);
    }
    let rho = state.reduced_density(&[mode])?;
    single_mode_summary(&rho, mode, true)
}

fn attach_fresh(state: PureState, mode: ModeId, opts: &CorrectionOptions) -> Result<PureState> {
    if state.contains(mode) {
        if opts.check_fresh && state.marginal_probability(mode, 0)? < 1.0 - codes::ENCODE_TOLERANCE {
            return Err(Error::AncillaNotFresh(mode));
        }
        return Ok(state);
    }
    PureState::tensor_with_budget(&[&state, &PureState::fresh(*state.grid(), mode)], opts.budget)
}

/// Factor out `group` if it is unentangled with the rest.
fn try_release(state: PureState, group: &[ModeId], released: &mut Vec<PureState>) -> Result<PureState> {
    if group.is_empty() || group.len() == state.n_modes() {
        return Ok(state);
    }
    if state.purity(group)? >= 1.0 - PURITY_TOLERANCE {
        let (rest, g) = state.detach(group)?;
        released.push(g);
        Ok(rest)
    } else {
        Ok(state)
    }
}

/// Compare-add followed by compare-subtract as one basis permutation.
fn vote_round(state: &PureState, modes: [ModeId; 4], cmp: Comparison) -> Result<PureState> {
    let n = state.grid().n_points();
    let strides = state.strides_of(&modes)?;
    let amps = tensor::permute_digits(state.amplitudes(), n, &strides, |d| {
        d[3] = compare_add_digits(cmp, n, d[0], d[1], d[2], d[3]);
        d[2] = compare_subtract_digits(cmp, n, d[0], d[1], d[2], d[3]);
    })?;
    Ok(state.map_amplitudes(amps))
}

/// The three voting rounds over `data`, one ancilla per round.
fn vote(
    mut state: PureState,
    data: [ModeId; 3],
    ancillae: [ModeId; 3],
    opts: &CorrectionOptions,
    released: &mut Vec<PureState>,
) -> Result<PureState> {
    for &(i, j, k) in &VOTING_ORDER {
        let anc = ancillae[k];
        state = attach_fresh(state, anc, opts)?;
        state = vote_round(&state, [data[i], data[j], data[k], anc], opts.comparison)?;
        if opts.release_ancillae {
            state = try_release(state, &[anc], released)?;
        }
    }
    Ok(state)
}

fn fidelity_against(state: &PureState, reference: Option<&PureState>) -> Result<Option<f64>> {
    reference.map(|r| state.subsystem_fidelity(r)).transpose()
}

/// Position-code voting on one triple.
pub fn correct_x_triple(state: &PureState, layout: &TripleLayout) -> Result<Corrected> {
    correct_x_triple_with(state, layout, &CorrectionOptions::default(), None)
}

/// [`correct_x_triple`] with options and an optional reference state for the
/// report's fidelity (over the reference's modes).
pub fn correct_x_triple_with(
    state: &PureState,
    layout: &TripleLayout,
    opts: &CorrectionOptions,
    reference: Option<&PureState>,
) -> Result<Corrected> {
    let ancillae = layout.require_ancillae()?;
    let mut released = Vec::new();
    let out = vote(state.clone(), layout.data(), ancillae, opts, &mut released)?;
    let syndromes = ancillae
        .iter()
        .map(|&a| summarize(a, &released, &out))
        .collect::<Result<Vec<_>>>()?;
    let data_decoupled = ancillae.iter().all(|a| !out.contains(*a));
    let report = CorrectionReport {
        cycle_index: 0,
        routine: Routine::XTriple,
        syndromes,
        data_decoupled,
        code_space_weight: codes::x_code_weight(&out, layout.data())?,
        post_fidelity: fidelity_against(&out, reference)?,
    };
    Ok(Corrected {
        state: out,
        released,
        report,
    })
}

/// Logical momentum voting across the three triples of the nine-mode code,
/// by conjugating the position routine with decoding and Fourier transforms.
pub fn correct_p_logical(state: &PureState, layout: &NineLayout) -> Result<Corrected> {
    correct_p_logical_with(state, layout, &CorrectionOptions::default(), None)
}

pub fn correct_p_logical_with(
    state: &PureState,
    layout: &NineLayout,
    opts: &CorrectionOptions,
    reference: Option<&PureState>,
) -> Result<Corrected> {
    let original: Vec<ModeId> = state.labels().to_vec();
    let mut s = state.clone();
    for t in layout.triples() {
        s = spread_x(&s, t.data(), Sign::Minus)?;
    }
    // Park the non-logical data modes while the ancillae are attached.
    let mut parked = Vec::new();
    for t in layout.triples() {
        for m in [t.data()[1], t.data()[2]] {
            s = try_release(s, &[m], &mut parked)?;
        }
    }
    let logical = layout.logical_modes();
    for m in logical {
        s = s.dft_mode(m, crate::state::Direction::Forward)?;
    }
    let mut released = Vec::new();
    s = vote(s, logical, layout.phase_ancillae(), opts, &mut released)?;
    for m in logical {
        s = s.dft_mode(m, crate::state::Direction::Inverse)?;
    }
    for p in &parked {
        s = PureState::tensor_with_budget(&[&s, p], opts.budget)?;
    }
    for t in layout.triples() {
        s = spread_x(&s, t.data(), Sign::Plus)?;
    }
    let s = s.reorder_preferring(&original)?;
    let phase = layout.phase_ancillae();
    let syndromes = phase
        .iter()
        .map(|&a| summarize(a, &released, &s))
        .collect::<Result<Vec<_>>>()?;
    let data_decoupled = phase.iter().all(|a| !s.contains(*a));
    let report = CorrectionReport {
        cycle_index: 0,
        routine: Routine::PLogical,
        syndromes,
        data_decoupled,
        code_space_weight: codes::nine_code_weight(&s, layout)?,
        post_fidelity: fidelity_against(&s, reference)?,
    };
    Ok(Corrected {
        state: s,
        released,
        report,
    })
}

/// Position voting on each triple, then logical momentum voting.
pub fn correct_full_nine(state: &PureState, layout: &NineLayout) -> Result<Corrected> {
    correct_full_nine_with(state, layout, &CorrectionOptions::default(), None)
}

pub fn correct_full_nine_with(
    state: &PureState,
    layout: &NineLayout,
    opts: &CorrectionOptions,
    reference: Option<&PureState>,
) -> Result<Corrected> {
    let original: Vec<ModeId> = state.labels().to_vec();
    let mut s = state.clone();
    let mut released = Vec::new();
    let mut ancillae = Vec::new();
    for t in layout.triples() {
        let c = correct_x_triple_with(&s, t, opts, None)?;
        s = c.state;
        released.extend(c.released);
        ancillae.extend_from_slice(&t.require_ancillae()?);
    }
    let p = correct_p_logical_with(&s, layout, opts, None)?;
    s = p.state;
    released.extend(p.released);
    ancillae.extend_from_slice(&layout.phase_ancillae());
    if opts.release_ancillae {
        let leftover: Vec<ModeId> = ancillae.iter().copied().filter(|a| s.contains(*a) && !original.contains(a)).collect();
        s = try_release(s, &leftover, &mut released)?;
    }
    let syndromes = ancillae
        .iter()
        .map(|&a| summarize(a, &released, &s))
        .collect::<Result<Vec<_>>>()?;
    let data_decoupled = ancillae.iter().all(|a| !s.contains(*a));
    let report = CorrectionReport {
        cycle_index: 0,
        routine: Routine::FullNine,
        syndromes,
        data_decoupled,
        code_space_weight: codes::nine_code_weight(&s, layout)?,
        post_fidelity: fidelity_against(&s, reference)?,
    };
    Ok(Corrected {
        state: s,
        released,
        report,
    })
}

/// The position routine on the data modes of `rho` with fresh ancillae that
/// are traced out afterwards.
pub fn correct_x_triple_channel(rho: &DensityState, data: [ModeId; 3], comparison: Comparison) -> Result<DensityState> {
    let n = rho.grid().n_points();
    let all = tensor::strides(n, rho.labels().len());
    let mut st = [0usize; 3];
    for (slot, m) in st.iter_mut().zip(data) {
        let p = rho.labels().iter().position(|&l| l == m).ok_or(Error::UnknownMode(m))?;
        *slot = all[p];
    }
    if data[0] == data[1] || data[0] == data[2] || data[1] == data[2] {
        return Err(Error::DuplicateMode(data[0]));
    }
    let dim = rho.dim();
    let mut out_index = vec![0usize; dim];
    let mut syndrome = vec![0usize; dim];
    for i in 0..dim {
        let mut d = [0usize; 3];
        for q in 0..3 {
            d[q] = i / st[q] % n;
        }
        let mut e = [0usize; 3];
        for &(a, b, k) in &VOTING_ORDER {
            e[k] = compare_add_digits(comparison, n, d[a], d[b], d[k], e[k]);
            d[k] = compare_subtract_digits(comparison, n, d[a], d[b], d[k], e[k]);
        }
        let mut f = i;
        for q in 0..3 {
            f = f - (i / st[q] % n) * st[q] + d[q] * st[q];
        }
        out_index[i] = f;
        syndrome[i] = (e[0] * n + e[1]) * n + e[2];
    }
    let src = rho.matrix();
    let mut m = vec![tensor::ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            if syndrome[i] == syndrome[j] {
                m[out_index[i] * dim + out_index[j]] += src[i * dim + j];
            }
        }
    }
    Ok(rho.with_matrix(m))
}

/// Return ancillae to the environment: factor them out when unentangled,
/// otherwise sample a position record for each (one unravelling of the
/// partial trace) and keep the conditional data state.
pub fn reset_ancillae<R: Rng + ?Sized>(state: &PureState, ancillae: &[ModeId], rng: &mut R) -> Result<PureState> {
    let present: Vec<ModeId> = ancillae.iter().copied().filter(|a| state.contains(*a)).collect();
    if present.is_empty() {
        return Ok(state.clone());
    }
    if present.len() < state.n_modes() && state.purity(&present)? >= 1.0 - PURITY_TOLERANCE {
        return Ok(state.detach(&present)?.0);
    }
    let mut s = state.clone();
    for a in present {
        s = project_mode(&s, a, rng)?;
    }
    Ok(s)
}

fn project_mode<R: Rng + ?Sized>(state: &PureState, mode: ModeId, rng: &mut R) -> Result<PureState> {
    let n = state.grid().n_points();
    let mut order = vec![mode];
    order.extend(state.labels().iter().copied().filter(|&l| l != mode));
    let s = state.reorder(&order)?;
    let rest = s.dim() / n;
    let probs: Vec<f64> = (0..n)
        .map(|j| tensor::norm_sqr(&s.amplitudes()[j * rest..(j + 1) * rest]))
        .collect();
    let r = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut pick = n - 1;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            pick = j;
            break;
        }
    }
    PureState::new(
        *state.grid(),
        order[1..].to_vec(),
        s.amplitudes()[pick * rest..(pick + 1) * rest].to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ModeGrid;
    use crate::noise::{apply_error, ErrorEvent, ErrorKind};
    use crate::operators::PolySpec;
    use crate::state::{gaussian_state, position_eigenstate};

    fn codeword(g: &ModeGrid) -> PureState {
        let psi = gaussian_state(g, 3.0, 0.4, 2.0).unwrap();
        codes::x_codeword(&psi, TripleLayout::standard().data()).unwrap()
    }

    #[test]
    fn no_error_is_identity() {
        let g = ModeGrid::new(8, 1.0).unwrap();
        let w = codeword(&g);
        let c = correct_x_triple_with(&w, &TripleLayout::standard(), &CorrectionOptions::default(), Some(&w)).unwrap();
        assert!((c.report.post_fidelity.unwrap() - 1.0).abs() < 1e-12);
        assert!(c.report.decoupled() && c.report.data_decoupled && c.report.restored());
        for r in &c.released {
            assert!((r.marginal_probability(r.labels()[0], 0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_lands_on_ancilla() {
        let g = ModeGrid::new(8, 1.0).unwrap();
        let w = codeword(&g);
        let layout = TripleLayout::standard();
        let hit = apply_error(&w, &ErrorEvent::new(0.0, ModeId(1), ErrorKind::Shift { s: 3 })).unwrap();
        let c = correct_x_triple_with(&hit, &layout, &CorrectionOptions::default(), Some(&w)).unwrap();
        assert!((c.report.post_fidelity.unwrap() - 1.0).abs() < 1e-10);
        let anc = c.released_state(layout.ancillae().unwrap()[1]).unwrap();
        assert!((anc.fidelity(&position_eigenstate(&g, 3).unwrap().with_label(anc.labels()[0])).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_distinct_shifts_are_flagged() {
        let g = ModeGrid::new(8, 1.0).unwrap();
        let w = codeword(&g);
        let hit = apply_error(&w, &ErrorEvent::new(0.0, ModeId(0), ErrorKind::Shift { s: 1 })).unwrap();
        let hit = apply_error(&hit, &ErrorEvent::new(0.0, ModeId(1), ErrorKind::Shift { s: 2 })).unwrap();
        let c = correct_x_triple_with(&hit, &TripleLayout::standard(), &CorrectionOptions::default(), Some(&w)).unwrap();
        assert!(!c.report.restored());
        assert!(c.report.post_fidelity.unwrap() < 1e-10);
    }

    #[test]
    fn channel_matches_pure_routine() {
        let g = ModeGrid::new(4, 1.0).unwrap();
        let w = codeword(&g);
        let hit = apply_error(
            &w,
            &ErrorEvent::new(0.0, ModeId(2), ErrorKind::PPoly { spec: PolySpec::real(&[(2, 0, 0.3)]).unwrap() }),
        )
        .unwrap();
        let opts = CorrectionOptions {
            release_ancillae: false,
            ..CorrectionOptions::default()
        };
        let pure = correct_x_triple_with(&hit, &TripleLayout::standard(), &opts, None).unwrap();
        let want = pure.state.reduced_density(&TripleLayout::standard().data()).unwrap();
        let got = correct_x_triple_channel(&DensityState::from_pure(&hit), TripleLayout::standard().data(), Comparison::Exact).unwrap();
        assert!(got.trace_distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn reset_samples_entangled_ancilla() {
        let g = ModeGrid::new(4, 1.0).unwrap();
        let labels = vec![ModeId(0), ModeId(7)];
        let mut amps = vec![tensor::ZERO; 16];
        amps[0] = num_complex::Complex64::new(1.0, 0.0);
        amps[5] = num_complex::Complex64::new(1.0, 0.0);
        let bell = PureState::new(g, labels, amps).unwrap();
        let mut rng = crate::rng::stream_rng(3, 0);
        let out = reset_ancillae(&bell, &[ModeId(7)], &mut rng).unwrap();
        assert_eq!(out.labels(), &[ModeId(0)]);
        let p0 = out.marginal_probability(ModeId(0), 0).unwrap();
        assert!(p0 == 1.0 || out.marginal_probability(ModeId(0), 1).unwrap() == 1.0);
    }
}
