//! Encoders and decoders for the position triple code, the logical momentum
//! codeword, and the nine-mode triple-triple code.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::operators::{sum_gate, Sign};
use crate::state::{Direction, ModeId, PureState};
use crate::tensor;

/// Tolerance on the fresh-mode precondition of the encoders.
pub const ENCODE_TOLERANCE: f64 = 1e-10;

fn check_distinct(ids: &[ModeId]) -> Result<()> {
    for (i, a) in ids.iter().enumerate() {
        if ids[..i].contains(a) {
            return Err(Error::DuplicateMode(*a));
        }
    }
    Ok(())
}

/// Three data modes plus (optionally) one voting ancilla per data mode.
///
/// Voting permutation `(i, j, k)` writes into `ancillae[k]`; a single shared
/// ancilla would carry the first vote's syndrome into the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TripleRepr", into = "TripleRepr")]
pub struct TripleLayout {
    data: [ModeId; 3],
    ancillae: Option<[ModeId; 3]>,
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    data: [u16; 3],
    #[serde(default)]
    ancillae: Option<[u16; 3]>,
}

impl TryFrom<TripleRepr> for TripleLayout {
    type Error = Error;
    fn try_from(r: TripleRepr) -> Result<Self> {
        TripleLayout::new(r.data.map(ModeId), r.ancillae.map(|a| a.map(ModeId)))
    }
}

impl From<TripleLayout> for TripleRepr {
    fn from(l: TripleLayout) -> Self {
        TripleRepr {
            data: l.data.map(|m| m.0),
            ancillae: l.ancillae.map(|a| a.map(|m| m.0)),
        }
    }
}

impl TripleLayout {
    pub fn new(data: [ModeId; 3], ancillae: Option<[ModeId; 3]>) -> Result<Self> {
        let mut all = data.to_vec();
        if let Some(a) = ancillae {
            all.extend_from_slice(&a);
        }
        check_distinct(&all)?;
        Ok(Self { data, ancillae })
    }

    /// Data modes `0, 1, 2` and ancillae `3, 4, 5`.
    pub fn standard() -> Self {
        Self::new([ModeId(0), ModeId(1), ModeId(2)], Some([ModeId(3), ModeId(4), ModeId(5)])).unwrap()
    }

    pub fn data(&self) -> [ModeId; 3] {
        self.data
    }

    pub fn ancillae(&self) -> Option<[ModeId; 3]> {
        self.ancillae
    }

    pub fn require_ancillae(&self) -> Result<[ModeId; 3]> {
        self.ancillae.ok_or(Error::MissingAncilla)
    }
}

/// Nine data modes in three triples and the three phase ancillae `A, B, C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NineRepr", into = "NineRepr")]
pub struct NineLayout {
    triples: [TripleLayout; 3],
    phase_ancillae: [ModeId; 3],
}

#[derive(Serialize, Deserialize)]
struct NineRepr {
    triples: [TripleLayout; 3],
    phase_ancillae: [u16; 3],
}

impl TryFrom<NineRepr> for NineLayout {
    type Error = Error;
    fn try_from(r: NineRepr) -> Result<Self> {
        NineLayout::new(r.triples, r.phase_ancillae.map(ModeId))
    }
}

impl From<NineLayout> for NineRepr {
    fn from(l: NineLayout) -> Self {
        NineRepr {
            triples: l.triples,
            phase_ancillae: l.phase_ancillae.map(|m| m.0),
        }
    }
}

impl NineLayout {
    pub fn new(triples: [TripleLayout; 3], phase_ancillae: [ModeId; 3]) -> Result<Self> {
        let mut all = Vec::new();
        for t in &triples {
            all.extend_from_slice(&t.data);
            if let Some(a) = t.ancillae {
                all.extend_from_slice(&a);
            }
        }
        all.extend_from_slice(&phase_ancillae);
        check_distinct(&all)?;
        Ok(Self {
            triples,
            phase_ancillae,
        })
    }

    /// Data modes `0..9` (triples `0-2`, `3-5`, `6-8`), position ancillae
    /// `9..18` in the same order, phase ancillae `18, 19, 20`.
    pub fn standard() -> Self {
        let t = |b: u16| {
            TripleLayout::new(
                [ModeId(b), ModeId(b + 1), ModeId(b + 2)],
                Some([ModeId(b + 9), ModeId(b + 10), ModeId(b + 11)]),
            )
            .unwrap()
        };
        Self::new([t(0), t(3), t(6)], [ModeId(18), ModeId(19), ModeId(20)]).unwrap()
    }

    pub fn triples(&self) -> &[TripleLayout; 3] {
        &self.triples
    }

    pub fn phase_ancillae(&self) -> [ModeId; 3] {
        self.phase_ancillae
    }

    /// The first mode of each triple, which carries the logical value after decoding.
    pub fn logical_modes(&self) -> [ModeId; 3] {
        [self.triples[0].data[0], self.triples[1].data[0], self.triples[2].data[0]]
    }

    pub fn data_modes(&self) -> [ModeId; 9] {
        let mut out = [ModeId(0); 9];
        for (t, triple) in self.triples.iter().enumerate() {
            out[3 * t..3 * t + 3].copy_from_slice(&triple.data);
        }
        out
    }
}

fn require_position_zero(state: &PureState, mode: ModeId) -> Result<()> {
    let weight = state.marginal_probability(mode, 0)?;
    if weight < 1.0 - ENCODE_TOLERANCE {
        return Err(Error::EncodePrecondition { mode, weight });
    }
    Ok(())
}

fn require_momentum_zero(state: &PureState, mode: ModeId) -> Result<()> {
    let weight = state.dft_mode(mode, Direction::Forward)?.marginal_probability(mode, 0)?;
    if weight < 1.0 - ENCODE_TOLERANCE {
        return Err(Error::EncodePrecondition { mode, weight });
    }
    Ok(())
}

/// The encoding circuit without its precondition check.
pub(crate) fn spread_x(state: &PureState, data: [ModeId; 3], sign: Sign) -> Result<PureState> {
    let s = sum_gate(state, data[0], data[1], sign)?;
    sum_gate(&s, data[0], data[2], sign)
}

/// `psi(x)|x>|x0>|x0>` to `psi(x)|x x x>`. Modes 2 and 3 of the triple must be
/// in `|x_0>`.
pub fn encode_x_triple(state: &PureState, layout: &TripleLayout) -> Result<PureState> {
    require_position_zero(state, layout.data[1])?;
    require_position_zero(state, layout.data[2])?;
    spread_x(state, layout.data, Sign::Plus)
}

/// Exact inverse of [`encode_x_triple`].
pub fn decode_x_triple(state: &PureState, layout: &TripleLayout) -> Result<PureState> {
    spread_x(state, layout.data, Sign::Minus)
}

/// Same circuit as [`encode_x_triple`]; a momentum eigenstate on the first mode
/// becomes the logical momentum codeword.
pub fn encode_p_triple(state: &PureState, layout: &TripleLayout) -> Result<PureState> {
    encode_x_triple(state, layout)
}

/// `|p_a>|p_b> -> |p_a>|p_{b +- a}>` in momentum labels.
pub fn momentum_sum_gate(state: &PureState, src: ModeId, dst: ModeId, sign: Sign) -> Result<PureState> {
    let s = state.dft_mode(src, Direction::Forward)?.dft_mode(dst, Direction::Forward)?;
    let s = sum_gate(&s, src, dst, sign)?;
    s.dft_mode(src, Direction::Inverse)?.dft_mode(dst, Direction::Inverse)
}

/// Copy the logical momentum of the first data mode into the first modes of
/// the other two triples, then position-encode each triple.
///
/// Acts on data modes only; any ancilla modes in the state are left alone.
/// Preconditions: the first modes of triples two and three in `|p_0>`, every
/// other non-leading data mode in `|x_0>`.
pub fn encode_nine(state: &PureState, layout: &NineLayout) -> Result<PureState> {
    let [l1, l4, l7] = layout.logical_modes();
    require_momentum_zero(state, l4)?;
    require_momentum_zero(state, l7)?;
    for t in &layout.triples {
        require_position_zero(state, t.data[1])?;
        require_position_zero(state, t.data[2])?;
    }
    let s = momentum_sum_gate(state, l1, l4, Sign::Plus)?;
    let mut s = momentum_sum_gate(&s, l1, l7, Sign::Plus)?;
    for t in &layout.triples {
        s = spread_x(&s, t.data, Sign::Plus)?;
    }
    Ok(s)
}

/// Exact inverse of [`encode_nine`].
pub fn decode_nine(state: &PureState, layout: &NineLayout) -> Result<PureState> {
    let [l1, l4, l7] = layout.logical_modes();
    let mut s = state.clone();
    for t in &layout.triples {
        s = spread_x(&s, t.data, Sign::Minus)?;
    }
    let s = momentum_sum_gate(&s, l1, l7, Sign::Minus)?;
    momentum_sum_gate(&s, l1, l4, Sign::Minus)
}

/// Unencoded nine-mode input: `psi` on the first data mode, `|p_0>` on the
/// first modes of the other triples, `|x_0>` elsewhere.
pub fn nine_input(psi: &PureState, layout: &NineLayout) -> Result<PureState> {
    if psi.n_modes() != 1 {
        return Err(Error::ShapeMismatch("logical state must have one mode"));
    }
    let g = *psi.grid();
    let [l1, l4, l7] = layout.logical_modes();
    let parts = layout
        .data_modes()
        .iter()
        .map(|&m| {
            Ok(if m == l1 {
                psi.clone().with_label(m)
            } else if m == l4 || m == l7 {
                crate::state::momentum_eigenstate(&g, 0)?.with_label(m)
            } else {
                PureState::fresh(g, m)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PureState> = parts.iter().collect();
    PureState::tensor(&refs)
}

/// Nine-mode codeword of a single-mode logical state.
pub fn encode_nine_logical(psi: &PureState, layout: &NineLayout) -> Result<PureState> {
    encode_nine(&nine_input(psi, layout)?, layout)
}

/// `sum_j psi_j |x_j x_j x_j>` built directly from a single-mode state.
pub fn x_codeword(psi: &PureState, labels: [ModeId; 3]) -> Result<PureState> {
    if psi.n_modes() != 1 {
        return Err(Error::ShapeMismatch("logical state must have one mode"));
    }
    let grid = *psi.grid();
    let n = grid.n_points();
    let mut amps = alloc::vec![Complex64::new(0.0, 0.0); n * n * n];
    for (j, a) in psi.amplitudes().iter().enumerate() {
        amps[j * n * n + j * n + j] = *a;
    }
    PureState::new(grid, labels.to_vec(), amps)
}

/// `(1/sqrt N) sum_j exp(i p_k x_j) |x_j x_j x_j>`.
pub fn p_codeword(grid: &ModeGrid, k: usize, labels: [ModeId; 3]) -> Result<PureState> {
    x_codeword(&crate::state::momentum_eigenstate(grid, k)?, labels)
}

/// Probability that the three data modes hold equal values.
pub fn x_code_weight(state: &PureState, data: [ModeId; 3]) -> Result<f64> {
    let n = state.grid().n_points();
    let st = state.strides_of(&data)?;
    let diag = st[0] + st[1] + st[2];
    let a = state.amplitudes();
    Ok(tensor::bases(a.len(), n, &st)
        .into_iter()
        .map(|b| (0..n).map(|d| a[b + d * diag].norm_sqr()).sum::<f64>())
        .sum())
}

/// Weight of the nine-mode code space: every triple repetitive in position
/// and, after undoing the position layer, the three logical modes agreeing in
/// momentum.
pub fn nine_code_weight(state: &PureState, layout: &NineLayout) -> Result<f64> {
    let mut s = state.clone();
    for t in &layout.triples {
        s = spread_x(&s, t.data, Sign::Minus)?;
    }
    let logical = layout.logical_modes();
    for m in logical {
        s = s.dft_mode(m, Direction::Forward)?;
    }
    let n = s.grid().n_points();
    let strides = s.strides_of(&layout.data_modes())?;
    let ls = s.strides_of(&logical)?;
    let diag = ls[0] + ls[1] + ls[2];
    let a = s.amplitudes();
    Ok(tensor::bases(a.len(), n, &strides)
        .into_iter()
        .map(|b| (0..n).map(|k| a[b + k * diag].norm_sqr()).sum::<f64>())
        .sum())
}
#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{gaussian_state, momentum_eigenstate, position_eigenstate, tensor};

    fn grid(n: usize) -> ModeGrid {
        ModeGrid::new(n, 1.0).unwrap()
    }

    fn fresh_triple(psi: &PureState) -> PureState {
        let g = *psi.grid();
        let psi = psi.clone().with_label(ModeId(0));
        tensor(&[&psi, &PureState::fresh(g, ModeId(1)), &PureState::fresh(g, ModeId(2))]).unwrap()
    }

    #[test]
    fn encodes_position_basis() {
        let g = grid(4);
        let layout = TripleLayout::standard();
        let s = encode_x_triple(&fresh_triple(&position_eigenstate(&g, 3).unwrap()), &layout).unwrap();
        assert!((s.amplitude_at(&[3, 3, 3]).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn encode_rejects_non_fresh() {
        let g = grid(4);
        let a = position_eigenstate(&g, 1).unwrap();
        let s = tensor(&[&a, &a.clone().with_label(ModeId(1)), &PureState::fresh(g, ModeId(2))]).unwrap();
        assert!(matches!(
            encode_x_triple(&s, &TripleLayout::standard()),
            Err(Error::EncodePrecondition { mode: ModeId(1), .. })
        ));
    }

    #[test]
    fn p_codewords_orthonormal_and_match_circuit() {
        let g = grid(8);
        let labels = [ModeId(0), ModeId(1), ModeId(2)];
        let words: Vec<PureState> = (0..8).map(|k| p_codeword(&g, k, labels).unwrap()).collect();
        for a in 0..8 {
            for b in 0..8 {
                let v = words[a].inner(&words[b]).unwrap();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((v - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
            let built = encode_p_triple(&fresh_triple(&momentum_eigenstate(&g, a).unwrap()), &TripleLayout::standard()).unwrap();
            assert!((built.fidelity(&words[a]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn layout_rejects_duplicates() {
        assert!(TripleLayout::new([ModeId(0), ModeId(1), ModeId(0)], None).is_err());
        let t = TripleLayout::standard();
        assert!(NineLayout::new([t, t, t], [ModeId(20), ModeId(21), ModeId(22)]).is_err());
        let json = serde_json::to_string(&NineLayout::standard()).unwrap();
        assert_eq!(serde_json::from_str::<NineLayout>(&json).unwrap(), NineLayout::standard());
        assert!(serde_json::from_str::<TripleLayout>(r#"{"data":[0,1,1]}"#).is_err());
    }

    fn nine_input(logical: &PureState) -> PureState {
        let g = *logical.grid();
        let layout = NineLayout::standard();
        let mut parts = Vec::new();
        for m in layout.data_modes() {
            let p = if m == ModeId(0) {
                logical.clone().with_label(m)
            } else if m == ModeId(3) || m == ModeId(6) {
                momentum_eigenstate(&g, 0).unwrap().with_label(m)
            } else {
                PureState::fresh(g, m)
            };
            parts.push(p);
        }
        let refs: Vec<&PureState> = parts.iter().collect();
        tensor(&refs).unwrap()
    }

    #[test]
    fn nine_code_matches_direct_construction() {
        let g = grid(4);
        let layout = NineLayout::standard();
        for k in 0..4 {
            let enc = encode_nine(&nine_input(&momentum_eigenstate(&g, k).unwrap()), &layout).unwrap();
            let t: Vec<PureState> = layout
                .triples()
                .iter()
                .map(|t| p_codeword(&g, k, t.data()).unwrap())
                .collect();
            let direct = tensor(&[&t[0], &t[1], &t[2]]).unwrap();
            assert!((enc.fidelity(&direct).unwrap() - 1.0).abs() < 1e-10);
            assert!((nine_code_weight(&enc, &layout).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nine_round_trip() {
        let g = grid(4);
        let layout = NineLayout::standard();
        let psi = gaussian_state(&g, 1.3, 0.7, 1.0).unwrap();
        let input = nine_input(&psi);
        let back = decode_nine(&encode_nine(&input, &layout).unwrap(), &layout).unwrap();
        assert!((back.fidelity(&input).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn encoding_commutes_with_logical_shift() {
        let g = grid(4);
        let layout = TripleLayout::standard();
        let shift = |s: &PureState, by: i64, modes: &[ModeId]| {
            let op = crate::operators::UnitaryOp::shift(g, by);
            modes.iter().fold(s.clone(), |acc, m| crate::operators::apply(&acc, &op, &[*m]).unwrap())
        };
        for j in 0..4 {
            for by in 0..4 {
                let psi = fresh_triple(&position_eigenstate(&g, j).unwrap());
                let a = shift(&encode_x_triple(&psi, &layout).unwrap(), by, &layout.data());
                let b = encode_x_triple(&shift(&psi, by, &[ModeId(0)]), &layout).unwrap();
                assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
