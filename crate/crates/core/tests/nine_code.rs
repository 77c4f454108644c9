use cvqec_core::codes::{encode_nine, NineLayout};
use cvqec_core::correction::{correct_full_nine_with, correct_p_logical_with, CorrectionOptions};
use cvqec_core::noise::{apply_error, ErrorEvent, ErrorKind};
use cvqec_core::operators::PolySpec;
use cvqec_core::rng::stream_rng;
use cvqec_core::{make_grid, momentum_eigenstate, tensor, ModeGrid, ModeId, PureState};
use num_complex::Complex64;
use rand::Rng;

fn random_logical(g: &ModeGrid, seed: u64) -> PureState {
    let mut rng = stream_rng(seed, 0);
    let amps = (0..g.n_points())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    PureState::new(*g, vec![ModeId(0)], amps).unwrap()
}

fn encode(psi: &PureState) -> PureState {
    let g = *psi.grid();
    let layout = NineLayout::standard();
    let parts: Vec<PureState> = layout
        .data_modes()
        .iter()
        .map(|&m| match m.0 {
            0 => psi.clone(),
            3 | 6 => momentum_eigenstate(&g, 0).unwrap().with_label(m),
            _ => PureState::fresh(g, m),
        })
        .collect();
    let refs: Vec<&PureState> = parts.iter().collect();
    encode_nine(&tensor(&refs).unwrap(), &layout).unwrap()
}

#[test]
fn logical_phase_error_is_corrected() {
    let g = make_grid(4, 1.0).unwrap();
    let layout = NineLayout::standard();
    let opts = CorrectionOptions::default();
    for trial in 0..4u64 {
        let w = encode(&random_logical(&g, trial));
        let mode = ModeId((trial * 4 % 9) as u16);
        let c = g.momentum_spacing() * (1 + trial % 3) as f64;
        let hit = apply_error(&w, &ErrorEvent::new(0.0, mode, ErrorKind::XPoly { spec: PolySpec::linear_x(c) })).unwrap();
        let out = correct_p_logical_with(&hit, &layout, &opts, Some(&w)).unwrap();
        let f = out.report.post_fidelity.unwrap();
        assert!(f > 1.0 - 1e-10, "trial {trial}: {f}");
        assert!(out.report.data_decoupled);
    }
}

#[test]
fn mixed_error_on_two_modes_of_the_code() {
    let g = make_grid(4, 1.0).unwrap();
    let layout = NineLayout::standard();
    let opts = CorrectionOptions::default();
    let w = encode(&random_logical(&g, 9));
    for mode in [ModeId(0), ModeId(4)] {
        let spec = PolySpec::real(&[(0, 1, g.momentum_spacing()), (1, 0, g.spacing())]).unwrap();
        let hit = apply_error(&w, &ErrorEvent::new(0.0, mode, ErrorKind::Mixed { spec })).unwrap();
        let out = correct_full_nine_with(&hit, &layout, &opts, Some(&w)).unwrap();
        let f = out.report.post_fidelity.unwrap();
        assert!(f > 1.0 - 1e-8, "mode {mode}: {f}");
        assert!(out.report.data_decoupled, "{:?}", out.state.labels());
    }
}
