//! Repeated correction under stochastic and master-equation noise.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codes::{self, NineLayout, TripleLayout};
use crate::correction::{
    correct_full_nine_with, correct_x_triple_channel, correct_x_triple_with, reset_ancillae, CorrectionOptions,
};
use crate::density::DensityState;
use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::noise::{apply_error, error_probability, lindblad_evolve_with, sample_errors, ErrorEvent, ErrorFamily, LindbladSpec};
use crate::operators::{Comparison, PolySpec};
use crate::rng::stream_rng;
use crate::state::{gaussian_state, momentum_eigenstate, position_eigenstate, ModeId, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    #[default]
    Triple,
    Nine,
}

/// Single-mode logical input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogicalState {
    Gaussian { x0: f64, p0: f64, sigma: f64 },
    Position { index: usize },
    Momentum { index: usize },
    /// Explicit amplitudes, normalized on use.
    Amplitudes { re: Vec<f64>, im: Vec<f64> },
}

impl Default for LogicalState {
    fn default() -> Self {
        LogicalState::Position { index: 0 }
    }
}

impl LogicalState {
    pub fn prepare(&self, grid: &ModeGrid, label: ModeId) -> Result<PureState> {
        let s = match self {
            LogicalState::Gaussian { x0, p0, sigma } => gaussian_state(grid, *x0, *p0, *sigma)?,
            LogicalState::Position { index } => position_eigenstate(grid, *index)?,
            LogicalState::Momentum { index } => momentum_eigenstate(grid, *index)?,
            LogicalState::Amplitudes { re, im } => {
                if re.len() != grid.n_points() || im.len() != grid.n_points() {
                    return Err(Error::ShapeMismatch("amplitude list length differs from grid size"));
                }
                let amps = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
                PureState::new(*grid, alloc::vec![ModeId(0)], amps)?
            }
        };
        Ok(s.with_label(label))
    }
}

/// A single trial of repeated correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub code: CodeKind,
    pub grid: ModeGrid,
    pub logical: LogicalState,
    /// Error rate per data mode per unit time.
    pub rate: f64,
    /// Correction interval.
    pub dt: f64,
    pub cycles: usize,
    #[serde(default)]
    pub family: ErrorFamily,
    #[serde(default)]
    pub comparison: Comparison,
    /// Re-prepare the reference codeword after a failed cycle, so that cycles
    /// are independent.
    #[serde(default)]
    pub restart_on_failure: bool,
    /// A cycle fails when the fidelity drops below `1 - failure_threshold`.
    #[serde(default = "default_threshold")]
    pub failure_threshold: f64,
    /// Also inject errors into the fresh ancillae before voting (triple code only).
    #[serde(default)]
    pub ancilla_errors: bool,
    pub seed: u64,
    /// Random stream index of this trial.
    #[serde(default)]
    pub trial: u64,
    /// Errors applied before the first correction, in addition to sampled ones.
    #[serde(default)]
    pub forced: Vec<ErrorEvent>,
}

fn default_threshold() -> f64 {
    1e-6
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rate",
                reason: "must be finite and nonnegative",
            });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "must be finite and positive",
            });
        }
        if !(self.failure_threshold > 0.0 && self.failure_threshold < 1.0) {
            return Err(Error::InvalidParameter {
                name: "failure_threshold",
                reason: "must lie in (0, 1)",
            });
        }
        if self.ancilla_errors && self.code == CodeKind::Nine {
            return Err(Error::InvalidParameter {
                name: "ancilla_errors",
                reason: "supported for the triple code only",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub t: f64,
    pub fidelity: f64,
    pub decoupled: bool,
    pub errors: usize,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub records: Vec<CycleRecord>,
    pub events: Vec<ErrorEvent>,
    pub failures: usize,
}

impl ProtocolRun {
    pub fn failure_frequency(&self) -> f64 {
        self.failures as f64 / self.records.len().max(1) as f64
    }
}

/// Expected per-cycle failure probability for shift noise on a triple.
pub fn predicted_failure_probability(rate: f64, dt: f64) -> f64 {
    crate::classical::two_of_three_failure(error_probability(rate, dt))
}

struct Code {
    data: Vec<ModeId>,
    ancillae: Vec<ModeId>,
    triple: TripleLayout,
    nine: NineLayout,
    kind: CodeKind,
}

impl Code {
    fn new(kind: CodeKind) -> Self {
        let triple = TripleLayout::standard();
        let nine = NineLayout::standard();
        let (data, ancillae) = match kind {
            CodeKind::Triple => (triple.data().to_vec(), triple.ancillae().unwrap().to_vec()),
            CodeKind::Nine => {
                let mut anc = Vec::new();
                for t in nine.triples() {
                    anc.extend_from_slice(&t.ancillae().unwrap());
                }
                anc.extend_from_slice(&nine.phase_ancillae());
                (nine.data_modes().to_vec(), anc)
            }
        };
        Self {
            data,
            ancillae,
            triple,
            nine,
            kind,
        }
    }

    fn encode(&self, psi: &PureState) -> Result<PureState> {
        match self.kind {
            CodeKind::Triple => codes::x_codeword(psi, self.triple.data()),
            CodeKind::Nine => codes::encode_nine_logical(psi, &self.nine),
        }
    }
}

/// Alternate error sampling with correction and ancilla reset, recording the
/// fidelity against the stored pre-noise codeword after every cycle.
pub fn run_protected(config: &ProtocolConfig) -> Result<ProtocolRun> {
    run_protected_with_state(config).map(|(run, _)| run)
}

/// [`run_protected`] that also returns the data state after the last cycle.
pub fn run_protected_with_state(config: &ProtocolConfig) -> Result<(ProtocolRun, PureState)> {
    config.validate()?;
    let code = Code::new(config.code);
    let psi = config.logical.prepare(&config.grid, code.data[0])?;
    let reference = code.encode(&psi)?;
    let opts = CorrectionOptions {
        comparison: config.comparison,
        check_fresh: !config.ancilla_errors,
        ..CorrectionOptions::default()
    };
    let mut rng = stream_rng(config.seed, config.trial);
    let mut state = reference.clone();
    let mut records = Vec::with_capacity(config.cycles);
    let mut events = Vec::new();
    let mut failures = 0;
    for cycle in 0..config.cycles {
        let t0 = cycle as f64 * config.dt;
        let mut hits = if cycle == 0 { config.forced.clone() } else { Vec::new() };
        hits.extend(sample_errors(&mut rng, config.rate, config.dt, t0, &code.data, &config.family, &config.grid)?);
        hits.sort_by(|a, b| a.time.total_cmp(&b.time));
        for e in &hits {
            state = apply_error(&state, e)?;
        }
        let mut errors = hits.len();
        events.extend(hits);
        if config.ancilla_errors {
            for &a in &code.ancillae {
                state = PureState::tensor(&[&state, &PureState::fresh(config.grid, a)])?;
            }
            let anc_hits = sample_errors(&mut rng, config.rate, config.dt, t0, &code.ancillae, &config.family, &config.grid)?;
            for e in &anc_hits {
                state = apply_error(&state, e)?;
            }
            errors += anc_hits.len();
            events.extend(anc_hits);
        }
        let corrected = match config.code {
            CodeKind::Triple => correct_x_triple_with(&state, &code.triple, &opts, None)?,
            CodeKind::Nine => correct_full_nine_with(&state, &code.nine, &opts, None)?,
        };
        let decoupled = corrected.report.data_decoupled;
        state = reset_ancillae(&corrected.state, &code.ancillae, &mut rng)?;
        let fidelity = state.fidelity(&reference)?;
        let failed = fidelity < 1.0 - config.failure_threshold;
        if failed {
            failures += 1;
            if config.restart_on_failure {
                state = reference.clone();
            }
        }
        records.push(CycleRecord {
            cycle,
            t: t0 + config.dt,
            fidelity,
            decoupled,
            errors,
            failed,
        });
    }
    let run = ProtocolRun {
        records,
        events,
        failures,
    };
    Ok((run, state))
}

/// Triple code against momentum kicks `L = sqrt(gamma) P` on every data mode,
/// evolved as a master equation with the correction channel applied every
/// `dt`, next to a bare mode under the same noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickConfig {
    pub grid: ModeGrid,
    pub logical: LogicalState,
    pub gamma: f64,
    pub dt: f64,
    /// RK4 steps per correction interval.
    pub substeps: usize,
    pub cycles: usize,
    #[serde(default)]
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickRun {
    pub times: Vec<f64>,
    pub protected_infidelity: Vec<f64>,
    pub unprotected_infidelity: Vec<f64>,
    /// Infidelity at the final time divided by that time.
    pub protected_rate: f64,
    pub unprotected_rate: f64,
    pub ratio: f64,
    pub truncation_estimate: f64,
}

pub fn kick_protection(cfg: &KickConfig) -> Result<KickRun> {
    if cfg.substeps == 0 || cfg.cycles == 0 {
        return Err(Error::InvalidParameter {
            name: "cycles",
            reason: "cycles and substeps must be positive",
        });
    }
    let layout = TripleLayout::standard();
    let data = layout.data();
    let psi = cfg.logical.prepare(&cfg.grid, data[0])?;
    let word = codes::x_codeword(&psi, data)?;
    let kick = PolySpec::linear_p(1.0);
    let protected_spec = LindbladSpec::uniform_jumps(&data, &kick, cfg.gamma);
    let bare_spec = LindbladSpec::uniform_jumps(&[data[0]], &kick, cfg.gamma);
    let h = cfg.dt / cfg.substeps as f64;
    let mut rho = DensityState::from_pure(&word);
    let mut bare = DensityState::from_pure(&psi);
    let mut run = KickRun {
        times: Vec::with_capacity(cfg.cycles),
        protected_infidelity: Vec::with_capacity(cfg.cycles),
        unprotected_infidelity: Vec::with_capacity(cfg.cycles),
        protected_rate: 0.0,
        unprotected_rate: 0.0,
        ratio: 0.0,
        truncation_estimate: 0.0,
    };
    for cycle in 0..cfg.cycles {
        let step = lindblad_evolve_with(&rho, &protected_spec, h, cfg.substeps, cycle == 0)?;
        run.truncation_estimate = run.truncation_estimate.max(step.truncation_estimate);
        rho = correct_x_triple_channel(&step.state, data, cfg.comparison)?.symmetrized();
        bare = lindblad_evolve_with(&bare, &bare_spec, h, cfg.substeps, false)?.state;
        run.times.push((cycle + 1) as f64 * cfg.dt);
        run.protected_infidelity.push(1.0 - rho.fidelity_with_pure(&word)?);
        run.unprotected_infidelity.push(1.0 - bare.fidelity_with_pure(&psi)?);
    }
    let t = *run.times.last().unwrap();
    run.protected_rate = run.protected_infidelity.last().unwrap() / t;
    run.unprotected_rate = run.unprotected_infidelity.last().unwrap() / t;
    run.ratio = run.protected_rate / run.unprotected_rate;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(rate: f64) -> ProtocolConfig {
        ProtocolConfig {
            code: CodeKind::Triple,
            grid: ModeGrid::new(4, 1.0).unwrap(),
            logical: LogicalState::Gaussian {
                x0: 1.0,
                p0: 0.3,
                sigma: 1.0,
            },
            rate,
            dt: 0.1,
            cycles: 200,
            family: ErrorFamily::UniformShift,
            comparison: Comparison::Exact,
            restart_on_failure: true,
            failure_threshold: 1e-6,
            ancilla_errors: false,
            seed: 42,
            trial: 0,
            forced: Vec::new(),
        }
    }

    #[test]
    fn zero_rate_keeps_fidelity() {
        let run = run_protected(&config(0.0)).unwrap();
        assert!(run.records.iter().all(|r| (r.fidelity - 1.0).abs() < 1e-10 && r.decoupled));
    }

    #[test]
    fn failures_need_two_errors() {
        let run = run_protected(&config(2.0)).unwrap();
        for r in &run.records {
            assert_eq!(r.failed, r.errors >= 2, "{r:?}");
        }
        assert_eq!(run, run_protected(&config(2.0)).unwrap());
    }

    #[test]
    fn nine_code_single_cycle() {
        let mut cfg = config(0.0);
        cfg.code = CodeKind::Nine;
        cfg.cycles = 1;
        let run = run_protected(&cfg).unwrap();
        assert!((run.records[0].fidelity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn forced_error_is_corrected_in_one_cycle() {
        let mut cfg = config(0.0);
        cfg.cycles = 2;
        cfg.forced = alloc::vec![ErrorEvent::new(0.0, ModeId(2), crate::noise::ErrorKind::Shift { s: 3 })];
        let run = run_protected(&cfg).unwrap();
        assert_eq!(run.records[0].errors, 1);
        assert!(run.records.iter().all(|r| (r.fidelity - 1.0).abs() < 1e-10));
    }
}
