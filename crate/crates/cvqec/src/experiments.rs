//! Execution of each experiment kind. Nothing here touches the filesystem.

use cvqec_core::classical::{simulate_trial, two_of_three_failure, ResidualConfig, ResidualEstimate, RoundCounts};
use cvqec_core::codes::{x_codeword, TripleLayout};
use cvqec_core::correction::{correct_x_triple_with, CorrectionOptions};
use cvqec_core::noise::{apply_error, error_probability, trajectory_evolve, ErrorEvent, ErrorFamily, LindbladSpec};
use cvqec_core::operators::PolySpec;
use cvqec_core::protocol::{kick_protection, run_protected, run_protected_with_state, KickConfig, ProtocolConfig};
use cvqec_core::rng::stream_rng;
use cvqec_core::state::ModeId;
use cvqec_core::{DensityState, PureState};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Channel, Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{num, Table, ANCILLA, CLASSICAL, DEPHASING, EVENTS, FIDELITY, KICKS, STATE, SWEEP};

/// Tables and summary of one run, fully aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub experiment: Experiment,
    pub tables: Vec<Table>,
    /// Extra non-tabular files, such as the state dump.
    pub files: Vec<(&'static str, String)>,
    pub summary: Value,
}

impl Outcome {
    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.schema.file == file)
    }
}

/// Validate, check capacity, then run.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let diags = cfg.validate();
    if diags.iter().any(|d| d.is_error()) {
        return Err(CliError::Validation(diags));
    }
    cfg.check_capacity()?;
    let mut out = match cfg.experiment {
        Experiment::SingleShot => single_shot(cfg),
        Experiment::Sweep => sweep(cfg),
        Experiment::Lindblad => match cfg.noise.channel {
            Channel::XDephasing => dephasing(cfg),
            Channel::PKick => kicks(cfg),
        },
        Experiment::Classical => classical(cfg),
        Experiment::AncillaIndependence => ancilla_independence(cfg),
    }?;
    if let Value::Object(map) = &mut out.summary {
        map.insert("experiment".into(), json!(cfg.experiment.name()));
        map.insert("seed".into(), json!(cfg.seed));
        map.insert("schema_version".into(), json!(crate::output::SCHEMA_VERSION));
        let warnings: Vec<String> = diags.iter().map(ToString::to_string).collect();
        map.insert("warnings".into(), json!(warnings));
    }
    Ok(out)
}

fn protocol(cfg: &ExperimentConfig, rate: f64, seed: u64, trial: u64) -> ProtocolConfig {
    ProtocolConfig {
        code: cfg.code,
        grid: cfg.mode_grid(),
        logical: cfg.logical.clone(),
        rate,
        dt: cfg.schedule.dt,
        cycles: cfg.cycles(),
        family: cfg.noise.errors.clone(),
        comparison: cfg.comparison,
        restart_on_failure: cfg.experiment == Experiment::Sweep,
        failure_threshold: 1e-6,
        ancilla_errors: cfg.noise.ancilla_errors,
        seed,
        trial,
        forced: cfg.noise.forced.clone(),
    }
}

fn single_shot(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let pc = protocol(cfg, cfg.schedule.rate, cfg.seed, 0);
    let (run, last) = run_protected_with_state(&pc)?;
    let mut fid = Table::new(FIDELITY);
    for r in &run.records {
        fid.push(vec![r.cycle.to_string(), num(r.t), num(r.fidelity), u8::from(r.decoupled).to_string()]);
    }
    let mut events = Table::new(EVENTS);
    for e in &run.events {
        events.push(event_row(e));
    }
    let files = if cfg.dump_state {
        vec![(STATE.file, crate::output::state_dump(&last))]
    } else {
        Vec::new()
    };
    let min = run.records.iter().map(|r| r.fidelity).fold(1.0, f64::min);
    Ok(Outcome {
        experiment: cfg.experiment,
        tables: vec![fid, events],
        files,
        summary: json!({
            "cycles": run.records.len(),
            "errors": run.events.len(),
            "failures": run.failures,
            "final_fidelity": run.records.last().map(|r| r.fidelity),
            "min_fidelity": min,
        }),
    })
}

fn event_row(e: &ErrorEvent) -> Vec<String> {
    vec![num(e.time), e.mode.0.to_string(), e.kind.name().to_string(), e.kind.param()]
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let dt = cfg.schedule.dt;
    let trials = cfg.schedule.trials as u64;
    let jobs: Vec<(usize, u64)> = (0..cfg.schedule.rate_dts.len()).flat_map(|r| (0..trials).map(move |t| (r, t))).collect();
    let runs: Vec<(usize, usize, usize)> = jobs
        .par_iter()
        .map(|&(r, t)| {
            let rate = cfg.schedule.rate_dts[r] / dt;
            let run = run_protected(&protocol(cfg, rate, cfg.seed.wrapping_add(r as u64), t))?;
            Ok((r, run.records.len(), run.failures))
        })
        .collect::<Result<_, cvqec_core::Error>>()?;
    let mut table = Table::new(SWEEP);
    let mut rows = Vec::new();
    for (r, &ldt) in cfg.schedule.rate_dts.iter().enumerate() {
        let (cycles, failures) = runs.iter().filter(|x| x.0 == r).fold((0, 0), |a, x| (a.0 + x.1, a.1 + x.2));
        let lambda = ldt / dt;
        let freq = failures as f64 / cycles.max(1) as f64;
        let exact = two_of_three_failure(error_probability(lambda, dt));
        let sigma = (exact * (1.0 - exact) / cycles.max(1) as f64).sqrt();
        let z = if sigma > 0.0 { (freq - exact) / sigma } else { 0.0 };
        let measured = freq / dt;
        let predicted = 3.0 * lambda * lambda * dt;
        let ratio = measured / predicted;
        table.push(vec![
            num(lambda),
            num(dt),
            cycles.to_string(),
            failures.to_string(),
            num(freq),
            num(exact),
            num(z),
            num(measured),
            num(predicted),
            num(ratio),
        ]);
        rows.push(json!({"lambda_dt": ldt, "cycles": cycles, "failures": failures, "z_score": z, "ratio": ratio}));
    }
    Ok(Outcome {
        experiment: cfg.experiment,
        tables: vec![table],
        files: Vec::new(),
        summary: json!({ "rows": rows }),
    })
}

fn dephasing(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = cfg.mode_grid();
    let gamma = cfg.noise.gamma;
    let psi = cfg.logical.prepare(&grid, ModeId(0))?;
    let spec = LindbladSpec::uniform_jumps(&[ModeId(0)], &PolySpec::linear_x(1.0), gamma);
    let steps = cfg.cycles() * cfg.noise.substeps;
    let h = cfg.schedule.duration / steps as f64;
    let rho0 = DensityState::from_pure(&psi);
    let dense = cvqec_core::noise::lindblad_evolve(&rho0, &spec, h, steps)?;
    let t = h * steps as f64;
    let n = grid.n_points();
    let mut table = Table::new(DEPHASING);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let init = rho0.element(j, k).norm();
            if init < 1e-8 {
                continue;
            }
            let measured = dense.state.element(j, k).norm() / init;
            let dx = grid.position(j) - grid.position(k);
            let closed = (-gamma * dx * dx * t / 2.0).exp();
            let rel = (measured - closed).abs() / closed;
            if closed > 1e-6 {
                worst = worst.max(rel);
            }
            table.push(vec![j.to_string(), k.to_string(), num(measured), num(closed), num(rel)]);
        }
    }
    let trials = cfg.schedule.trials as u64;
    let finals: Vec<PureState> = (0..trials)
        .into_par_iter()
        .map(|i| trajectory_evolve(&psi, &spec, h, steps, &mut stream_rng(cfg.seed, i)))
        .collect::<Result<_, _>>()?;
    let ensemble = ensemble_average(&finals)?;
    let distance = ensemble.trace_distance(&dense.state)?;
    Ok(Outcome {
        experiment: cfg.experiment,
        tables: vec![table],
        files: Vec::new(),
        summary: json!({
            "gamma_t": gamma * t,
            "max_rel_error": worst,
            "trajectories": trials,
            "trace_distance": distance,
            "truncation_estimate": dense.truncation_estimate,
        }),
    })
}

/// Mean of `|psi><psi|` over trajectories, summed in order.
pub fn ensemble_average(states: &[PureState]) -> Result<DensityState, cvqec_core::Error> {
    let first = states.first().ok_or(cvqec_core::Error::EmptySubset)?;
    let d = first.dim();
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for s in states {
        let a = s.amplitudes();
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] += a[i] * a[j].conj();
            }
        }
    }
    let w = 1.0 / states.len() as f64;
    m.iter_mut().for_each(|z| *z *= w);
    DensityState::from_matrix(*first.grid(), first.labels().to_vec(), m)
}

fn kicks(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let kc = KickConfig {
        grid: cfg.mode_grid(),
        logical: cfg.logical.clone(),
        gamma: cfg.noise.gamma,
        dt: cfg.schedule.dt,
        substeps: cfg.noise.substeps,
        cycles: cfg.cycles(),
        comparison: cfg.comparison,
    };
    let run = kick_protection(&kc)?;
    let mut table = Table::new(KICKS);
    for i in 0..run.times.len() {
        table.push(vec![num(run.times[i]), num(run.protected_infidelity[i]), num(run.unprotected_infidelity[i])]);
    }
    Ok(Outcome {
        experiment: cfg.experiment,
        tables: vec![table],
        files: Vec::new(),
        summary: json!({
            "gamma_dt": kc.gamma * kc.dt,
            "protected_rate": run.protected_rate,
            "unprotected_rate": run.unprotected_rate,
            "ratio": run.ratio,
            "truncation_estimate": run.truncation_estimate,
        }),
    })
}

/// Classical residual rates for every `lambda * dt`; row `r` uses seed
/// `seed + r` and trial `i` its own stream.
pub fn classical_estimates(cfg: &ExperimentConfig) -> Result<Vec<ResidualEstimate>, CliError> {
    let dt = cfg.schedule.dt;
    let span = cfg.grid.n_points as f64 * cfg.grid.spacing;
    cfg.schedule
        .rate_dts
        .iter()
        .enumerate()
        .map(|(r, &ldt)| {
            let rc = ResidualConfig {
                rate: ldt / dt,
                dt,
                duration: cfg.schedule.duration,
                span,
            };
            rc.validate()?;
            let seed = cfg.seed.wrapping_add(r as u64);
            let counts = (0..cfg.schedule.trials as u64)
                .into_par_iter()
                .map(|i| simulate_trial(&rc, &mut stream_rng(seed, i)))
                .collect::<Vec<_>>()
                .into_iter()
                .fold(RoundCounts::default(), RoundCounts::merge);
            Ok(ResidualEstimate::from_counts(&rc, counts))
        })
        .collect()
}

fn classical(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let estimates = classical_estimates(cfg)?;
    let mut table = Table::new(CLASSICAL);
    let mut rows = Vec::new();
    for e in &estimates {
        table.push(vec![num(e.rate), num(e.dt), num(e.measured_rate), num(e.predicted_rate), num(e.ratio)]);
        rows.push(json!({
            "lambda_dt": e.rate * e.dt,
            "rounds": e.rounds,
            "failures": e.failures,
            "failure_probability": e.failure_probability,
            "exact_probability": e.exact_probability,
            "z_score": e.z_score(),
            "ratio": e.ratio,
        }));
    }
    Ok(Outcome {
        experiment: cfg.experiment,
        tables: vec![table],
        files: Vec::new(),
        summary: json!({ "rows": rows }),
    })
}

fn ancilla_independence(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = cfg.mode_grid();
    let layout = TripleLayout::standard();
    let anc = layout.require_ancillae()?;
    let mut errors = cfg.noise.forced.clone();
    if let ErrorFamily::Fixed { error } = &cfg.noise.errors {
        if errors.is_empty() {
            errors.push(ErrorEvent::new(0.0, layout.data()[0], error.clone()));
        }
    }
    let opts = CorrectionOptions {
        comparison: cfg.comparison,
        release_ancillae: false,
        ..CorrectionOptions::default()
    };
    let mut table = Table::new(ANCILLA);
    let mut reduced = Vec::new();
    let mut fidelities = Vec::new();
    for (i, input) in cfg.independence_inputs().iter().enumerate() {
        let psi = input.prepare(&grid, layout.data()[0])?;
        let word = x_codeword(&psi, layout.data())?;
        let mut state = word.clone();
        for e in &errors {
            state = apply_error(&state, e)?;
        }
        let fixed = correct_x_triple_with(&state, &layout, &opts, Some(&word))?;
        for s in &fixed.report.syndromes {
            table.push(vec![i.to_string(), s.mode.0.to_string(), num(s.mean_position), num(s.mean_momentum), num(s.purity)]);
        }
        fidelities.push(fixed.report.post_fidelity.unwrap_or(f64::NAN));
        reduced.push(fixed.state.reduced_density(&anc)?);
    }
    let inputs: Vec<PureState> = cfg
        .independence_inputs()
        .iter()
        .map(|s| s.prepare(&grid, ModeId(0)))
        .collect::<Result<_, _>>()?;
    let overlap = inputs[0].fidelity(&inputs[1])?;
    let distance = reduced[0].trace_distance(&reduced[1])?;
    Ok(Outcome {
        experiment: cfg.experiment,
        tables: vec![table],
        files: Vec::new(),
        summary: json!({
            "input_overlap": overlap,
            "post_fidelity": fidelities,
            "trace_distance": distance,
        }),
    })
}
