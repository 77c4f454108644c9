//! Experiment configuration and its validation.

use std::fmt;
use std::path::PathBuf;

use cvqec_core::noise::{ErrorEvent, ErrorFamily};
use cvqec_core::operators::Comparison;
use cvqec_core::protocol::{CodeKind, LogicalState};
use cvqec_core::state::{check_capacity, DEFAULT_MEMORY_BUDGET};
use cvqec_core::ModeGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SingleShot,
    Sweep,
    Lindblad,
    Classical,
    AncillaIndependence,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::SingleShot,
        Experiment::Sweep,
        Experiment::Lindblad,
        Experiment::Classical,
        Experiment::AncillaIndependence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SingleShot => "single_shot",
            Experiment::Sweep => "sweep",
            Experiment::Lindblad => "lindblad",
            Experiment::Classical => "classical",
            Experiment::AncillaIndependence => "ancilla_independence",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unvalidated grid parameters, so that a bad grid becomes a diagnostic
/// rather than a parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub spacing: f64,
}

/// Master-equation noise channel of the `lindblad` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `L = sqrt(gamma) X` on one bare mode, dense against trajectories.
    #[default]
    XDephasing,
    /// `L = sqrt(gamma) P` on each data mode of the corrected triple and on a bare mode.
    PKick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub errors: ErrorFamily,
    pub ancilla_errors: bool,
    /// Applied before the first correction.
    pub forced: Vec<ErrorEvent>,
    pub channel: Channel,
    pub gamma: f64,
    /// Integrator steps per `dt` in the `lindblad` experiment.
    pub substeps: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            errors: ErrorFamily::UniformShift,
            ancilla_errors: false,
            forced: Vec::new(),
            channel: Channel::XDephasing,
            gamma: 0.0,
            substeps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Error rate per mode per unit time.
    pub rate: f64,
    pub dt: f64,
    pub duration: f64,
    pub trials: usize,
    /// `lambda * dt` values of the `sweep` and `classical` experiments.
    pub rate_dts: Vec<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            rate: 0.0,
            dt: 0.1,
            duration: 1.0,
            trials: 1,
            rate_dts: vec![0.005, 0.01, 0.02],
        }
    }
}

impl Schedule {
    pub fn cycles(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: GridConfig,
    #[serde(default)]
    pub code: CodeKind,
    #[serde(default)]
    pub logical: LogicalState,
    /// The two inputs of `ancilla_independence`; defaults to `|x_0>` and `|x_{N/2}>`.
    #[serde(default)]
    pub inputs: Option<[LogicalState; 2]>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub comparison: Comparison,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Bytes a single state vector may occupy.
    #[serde(default = "default_budget")]
    pub memory_budget: u64,
    /// Also write the final state of `single_shot` as `state.csv`.
    #[serde(default)]
    pub dump_state: bool,
}

fn default_budget() -> u64 {
    DEFAULT_MEMORY_BUDGET as u64
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Only meaningful once the grid fields have passed validation.
    pub fn mode_grid(&self) -> ModeGrid {
        ModeGrid::new(self.grid.n_points, self.grid.spacing).expect("grid was validated")
    }

    pub fn cycles(&self) -> usize {
        self.schedule.cycles()
    }

    /// Largest number of modes any state of this experiment holds at once.
    pub fn peak_modes(&self) -> usize {
        match (self.experiment, self.code) {
            (Experiment::Classical, _) => 0,
            (Experiment::Lindblad, _) => match self.noise.channel {
                Channel::XDephasing => 2,
                Channel::PKick => 6,
            },
            (_, CodeKind::Triple) => 6,
            (_, CodeKind::Nine) => 12,
        }
    }

    /// Errors and warnings; the run accepts the config iff no error is present.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = Diagnostics::default();
        let g = &self.grid;
        if g.n_points < 2 {
            d.error("grid.n_points", "must be at least 2");
        }
        if !(g.spacing > 0.0 && g.spacing.is_finite()) {
            d.error("grid.spacing", "must be finite and positive");
        }
        let grid_ok = !d.has_errors();
        self.validate_schedule(&mut d);
        self.validate_noise(&mut d);
        if let Comparison::Bucket { width } | Comparison::Window { width } = self.comparison {
            if width == 0 {
                d.error("comparison.width", "must be positive");
            }
        }
        if grid_ok {
            let grid = self.mode_grid();
            if self.uses_logical() {
                check_logical(&mut d, "logical", &self.logical, &grid);
            }
            if self.experiment == Experiment::AncillaIndependence {
                for (i, s) in self.independence_inputs().iter().enumerate() {
                    check_logical(&mut d, if i == 0 { "inputs[0]" } else { "inputs[1]" }, s, &grid);
                }
            }
            let fixed = match &self.noise.errors {
                ErrorFamily::Fixed { error } => Some(error),
                ErrorFamily::UniformShift => None,
            };
            for kind in self.noise.forced.iter().map(|e| &e.kind).chain(fixed) {
                if let Err(err) = kind.operator(&grid) {
                    d.error("noise", format!("{} error: {err}", kind.name()));
                }
            }
        }
        d.items
    }

    /// `Err` with exit code 3 when a state would not fit the memory budget.
    pub fn check_capacity(&self) -> Result<(), CliError> {
        let modes = self.peak_modes();
        if modes > 0 {
            check_capacity(self.grid.n_points, modes, self.memory_budget as u128)?;
        }
        Ok(())
    }

    pub fn independence_inputs(&self) -> [LogicalState; 2] {
        self.inputs.clone().unwrap_or([
            LogicalState::Position { index: 0 },
            LogicalState::Position {
                index: self.grid.n_points / 2,
            },
        ])
    }

    fn uses_logical(&self) -> bool {
        !matches!(self.experiment, Experiment::Classical | Experiment::AncillaIndependence)
    }

    fn validate_schedule(&self, d: &mut Diagnostics) {
        let s = &self.schedule;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            d.error("schedule.dt", "must be finite and positive");
        }
        if !(s.rate >= 0.0 && s.rate.is_finite()) {
            d.error("schedule.rate", "must be finite and nonnegative");
        }
        if s.trials == 0 {
            d.error("schedule.trials", "must be at least 1");
        }
        let timed = self.experiment != Experiment::AncillaIndependence;
        if timed && !(s.duration > 0.0 && s.duration.is_finite()) {
            d.error("schedule.duration", "must be finite and positive");
        } else if timed && s.dt > 0.0 {
            let ratio = s.duration / s.dt;
            if ratio.round() < 1.0 {
                d.error("schedule.duration", "must cover at least one interval dt");
            } else if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                d.warning("schedule.duration", format!("not a multiple of dt; running {} intervals", ratio.round()));
            }
        }
        if matches!(self.experiment, Experiment::Sweep | Experiment::Classical) {
            if s.rate_dts.is_empty() {
                d.error("schedule.rate_dts", "needs at least one value");
            }
            if s.rate_dts.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                d.error("schedule.rate_dts", "values must be finite and positive");
            }
        }
    }

    fn validate_noise(&self, d: &mut Diagnostics) {
        let n = &self.noise;
        if !(n.gamma >= 0.0 && n.gamma.is_finite()) {
            d.error("noise.gamma", "must be finite and nonnegative");
        }
        if n.substeps == 0 {
            d.error("noise.substeps", "must be at least 1");
        }
        if n.ancilla_errors && self.code == CodeKind::Nine {
            d.error("noise.ancilla_errors", "supported for the triple code only");
        }
        let data_modes = match self.code {
            CodeKind::Triple => 3,
            CodeKind::Nine => 9,
        };
        if n.forced.iter().any(|e| e.mode.0 as usize >= data_modes) {
            d.error("noise.forced", format!("error targets a mode outside the {data_modes} data modes"));
        }
        if n.forced.iter().any(|e| !e.time.is_finite()) {
            d.error("noise.forced", "event times must be finite");
        }
        match self.experiment {
            Experiment::Lindblad => {
                if n.channel == Channel::PKick && self.code == CodeKind::Nine {
                    d.error("code", "momentum-kick runs use the triple code");
                }
                if n.gamma == 0.0 {
                    d.warning("noise.gamma", "zero; the state does not evolve");
                }
            }
            Experiment::AncillaIndependence => {
                if self.code == CodeKind::Nine {
                    d.error("code", "ancilla_independence uses the triple code");
                }
                if n.forced.is_empty() && !matches!(n.errors, ErrorFamily::Fixed { .. }) {
                    d.error("noise", "needs `forced` events or a `fixed` error family");
                }
            }
            _ => {}
        }
    }
}

fn check_logical(d: &mut Diagnostics, field: &'static str, s: &LogicalState, grid: &ModeGrid) {
    let n = grid.n_points();
    match s {
        LogicalState::Gaussian { x0, p0, sigma } => {
            if !(x0.is_finite() && p0.is_finite()) {
                d.error(field, "x0 and p0 must be finite");
            }
            if !(*sigma > 0.0 && sigma.is_finite()) {
                d.error(field, "sigma must be finite and positive");
            } else if *sigma < grid.spacing() {
                d.warning(field, "sigma is below the grid spacing; the Gaussian is not resolved");
            }
        }
        LogicalState::Position { index } | LogicalState::Momentum { index } => {
            if *index >= n {
                d.error(field, format!("index {index} outside the {n}-point grid"));
            }
        }
        LogicalState::Amplitudes { re, im } => {
            if re.len() != n || im.len() != n {
                d.error(field, format!("needs {n} real and {n} imaginary parts"));
            } else if re.iter().chain(im).all(|v| *v == 0.0) {
                d.error(field, "amplitudes are all zero");
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub field: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.level == Level::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Error => "error",
            Level::Warning => "warning",
        };
        write!(f, "{level}: {}: {}", self.field, self.message)
    }
}

#[derive(Default)]
struct Diagnostics {
    items: Vec<Diagnostic>,
}

impl Diagnostics {
    fn push(&mut self, level: Level, field: &'static str, message: impl Into<String>) {
        self.items.push(Diagnostic {
            level,
            field,
            message: message.into(),
        });
    }

    fn error(&mut self, field: &'static str, message: impl Into<String>) {
        self.push(Level::Error, field, message);
    }

    fn warning(&mut self, field: &'static str, message: impl Into<String>) {
        self.push(Level::Warning, field, message);
    }

    fn has_errors(&self) -> bool {
        self.items.iter().any(Diagnostic::is_error)
    }
}
