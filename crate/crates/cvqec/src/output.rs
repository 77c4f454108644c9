//! Versioned CSV tables, the JSON summary and state dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cvqec_core::state::ModeId;
use cvqec_core::{ModeGrid, PureState};
use num_complex::Complex64;

use crate::config::Experiment;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One output file: name and column list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSchema {
    pub file: &'static str,
    pub columns: &'static [&'static str],
    pub about: &'static str,
}

pub const FIDELITY: TableSchema = TableSchema {
    file: "fidelity.csv",
    columns: &["cycle", "t", "fidelity", "decoupled"],
    about: "fidelity with the stored codeword after each correction cycle",
};
pub const EVENTS: TableSchema = TableSchema {
    file: "events.csv",
    columns: &["t", "mode", "kind", "param"],
    about: "every injected error; param of polynomial kinds is `m:n:re:im` terms joined by `;`",
};
pub const STATE: TableSchema = TableSchema {
    file: "state.csv",
    columns: &["j1..jM", "re", "im"],
    about: "final state dump, one amplitude per line (only with dump_state)",
};
pub const SWEEP: TableSchema = TableSchema {
    file: "sweep.csv",
    columns: &[
        "lambda",
        "dt",
        "cycles",
        "failures",
        "failure_frequency",
        "exact_probability",
        "z_score",
        "measured_rate",
        "predicted_rate",
        "ratio",
    ],
    about: "per-cycle logical failure frequency against 3p^2(1-p)+p^3 and the 3 lambda^2 dt rate",
};
pub const DEPHASING: TableSchema = TableSchema {
    file: "dephasing.csv",
    columns: &["j", "k", "measured", "closed_form", "rel_error"],
    about: "|rho_jk(T)/rho_jk(0)| against exp(-gamma (x_j-x_k)^2 T/2) for every resolvable pair",
};
pub const KICKS: TableSchema = TableSchema {
    file: "kicks.csv",
    columns: &["t", "protected_infidelity", "unprotected_infidelity"],
    about: "corrected triple against a bare mode under momentum kicks",
};
pub const CLASSICAL: TableSchema = TableSchema {
    file: "classical.csv",
    columns: &["lambda", "dt", "measured_rate", "predicted_rate", "ratio"],
    about: "classical triple-redundancy residual rate against 3 lambda^2 dt",
};
pub const ANCILLA: TableSchema = TableSchema {
    file: "ancilla.csv",
    columns: &["input", "mode", "mean_position", "mean_momentum", "purity"],
    about: "ancilla syndromes after correcting the same error on each input",
};

pub fn schemas(experiment: Experiment) -> &'static [TableSchema] {
    match experiment {
        Experiment::SingleShot => &[FIDELITY, EVENTS, STATE],
        Experiment::Sweep => &[SWEEP],
        Experiment::Lindblad => &[DEPHASING, KICKS],
        Experiment::Classical => &[CLASSICAL],
        Experiment::AncillaIndependence => &[ANCILLA],
    }
}

/// Text of the `schema` subcommand.
pub fn describe(experiments: &[Experiment]) -> String {
    let mut s = String::new();
    writeln!(s, "schema_version {SCHEMA_VERSION}").unwrap();
    writeln!(s, "every CSV starts with `#schema_version={SCHEMA_VERSION} experiment=<name>`; summary.json sits next to it").unwrap();
    for &e in experiments {
        writeln!(s, "\n[{e}]").unwrap();
        for t in schemas(e) {
            writeln!(s, "  {}: {}", t.file, t.columns.join(",")).unwrap();
            writeln!(s, "    {}", t.about).unwrap();
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: TableSchema,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: TableSchema) -> Self {
        Self { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.schema.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, experiment: Experiment) -> String {
        let mut s = format!("#schema_version={SCHEMA_VERSION} experiment={experiment}\n");
        s.push_str(&self.schema.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Parse one numeric column back out; for tests and the acceptance run.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.schema.columns.iter().position(|c| *c == name).expect("unknown column");
        self.rows.iter().map(|r| r[i].parse().expect("numeric column")).collect()
    }
}

/// Float formatting used in every table: twelve significant digits, shortest form.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(CliError::io(&path))?;
    Ok(path)
}

/// Versioned state dump: a schema comment, the mode labels, then one
/// `j1,...,jM,re,im` line per amplitude.
pub fn state_dump(state: &PureState) -> String {
    let g = state.grid();
    let labels: Vec<String> = state.labels().iter().map(|m| m.0.to_string()).collect();
    format!(
        "#schema_version={SCHEMA_VERSION} n_points={} spacing={}\n#modes={}\n{}",
        g.n_points(),
        g.spacing(),
        labels.join(","),
        state.dump()
    )
}

/// Inverse of [`state_dump`]; also accepts bare dumps given the grid and labels.
pub fn read_state_dump(text: &str, grid: Option<ModeGrid>, labels: Option<Vec<ModeId>>) -> Result<PureState, String> {
    let (mut grid, mut labels) = (grid, labels);
    let mut entries: Vec<(Vec<usize>, Complex64)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("n_points", v)) => {
                        let n = v.parse().map_err(|_| format!("line {}: bad n_points", no + 1))?;
                        let spacing = meta
                            .split_whitespace()
                            .find_map(|kv| kv.strip_prefix("spacing="))
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| format!("line {}: missing spacing", no + 1))?;
                        grid = Some(ModeGrid::new(n, spacing).map_err(|e| e.to_string())?);
                    }
                    Some(("modes", v)) => {
                        let ids: Result<Vec<ModeId>, _> = v.split(',').map(|m| m.parse().map(ModeId)).collect();
                        labels = Some(ids.map_err(|_| format!("line {}: bad mode list", no + 1))?);
                    }
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(format!("line {}: expected j1,...,jM,re,im", no + 1));
        }
        let (idx, amp) = fields.split_at(fields.len() - 2);
        let idx: Result<Vec<usize>, _> = idx.iter().map(|v| v.parse()).collect();
        let idx = idx.map_err(|_| format!("line {}: bad index", no + 1))?;
        let re: f64 = amp[0].parse().map_err(|_| format!("line {}: bad real part", no + 1))?;
        let im: f64 = amp[1].parse().map_err(|_| format!("line {}: bad imaginary part", no + 1))?;
        entries.push((idx, Complex64::new(re, im)));
    }
    let grid = grid.ok_or("grid unknown: no header and none given")?;
    let m = entries.first().map(|e| e.0.len()).ok_or("no amplitudes")?;
    let labels = labels.unwrap_or_else(|| (0..m as u16).map(ModeId).collect());
    if labels.len() != m {
        return Err(format!("{} labels for {m} index columns", labels.len()));
    }
    let n = grid.n_points();
    let dim = n.checked_pow(m as u32).ok_or("dimension overflow")?;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (idx, a) in entries {
        if idx.len() != m || idx.iter().any(|&j| j >= n) {
            return Err(format!("index {idx:?} does not fit {m} modes of {n} points"));
        }
        let flat = idx.iter().fold(0, |acc, &j| acc * n + j);
        amps[flat] = a;
    }
    PureState::new(grid, labels, amps).map_err(|e| e.to_string())
}
