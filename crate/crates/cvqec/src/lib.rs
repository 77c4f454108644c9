//! Configuration, experiment runner and file formats around `cvqec-core`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Diagnostic, Experiment, ExperimentConfig, Level};
pub use error::CliError;
pub use experiments::{execute, Outcome};

/// Environment variable naming the output directory when neither the flag
/// nor the config gives one.
pub const OUTPUT_DIR_ENV: &str = "CVQEC_OUTPUT_DIR";

/// Explicit flag first, then the config, then the environment, then `./cvqec-out`.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>, env: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cvqec-out"))
}

/// Run and write every table, extra file and `summary.json` into `dir`.
/// Returns the paths written, in order.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let outcome = execute(cfg)?;
    let mut written = Vec::new();
    for t in &outcome.tables {
        written.push(output::write_file(dir, t.schema.file, &t.to_csv(outcome.experiment))?);
    }
    for (name, body) in &outcome.files {
        written.push(output::write_file(dir, name, body)?);
    }
    let mut summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    summary.push('\n');
    written.push(output::write_file(dir, "summary.json", &summary)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_dir_precedence() {
        let mut cfg = ExperimentConfig::from_json(r#"{"experiment": "classical", "grid": {"n_points": 4, "spacing": 1.0}}"#).unwrap();
        assert_eq!(output_dir(&cfg, None, None), PathBuf::from("cvqec-out"));
        assert_eq!(output_dir(&cfg, None, Some("/e")), PathBuf::from("/e"));
        cfg.output = Some("/c".into());
        assert_eq!(output_dir(&cfg, None, Some("/e")), PathBuf::from("/c"));
        assert_eq!(output_dir(&cfg, Some(Path::new("/f")), Some("/e")), PathBuf::from("/f"));
    }
}
