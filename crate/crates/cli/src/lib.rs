//! Scenario files, sweeps and CSV output for the `hetnet-imc` command.

pub mod config;
pub mod dump;
pub mod error;
pub mod sweep;

pub use config::{parse_config, Engine, Metric, ScenarioConfig};
pub use error::CliError;
pub use sweep::{read_csv, run_sweep, write_csv, Row, SweepResult};

/// Reads and parses a scenario file.
pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(parse_config(&text)?)
}
