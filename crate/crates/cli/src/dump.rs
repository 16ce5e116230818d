//! Single-realisation dumps for plotting a deployment.

use std::io::Write;

use hetnet_imc::sim::sample_deployment;

use crate::config::ScenarioConfig;
use crate::error::CliError;

/// Samples trial 0 of the scenario's base network with `seed` and writes it
/// in the line format of [`hetnet_imc::sim::Deployment::write_dump`].
pub fn dump_realization<W: Write>(config: &ScenarioConfig, seed: u64, out: W) -> Result<(), CliError> {
    let sim = hetnet_imc::sim::SimConfig {
        seed,
        ..config.sim.clone()
    };
    let (dep, _) = sample_deployment(&config.network, &sim, 0)?;
    dep.write_dump(out).map_err(|e| CliError::io("dump output", e))
}
