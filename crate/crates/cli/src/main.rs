use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetnet_imc_cli::config::{Engine, ScenarioConfig};
use hetnet_imc_cli::dump::dump_realization;
use hetnet_imc_cli::{load_config, run_sweep, write_csv, CliError, SweepResult};

#[derive(Parser)]
#[command(name = "hetnet-imc", version, about = "Idle-mode HetNet analysis and simulation sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical engines only (analysis and, if listed, baseline).
    Analyze(Common),
    /// Monte Carlo engine only.
    Simulate(Common),
    /// Analysis, simulation and the fully loaded baseline, with agreement checks.
    Compare(Common),
    /// Writes one sampled deployment as text.
    Dump(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; defaults to the config's [output] path, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn report(result: &SweepResult, quiet: bool) {
    if quiet {
        return;
    }
    for a in &result.agreement {
        eprintln!(
            "agreement value={} metric={} tier={} analysis={:.6} sim={:.6} gap={:+.6} bound={} {}",
            a.value,
            a.metric,
            a.tier,
            a.analysis,
            a.sim,
            a.gap(),
            a.bound,
            if a.holds() { "ok" } else { "EXCEEDED" }
        );
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (common, engines): (Common, Option<fn(&ScenarioConfig) -> Vec<Engine>>) = match command {
        Command::Analyze(c) => (
            c,
            Some(|cfg| {
                let e: Vec<Engine> = cfg.engines.iter().copied().filter(|&e| e != Engine::Sim).collect();
                if e.is_empty() {
                    vec![Engine::Analysis]
                } else {
                    e
                }
            }),
        ),
        Command::Simulate(c) => (c, Some(|_| vec![Engine::Sim])),
        Command::Compare(c) => (c, Some(|_| vec![Engine::Analysis, Engine::Sim, Engine::Baseline])),
        Command::Dump(c) => (c, None),
    };
    let mut config = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.sim.seed = seed;
    }
    if !common.quiet {
        for w in config.sim.warnings(&config.network) {
            eprintln!("warning: {w}");
        }
    }
    let pool = match common.workers {
        Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?,
        ),
        None => None,
    };
    let run = || -> Result<(), CliError> {
        let Some(select) = engines else {
            let path = common.out.clone().unwrap_or_else(|| PathBuf::from("realization.txt"));
            let mut out = open_output(Some(&path))?;
            dump_realization(&config, config.sim.seed, &mut out)?;
            return out.flush().map_err(|e| CliError::io(path.display().to_string(), e));
        };
        let mut config = config.clone();
        config.engines = select(&config);
        let result = run_sweep(&config)?;
        let path = common.out.clone().or_else(|| config.output.clone());
        let mut out = open_output(path.as_deref())?;
        let target = path.as_ref().map_or("stdout".to_string(), |p| p.display().to_string());
        write_csv(&result.rows, &mut out).map_err(|e| CliError::io(target.clone(), e.into()))?;
        out.flush().map_err(|e| CliError::io(target, e))?;
        report(&result, common.quiet);
        if result.failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::Numerical(result.failures.join("; ")))
        }
    };
    match pool {
        Some(p) => p.install(run),
        None => run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetnet-imc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
