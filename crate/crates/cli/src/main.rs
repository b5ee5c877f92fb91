use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavefront_core::harness::{run_experiment, Experiment, ScenarioConfig};
use wavefront_core::{Architecture, Error};

#[derive(Parser)]
#[command(
    name = "wavefront",
    version,
    about = "Near-field localization and interference experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fraunhofer distance against carrier and aperture diameter.
    Fraunhofer(Common),
    /// RMSE against source distance.
    RmseSweep(Common),
    /// RMSE for a source at every room cell.
    RmseMap(Common),
    /// SIR against the interferer distance offset, with closed forms.
    SirSweep(Common),
    /// SIR for one interferer placed at every room cell.
    SirMap(Common),
    /// Coverage rate with Poisson-distributed interferers.
    CoveragePpp(Common),
    /// Per-antenna response of each front-end.
    DumpResponse(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated architectures (r-lens, nr-lens, no-lens).
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<String>>,
    /// Surface quadrature panel width as a fraction of the wavelength.
    #[arg(long)]
    quadrature_step: Option<f64>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Fraunhofer(c) => (Experiment::Fraunhofer, c),
            Command::RmseSweep(c) => (Experiment::RmseSweep, c),
            Command::RmseMap(c) => (Experiment::RmseMap, c),
            Command::SirSweep(c) => (Experiment::SirSweep, c),
            Command::SirMap(c) => (Experiment::SirMap, c),
            Command::CoveragePpp(c) => (Experiment::CoveragePpp, c),
            Command::DumpResponse(c) => (Experiment::DumpResponse, c),
        }
    }
}

fn build_config(c: Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &c.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = c.out {
        cfg.output_dir = out;
    }
    if let Some(list) = c.arch {
        cfg.architectures = list
            .iter()
            .map(|s| s.parse::<Architecture>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(step) = c.quadrature_step {
        cfg.quadrature_step_lambda = step;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (exp, common) = cli.command.split();
    let result = build_config(common).and_then(|cfg| run_experiment(&cfg, exp));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
