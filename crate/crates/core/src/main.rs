// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use memcam::config::ExperimentConfig;
use memcam::experiments::{self, Report, SetTarget};

#[derive(Parser)]
#[command(name = "memcam", version, about = "LUT-based analog feedback programming of memristor aCAM arrays")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also build the uncorrected literal analytic LUT.
    #[arg(long = "paper-literal", global = true)]
    literal: bool,
    /// Controller time step (s).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Seed for random search probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Programming sweep over V_DL from a reset device.
    CellSweep,
    /// Analytic and simulated lookup tables.
    BuildLut,
    /// Program four words into the array, sweep and search it.
    ArrayDemo,
    /// One set episode; writes the transient trace.
    Set {
        /// Programming data-line voltage (V).
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        v_dlp: Option<f64>,
        /// Target conductance (S).
        #[arg(long)]
        target: Option<f64>,
        /// Initial device state in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        w0: f64,
    },
    /// One reset episode followed by a verify read.
    Reset {
        /// Initial device state in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        w0: f64,
    },
    /// Program the array job and search it.
    Search {
        /// Comma-separated per-column inputs (V); repeatable. Seeded
        /// random inputs when absent.
        #[arg(long = "input", value_delimiter = ';')]
        inputs: Vec<String>,
    },
    /// Run the experiment named in the configuration.
    Run,
}

fn load(common: &Common) -> memcam::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.experiment.out_dir = out.clone();
    }
    if let Some(dt) = common.dt {
        cfg.controller.dt = dt;
    }
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    if common.literal {
        cfg.lut.literal = true;
    }
    cfg.bench()?;
    Ok(cfg)
}

fn parse_inputs(raw: &[String]) -> memcam::Result<Option<Vec<Vec<f64>>>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.iter()
        .map(|s| {
            s.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| memcam::Error::Format(format!("bad search input `{s}`")))
                })
                .collect()
        })
        .collect::<memcam::Result<Vec<_>>>()
        .map(Some)
}

fn run(cli: &Cli) -> memcam::Result<Report> {
    let cfg = load(&cli.common)?;
    let literal = cli.common.literal;
    match &cli.command {
        Command::CellSweep => experiments::cmd_cell_sweep(&cfg),
        Command::BuildLut => experiments::cmd_build_lut(&cfg, literal),
        Command::ArrayDemo => experiments::cmd_array_demo(&cfg),
        Command::Set { v_dlp, target, w0 } => {
            let t = match (v_dlp, target) {
                (Some(v), _) => SetTarget::Voltage(*v),
                (None, Some(g)) => SetTarget::Conductance(*g),
                (None, None) => unreachable!("clap requires one"),
            };
            experiments::cmd_set(&cfg, t, *w0)
        }
        Command::Reset { w0 } => experiments::cmd_reset(&cfg, *w0),
        Command::Search { inputs } => experiments::cmd_search(&cfg, parse_inputs(inputs)?),
        Command::Run => experiments::run_experiment(&cfg, literal),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render());
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
