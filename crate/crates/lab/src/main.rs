use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heatlab::{LabError, RunConfig, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "heatlab", version, about = "Heat-flow Harnack and entropy verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the flow, run every requested suite and write all reports.
    Run(Common),
    /// Fit the tolerance constant C on a torus config and write trajectory_meta.json.
    Calibrate(Common),
    /// Run only the parameter-space scan.
    Scan(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config.
    config: PathBuf,
    /// Write reports here instead of the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Replace the pair-sampling seed and the random initial-data seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Halve tol_disc.
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, RunOptions), LabError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.override_seed(seed);
        }
        Ok((cfg, RunOptions { output_dir: self.output_dir.clone(), strict: self.strict }))
    }
}

fn execute(cli: &Cli) -> Result<i32, LabError> {
    match &cli.command {
        Command::Run(args) => {
            let (cfg, opts) = args.load()?;
            let outcome = heatlab::run(&cfg, &opts)?;
            for suite in &outcome.summary.suites {
                let verdict = if suite.pass { "pass" } else { "FAIL" };
                println!("{:<20} {verdict}  worst slack {:e} ({})", suite.suite, suite.worst_slack, suite.worst_gate);
            }
            println!("reports in {}", outcome.output_dir.display());
            Ok(outcome.exit_code())
        }
        Command::Calibrate(args) => {
            let (cfg, opts) = args.load()?;
            let tol = heatlab::calibrate(&cfg, &opts)?;
            println!("C = {:e}  tol_disc = {:e}", tol.constant, tol.tol_disc);
            if let Some(cal) = &tol.calibration {
                let ratio = cal.error_ratio.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"));
                println!(
                    "coarse error {:e}, fine error {:e}, ratio {ratio}{}",
                    cal.coarse.max_error,
                    cal.fine.max_error,
                    if cal.floored { ", floored" } else { "" }
                );
            }
            Ok(0)
        }
        Command::Scan(args) => {
            let (cfg, opts) = args.load()?;
            let outcome = heatlab::scan(&cfg, &opts)?;
            let suite = &outcome.summary.suites[0];
            println!("paramscan {}  worst slack {:e} ({})", if suite.pass { "pass" } else { "FAIL" }, suite.worst_slack, suite.worst_gate);
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
