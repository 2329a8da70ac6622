use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use distortion::analysis::{alignment_loss, assess, complementarity_grid};
use distortion::amplification::amplification_sweep;
use distortion::campbell::threshold_scan;
use distortion::garp::check_garp;
use distortion::io::{self, emit_results, Emit, Format, OracleReport};
use distortion::model::ScenarioSpec;
use distortion::sampling::{FamilyMix, ScenarioSampler};
use distortion::solver::{compare_with_oracle, oracle_tolerance, solve_agent, solve_first_best};
use distortion::{Error, Violation, ViolationKind};

#[derive(Parser)]
#[command(name = "distortion", version, about = "Incentive distortion under incomplete evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn emit<T: Emit + ?Sized>(&self, result: &T) -> Result<(), Error> {
        let format = match self.format {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        };
        emit_results(result, format, self.out.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the agent's effort allocation (or the first-best).
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        first_best: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Rank dimensions by distortion.
    Assess {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Welfare lost to misalignment.
    Loss {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Coverage ratio as the number of tools grows.
    SweepT {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        with_loss: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Loss over a (K, lambda) grid with mixed differences.
    Complementarity {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        k_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda_values: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Manipulation threshold scan over a capability grid.
    Campbell {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Revealed-preference consistency; exits 1 on a violation.
    Garp {
        #[arg(long)]
        observations: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the solver with a grid search; exits 1 on a tolerance breach.
    OracleCheck {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid_points: usize,
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Draw a random valid scenario document.
    RandomScenario {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        dims: Option<usize>,
        /// Only production families with infinite marginal product at zero.
        #[arg(long)]
        inada: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct SeededScenario {
    seed: u64,
    #[serde(flatten)]
    scenario: ScenarioSpec,
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Solve { scenario, first_best, output } => {
            let s = io::parse_scenario_file(&scenario)?;
            let alloc = if first_best { solve_first_best(&s)? } else { solve_agent(&s)? };
            output.emit(&alloc)?;
        }
        Command::Assess { scenario, output } => {
            output.emit(&assess(&io::parse_scenario_file(&scenario)?))?;
        }
        Command::Loss { scenario, output } => {
            output.emit(&alignment_loss(&io::parse_scenario_file(&scenario)?)?)?;
        }
        Command::SweepT { config, with_loss, output } => {
            let cfg = io::parse_sweep_config_file(&config)?;
            output.emit(&amplification_sweep(&cfg, with_loss)?)?;
        }
        Command::Complementarity { scenario, k_values, lambda_values, output } => {
            let s = io::parse_scenario_file(&scenario)?;
            output.emit(&complementarity_grid(&s, &k_values, &lambda_values)?)?;
        }
        Command::Campbell { config, output } => {
            let doc = io::parse_campbell_config_file(&config)?;
            output.emit(&threshold_scan(&doc.b_grid, &doc.config)?)?;
        }
        Command::Garp { observations, output } => {
            let verdict = check_garp(&io::parse_observations_file(&observations)?);
            output.emit(&verdict)?;
            if !verdict.is_consistent() {
                return Ok(Outcome::CheckFailed);
            }
        }
        Command::OracleCheck { scenario, grid_points, tolerance, output } => {
            let s = io::parse_scenario_file(&scenario)?;
            let tol = tolerance.unwrap_or_else(|| oracle_tolerance(s.budget(), grid_points));
            let report = OracleReport {
                grid_points,
                first_best: compare_with_oracle(s.weights(), s.production(), s.budget(), grid_points, tol)?,
                agent: compare_with_oracle(&s.effective_weights(), s.production(), s.budget(), grid_points, tol)?,
            };
            output.emit(&report)?;
            if !report.passed() {
                return Ok(Outcome::CheckFailed);
            }
        }
        Command::RandomScenario { seed, dims, inada, out } => {
            let mix = if inada { FamilyMix::InadaOnly } else { FamilyMix::Mixed };
            let mut sampler = ScenarioSampler::new(seed);
            let s = match dims {
                Some(n) if n >= 2 => sampler.scenario_with_dims(n, mix),
                Some(n) => {
                    return Err(Error::Invalid(vec![Violation::new(
                        ViolationKind::Axiom1,
                        "dims",
                        format!("need at least 2 dimensions, got {n}"),
                    )]));
                }
                None => sampler.scenario_in(2, 6, mix),
            };
            let doc = SeededScenario { seed, scenario: s.to_spec() };
            let mut text = serde_json::to_string_pretty(&doc).expect("scenario serializes");
            text.push('\n');
            write_text(&text, out.as_deref())?;
        }
    }
    Ok(Outcome::Ok)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
