//! Command-line front end: run single scenarios, parameter sweeps, the
//! acceptance suite, or a quick pi_p cross-check, emitting JSON or CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wplap::bounds::{self, PiPMode};
use wplap::harness::{self, EmitFormat, Report, Row, ScenarioConfig, SCHEMA};

#[derive(Parser)]
#[command(name = "wplap", about = "weighted p-Laplacian eigenvalue laboratory", version)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Global seed; per-scenario seeds are derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for sweeps and the suite (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Strip wall-clock timings so repeated runs are byte-identical.
    #[arg(long, global = true)]
    canonical: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario from a JSON config.
    Run { config: PathBuf },
    /// Run a sweep scenario from a JSON config.
    Sweep { config: PathBuf },
    /// Run a built-in suite.
    Suite {
        /// Suite name; only `acceptance` is defined.
        name: String,
    },
    /// Evaluate pi_p in closed form and by quadrature.
    PiP {
        #[arg(long)]
        p: f64,
    },
}

fn load_config(path: &PathBuf) -> Result<ScenarioConfig, String> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&body).map_err(|e| format!("bad config {}: {e}", path.display()))
}

fn execute(cli: &Cli) -> Result<Report, String> {
    match &cli.command {
        Command::Run { config } => {
            let config = load_config(config)?;
            harness::run_scenario(&config, cli.seed).map_err(|e| e.to_string())
        }
        Command::Sweep { config } => {
            let config = load_config(config)?;
            if !matches!(config, ScenarioConfig::Sweep { .. }) {
                return Err("sweep subcommand requires a config with kind = \"sweep\"".into());
            }
            harness::run_scenario(&config, cli.seed).map_err(|e| e.to_string())
        }
        Command::Suite { name } => {
            if name != "acceptance" {
                return Err(format!("unknown suite `{name}`; available: acceptance"));
            }
            harness::run_suite(cli.seed, cli.canonical).map_err(|e| e.to_string())
        }
        Command::PiP { p } => {
            let closed = bounds::pi_p(*p, PiPMode::ClosedForm).map_err(|e| e.to_string())?;
            let quad = bounds::pi_p(*p, PiPMode::Quadrature).map_err(|e| e.to_string())?;
            let diff = (closed - quad).abs();
            let mut row = Row::new(&format!("pi-p-{p}"), "pi_p");
            row.p = *p;
            row.lambda = Some(closed);
            row.rhs = Some(quad);
            row.residual = Some(diff);
            row.pass = diff <= 1e-10;
            let pass = row.pass;
            Ok(Report {
                schema: SCHEMA.into(),
                scenario_id: format!("pi-p-{p}"),
                rows: vec![row],
                pass,
                wall_ms: None,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let mut report = match execute(&cli) {
        Ok(report) => report,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if cli.canonical {
        report.strip_timing();
    }

    let format = match cli.format {
        Format::Json => EmitFormat::Json,
        Format::Csv => EmitFormat::Csv,
    };
    if let Err(e) = harness::emit(&report, format, cli.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
