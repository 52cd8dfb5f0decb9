use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use accrual::io::{self, ForecastOptions};
use accrual::{Error, HyperParams, PopulationSpec, Result};

/// Forecast future unique participants from first-period daily counts.
#[derive(Parser, Debug)]
#[command(name = "accrual", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Forecast new participants at each horizon and per week.
    Forecast {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        population: Population,
        /// Include per-draw (α, β) and weekly counts in JSON output.
        #[arg(long)]
        emit_draws: bool,
    },
    /// Repeat the forecast over a grid of λ values.
    SweepLambda {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// `a..b` (integer steps) or a comma-separated list.
        #[arg(long, default_value = "1..30")]
        lambda_grid: String,
    },
    /// Score forecasts and the log-linear baseline on a corpus.
    BatchEval {
        /// Directory of `day,count` CSV files, one per experiment.
        #[arg(long)]
        corpus: PathBuf,
        /// CSV with `experiment_id,week,actual_new`.
        #[arg(long)]
        truth: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        population: Population,
    },
    /// Simulate a Beta-Geometric experiment.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 7)]
        d: u32,
        #[arg(long, default_value_t = 35)]
        total_days: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full daily series as `day,count` CSV here.
        #[arg(long)]
        daily_csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Length of the first period in days.
    #[arg(long, default_value_t = 7)]
    d: u32,
    #[arg(long, default_value = "7,14,21,28")]
    horizons: String,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct Population {
    /// Non-participants per first-period participant.
    #[arg(long)]
    lambda: Option<f64>,
    /// Known number of first-period non-participants.
    #[arg(long)]
    n0: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Json,
    Csv,
}

impl Population {
    fn spec(&self) -> Result<PopulationSpec> {
        match (self.n0, self.lambda) {
            (Some(n0), _) => Ok(PopulationSpec::known(n0)),
            (None, Some(l)) => PopulationSpec::lambda(l),
            (None, None) => PopulationSpec::lambda(10.0),
        }
    }
}

impl Common {
    fn options(&self, population: PopulationSpec, emit_draws: bool) -> Result<ForecastOptions> {
        Ok(ForecastOptions {
            d: self.d,
            horizons: io::parse_horizons(&self.horizons)?,
            population,
            draws: self.draws,
            seed: self.seed,
            emit_draws,
        })
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(e).context(&path.display().to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Forecast { input, common, population, emit_draws } => {
            let data = io::read_daily_counts(&input)?;
            let report = io::run_forecast(&data, &common.options(population.spec()?, emit_draws)?)?;
            let text = match common.format {
                Format::Json => io::to_json(&report),
                Format::Csv => io::forecast_csv(&report),
            };
            emit(&text, common.out.as_ref())
        }
        Command::SweepLambda { input, common, lambda_grid } => {
            let grid = io::parse_lambda_grid(&lambda_grid)?;
            let data = io::read_daily_counts(&input)?;
            let report = io::run_lambda_sweep(&data, &common.options(PopulationSpec::Lambda(grid[0]), false)?, &grid)?;
            let text = match common.format {
                Format::Json => io::to_json(&report),
                Format::Csv => io::sweep_csv(&report),
            };
            emit(&text, common.out.as_ref())
        }
        Command::BatchEval { corpus, truth, common, population } => {
            let opts = common.options(population.spec()?, false)?;
            let corpus = io::load_corpus(&corpus)?;
            let text = std::fs::read_to_string(&truth).map_err(|e| Error::Io(e).context(&truth.display().to_string()))?;
            let truth_rows = io::parse_truth(&text).map_err(|e| e.context(&truth.display().to_string()))?;
            let report = io::run_batch_eval(&corpus, &truth_rows, &opts)?;
            let text = match common.format {
                Format::Json => io::to_json(&report),
                Format::Csv => io::batch_csv(&report),
            };
            emit(&text, common.out.as_ref())
        }
        Command::Simulate { n, alpha, beta, d, total_days, seed, daily_csv, out } => {
            let report = io::run_simulate(n, HyperParams::new(alpha, beta)?, d, total_days, seed)?;
            if let Some(path) = daily_csv {
                emit(&io::write_daily_counts(&report.experiment.all_days()), Some(&path))?;
            }
            emit(&io::to_json(&report), out.as_ref())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Request(_) => 2,
        Error::Parse { .. } => 3,
        Error::Data(_) => 4,
        Error::Domain { .. } => 5,
        Error::Model(_) => 6,
        Error::Numerical(_) => 7,
        Error::Io(_) => 8,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACCRUAL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Error::Request(e.render().to_string().trim_end().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    let body = serde_json::json!({ "error": { "class": e.class(), "message": e.to_string() } });
    eprintln!("{body}");
    ExitCode::from(exit_code(e))
}
