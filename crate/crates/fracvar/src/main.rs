use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracvar::commands::{self, FracDerivArgs, Outcome, RunConfig};
use fracvar::io::{Format, GridSpec};
use fracvar::verify::Suite;
use fracvar::{CliError, CliResult};
use fracvar_core::OpKind;

/// Discrete fractional calculus of variations: operators, solves and Noether checks.
///
/// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
/// Set FRACVAR_THREADS to fix the worker count; results do not depend on it.
#[derive(Debug, Parser)]
#[command(name = "fracvar", version)]
struct Cli {
    /// Directory receiving output files.
    #[arg(long, global = true, default_value = "fracvar-out")]
    output_dir: PathBuf,
    /// Format for field and table outputs (reports are always JSON).
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Record wall time in report files (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    LeftDerivative,
    RightDerivative,
    LeftIntegral,
    RightIntegral,
}

impl From<KindArg> for OpKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::LeftDerivative => OpKind::LeftDerivative,
            KindArg::RightDerivative => OpKind::RightDerivative,
            KindArg::LeftIntegral => OpKind::LeftIntegral,
            KindArg::RightIntegral => OpKind::RightIntegral,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate operator weights: k, w_k, partial_sum.
    Weights {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Fractional integral weights instead of derivative weights.
        #[arg(long)]
        integral: bool,
    },
    /// Apply a fractional operator along one axis of a field.
    Fracderiv {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "left-derivative")]
        kind: KindArg,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long, default_value_t = 0)]
        component: usize,
        /// Input field file (JSON).
        #[arg(long, conflicts_with = "function")]
        field: Option<PathBuf>,
        /// Sample a product function instead: one, x, sin, cos, exp.
        #[arg(long)]
        function: Option<String>,
        /// Grid for --function: lower bounds, one per axis.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        lower: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        upper: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "65")]
        nodes: Vec<usize>,
    },
    /// Run a seeded verification battery.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Solve the Dirichlet problem described by a spec file.
    Solve {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Euler-Lagrange residual of a field (default: OUTPUT_DIR/solution.json).
    Residual {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Action difference quotients against the residual pairing.
    Gradcheck {
        #[arg(long)]
        spec: PathBuf,
        /// Base point; random when omitted.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
    },
    /// Noether conservation sum and identity along a field.
    Noether {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        /// paper-example, power-kernel, constant[:v] or file:<path>.
        #[arg(long, default_value = "paper-example")]
        generator: String,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("FRACVAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("FRACVAR_THREADS must be a non-negative integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn dispatch(cli: Cli) -> CliResult<Outcome> {
    let cfg = RunConfig { output_dir: cli.output_dir, format: cli.format, seed: cli.seed, timings: cli.timings };
    match cli.command {
        Command::Weights { alpha, count, integral } => commands::weights(&cfg, alpha, count, integral),
        Command::Fracderiv { alpha, kind, axis, component, field, function, lower, upper, nodes } => {
            let args = FracDerivArgs {
                alpha,
                kind: kind.into(),
                axis,
                component,
                field,
                function,
                grid: GridSpec { lower, upper, nodes },
            };
            commands::fracderiv(&cfg, args)
        }
        Command::Verify { suite } => commands::verify(&cfg, suite),
        Command::Solve { spec } => commands::solve(&cfg, &spec),
        Command::Residual { spec, field } => commands::residual(&cfg, &spec, &field),
        Command::Gradcheck { spec, field, trials, eps } => commands::gradcheck(&cfg, &spec, &field, trials, eps),
        Command::Noether { spec, field, generator } => commands::noether(&cfg, &spec, &field, &generator),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::usage(e.to_string().trim_end())),
    };
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    match dispatch(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(why) => fail(CliError::Numerical(why)),
            }
        }
        Err(e) => fail(e),
    }
}
