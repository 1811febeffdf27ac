use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cjsr_cli::commands::{self, CliError, Format, Output};
use cjsr_cli::load_system;
use cjsr_core::{CertifyOptions, Method, PathCap};

#[derive(Parser)]
#[command(name = "cjsr", version)]
#[command(about = "Bounds and Lyapunov certificates for constrained switching systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Write the output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Relative bracket width at which bisection stops
    #[arg(long, global = true)]
    tol_bisect: Option<f64>,

    /// Slack below which an LMI is not considered strictly feasible
    #[arg(long, global = true)]
    tol_feas: Option<f64>,

    /// Maximum number of enumerated paths before giving up
    #[arg(long, global = true, env = "CJSR_PATH_CAP")]
    path_cap: Option<u64>,

    /// JSON file with solver and certification options
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a system file
    Validate { file: PathBuf },
    /// Growth rates rho_hat_t and cycle lower bounds
    Bounds {
        file: PathBuf,
        /// Largest path length t
        #[arg(long, default_value_t = 6)]
        tmax: usize,
        /// Longest closed walk searched for lower bounds (default 2|V|)
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Solve for a Lyapunov certificate and print it as JSON
    Certify {
        file: PathBuf,
        /// Per-step rate to test; omit to bisect for the best one
        #[arg(long)]
        gamma: Option<f64>,
        /// Lift depth, or memory + 1 for path-dependent forms
        #[arg(long = "T", default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value = "lift")]
        method: Method,
    },
    /// Upper and lower bounds for T = 1..Tmax and each method
    Report {
        file: PathBuf,
        #[arg(long = "tmax", alias = "Tmax", default_value_t = 4)]
        tmax: usize,
        /// Comma-separated list of methods
        #[arg(long, value_delimiter = ',', default_value = "lift,path-dependent")]
        methods: Vec<Method>,
    },
    /// Write the depth-T lift as a system file
    Lift {
        file: PathBuf,
        #[arg(long = "T")]
        depth: usize,
    },
}

fn options(g: &Global) -> Result<CertifyOptions, CliError> {
    let mut opts = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => CertifyOptions::default(),
    };
    if let Some(t) = g.tol_bisect {
        opts.tol_bisect = t;
    }
    if let Some(t) = g.tol_feas {
        opts.solver.tol_feas = t;
    }
    if let Some(cap) = g.path_cap {
        opts.path_cap = PathCap(cap);
    }
    Ok(opts)
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let opts = options(&cli.global)?;
    let format = cli.global.format;
    match &cli.command {
        Command::Validate { file } => commands::validate(file, format),
        Command::Bounds { file, tmax, cycles } => commands::bounds(&load_system(file)?, *tmax, *cycles, &opts, format),
        Command::Certify {
            file,
            gamma,
            depth,
            method,
        } => commands::certify(&load_system(file)?, *gamma, *depth, *method, &opts),
        Command::Report { file, tmax, methods } => {
            commands::report(&load_system(file)?, *tmax, methods, &opts, format)
        }
        Command::Lift { file, depth } => commands::lift_file(&load_system(file)?, *depth, &opts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; code 2 is reserved for "infeasible".
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = run(&cli).and_then(|out| {
        match &cli.global.out {
            Some(path) => std::fs::write(path, &out.text).map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            })?,
            None => print!("{}", out.text),
        }
        Ok(out.status)
    });
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
