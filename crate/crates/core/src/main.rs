use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use fracgame::cli::{run, Command, Flags, Scenario};
use fracgame::fbm::Method;
use fracgame::{Error, ErrorClass};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Solve for m* and write the summary and strategy traces
    Solve,
    /// Write sample fBm paths as CSV
    Paths,
    /// Run the verification suite and write its report
    Verify,
    /// Tabulate the drift-removal kernel and its norms
    Kernel,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Cholesky,
    Circulant,
}

/// Explicit equilibria of a linear game driven by fractional Brownian motion.
#[derive(Debug, Parser)]
#[command(name = "fracgame", version)]
struct Args {
    command: Cmd,
    /// Scenario file (JSON)
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of grid steps
    #[arg(long)]
    grid: Option<usize>,
    /// Monte Carlo paths for `verify`, number of files for `paths`
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Sample paths traced by `solve`
    #[arg(long)]
    sample_paths: Option<usize>,
}

fn fail(class: ErrorClass, msg: &str) -> ExitCode {
    eprintln!("error class={class} msg={}", msg.replace('\n', " "));
    ExitCode::from(match class {
        ErrorClass::Numerical => 3,
        ErrorClass::Input | ErrorClass::Io => 2,
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return fail(
                ErrorClass::Input,
                e.to_string().lines().next().unwrap_or("bad arguments"),
            )
        }
    };
    let command = match args.command {
        Cmd::Solve => Command::Solve,
        Cmd::Paths => Command::Paths,
        Cmd::Verify => Command::Verify,
        Cmd::Kernel => Command::Kernel,
    };
    let flags = Flags {
        seed: args.seed,
        grid: args.grid,
        paths: args.paths,
        method: args.method.map(|m| match m {
            MethodArg::Cholesky => Method::Cholesky,
            MethodArg::Circulant => Method::Circulant,
        }),
        out: args.out,
        tol: args.tol,
        sample_paths: args.sample_paths,
    };
    let result = Scenario::from_file(&args.scenario)
        .map_err(|e| match e {
            Error::Io(io) => Error::invalid("scenario", format!("{}: {io}", args.scenario.display())),
            other => other,
        })
        .and_then(|sc| run(command, &sc, &flags));
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            let failed: Vec<&str> = out
                .reports
                .iter()
                .filter(|r| !r.pass)
                .map(|r| r.check.as_str())
                .collect();
            if !out.reports.is_empty() {
                println!("{} checks, {} failed", out.reports.len(), failed.len());
            }
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                for name in failed {
                    eprintln!("check failed: {name}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e.class(), &e.to_string()),
    }
}
