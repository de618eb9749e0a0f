mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msic_core::bounds::CoverMode;
use msic_core::solver::{SolveOptions, DEFAULT_SEARCH_CAP};

use commands::{CliError, GenArgs, Outcome, SolveArgs, EXIT_INPUT};
use report::{CommandEcho, RunReport, TOOL};

/// Exact solver, bounds and verification for multi-sender index coding.
#[derive(Parser)]
#[command(name = "msic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Emit the JSON run report (to stdout, or to --out).
    #[arg(long)]
    json: bool,
    /// Write the JSON run report to this file.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for the exact search (default: available cores).
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,
    /// Disable branch-and-bound pruning.
    #[arg(long)]
    no_prune: bool,
    /// Refuse searches above 2^CAP candidates.
    #[arg(long, value_name = "CAP", env = "MSIC_SEARCH_CAP", default_value_t = DEFAULT_SEARCH_CAP)]
    search_cap: u32,
}

impl Common {
    fn solve_options(&self) -> SolveOptions {
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        SolveOptions { parallelism: self.parallel.unwrap_or(cores).max(1), prune: !self.no_prune, search_cap: self.search_cap }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute hyperminrank by exhaustive search.
    Solve {
        instance: PathBuf,
        /// Write the optimal code to this file.
        #[arg(long, value_name = "PATH")]
        emit_code: Option<PathBuf>,
        /// Print the witness fitting, its edges and the derived code.
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Clique-cover upper bound and complement-clique lower bound.
    Bounds {
        instance: PathBuf,
        #[arg(long)]
        exact: bool,
        #[arg(long, conflicts_with = "exact")]
        greedy: bool,
        /// Also solve exactly and check lower <= hyperminrank <= upper.
        #[arg(long)]
        with_exact_solve: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check that a code lets every receiver decode.
    Verify {
        instance: PathBuf,
        #[arg(long, value_name = "PATH")]
        code: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force the shortest linear code and compare with the solver.
    Oracle {
        instance: PathBuf,
        /// Longest code length to try (default: min(K, 4)).
        #[arg(long, value_name = "L")]
        max_length: Option<usize>,
        /// Run beyond the size guard.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Search-space exponents and the replication threshold.
    Complexity {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        r0: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Embedded instance: K = N and every node is sender and receiver.
        #[arg(long)]
        embedded: bool,
        /// Instance file to write (default: stdout).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Print the JSON run report instead of the summary.
        #[arg(long)]
        json: bool,
    },
}

fn run(command: &Command) -> (Result<Outcome, CliError>, bool, Option<PathBuf>) {
    match command {
        Command::Solve { instance, emit_code, witness, common } => {
            let args = SolveArgs { options: common.solve_options(), emit_code: emit_code.clone(), witness: *witness };
            (commands::cmd_solve(instance, &args), common.json, common.out.clone())
        }
        Command::Bounds { instance, greedy, with_exact_solve, common, .. } => {
            let mode = if *greedy { CoverMode::Greedy } else { CoverMode::Exact };
            let r = commands::cmd_bounds(instance, mode, *with_exact_solve, &common.solve_options());
            (r, common.json, common.out.clone())
        }
        Command::Verify { instance, code, common } => (commands::cmd_verify(instance, code), common.json, common.out.clone()),
        Command::Oracle { instance, max_length, force, common } => {
            let r = commands::cmd_oracle(instance, *max_length, *force, &common.solve_options());
            (r, common.json, common.out.clone())
        }
        Command::Complexity { instance, common } => (commands::cmd_complexity(instance), common.json, common.out.clone()),
        Command::Gen { k, n, delta, r0, seed, embedded, out, json } => {
            let args = GenArgs { k: *k, n: *n, delta: *delta, r0: *r0, seed: *seed, embedded: *embedded, out: out.clone() };
            (commands::cmd_gen(&args), *json, None)
        }
    }
}

fn name(command: &Command) -> &'static str {
    match command {
        Command::Solve { .. } => "solve",
        Command::Bounds { .. } => "bounds",
        Command::Verify { .. } => "verify",
        Command::Oracle { .. } => "oracle",
        Command::Complexity { .. } => "complexity",
        Command::Gen { .. } => "gen",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, json, report_path) = run(&cli.command);
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code as u8);
        }
    };
    let report = RunReport {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command: CommandEcho { name: name(&cli.command).into(), args: std::env::args().skip(1).collect() },
        instance_digest: outcome.digest,
        exit_code: outcome.exit_code,
        results: outcome.results,
        timings: outcome.timings,
    };
    let mut stdout = std::io::stdout().lock();
    let printed = match (&report_path, json) {
        (Some(path), _) => {
            if let Err(e) = report::write_file(path, &report.to_json()) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_INPUT as u8);
            }
            stdout.write_all(outcome.human.as_bytes())
        }
        (None, true) => stdout.write_all(report.to_json().as_bytes()),
        (None, false) => stdout.write_all(outcome.human.as_bytes()),
    };
    if printed.is_err() {
        return ExitCode::from(EXIT_INPUT as u8);
    }
    ExitCode::from(outcome.exit_code as u8)
}
