use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ocot::baseline::EntropicConfig;
use ocot::search::SearchConfig;
use ocot::SolverConfig;
use ocot_cli::bench::{run_bench, write_csv, BenchConfig};
use ocot_cli::error::CliResult;
use ocot_cli::formats::emit;
use ocot_cli::{cmd_bound, cmd_color_transfer, cmd_oracle_lp, cmd_oracle_project, cmd_search, cmd_solve, color_csv, ColorArgs};

/// Optimal transport with order constraints.
#[derive(Parser)]
#[command(name = "ocot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem, honouring its `constraints` list.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the split (cone-side) iterate.
        #[arg(long)]
        emit_z: bool,
    },
    /// Branch-and-bound search for a ranked set of diverse constrained plans.
    Search {
        input: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Graphviz file for the search tree.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Lower bound on the constrained optimum of a problem file.
    Bound {
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recolor source palette segments from a target palette.
    ColorTransfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// CSV of source_segment,target_segment pairs, most important first.
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time the solver over a grid of random problems (CSV output).
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40])]
        rows: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40])]
        cols: Vec<usize>,
        #[arg(long = "k", value_delimiter = ',', default_values_t = [1, 2, 4, 10])]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Slow reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact optimum by dense simplex (up to 8x8).
    Lp {
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cone projection checked against alternating projections and KKT conditions.
    Project {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

impl From<SolverArgs> for SolverConfig {
    fn from(s: SolverArgs) -> Self {
        SolverConfig { rho: s.rho, max_iters: s.max_iters, tol: s.tol, ..Default::default() }
    }
}

#[derive(Args, Clone, Copy)]
struct SearchArgs {
    /// Saturation threshold for a candidate entry.
    #[arg(long)]
    tau1: Option<f64>,
    /// Neighbourhood saturation threshold.
    #[arg(long)]
    tau2: Option<f64>,
    /// Solve budget.
    #[arg(long, default_value_t = 20)]
    k1: usize,
    /// Number of plans returned.
    #[arg(long, default_value_t = 5)]
    k2: usize,
    /// Maximum number of constraints per plan.
    #[arg(long, default_value_t = 2)]
    k3: usize,
    /// Expand only the single best candidate per node.
    #[arg(long)]
    greedy: bool,
    /// Recorded in the output; the search itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Disable bound and parent-cost pruning.
    #[arg(long)]
    no_pruning: bool,
    /// Entropic base plan regularization (default 5% of the largest cost).
    #[arg(long)]
    epsilon: Option<f64>,
}

impl SearchArgs {
    fn config(&self, base: SearchConfig) -> SearchConfig {
        SearchConfig {
            tau1: self.tau1.unwrap_or(base.tau1),
            tau2: self.tau2.unwrap_or(base.tau2),
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            greedy: self.greedy,
            pruning: !self.no_pruning,
            entropic: EntropicConfig { epsilon: self.epsilon, ..base.entropic },
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("OCOT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { input, solver, output, emit_z } => emit(output.as_deref(), &cmd_solve(&input, &solver.into(), emit_z)?),
        Command::Search { input, search, solver, output, dot } => {
            let out = cmd_search(&input, &search.config(SearchConfig::default()), &solver.into(), search.seed)?;
            if let Some(path) = dot {
                emit(Some(&path), &out.dot)?;
            }
            emit(output.as_deref(), &out.document)
        }
        Command::Bound { input, output } => emit(output.as_deref(), &cmd_bound(&input)?),
        Command::ColorTransfer { source, target, constraints, search, solver, output } => {
            let rows = cmd_color_transfer(&ColorArgs {
                source: &source,
                target: &target,
                constraints: constraints.as_deref(),
                search: search.config(SearchConfig::color_preset()),
                solver: solver.into(),
            })?;
            emit(output.as_deref(), color_csv(&rows).trim_end())
        }
        Command::Bench { rows, cols, ks, seed, repeats, solver, output } => {
            let cfg = BenchConfig { rows, cols, ks, seed, repeats, solver: solver.into() };
            let table = run_bench(&cfg, |w| eprintln!("warning: {w}"))?;
            emit(output.as_deref(), write_csv(&table).trim_end())
        }
        Command::Oracle(OracleCommand::Lp { input, output }) => emit(output.as_deref(), &cmd_oracle_lp(&input)?),
        Command::Oracle(OracleCommand::Project { input, tol, output }) => {
            emit(output.as_deref(), &cmd_oracle_project(&input, tol)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.kind().code())
        }
    }
}
