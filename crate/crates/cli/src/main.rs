//! `brp`: bounds, exact solves, model emission and benchmarks for the block
//! relocation problem.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 parse error,
//! 4 infeasible instance or illegal move, 5 solver backend failure,
//! 6 budget exhausted without a usable answer, 7 file I/O.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use brp_core::HeightMode;

#[derive(Parser, Debug)]
#[command(name = "brp", version, about = "Block relocation toolkit")]
pub struct Cli {
    /// Output format. csv and json-lines carry everything the human form shows.
    #[arg(long, value_enum, default_value_t = output::Format::Human, global = true)]
    pub format: output::Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance file (`S B` header, then `n p1 .. pn` per stack, bottom to top).
    pub instance: PathBuf,
    /// Stack height limit: none, plus2 (tallest stack + 2) or an integer.
    #[arg(long, default_value = "none", value_parser = parse_height)]
    pub height: HeightMode,
    /// Relabel arbitrary distinct priorities as 1..B.
    #[arg(long)]
    pub renumber: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BudgetArgs {
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Search-node limit per solve.
    #[arg(long, default_value_t = 20_000_000)]
    pub node_budget: u64,
}

#[derive(Args, Debug, Clone)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Internal)]
    pub backend: BackendKind,
    /// External solver command template using {lp}, {sol} and {time};
    /// defaults to the BRP_SOLVER_CMD environment variable.
    #[arg(long)]
    pub solver_cmd: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Internal,
    External,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    M3,
    M3r,
    Is,
    #[value(name = "is*")]
    IsStar,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantArg {
    M3,
    M3r,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print LB1, LB2, LB3, LB-N and LB4.
    Bounds {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Also print the LB4 certificate.
        #[arg(long)]
        certificates: bool,
        /// Compute on the layout as given, without retrieving exposed targets.
        #[arg(long)]
        keep_retrievable: bool,
        /// Keep scanning overlapped-layer candidates after the first miss.
        #[arg(long)]
        continue_after_miss: bool,
    },
    /// Exact minimum number of relocations by search.
    Oracle {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Only relocate blocks above the current target.
        #[arg(long)]
        restricted: bool,
        /// Write the witness as a move file.
        #[arg(long)]
        moves_out: Option<PathBuf>,
    },
    /// Solve through an integer program or an iterative scheme.
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_enum)]
        method: SolveMethod,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Relocation budget L (default LB4).
        #[arg(long = "L", alias = "l")]
        l: Option<usize>,
        /// Horizon T for m3 (default the restricted optimum).
        #[arg(long = "T", alias = "t")]
        t: Option<usize>,
        /// Write the iteration trace CSV (is, is*).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        moves_out: Option<PathBuf>,
    },
    /// Write the LP file of a model.
    Emit {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::M3)]
        variant: VariantArg,
        #[arg(long = "L", alias = "l")]
        l: Option<usize>,
        #[arg(long = "T", alias = "t")]
        t: Option<usize>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Output file (default stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a move file and count its relocations.
    Validate {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Move file: `R b from to` or `T b from` per line, stacks from 1.
        moves: PathBuf,
    },
    /// Run a benchmark suite and print per-group CSV.
    Bench {
        /// Suite file of key = value lines.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Override the suite's methods (comma-separated).
        #[arg(long)]
        methods: Option<String>,
        /// Override the suite's height mode.
        #[arg(long, value_parser = parse_height)]
        height: Option<HeightMode>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        node_budget: Option<u64>,
        #[command(flatten)]
        backend: BackendArgs,
        /// Also write one CSV row per instance and method.
        #[arg(long)]
        instances_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write random instances.
    Gen {
        /// Blocks per stack.
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        stacks: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Directory for `rows-stacks-seed.dat` files (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_height(s: &str) -> Result<HeightMode, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}
