mod bundle;
mod config;
mod render;
mod runner;

use clap::{Args, Parser, Subcommand};
use runner::{Action, Invocation};
use std::path::PathBuf;

/// Optimal and robust star-body regularizers for planar data.
#[derive(Parser)]
#[command(name = "starreg", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write every output it supports
    Run(CommonArgs),
    /// Solve and write only the SVG rendering
    Render(CommonArgs),
    /// Solve and write only the CSV table and JSON sidecar
    Export(CommonArgs),
    /// Trace the solution across an ascending list of transport budgets
    Sweep(CommonArgs),
    /// Stress the stability bound by rotating one atom step by step
    Bench(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a JSON experiment config
    config: PathBuf,
    /// Where outputs go (default: next to the config)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the config's solver seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the certificate gap tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Override the iteration cap
    #[arg(long)]
    max_iters: Option<usize>,
    /// Suppress progress lines on stdout
    #[arg(long)]
    quiet: bool,
}

fn main() {
    let cli = Cli::parse();
    let (action, args) = match cli.command {
        Command::Run(a) => (Action::Run, a),
        Command::Render(a) => (Action::Render, a),
        Command::Export(a) => (Action::Export, a),
        Command::Sweep(a) => (Action::Sweep, a),
        Command::Bench(a) => (Action::Bench, a),
    };
    let invocation = Invocation {
        action,
        config: args.config,
        out_dir: args.out_dir,
        seed: args.seed,
        tol: args.tol,
        max_iters: args.max_iters,
        quiet: args.quiet,
    };
    if let Err(err) = runner::execute(&invocation) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
