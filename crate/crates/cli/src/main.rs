//! `netsens`: sensitivity analysis of communicability measures from the command line.
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 3 Krylov non-convergence,
//! 4 estimator warning (fewer pairs found than requested). Results go to stdout, diagnostics
//! to stderr.

mod commands;
mod input;
mod table;

use std::io::Write;

use clap::{Parser, Subcommand};

use commands::Output;
use table::OutputFormat;

#[derive(Parser, Debug)]
#[command(name = "netsens", version, about = "Sensitivity of network communicability to edge and node changes")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    output: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Largest edge sensitivities over existing or virtual edges.
    TopEdges(commands::TopEdgesArgs),
    /// Sensitivity of each measure to removing each node.
    NodeSens(commands::NodeSensArgs),
    /// A priori decay bounds for a node removal or an edge change.
    Bounds(commands::BoundsArgs),
    /// Timing sweep over random geometric graphs.
    Bench(commands::BenchArgs),
    /// Write a generated or bundled graph.
    Gen(commands::GenArgs),
    /// Total communicability before and after a batch of weight changes.
    ApplyUpdate(commands::ApplyUpdateArgs),
    /// Total communicability, Estrada index and subgraph centralities.
    Communicability(commands::CommunicabilityArgs),
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::TopEdges(a) => commands::top_edges(a),
        Command::NodeSens(a) => commands::node_sens(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Bench(a) => commands::bench(a),
        Command::Gen(a) => commands::generate(a),
        Command::ApplyUpdate(a) => commands::apply_update(a),
        Command::Communicability(a) => commands::communicability(a),
    });
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let written = match result {
        Ok(Output::Table(t, outcome)) => t.write(cli.output, &mut out).map(|_| outcome.code()),
        Ok(Output::Text(s)) => out.write_all(s.as_bytes()).map(|_| 0).map_err(Into::into),
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    match written {
        Ok(code) => {
            if code == 3 {
                eprintln!("warning: Krylov iteration reached --m-max before converging");
            } else if code == 4 {
                eprintln!("warning: the estimator found fewer pairs than requested");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn main() {
    std::process::exit(run());
}
