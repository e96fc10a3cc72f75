//! `edge-hinf`: analysis, design and simulation of edge-consensus networks.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use edgehinf_core::design::{LogGrid, ParetoGrid};

#[derive(Parser)]
#[command(name = "edge-hinf", version, about = "H-infinity analysis and design of edge-consensus networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone)]
pub struct Common {
    /// Network document (JSON).
    #[arg(long)]
    pub net: PathBuf,
    /// Write artifacts and manifest.json into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct TreeArg {
    /// Spanning tree as comma-separated edge ids (default: the document's
    /// `tree`, else breadth-first).
    #[arg(long, value_delimiter = ',')]
    pub tree: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network and any companion documents against it.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        formation: Option<PathBuf>,
        #[arg(long)]
        disturbance: Option<PathBuf>,
        /// JSON array of schedule entries.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        covariance: Option<PathBuf>,
    },
    /// Count and list spanning trees.
    Trees {
        #[command(flatten)]
        common: Common,
        /// Stop listing after this many trees.
        #[arg(long, default_value_t = 10_000)]
        limit: usize,
    },
    /// Exact norms and bounds for one spanning tree.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tree: TreeArg,
        /// General covariance factors `{"omega": [[..]], "gamma": [[..]]}`.
        #[arg(long)]
        covariance: Option<PathBuf>,
        /// Write the realization (A, B, C) as CSV blocks to this file.
        #[arg(long)]
        dump_realization: Option<PathBuf>,
    },
    /// Norm against weighted and tree bounds, one CSV row per example.
    Bounds {
        /// Network documents; each is one example.
        #[arg(long, required = true, num_args = 1..)]
        net: Vec<PathBuf>,
        /// Add this many random (eps, w) variants of every network.
        #[arg(long, default_value_t = 0)]
        variants: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Score each network's default spanning tree instead of the full graph.
        #[arg(long)]
        tree_subgraph: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Solve the design program.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tree: TreeArg,
        /// Design document (JSON).
        #[arg(long)]
        design: PathBuf,
        /// Conic backend (default: $EDGE_HINF_SOLVER, else clarabel).
        #[arg(long)]
        solver: Option<String>,
    },
    /// Sweep (alpha, beta, gamma) and emit the trade-off front.
    Pareto {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tree: TreeArg,
        /// Design template; its alpha, beta, gamma are replaced per point.
        #[arg(long)]
        design: PathBuf,
        /// `lo:hi:count` (log spaced) or a single value.
        #[arg(long, default_value = "1e-3:1e-1:10", value_parser = parse_grid)]
        alpha_grid: LogGrid,
        #[arg(long, default_value = "1e-3:1e-1:10", value_parser = parse_grid)]
        beta_grid: LogGrid,
        /// Default lower end is 10^0.15.
        #[arg(long, default_value = "1.41253754462:100:10", value_parser = parse_grid)]
        gamma_grid: LogGrid,
        #[arg(long)]
        solver: Option<String>,
    },
    /// Simulate the two-axis formation and write node and edge CSVs.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// JSON array of schedule entries `{time, weights, epsilons}`.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// A/B simulation: baseline against a parameter switch.
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        /// Schedule entry to switch to.
        #[arg(long, conflicts_with = "design", required_unless_present = "design")]
        switch: Option<PathBuf>,
        /// Switch to the solution of this design problem instead.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Switch time when `--design` is used.
        #[arg(long, default_value_t = 2.0)]
        switch_time: f64,
        /// Metric window `t0:t1`.
        #[arg(long, value_parser = parse_span)]
        window: (f64, f64),
        #[arg(long)]
        solver: Option<String>,
    },
}

#[derive(Args, Clone)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub tree: TreeArg,
    /// Formation document `{offsets, fast}`.
    #[arg(long, conflicts_with = "fast")]
    pub formation: Option<PathBuf>,
    /// Fast node ids for the two-square formation.
    #[arg(long, value_delimiter = ',')]
    pub fast: Option<Vec<usize>>,
    /// Disturbance document.
    #[arg(long, conflicts_with = "disturbance_window")]
    pub disturbance: Option<PathBuf>,
    /// Draw disturbances from `--seed` with support `t_s:t_f`.
    #[arg(long, value_parser = parse_span)]
    pub disturbance_window: Option<(f64, f64)>,
    /// Initial positions `[[z, y], ..]` (default: uniform from `--seed`).
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Record every k-th step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_grid(s: &str) -> Result<LogGrid, String> {
    s.parse::<LogGrid>().map_err(|e| e.to_string())
}

fn parse_span(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("`{s}` is not t0:t1"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}` in `{s}`"));
    let (a, b) = (num(a)?, num(b)?);
    if !(b > a) {
        return Err(format!("`{s}` needs t0 < t1"));
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Command::Simulate { sim, .. } = &cli.command {
        if sim.common.out_dir.is_none() {
            Cli::command()
                .error(ErrorKind::MissingRequiredArgument, "simulate writes two CSV files and needs --out-dir")
                .exit();
        }
    }
    let result = match cli.command {
        Command::Validate { common, design, formation, disturbance, schedule, covariance } => {
            commands::validate(&common, design, formation, disturbance, schedule, covariance)
        }
        Command::Trees { common, limit } => commands::trees(&common, limit),
        Command::Analyze { common, tree, covariance, dump_realization } => {
            commands::analyze(&common, &tree, covariance, dump_realization)
        }
        Command::Bounds { net, variants, seed, tree_subgraph, out_dir } => {
            commands::bounds(&net, variants, seed, tree_subgraph, out_dir)
        }
        Command::Optimize { common, tree, design, solver } => {
            commands::optimize(&common, &tree, &design, solver.as_deref())
        }
        Command::Pareto { common, tree, design, alpha_grid, beta_grid, gamma_grid, solver } => {
            let grid = ParetoGrid { alpha: alpha_grid, beta: beta_grid, gamma: gamma_grid };
            commands::pareto(&common, &tree, &design, &grid, solver.as_deref())
        }
        Command::Simulate { sim, schedule } => commands::simulate(&sim, schedule),
        Command::Compare { sim, switch, design, switch_time, window, solver } => {
            commands::compare(&sim, switch, design, switch_time, window, solver.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
