use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdis_harness::compare::{format_totals, parse_kind};
use rdis_harness::{compare, run, Algorithm, CompareConfig, Error, Family, ProblemSource, RunConfig};

#[derive(Parser)]
#[command(name = "rdis", version, about = "Run and compare RDIS and baseline optimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one problem.
    Solve(Box<SolveArgs>),
    /// Run a list of configurations over a set of seeds.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated benchmark problem to a file.
    Gen {
        #[arg(long)]
        family: String,
        /// Comma-separated key=value parameters.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file, or `gen:<family>:<key=value,...>`.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "rdis")]
    algorithm: String,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Top-level restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Limit on term evaluations.
    #[arg(long)]
    eval_limit: Option<u64>,
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Subspace optimizer for the RDIS variants: cgd, lm or grid.
    #[arg(long, default_value = "cgd")]
    optimizer: String,
    #[arg(long)]
    d_min: Option<usize>,
    /// Restarts of the value loop at each RDIS node.
    #[arg(long)]
    rdis_restarts: Option<usize>,
    /// Starts of every local optimizer call.
    #[arg(long)]
    local_restarts: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    bcd_rounds: Option<usize>,
    /// Write zero for every time so outputs are reproducible.
    #[arg(long)]
    no_timing: bool,
}

fn solve(a: SolveArgs) -> Result<(), Error> {
    let mut c = RunConfig::new(a.problem.parse::<ProblemSource>()?, a.algorithm.parse::<Algorithm>()?);
    c.epsilon = a.epsilon;
    c.seed = a.seed;
    c.restarts = a.restarts;
    c.time_limit = a.time_limit;
    c.eval_limit = a.eval_limit;
    c.trajectory = a.trajectory;
    c.summary = a.summary;
    c.svg = a.svg;
    c.timing = !a.no_timing;
    c.optimizer.kind = parse_kind(&a.optimizer)?;
    if let Some(v) = a.d_min {
        c.rdis.d_min = v;
    }
    if let Some(v) = a.rdis_restarts {
        c.rdis.restarts = v;
    }
    if let Some(v) = a.local_restarts {
        c.optimizer.restarts = v;
    }
    if let Some(v) = a.grid_points {
        c.optimizer.grid_points = v;
    }
    if let Some(v) = a.bcd_rounds {
        c.bcd_rounds = v;
    }
    let out = run(&c)?;
    println!(
        "{} on {}: best {} after {} evaluations, {} restarts, {:.3} s",
        out.algorithm, out.problem, out.best.true_value, out.counts.term_evals, out.restarts, out.wall
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(*a),
        Command::Compare { config, out } => CompareConfig::load(&config).and_then(|mut c| {
            if out.is_some() {
                c.out = out;
            }
            let r = compare(&c)?;
            print!("{}", format_totals(&r.totals));
            Ok(())
        }),
        Command::Gen { family, params, out } => Family::parse(&family, &params).and_then(|g| {
            g.write(&out)?;
            println!("wrote {g} to {}", out.display());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
