use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nlap_galerkin::cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(version, about = "Radial Galerkin solver for N-Laplacian problems with critical exponential growth")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve at the configured lambda.
    Solve,
    /// Solve over the sweep lambda list.
    SweepLambda,
    /// Nonexistence certificate over a lambda grid.
    Threshold,
    /// Solve on the configured ball radii.
    Exhaust,
    /// Strauss approximation and growth checks.
    CheckFk,
    /// Principal eigenvalue of the ball.
    Eigen,
}

fn main() {
    let a = Args::parse();
    let cmd = match a.cmd {
        Cmd::Solve => Command::Solve,
        Cmd::SweepLambda => Command::SweepLambda,
        Cmd::Threshold => Command::Threshold,
        Cmd::Exhaust => Command::Exhaust,
        Cmd::CheckFk => Command::CheckFk,
        Cmd::Eigen => Command::Eigen,
    };
    let ov = Overrides { out: a.out, seed: a.seed, tol: a.tol };
    std::process::exit(run(cmd, &a.config, &ov));
}
