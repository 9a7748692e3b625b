use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use hometype_cli::generators::{make_space, SpaceSpec};
use hometype_cli::{run_suite, Scenario, Suite};

#[derive(Parser)]
#[command(
    name = "hometype",
    version,
    about = "Verify weighted commutator bounds on finite spaces of homogeneous type"
)]
struct Cli {
    /// Scenario JSON; fields left out take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the space, e.g. grid1d:32, grid2d:4x4, cantor:4, snowflake:16:0.5.
    #[arg(long, global = true)]
    space: Option<SpaceSpec>,
    /// Directory for report.json and checks.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the small-δ dyadic construction with its fixed constants.
    #[arg(long, global = true)]
    strict_dyadic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the space summary: size, quasi-metric constant, doubling data.
    Space,
    /// Build dyadic and adjacent systems and verify their axioms.
    Dyadic,
    /// Weights, oscillation, Haar and sparse checks.
    Verify,
    /// Pointwise sparse domination of the maximal commutator.
    Dominate,
    /// Compact splits, tail bounds and the finite-rank error curves.
    Compactness,
    /// The bilinear reduction and its tails.
    Bilinear,
    /// The lower-bound witness for a symbol with persistent oscillation.
    Witness,
    /// Run every suite listed in the scenario.
    Report,
}

fn scenario(cli: &Cli) -> anyhow::Result<Scenario> {
    let mut sc = match &cli.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    if let Some(space) = &cli.space {
        sc.space = space.clone();
    }
    if cli.strict_dyadic {
        sc.dyadic.strict = true;
    }
    sc.validate()?;
    Ok(sc)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut sc = scenario(&cli)?;
    let suites: Vec<Suite> = match cli.command {
        Command::Space => {
            let space = make_space(&sc.space, sc.seed)?;
            let d = space.doubling_constant();
            let info = serde_json::json!({
                "space": sc.space.to_string(),
                "points": space.len(),
                "total_mass": space.total_mass(),
                "a0": space.a0(),
                "diameter": space.diameter(),
                "min_distance": space.min_positive_distance(),
                "doubling": d.c_mu,
                "upper_dimension": d.upper_dimension(),
            });
            println!("{}", serde_json::to_string_pretty(&info)?);
            return Ok(true);
        }
        Command::Dyadic => vec![Suite::DyadicAxioms],
        Command::Verify => vec![Suite::Weights, Suite::Oscillation, Suite::Haar, Suite::Sparse],
        Command::Dominate => vec![Suite::Domination],
        Command::Compactness => vec![Suite::Compactness],
        Command::Bilinear => vec![Suite::Bilinear],
        Command::Witness => vec![Suite::LowerBound],
        Command::Report => sc.suites.clone(),
    };
    sc.suites = suites;
    let report = run_suite(&sc)?;
    print!("{}", report.summary());
    if let Some(dir) = &cli.out {
        report.write(dir).with_context(|| format!("writing report to {}", dir.display()))?;
    }
    Ok(report.hard_failures().is_empty())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
