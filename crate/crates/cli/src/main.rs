use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use debond_cli::drive::{self, Artifacts};
use debond_cli::{load_config, CliError, Result};

#[derive(Parser)]
#[command(name = "debond", version, about = "Dynamic debonding of a circular thin film")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve with a prescribed front and audit the energy.
    SolvePrescribed(Common),
    /// Solve with the front driven by the Griffith criterion.
    SolveCoupled(Common),
    /// Compare against the finite-difference reference and check the balance laws.
    Verify(Common),
    /// Refinement study over halved steps.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn out_dir(common: &Common, cfg: &debond_cli::RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.outputs.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn summary(a: &Artifacts) {
    let r = &a.report;
    println!(
        "{}: t_end = {:.6}, stop = {:?}, windows = {}, max relative EDP = {:.3e}",
        r.command,
        r.t_end,
        r.stop_reason,
        r.windows.len(),
        r.energy.max_relative_edp
    );
    if let Some(v) = &r.verification {
        for c in &v.checks {
            let mark = if c.skipped { "SKIP" } else if c.passed { "ok" } else { "FAIL" };
            println!("  {:<20} {:>12.4e} {:?} {:.1e}  {mark}", c.name, c.value, c.bound, c.threshold);
        }
    }
    if let Some(c) = &r.convergence {
        for l in &c.levels {
            println!(
                "  dt = {:<10.3e} oracle {:.3e}  rate {:.3e}  edp {:.3e}",
                l.dt, l.oracle_l2, l.rate_l1, l.edp_relative
            );
        }
        if let Some(w) = &c.warning {
            eprintln!("warning: {w}");
        }
    }
    for f in &a.files {
        println!("  wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (common, levels) = match &cli.command {
        Command::SolvePrescribed(c) | Command::SolveCoupled(c) | Command::Verify(c) => (c, 0),
        Command::Converge { common, levels } => (common, *levels),
    };
    let cfg = load_config(&common.config)?;
    let out = out_dir(common, &cfg);
    let artifacts = match &cli.command {
        Command::SolvePrescribed(_) => drive::run_prescribed(&cfg, &out)?,
        Command::SolveCoupled(_) => drive::run_coupled(&cfg, &out)?,
        Command::Verify(_) => drive::run_verify(&cfg, &out)?,
        Command::Converge { .. } => drive::run_convergence(&cfg, levels, &out)?,
    };
    if !common.quiet {
        summary(&artifacts);
    }
    if let Some(v) = &artifacts.report.verification {
        if !v.passed {
            return Err(CliError::Verification(v.failures().join(", ")));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
