use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use vanish_core::harness::{self, ConvergenceReport, ExperimentConfig, Solver};
use vanish_core::Error;

/// Solvers for zero-sum stochastic games with vanishing stage duration.
#[derive(Debug, Parser)]
#[command(name = "vanish-games", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem file (game, differential game or matrix); overrides `spec` in the config.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write a gnuplot script.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a single matrix game.
    Matgame(Common),
    /// Backward induction of the observed game on a partition.
    SolveObserved(Common),
    /// Stationary value of the discounted discretized game.
    SolveStationary(Common),
    /// Solve the limit equation.
    LimitEq(Common),
    /// Lower bound guaranteed by the limit strategy.
    Guarantee(Common),
    /// Belief-space value on a simplex grid.
    SolveBelief(Common),
    /// Joint refinement of stage duration and belief grid.
    BeliefSweep(Common),
    /// Pure-strategy lower and upper values of a differential game.
    DiffgamePure(Common),
    /// Relaxed (mixed-control) values of a differential game.
    DiffgameRelaxed(Common),
    /// Value with randomized stage actions.
    DiffgameRandom(Common),
    /// Sampled Isaacs-condition check.
    Isaacs(Common),
    /// HJI residual of the computed value at probe points.
    HjiResidual(Common),
    /// Run two configs and compare their value vectors row by row.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Second config; same problem file unless it names its own.
        #[arg(long)]
        other: PathBuf,
        /// Largest accepted sup difference.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Write a seeded random game instance described by the config's `[instance]`.
    RandomInstance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(common: &Common, path: &Path) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(spec) = &common.spec {
        cfg.spec = Some(spec.clone());
    } else if let Some(spec) = &cfg.spec {
        // Relative problem paths are taken relative to the config file.
        if spec.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.spec = Some(dir.join(spec));
            }
        }
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.gnuplot |= common.gnuplot;
    Ok(cfg)
}

fn print_report(report: &ConvergenceReport) {
    println!("{} ({})", report.solver, report.metric);
    for r in &report.rows {
        println!(
            "  {:<40} {:>14}  {:.3}s",
            r.params.to_string(),
            harness::num(r.metric),
            r.runtime_secs
        );
    }
    if let Some(s) = report.slope {
        println!("  slope {s:.4}");
    }
}

fn solve(solver: Solver, common: &Common) -> anyhow::Result<()> {
    let cfg = load_config(common, &common.config)?;
    let out = harness::run(&cfg, Some(solver))?;
    print_report(out.report());
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    let (solver, common) = match &cli.command {
        Command::Matgame(c) => (Solver::Matgame, c),
        Command::SolveObserved(c) => (Solver::SolveObserved, c),
        Command::SolveStationary(c) => (Solver::SolveStationary, c),
        Command::LimitEq(c) => (Solver::LimitEq, c),
        Command::Guarantee(c) => (Solver::Guarantee, c),
        Command::SolveBelief(c) => (Solver::SolveBelief, c),
        Command::BeliefSweep(c) => (Solver::BeliefSweep, c),
        Command::DiffgamePure(c) => (Solver::DiffgamePure, c),
        Command::DiffgameRelaxed(c) => (Solver::DiffgameRelaxed, c),
        Command::DiffgameRandom(c) => (Solver::DiffgameRandom, c),
        Command::Isaacs(c) => (Solver::Isaacs, c),
        Command::HjiResidual(c) => (Solver::HjiResidual, c),
        Command::Compare {
            common,
            other,
            tolerance,
        } => {
            let a = load_config(common, &common.config)?;
            let mut b = load_config(common, other)?;
            if common.spec.is_none() && b.spec.is_none() {
                b.spec = a.spec.clone();
            }
            let solver = harness::resolve_solver(&a, None).context("first config")?;
            let ra = harness::run(&a, Some(solver))?;
            b.out = None;
            let rb = harness::run(&b, Some(solver))?;
            let cmp = harness::compare(ra.report(), rb.report())?;
            for (p, v, m) in &cmp.rows {
                println!(
                    "  {:<40} values {:>12}  metric {:>12}",
                    p.to_string(),
                    harness::num(*v),
                    harness::num(*m)
                );
            }
            if let Some(dir) = &a.out {
                let path = cmp.table().write(dir)?;
                println!("wrote {}", path.display());
            }
            let worst = cmp.max_value_diff();
            if worst > *tolerance {
                return Err(Error::ReportMismatch(format!(
                    "largest value difference {} exceeds {}",
                    harness::num(worst),
                    harness::num(*tolerance)
                ))
                .into());
            }
            println!("max value difference {}", harness::num(worst));
            return Ok(());
        }
        Command::RandomInstance { config, out, seed } => {
            let cfg = ExperimentConfig::load(config)?;
            let Some(inst) = &cfg.instance else {
                bail!("{}: no [instance] table", config.display());
            };
            let path = harness::write_random_instance(inst, seed.unwrap_or(cfg.seed), out)?;
            println!("wrote {}", path.display());
            return Ok(());
        }
    };
    solve(solver, common)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 2,
        Some(e) if e.is_non_convergence() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
