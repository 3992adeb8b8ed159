use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use sixflow::diagnostics::Trajectory;
use sixflow::flow::run_flow;
use sixflow::io::{emit, emit_reports, generate_initial, parse_config, InitialSpec, RunConfig};
use sixflow::verify::{psw_suite, trajectory_suite, CheckReport};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "sixflow", version, about = "Sixth-order curve diffusion between two vertical lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress the summary printed to stdout
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides `snapshot_every` from the config
    #[arg(long)]
    snapshot_every: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write diagnostics
    Run(RunArgs),
    /// Simulate, then run every identity and inequality check
    Verify(RunArgs),
    /// Sample the Poincaré-Sobolev-Wirtinger inequalities
    Psw {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Samples per band limit and mode
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run every (A, m, n) cell of the config's [sweep] table
    Sweep(RunArgs),
}

#[derive(Serialize)]
struct Timing {
    wall_time_s: f64,
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(k) = args.snapshot_every {
        anyhow::ensure!(k >= 1, "--snapshot-every: must be >= 1");
        cfg.flow.snapshot_every = k;
    }
    Ok(cfg)
}

fn simulate(cfg: &RunConfig, quiet: bool) -> Result<Trajectory> {
    let initial = generate_initial(&cfg.initial)?;
    if let Some(w) = &initial.warning {
        eprintln!("warning: {w}");
    }
    if !quiet {
        println!(
            "initial: ‖k_s‖₂²L₀³ = {:.6} (threshold {:.6}), δ = {:.6}",
            initial.energy_product, initial.threshold, initial.delta_margin
        );
    }
    Ok(run_flow(&cfg.flow, &initial.curve)?)
}

fn write_outputs(
    traj: &Trajectory,
    initial: &InitialSpec,
    reports: &[CheckReport],
    out: &Path,
) -> Result<()> {
    emit(traj, Some(initial), reports, out)?;
    let timing = serde_json::to_vec(&Timing {
        wall_time_s: traj.metadata.wall_time_s,
    })?;
    fs::write(out.join("timing.json"), timing).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn summarise(traj: &Trajectory, reports: &[CheckReport]) {
    let m = &traj.metadata;
    println!(
        "{} steps ({} rejected), {} snapshots, termination: {:?}",
        m.steps,
        m.rejected_steps,
        traj.snapshots.len(),
        m.termination
    );
    if let Some(last) = traj.snapshots.last() {
        let r = &last.record;
        println!(
            "t = {}, L = {}, E = {:e}, ‖k‖_∞ = {:e}",
            r.time, r.length, r.energy, r.k_inf
        );
    }
    for r in reports {
        println!(
            "{:<20} {} residual {:.3e} (tol {:.1e})",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.residual,
            r.tolerance
        );
    }
}

/// Returns whether every check passed.
fn run_one(cfg: &RunConfig, out: &Path, checks: bool, quiet: bool) -> Result<bool> {
    let traj = simulate(cfg, quiet)?;
    let reports = if checks {
        trajectory_suite(&traj)?
    } else {
        Vec::new()
    };
    write_outputs(&traj, &cfg.initial, &reports, out)?;
    if !quiet {
        summarise(&traj, &reports);
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn sweep(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<bool> {
    let grid = cfg
        .sweep
        .as_ref()
        .context("sweep: config has no [sweep] table")?;
    let mut cells = Vec::new();
    for &a in &grid.amplitude {
        for &m in &grid.mode {
            for &n in &grid.n {
                let mut cell = cfg.clone();
                cell.flow.n = n;
                cell.initial.n = n;
                cell.initial.amplitude = a;
                cell.initial.mode = m;
                cell.sweep = None;
                cells.push((format!("A{a}_m{m}_n{n}"), cell));
            }
        }
    }
    let results: Vec<(String, Result<bool>)> = cells
        .par_iter()
        .map(|(name, cell)| (name.clone(), run_one(cell, &out.join(name), true, true)))
        .collect();
    let mut all_passed = true;
    for (name, result) in results {
        match result {
            Ok(passed) => {
                all_passed &= passed;
                if !quiet {
                    println!("{name}: {}", if passed { "all checks pass" } else { "checks FAILED" });
                }
            }
            Err(e) => {
                all_passed = false;
                eprintln!("{name}: error: {e:#}");
            }
        }
    }
    Ok(all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => load(args).and_then(|cfg| run_one(&cfg, &args.out, false, cli.quiet)),
        Command::Verify(args) => load(args).and_then(|cfg| run_one(&cfg, &args.out, true, cli.quiet)),
        Command::Sweep(args) => load(args).and_then(|cfg| sweep(&cfg, &args.out, cli.quiet)),
        Command::Psw { out, seed, samples } => {
            let reports = psw_suite(*seed, *samples);
            emit_reports(&reports, out)
                .map(|_| {
                    if !cli.quiet {
                        for r in &reports {
                            println!("{:<16} {} {}", r.name, if r.passed { "pass" } else { "FAIL" }, r.context);
                        }
                    }
                    reports.iter().all(|r| r.passed)
                })
                .map_err(Into::into)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
