use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use surfwarp_cli::{
    cmd_execute, cmd_sweep, cmd_warp, load_config, resolve_output_dir, resolve_scenario, CliError,
    RunConfig, SweepConfig,
};

/// Surface warping of periodic tool primitives, closed-loop execution and
/// parameter sweeps.
#[derive(Parser, Debug)]
#[command(name = "surfwarp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; defaults are used for absent fields
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (must exist); falls back to the config's output_dir,
    /// then SURFWARP_OUT
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Scenario JSON for execution
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Seed for the simulated sensor noise
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override a config field, e.g. --set pipeline.deform.step_cap=0.3
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Warp one configuration and write tiled/warped trajectories and a report
    Warp,
    /// Warp one configuration and run it against the simulated contact sensor
    Execute,
    /// Warp every grid point of every family and write the summary table
    Sweep,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let started = Instant::now();
    let code = match cli.command {
        Command::Warp => {
            let cfg: RunConfig = load_config(cli.config.as_deref(), &cli.overrides)?;
            let out = resolve_output_dir(cli.out, cfg.output_dir.as_ref())?;
            let r = cmd_warp(&cfg, &out)?;
            eprintln!(
                "warp: {} poses, bad rate {:.4} -> {:.4}, p95 {:.2} -> {:.2} deg, collisions {} -> {}",
                r.n_poses,
                r.tiled.bad_rate,
                r.warped.bad_rate,
                r.tiled.p95_deg,
                r.warped.p95_deg,
                r.tiled.collisions,
                r.warped.collisions
            );
            0
        }
        Command::Execute => {
            let cfg: RunConfig = load_config(cli.config.as_deref(), &cli.overrides)?;
            let out = resolve_output_dir(cli.out, cfg.output_dir.as_ref())?;
            let path = cli.scenario.or_else(|| cfg.scenario.clone());
            let scenario = resolve_scenario(path.as_deref(), cli.seed.or(cfg.seed))?;
            let s = cmd_execute(&cfg, &scenario, &out)?;
            eprintln!(
                "execute: {} steps, deadband {:.3}, max deviation {:.3} deg",
                s.n_steps, s.deadband_fraction, s.max_deviation_deg
            );
            if let Some(f) = &s.fault {
                eprintln!("execute: stopped at step {}: {}", f.step, f.message);
                1
            } else {
                0
            }
        }
        Command::Sweep => {
            let mut cfg: SweepConfig = load_config(cli.config.as_deref(), &cli.overrides)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let out = resolve_output_dir(cli.out, cfg.output_dir.as_ref())?;
            let path = cli.scenario.or_else(|| cfg.scenario.clone());
            let scenario = path.map(|p| resolve_scenario(Some(&p), None)).transpose()?;
            let outcome = cmd_sweep(&cfg, scenario.as_ref(), &out)?;
            let failed = outcome.failed();
            eprintln!(
                "sweep: {} runs, {failed} failed, {} families",
                outcome.runs.len(),
                outcome.rows.len()
            );
            for r in outcome.runs.iter().filter(|r| !r.ok()) {
                eprintln!(
                    "sweep: {} failed: {}",
                    r.dir_name(),
                    r.error.as_deref().unwrap_or("")
                );
            }
            u8::from(failed > 0)
        }
    };
    eprintln!("done in {:.2} s", started.elapsed().as_secs_f64());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("surfwarp: {e}");
            ExitCode::from(2)
        }
    }
}
