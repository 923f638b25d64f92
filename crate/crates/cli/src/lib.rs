//! Command implementations behind the `surfwarp` binary.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use surfwarp_core::contact_sim::{ContactEnv, Scenario};
use surfwarp_core::geometry::{build_guide, Surface, SurfaceFamily};
use surfwarp_core::metrics::{
    collision_count, summarize_pairs, write_summary_csv, ContinuityReport, PairRecord, PairSummary,
    BAD_RATE_AGGREGATION,
};
use surfwarp_core::offline_warp::{
    default_tolerance, tool_axis, warp_traced, Track, WarpOutcome, WarpedTrajectory,
};
use surfwarp_core::online_exec::{execute_trajectory, ExecutionSummary};

pub use config::{load_config, FamilyGrid, GridPoint, PipelineConfig, RunConfig, SweepConfig};

pub const OUT_ENV: &str = "SURFWARP_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] surfwarp_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `--out`, then the config's `output_dir`, then `$SURFWARP_OUT`. The
/// directory must already exist.
pub fn resolve_output_dir(
    flag: Option<PathBuf>,
    configured: Option<&PathBuf>,
) -> Result<PathBuf, CliError> {
    let dir = flag
        .or_else(|| configured.cloned())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Config(format!(
                "no output directory: pass --out, set output_dir or {OUT_ENV}"
            ))
        })?;
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "output directory {} does not exist",
            dir.display()
        )));
    }
    Ok(dir)
}

/// Loads a scenario file, or the event-free default, and applies a seed
/// override.
pub fn resolve_scenario(path: Option<&Path>, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut scenario = match path {
        Some(p) => Scenario::load(p)
            .map_err(|e| CliError::Config(format!("scenario {}: {e}", p.display())))?,
        None => Scenario::default(),
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    Ok(scenario)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub n_steps: usize,
    pub p95_deg: f64,
    pub bad_rate: f64,
    pub bad_count: usize,
    pub collisions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformStats {
    pub increments: usize,
    pub max_step_ratio: f64,
    pub min_jacobian_tip: f64,
    pub min_jacobian_base: f64,
    pub stale_axis: usize,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpReport {
    pub surface: Surface,
    pub x_range: [f64; 2],
    pub n_poses: usize,
    pub bad_step_deg: f64,
    pub clearance_tol: f64,
    pub collision_samples: usize,
    pub tiled: TrajectoryMetrics,
    pub warped: TrajectoryMetrics,
    pub deformation: DeformStats,
}

impl WarpReport {
    pub fn pair(&self, tiled: ContinuityReport, warped: ContinuityReport) -> PairRecord {
        PairRecord {
            tiled,
            warped,
            collisions_tiled: self.tiled.collisions,
            collisions_warped: self.warped.collisions,
        }
    }
}

/// One tiled / warped pair with its metrics.
pub struct Evaluation {
    pub outcome: WarpOutcome,
    pub report: WarpReport,
    pub pair: PairRecord,
}

pub fn evaluate(
    surface: &Surface,
    x_range: [f64; 2],
    cfg: &PipelineConfig,
) -> Result<Evaluation, CliError> {
    let guide = build_guide(surface, x_range[0], x_range[1], cfg.guide_samples)?;
    let tol = cfg.tolerance.unwrap_or_else(|| default_tolerance(&guide));
    let outcome = warp_traced(&cfg.primitive, &guide, surface, &cfg.deform, tol)?;

    let th = cfg.bad_step_deg.to_radians();
    let tiled = ContinuityReport::from_poses(&outcome.tiled.poses, th)?;
    let warped = ContinuityReport::from_poses(&outcome.warped.poses, th)?;
    let e_c = tool_axis();
    let collisions = |poses| {
        collision_count(
            poses,
            cfg.primitive.tool_length,
            &e_c,
            surface,
            cfg.clearance_tol,
            cfg.collision_samples,
        )
    };
    let metrics = |r: &ContinuityReport, collisions| TrajectoryMetrics {
        n_steps: r.n_steps,
        p95_deg: r.p95.to_degrees(),
        bad_rate: r.bad_rate,
        bad_count: r.bad_count,
        collisions,
    };
    let trace = &outcome.trace;
    let report = WarpReport {
        surface: surface.clone(),
        x_range,
        n_poses: outcome.tiled.len(),
        bad_step_deg: cfg.bad_step_deg,
        clearance_tol: cfg.clearance_tol,
        collision_samples: cfg.collision_samples,
        tiled: metrics(&tiled, collisions(&outcome.tiled.poses)?),
        warped: metrics(&warped, collisions(&outcome.warped.poses)?),
        deformation: DeformStats {
            increments: trace.increments.len(),
            max_step_ratio: trace.max_step_ratio(cfg.deform.step_cap),
            // No increments: the composed map is the identity.
            min_jacobian_tip: trace.min_jacobian_det(Track::Tip).unwrap_or(1.0),
            min_jacobian_base: trace.min_jacobian_det(Track::Base).unwrap_or(1.0),
            stale_axis: outcome.warped.stale_axis.len(),
        },
    };
    let pair = report.pair(tiled, warped);
    Ok(Evaluation {
        outcome,
        report,
        pair,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(surfwarp_core::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_warp_files(dir: &Path, eval: &Evaluation) -> Result<(), CliError> {
    let mut tiled = create(&dir.join("tiled.csv"))?;
    eval.outcome.tiled.write_csv(&mut tiled)?;
    tiled.flush()?;
    let mut warped = create(&dir.join("warped.csv"))?;
    eval.outcome.warped.write_csv(&mut warped)?;
    warped.flush()?;
    write_json(&dir.join("report.json"), &eval.report)
}

/// Writes `tiled.csv`, `warped.csv` and `report.json` into `out`.
pub fn cmd_warp(cfg: &RunConfig, out: &Path) -> Result<WarpReport, CliError> {
    let eval = evaluate(&cfg.surface, cfg.x_range, &cfg.pipeline)?;
    write_warp_files(out, &eval)?;
    Ok(eval.report)
}

#[derive(Serialize)]
struct ExecutionReport<'a> {
    #[serde(flatten)]
    summary: &'a ExecutionSummary,
    scenario: &'a Scenario,
}

fn execute_into(
    dir: &Path,
    surface: &Surface,
    warped: &WarpedTrajectory,
    scenario: &Scenario,
    cfg: &PipelineConfig,
) -> Result<ExecutionSummary, CliError> {
    scenario.check_horizon(warped.len())?;
    let mut env = ContactEnv::new(surface.clone(), scenario)?;
    let log = execute_trajectory(warped, &mut env, &cfg.exec)?;
    let mut csv = create(&dir.join("execution.csv"))?;
    log.write_csv(&mut csv)?;
    csv.flush()?;
    let summary = log.summarize(scenario, &cfg.exec);
    write_json(
        &dir.join("summary.json"),
        &ExecutionReport {
            summary: &summary,
            scenario,
        },
    )?;
    Ok(summary)
}

/// Warps in-line, then runs the closed loop and writes `execution.csv` and
/// `summary.json`. A sensor fault still writes the partial log; the
/// returned summary carries it.
pub fn cmd_execute(
    cfg: &RunConfig,
    scenario: &Scenario,
    out: &Path,
) -> Result<ExecutionSummary, CliError> {
    let eval = evaluate(&cfg.surface, cfg.x_range, &cfg.pipeline)?;
    execute_into(
        out,
        &cfg.surface,
        &eval.outcome.warped,
        scenario,
        &cfg.pipeline,
    )
}

/// Per-run line of `runs.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub family: SurfaceFamily,
    pub index: usize,
    pub point: GridPoint,
    pub x_range: [f64; 2],
    pub report: Option<WarpReport>,
    pub execution: Option<ExecutionSummary>,
    pub error: Option<String>,
}

impl RunRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn dir_name(&self) -> String {
        format!("{}_{}", self.family, self.index)
    }
}

pub const RUNS_HEADER: &str = "family,index,amplitude,frequency,scale,x_min,x_max,n_steps,\
p95_tiled_deg,p95_warped_deg,bad_rate_tiled,bad_rate_warped,collisions_tiled,collisions_warped,\
increments,min_jacobian_tip,min_jacobian_base,status";

fn write_runs_csv<W: Write>(mut out: W, runs: &[RunRow]) -> Result<(), CliError> {
    writeln!(out, "{RUNS_HEADER}")?;
    for r in runs {
        let p = &r.point;
        write!(
            out,
            "{},{},{},{},{},{},{},",
            r.family, r.index, p.amplitude, p.frequency, p.scale, r.x_range[0], r.x_range[1]
        )?;
        match &r.report {
            Some(rep) => write!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{},{},{},{:.6},{:.6},",
                rep.tiled.n_steps,
                rep.tiled.p95_deg,
                rep.warped.p95_deg,
                rep.tiled.bad_rate,
                rep.warped.bad_rate,
                rep.tiled.collisions,
                rep.warped.collisions,
                rep.deformation.increments,
                rep.deformation.min_jacobian_tip,
                rep.deformation.min_jacobian_base
            )?,
            None => write!(out, ",,,,,,,,,,")?,
        }
        match &r.error {
            None => writeln!(out, "ok")?,
            Some(e) => writeln!(out, "failed: {}", e.replace([',', '\n'], ";"))?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    bad_rate_aggregation: &'a str,
    percentile: &'a str,
    n_runs: usize,
    n_failed: usize,
    config: &'a SweepConfig,
    scenario: Option<&'a Scenario>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<PairSummary>,
    pub runs: Vec<RunRow>,
}

impl SweepOutcome {
    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok()).count()
    }
}

struct Job<'a> {
    family: SurfaceFamily,
    index: usize,
    point: &'a GridPoint,
    x_range: [f64; 2],
}

/// Runs every grid point of every family (in parallel), writing per-run
/// artifacts under `runs/<family>_<index>/` and the aggregate
/// `summary_table.csv`, `runs.csv` and `sweep_meta.json` into `out`.
/// Failed runs are reported in `runs.csv` and left out of the summary.
pub fn cmd_sweep(
    cfg: &SweepConfig,
    scenario: Option<&Scenario>,
    out: &Path,
) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    let mut families: Vec<SurfaceFamily> = Vec::new();
    let mut jobs = Vec::new();
    for grid in &cfg.families {
        if !families.contains(&grid.family) {
            families.push(grid.family);
        }
        for point in &grid.points {
            let index = jobs
                .iter()
                .filter(|j: &&Job| j.family == grid.family)
                .count();
            jobs.push(Job {
                family: grid.family,
                index,
                point,
                x_range: grid.x_range,
            });
        }
    }
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;

    let results: Vec<(RunRow, Option<PairRecord>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(n, job)| {
            let mut row = RunRow {
                family: job.family,
                index: job.index,
                point: job.point.clone(),
                x_range: job.x_range,
                report: None,
                execution: None,
                error: None,
            };
            let scenario = scenario.map(|s| Scenario {
                seed: cfg.seed.wrapping_add(n as u64),
                ..s.clone()
            });
            let dir = runs_dir.join(row.dir_name());
            match run_job(job, &dir, &cfg.pipeline, scenario.as_ref()) {
                Ok((eval, exec)) => {
                    row.report = Some(eval.report);
                    row.execution = exec;
                    (row, Some(eval.pair))
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    (row, None)
                }
            }
        })
        .collect();

    let mut rows = Vec::new();
    for family in families {
        let pairs: Vec<PairRecord> = results
            .iter()
            .filter(|(r, _)| r.family == family)
            .filter_map(|(_, p)| p.clone())
            .collect();
        if !pairs.is_empty() {
            rows.push(summarize_pairs(&pairs, family)?);
        }
    }
    let runs: Vec<RunRow> = results.into_iter().map(|(r, _)| r).collect();

    let mut table = create(&out.join("summary_table.csv"))?;
    write_summary_csv(&mut table, &rows)?;
    table.flush()?;
    let mut runs_csv = create(&out.join("runs.csv"))?;
    write_runs_csv(&mut runs_csv, &runs)?;
    runs_csv.flush()?;
    let failed = runs.iter().filter(|r| !r.ok()).count();
    write_json(
        &out.join("sweep_meta.json"),
        &SweepMeta {
            bad_rate_aggregation: BAD_RATE_AGGREGATION,
            percentile: "nearest_rank",
            n_runs: runs.len(),
            n_failed: failed,
            config: cfg,
            scenario,
        },
    )?;
    Ok(SweepOutcome { rows, runs })
}

fn run_job(
    job: &Job,
    dir: &Path,
    cfg: &PipelineConfig,
    scenario: Option<&Scenario>,
) -> Result<(Evaluation, Option<ExecutionSummary>), CliError> {
    let surface = job.point.surface(job.family);
    let eval = evaluate(&surface, job.x_range, cfg)?;
    fs::create_dir_all(dir)?;
    write_warp_files(dir, &eval)?;
    let exec = scenario
        .map(|s| execute_into(dir, &surface, &eval.outcome.warped, s, cfg))
        .transpose()?;
    Ok((eval, exec))
}
