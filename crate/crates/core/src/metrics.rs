//! Continuity and collision metrics for paired tiled / warped trajectories.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{geodesic_angle, Pose, Surface, SurfaceFamily};

/// Steps larger than this count as bad by default.
pub const DEFAULT_BAD_STEP_DEG: f64 = 10.0;

/// Tool-segment sampling density used by the production collision check.
pub const PRODUCTION_AXIS_SAMPLES: usize = 32;

/// Per-step rotation angles between consecutive poses.
pub fn angular_steps(poses: &[Pose]) -> Result<Vec<f64>> {
    if poses.len() < 2 {
        return Err(domain(format!(
            "need at least 2 poses, got {}",
            poses.len()
        )));
    }
    Ok(poses
        .windows(2)
        .map(|w| geodesic_angle(&w[1].rotation, &w[0].rotation))
        .collect())
}

/// Nearest-rank 95th percentile: the element at `ceil(0.95 n) - 1` of the
/// sorted values.
pub fn percentile_95(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(domain("percentile of an empty sequence"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = (95 * n).div_ceil(100);
    Ok(sorted[rank - 1])
}

fn bad_step_count(values: &[f64], threshold: f64) -> usize {
    values.iter().filter(|&&v| v > threshold).count()
}

/// Fraction of values strictly above `threshold` (radians).
pub fn bad_step_rate(values: &[f64], threshold: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(domain("bad-step rate of an empty sequence"));
    }
    Ok(bad_step_count(values, threshold) as f64 / values.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Per-step angles, radians.
    pub d_theta: Vec<f64>,
    pub p95: f64,
    pub bad_rate: f64,
    pub bad_count: usize,
    pub n_steps: usize,
}

impl ContinuityReport {
    pub fn from_poses(poses: &[Pose], threshold: f64) -> Result<Self> {
        let d_theta = angular_steps(poses)?;
        let p95 = percentile_95(&d_theta)?;
        let bad_count = bad_step_count(&d_theta, threshold);
        let n_steps = d_theta.len();
        Ok(Self {
            d_theta,
            p95,
            bad_rate: bad_count as f64 / n_steps as f64,
            bad_count,
            n_steps,
        })
    }
}

/// Counts poses whose tool segment dips more than `clearance_tol` below the
/// surface. The segment runs from the tip to the base (`tool_length` back
/// along `e_c`) and is sampled at `samples_per_axis` uniform parameters;
/// the tip sample itself is exempt.
pub fn collision_count(
    poses: &[Pose],
    tool_length: f64,
    e_c: &Vector3<f64>,
    surface: &Surface,
    clearance_tol: f64,
    samples_per_axis: usize,
) -> Result<usize> {
    if samples_per_axis < 2 {
        return Err(domain(format!(
            "collision check needs >= 2 samples per axis, got {samples_per_axis}"
        )));
    }
    let last = (samples_per_axis - 1) as f64;
    Ok(poses
        .iter()
        .filter(|pose| {
            let back = -tool_length * pose.rotation.rotate(e_c);
            (1..samples_per_axis).any(|i| {
                let p = pose.position + back * (i as f64 / last);
                surface.clearance(&p) < -clearance_tol
            })
        })
        .count())
}

/// Continuity and collision results of one tiled / warped pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub tiled: ContinuityReport,
    pub warped: ContinuityReport,
    pub collisions_tiled: usize,
    pub collisions_warped: usize,
}

impl PairRecord {
    /// `p95(warped) - p95(tiled)`, degrees.
    pub fn delta_p95_deg(&self) -> f64 {
        (self.warped.p95 - self.tiled.p95).to_degrees()
    }
}

/// One row of the surface-family continuity table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub surface_family: SurfaceFamily,
    pub n_pairs: usize,
    /// Total tiled pose transitions.
    pub n_steps: usize,
    pub median_delta_p95: f64,
    pub bad_rate_tiled: f64,
    pub bad_rate_warped: f64,
    pub delta_bad: f64,
    pub collisions_tiled: usize,
    pub collisions_warped: usize,
}

pub const SUMMARY_HEADER: &str = "surface_family,n_pairs,n_steps,median_delta_p95,\
bad_rate_tiled,bad_rate_warped,delta_bad,collisions_tiled,collisions_warped";

/// How bad-step rates are pooled across pairs in [`summarize_pairs`].
pub const BAD_RATE_AGGREGATION: &str = "step_weighted";

/// Median over pairs of the p95 change (degrees), step-weighted bad rates,
/// summed collisions.
pub fn summarize_pairs(pairs: &[PairRecord], family: SurfaceFamily) -> Result<PairSummary> {
    if pairs.is_empty() {
        return Err(domain(format!("no pairs to summarize for {family}")));
    }
    let mut deltas: Vec<f64> = pairs.iter().map(PairRecord::delta_p95_deg).collect();
    deltas.sort_by(f64::total_cmp);
    let mid = deltas.len() / 2;
    let median = if deltas.len() % 2 == 1 {
        deltas[mid]
    } else {
        0.5 * (deltas[mid - 1] + deltas[mid])
    };

    let steps_t: usize = pairs.iter().map(|p| p.tiled.n_steps).sum();
    let steps_w: usize = pairs.iter().map(|p| p.warped.n_steps).sum();
    let bad_t: usize = pairs.iter().map(|p| p.tiled.bad_count).sum();
    let bad_w: usize = pairs.iter().map(|p| p.warped.bad_count).sum();
    let bad_rate_tiled = bad_t as f64 / steps_t as f64;
    let bad_rate_warped = bad_w as f64 / steps_w as f64;

    Ok(PairSummary {
        surface_family: family,
        n_pairs: pairs.len(),
        n_steps: steps_t,
        median_delta_p95: median,
        bad_rate_tiled,
        bad_rate_warped,
        delta_bad: bad_rate_tiled - bad_rate_warped,
        collisions_tiled: pairs.iter().map(|p| p.collisions_tiled).sum(),
        collisions_warped: pairs.iter().map(|p| p.collisions_warped).sum(),
    })
}

/// Writes the summary table, one row per family in the given order.
pub fn write_summary_csv<W: Write>(mut out: W, rows: &[PairSummary]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{}",
            r.surface_family,
            r.n_pairs,
            r.n_steps,
            r.median_delta_p95,
            r.bad_rate_tiled,
            r.bad_rate_warped,
            r.delta_bad,
            r.collisions_tiled,
            r.collisions_warped
        )?;
    }
    Ok(())
}
