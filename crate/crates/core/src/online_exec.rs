//! Online execution: bounded force-driven corrections of each warped pose
//! followed by a conic filter on the tool axis.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::contact_sim::{ContactEnv, EventKind, Scenario};
use crate::error::{config, Error, Result};
use crate::geometry::{angle_between, exp_map, perpendicular_axis, Pose};
use crate::offline_warp::{tool_axis, WarpedTrajectory};

/// Below this, `u × g` is treated as zero and no rotation is corrected.
pub const PARALLEL_AXIS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecParams {
    /// Target reading.
    pub f_star: f64,
    pub deadband: f64,
    /// Meters per unit reading error.
    pub kappa_p: f64,
    /// Radians per unit reading error.
    pub kappa_r: f64,
    /// Translation bound per step, meters.
    pub delta_max: f64,
    pub delta_max_fsr: f64,
    /// Cone half-angle, radians.
    pub theta: f64,
    pub delta_max_cone: f64,
    /// Upward correction direction.
    pub g_hat: Vector3<f64>,
    pub e_c: Vector3<f64>,
    pub axis_eps: f64,
}

impl Default for ExecParams {
    fn default() -> Self {
        Self {
            f_star: 0.5,
            deadband: 0.05,
            kappa_p: 0.05,
            kappa_r: 0.2,
            delta_max: 0.005,
            delta_max_fsr: 0.15,
            theta: 0.2,
            delta_max_cone: 0.1,
            g_hat: Vector3::z(),
            e_c: tool_axis(),
            axis_eps: 1e-9,
        }
    }
}

impl ExecParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa_p", self.kappa_p),
            ("kappa_r", self.kappa_r),
            ("delta_max", self.delta_max),
            ("delta_max_fsr", self.delta_max_fsr),
            ("delta_max_cone", self.delta_max_cone),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::FRAC_PI_2) {
            return Err(config(format!("theta {} outside (0, pi/2)", self.theta)));
        }
        if !(self.deadband.is_finite() && self.deadband >= 0.0) {
            return Err(config(format!(
                "deadband must be >= 0, got {}",
                self.deadband
            )));
        }
        if !(0.0..=1.0).contains(&self.f_star) {
            return Err(config(format!("f_star {} outside [0, 1]", self.f_star)));
        }
        if !(self.axis_eps.is_finite() && self.axis_eps >= 0.0) {
            return Err(config(format!(
                "axis_eps must be >= 0, got {}",
                self.axis_eps
            )));
        }
        for (name, v) in [("g_hat", &self.g_hat), ("e_c", &self.e_c)] {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(config(format!("{name} must be a unit vector, got {v:?}")));
            }
        }
        Ok(())
    }
}

/// Reading error `F - F*`.
pub fn contact_error(force: f64, params: &ExecParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&force) {
        return Err(Error::Measurement(force));
    }
    Ok(force - params.f_star)
}

pub fn saturate(xi: f64, bound: f64) -> f64 {
    xi.clamp(-bound, bound)
}

/// Regularized direction `c / (|c| + eps)`, rescaled to unit length so a
/// rotation about it turns by exactly the requested angle. `None` when `c`
/// is below [`PARALLEL_AXIS_TOL`].
fn unit_axis(c: &Vector3<f64>, eps: f64) -> Option<Vector3<f64>> {
    let norm = c.norm();
    if norm < PARALLEL_AXIS_TOL {
        return None;
    }
    let a = c / (norm + eps);
    Some(a / a.norm())
}

/// Disturbance candidate around `warp`: a bounded shift along `g_hat` and a
/// bounded tilt about `u × g_hat`. Inside the deadband `warp` comes back
/// unchanged.
pub fn fsr_candidate(warp: &Pose, force: f64, params: &ExecParams) -> Result<Pose> {
    let e = contact_error(force, params)?;
    if e.abs() <= params.deadband {
        return Ok(*warp);
    }
    let shift = saturate(params.kappa_p * e, params.delta_max);
    let position = warp.position + shift * params.g_hat;

    let u = warp.axis(&params.e_c);
    let Some(axis) = unit_axis(&u.cross(&params.g_hat), params.axis_eps) else {
        return Ok(Pose::new(warp.rotation, position));
    };
    let tilt = saturate(params.kappa_r * e, params.delta_max_fsr);
    Ok(Pose::new(
        exp_map(&(-tilt * axis)) * warp.rotation,
        position,
    ))
}

/// Pushes the candidate axis back toward the warp axis by at most
/// `delta_max_cone`, only as far as needed to reach the cone boundary.
/// Returns the filtered pose and the applied angle.
pub fn conic_filter(candidate: &Pose, warp: &Pose, params: &ExecParams) -> Result<(Pose, f64)> {
    let u_can = candidate.axis(&params.e_c);
    let u_warp = warp.axis(&params.e_c);
    let phi = angle_between(&u_can, &u_warp)?;
    let delta = (phi - params.theta).max(0.0).min(params.delta_max_cone);
    if delta == 0.0 {
        return Ok((*candidate, 0.0));
    }
    let axis = unit_axis(&u_can.cross(&u_warp), params.axis_eps)
        .unwrap_or_else(|| perpendicular_axis(&u_can));
    let rotation = exp_map(&(delta * axis)) * candidate.rotation;
    Ok((Pose::new(rotation, candidate.position), delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub candidate: Pose,
    pub projected: Pose,
    pub contact_error: f64,
    /// Candidate axis deviation from the warp axis, radians.
    pub phi: f64,
    pub delta_cone: f64,
}

impl StepResult {
    /// Axis deviation of the projected pose from `warp`.
    pub fn deviation(&self, warp: &Pose, e_c: &Vector3<f64>) -> Result<f64> {
        angle_between(&self.projected.axis(e_c), &warp.axis(e_c))
    }
}

pub fn execute_step(warp: &Pose, force: f64, params: &ExecParams) -> Result<StepResult> {
    let contact_error = contact_error(force, params)?;
    let candidate = fsr_candidate(warp, force, params)?;
    let phi = angle_between(&candidate.axis(&params.e_c), &warp.axis(&params.e_c))?;
    let (projected, delta_cone) = conic_filter(&candidate, warp, params)?;
    Ok(StepResult {
        candidate,
        projected,
        contact_error,
        phi,
        delta_cone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub force: f64,
    pub contact: bool,
    /// Warp pose shifted by the accumulated vertical offset.
    pub reference: Pose,
    pub result: StepResult,
    /// Projected axis deviation from the warp axis, radians.
    pub deviation: f64,
    pub event_flag: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionFault {
    pub step: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub steps: Vec<StepRecord>,
    pub fault: Option<ExecutionFault>,
}

pub const EXECUTION_HEADER: &str = "k,F,e,phi_deg,delta_cone_deg,px,py,pz,qw,qx,qy,qz,event_flag";

/// Runs the warped trajectory against `env`, one step per pose.
///
/// Each step reads the sensor at the reference pose (the warp pose plus the
/// vertical offset accumulated by earlier corrections). Contact samples are
/// corrected from the reading; free samples only hold the offset. Every
/// step goes through the conic filter. A sensor or step failure stops the
/// run and the partial log carries the fault.
pub fn execute_trajectory(
    warped: &WarpedTrajectory,
    env: &mut ContactEnv,
    params: &ExecParams,
) -> Result<ExecutionLog> {
    params.validate()?;
    let contact = warped.contact_mask();
    let mut log = ExecutionLog::default();
    let mut offset = 0.0;
    for (k, warp) in warped.poses.iter().enumerate() {
        let reference = Pose::new(warp.rotation, warp.position + offset * params.g_hat);
        let step = env.measure(&reference.position).and_then(|force| {
            let result = if contact[k] {
                execute_step(&reference, force, params)?
            } else {
                let (projected, delta_cone) = conic_filter(&reference, warp, params)?;
                StepResult {
                    candidate: reference,
                    projected,
                    contact_error: contact_error(force, params)?,
                    phi: 0.0,
                    delta_cone,
                }
            };
            let deviation = result.deviation(warp, &params.e_c)?;
            Ok((force, result, deviation))
        });
        let (force, result, deviation) = match step {
            Ok(s) => s,
            Err(e) => {
                log.fault = Some(ExecutionFault {
                    step: k,
                    message: e.to_string(),
                });
                break;
            }
        };
        offset = (result.projected.position - warp.position).dot(&params.g_hat);
        log.steps.push(StepRecord {
            k,
            force,
            contact: contact[k],
            reference,
            result,
            deviation,
            event_flag: env.event_flags(),
        });
        env.advance();
    }
    Ok(log)
}

/// Recovery after one height drop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub at_step: usize,
    pub magnitude: f64,
    /// First contact step at or after the drop with the error inside the
    /// deadband.
    pub recovered_at: Option<usize>,
    pub steps: Option<usize>,
    /// `ceil(h / delta_max) + 5`.
    pub bound: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionSummary {
    pub n_steps: usize,
    pub contact_steps: usize,
    /// Share of contact steps inside the deadband.
    pub deadband_fraction: f64,
    pub max_deviation: f64,
    pub max_deviation_deg: f64,
    pub max_translation: f64,
    pub recoveries: Vec<Recovery>,
    pub fault: Option<ExecutionFault>,
}

impl ExecutionLog {
    pub fn summarize(&self, scenario: &Scenario, params: &ExecParams) -> ExecutionSummary {
        let in_band = |r: &StepRecord| r.result.contact_error.abs() <= params.deadband;
        let contact: Vec<&StepRecord> = self.steps.iter().filter(|r| r.contact).collect();
        let deadband_fraction = if contact.is_empty() {
            0.0
        } else {
            contact.iter().filter(|r| in_band(r)).count() as f64 / contact.len() as f64
        };
        let max_deviation = self.steps.iter().map(|r| r.deviation).fold(0.0, f64::max);
        let max_translation = self
            .steps
            .iter()
            .map(|r| (r.result.projected.position - r.reference.position).norm())
            .fold(0.0, f64::max);
        let recoveries = scenario
            .events
            .iter()
            .filter(|e| e.kind == EventKind::HeightDrop)
            .map(|e| {
                let recovered_at = contact
                    .iter()
                    .find(|r| r.k >= e.at_step && in_band(r))
                    .map(|r| r.k);
                Recovery {
                    at_step: e.at_step,
                    magnitude: e.magnitude,
                    recovered_at,
                    steps: recovered_at.map(|k| k - e.at_step),
                    bound: (e.magnitude.abs() / params.delta_max).ceil() as usize + 5,
                }
            })
            .collect();
        ExecutionSummary {
            n_steps: self.steps.len(),
            contact_steps: contact.len(),
            deadband_fraction,
            max_deviation,
            max_deviation_deg: max_deviation.to_degrees(),
            max_translation,
            recoveries,
            fault: self.fault.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{EXECUTION_HEADER}")?;
        for r in &self.steps {
            let p = r.result.projected.position;
            let [qw, qx, qy, qz] = r.result.projected.rotation.wxyz();
            writeln!(
                out,
                "{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{}",
                r.k,
                r.force,
                r.result.contact_error,
                r.result.phi.to_degrees(),
                r.result.delta_cone.to_degrees(),
                p.x,
                p.y,
                p.z,
                qw,
                qx,
                qy,
                qz,
                r.event_flag
            )?;
        }
        Ok(())
    }
}
