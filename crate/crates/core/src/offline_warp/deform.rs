use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::tiling::{index_mask, TiledTrajectory};
use super::tool_axis;
use crate::error::{config, Result};
use crate::geometry::Surface;

/// Displacements below this (meters) end the deformation loop.
pub const CONVERGENCE_TOL: f64 = 1e-7;

/// Paired tip and base waypoint tracks; `tip[k] - base[k]` is the tool axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualTracks {
    pub tip: Vec<Vector3<f64>>,
    pub base: Vec<Vector3<f64>>,
    pub tile_id: Vec<usize>,
}

impl DualTracks {
    pub fn len(&self) -> usize {
        self.tip.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tip.is_empty()
    }

    /// Smallest distance between consecutive tip samples.
    pub fn min_tip_spacing(&self) -> f64 {
        min_spacing(&self.tip)
    }
}

fn min_spacing(points: &[Vector3<f64>]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Lifts the tiled tip samples to a tip/base pair: the base sits a tool
/// length behind the tip along the tool axis.
pub fn dual_tracks(tiled: &TiledTrajectory, tool_length: f64) -> Result<DualTracks> {
    if !(tool_length.is_finite() && tool_length > 0.0) {
        return Err(config(format!("tool length {tool_length} must be > 0")));
    }
    let e_c = tool_axis();
    let tip: Vec<_> = tiled.poses.iter().map(|p| p.position).collect();
    let base = tiled
        .poses
        .iter()
        .map(|p| p.position - tool_length * p.rotation.rotate(&e_c))
        .collect();
    Ok(DualTracks {
        tip,
        base,
        tile_id: tiled.tile_id.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformParams {
    /// Maximum number of composed increments.
    pub iterations: usize,
    /// Per-increment cap as a fraction of the minimum tip spacing.
    pub step_cap: f64,
    pub lambda_tip: f64,
    pub lambda_base: f64,
    /// Clearance free-space tips are lifted to, meters.
    pub target_clearance: f64,
    /// Odd smoothing window, in samples.
    pub smoothing_window: usize,
    /// Baselines shorter than this reuse the previous axis, meters.
    pub axis_eps: f64,
}

impl Default for DeformParams {
    fn default() -> Self {
        Self {
            iterations: 50,
            step_cap: 0.5,
            lambda_tip: 1.0,
            lambda_base: 0.4,
            target_clearance: 0.005,
            smoothing_window: 5,
            axis_eps: 1e-4,
        }
    }
}

impl DeformParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(config("deformation needs at least one iteration"));
        }
        if !(self.step_cap > 0.0 && self.step_cap <= 0.5) {
            return Err(config(format!(
                "step_cap {} outside (0, 0.5]",
                self.step_cap
            )));
        }
        if !(0.0 <= self.lambda_base
            && self.lambda_base <= self.lambda_tip
            && self.lambda_tip <= 1.0)
        {
            return Err(config(format!(
                "need 0 <= lambda_base ({}) <= lambda_tip ({}) <= 1",
                self.lambda_base, self.lambda_tip
            )));
        }
        if self.smoothing_window.is_multiple_of(2) {
            return Err(config(format!(
                "smoothing_window {} must be odd",
                self.smoothing_window
            )));
        }
        if !(self.target_clearance.is_finite() && self.axis_eps.is_finite() && self.axis_eps >= 0.0)
        {
            return Err(config(
                "target_clearance and axis_eps must be finite, axis_eps >= 0",
            ));
        }
        Ok(())
    }
}

/// One composed increment: per-sample displacements actually applied to
/// each track, and the sample positions they were applied at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    /// Minimum tip spacing when the increment was built, meters.
    pub spacing: f64,
    pub tip_at: Vec<Vector3<f64>>,
    pub tip_step: Vec<Vector3<f64>>,
    pub base_at: Vec<Vector3<f64>>,
    pub base_step: Vec<Vector3<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Track {
    Tip,
    Base,
}

/// Record of every increment of one deformation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeformTrace {
    pub increments: Vec<Increment>,
    /// Support radius of the spatial extension, in units of `spacing`.
    pub support: f64,
}

/// Deforms the dual tracks; see [`deform_traced`].
pub fn deform(
    tracks: &DualTracks,
    surface: &Surface,
    contact_set: &[usize],
    free_set: &[usize],
    params: &DeformParams,
) -> Result<DualTracks> {
    deform_traced(tracks, surface, contact_set, free_set, params).map(|(t, _)| t)
}

/// Composes up to `params.iterations` normal-driven increments.
///
/// Each increment builds two per-sample fields from the current tracks:
///
/// * clearance: free-space tips below `target_clearance` are pushed along
///   the surface normal by the deficit (never pulled down);
/// * alignment: the base is pulled towards `tip + l_k * n(tip.x)`, where
///   `l_k` is the sample's initial tool length, so the axis follows the
///   local normal.
///
/// The tip field is the clearance term; the base field is clearance plus
/// alignment. Both are smoothed with a triangular window that never crosses
/// a tile boundary, capped at `step_cap * min tip spacing`, then applied
/// with weights `lambda_tip` / `lambda_base`. Contact tips never move.
pub fn deform_traced(
    tracks: &DualTracks,
    surface: &Surface,
    contact_set: &[usize],
    free_set: &[usize],
    params: &DeformParams,
) -> Result<(DualTracks, DeformTrace)> {
    params.validate()?;
    let n = tracks.len();
    if n < 2 || tracks.base.len() != n || tracks.tile_id.len() != n {
        return Err(config("dual tracks must have equal lengths >= 2"));
    }
    if contact_set.len() + free_set.len() != n {
        return Err(config("contact and free sets must partition the samples"));
    }
    let contact = index_mask(n, contact_set);
    let free = index_mask(n, free_set);
    if contact.iter().zip(&free).any(|(c, f)| c == f) {
        return Err(config("contact and free sets must partition the samples"));
    }

    let rest_length: Vec<f64> = tracks
        .tip
        .iter()
        .zip(&tracks.base)
        .map(|(t, b)| (b - t).norm())
        .collect();
    let mut out = tracks.clone();
    let mut trace = DeformTrace {
        increments: Vec::new(),
        support: SUPPORT_RADIUS,
    };

    for _ in 0..params.iterations {
        let spacing = out.min_tip_spacing();
        let cap = params.step_cap * spacing;

        let mut tip_raw = vec![Vector3::zeros(); n];
        let mut base_raw = vec![Vector3::zeros(); n];
        for k in 0..n {
            let tip = out.tip[k];
            let normal = surface.normal(tip.x);
            let lift = if free[k] {
                let deficit = params.target_clearance - surface.clearance(&tip);
                deficit.max(0.0) * normal
            } else {
                Vector3::zeros()
            };
            let align = tip + rest_length[k] * normal - out.base[k];
            tip_raw[k] = lift;
            base_raw[k] = lift + align;
        }

        let tip_field = capped(
            smooth_within_tiles(&tip_raw, &out.tile_id, params.smoothing_window),
            cap,
        );
        let base_field = capped(
            smooth_within_tiles(&base_raw, &out.tile_id, params.smoothing_window),
            cap,
        );

        let largest = (0..n)
            .map(|k| {
                let t = if free[k] { tip_field[k].norm() } else { 0.0 };
                t.max(base_field[k].norm())
            })
            .fold(0.0, f64::max);
        if largest.is_nan() || largest < CONVERGENCE_TOL {
            break;
        }

        let tip_step: Vec<_> = (0..n)
            .map(|k| {
                if free[k] {
                    params.lambda_tip * tip_field[k]
                } else {
                    Vector3::zeros()
                }
            })
            .collect();
        let base_step: Vec<_> = base_field.iter().map(|v| params.lambda_base * v).collect();

        trace.increments.push(Increment {
            spacing,
            tip_at: out.tip.clone(),
            tip_step: tip_step.clone(),
            base_at: out.base.clone(),
            base_step: base_step.clone(),
        });

        for k in 0..n {
            if free[k] {
                out.tip[k] += tip_step[k];
            }
            out.base[k] += base_step[k];
        }
    }

    Ok((out, trace))
}

/// Triangular-weighted centered moving average; windows are truncated at
/// tile boundaries and renormalized.
fn smooth_within_tiles(v: &[Vector3<f64>], tile_id: &[usize], window: usize) -> Vec<Vector3<f64>> {
    let half = (window / 2) as isize;
    if half == 0 {
        return v.to_vec();
    }
    let n = v.len() as isize;
    (0..n)
        .map(|k| {
            let mut acc = Vector3::zeros();
            let mut weight = 0.0;
            for d in -half..=half {
                let j = k + d;
                if j < 0 || j >= n || tile_id[j as usize] != tile_id[k as usize] {
                    continue;
                }
                let w = (half + 1 - d.abs()) as f64;
                acc += w * v[j as usize];
                weight += w;
            }
            acc / weight
        })
        .collect()
}

fn capped(v: Vec<Vector3<f64>>, cap: f64) -> Vec<Vector3<f64>> {
    v.into_iter()
        .map(|x| {
            let norm = x.norm();
            if norm > cap {
                x * (cap / norm)
            } else {
                x
            }
        })
        .collect()
}

const SUPPORT_RADIUS: f64 = 3.0;

/// Wendland C2 kernel on `r / radius`.
fn wendland(r: f64, radius: f64) -> f64 {
    let t = r / radius;
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - t).powi(4) * (4.0 * t + 1.0)
    }
}

impl Increment {
    /// Spatial extension of this increment for one track: a compactly
    /// supported, normalized blend of the applied sample displacements that
    /// fades to zero away from the track.
    pub fn field(&self, track: Track, p: &Vector3<f64>, support: f64) -> Vector3<f64> {
        let (at, step) = match track {
            Track::Tip => (&self.tip_at, &self.tip_step),
            Track::Base => (&self.base_at, &self.base_step),
        };
        let radius = support * self.spacing;
        let mut acc = Vector3::zeros();
        let mut total = 0.0;
        for (c, d) in at.iter().zip(step) {
            let diff = p - c;
            if diff.x.abs() >= radius || diff.z.abs() >= radius || diff.y.abs() >= radius {
                continue;
            }
            let w = wendland(diff.norm(), radius);
            acc += w * d;
            total += w;
        }
        acc / total.max(1.0)
    }
}

impl DeformTrace {
    /// Applies every increment, in order, to a point near `track`.
    pub fn map_point(&self, track: Track, p: &Vector3<f64>) -> Vector3<f64> {
        self.increments
            .iter()
            .fold(*p, |q, inc| q + inc.field(track, &q, self.support))
    }

    /// Central-difference Jacobian determinant of the composed map.
    pub fn jacobian_det(&self, track: Track, p: &Vector3<f64>, h: f64) -> f64 {
        let mut jac = Matrix3::zeros();
        for axis in 0..3 {
            let mut e = Vector3::zeros();
            e[axis] = h;
            let col =
                (self.map_point(track, &(p + e)) - self.map_point(track, &(p - e))) / (2.0 * h);
            jac.set_column(axis, &col);
        }
        jac.determinant()
    }

    /// Smallest Jacobian determinant over a 3x3x3 probe lattice of half-width
    /// `0.5 * spacing` around every initial sample of `track`, with a
    /// finite-difference step of `spacing / 10`.
    pub fn min_jacobian_det(&self, track: Track) -> Option<f64> {
        let first = self.increments.first()?;
        let spacing = first.spacing;
        let centers = match track {
            Track::Tip => &first.tip_at,
            Track::Base => &first.base_at,
        };
        let offsets = [-0.5 * spacing, 0.0, 0.5 * spacing];
        let h = spacing / 10.0;
        let mut min = f64::INFINITY;
        for c in centers {
            for dx in offsets {
                for dy in offsets {
                    for dz in offsets {
                        let p = c + Vector3::new(dx, dy, dz);
                        min = min.min(self.jacobian_det(track, &p, h));
                    }
                }
            }
        }
        Some(min)
    }

    /// Largest applied displacement relative to its increment's cap
    /// `step_cap * spacing`; at most 1 when every increment respects the cap.
    pub fn max_step_ratio(&self, step_cap: f64) -> f64 {
        self.increments
            .iter()
            .flat_map(|inc| {
                let cap = step_cap * inc.spacing;
                inc.tip_step
                    .iter()
                    .chain(&inc.base_step)
                    .map(move |d| d.norm() / cap)
            })
            .fold(0.0, f64::max)
    }
}
