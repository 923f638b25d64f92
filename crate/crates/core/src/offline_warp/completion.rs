use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::deform::DualTracks;
use super::tiling::{index_mask, TiledTrajectory};
use super::tool_axis;
use crate::error::{config, Result};
use crate::geometry::{rotation_between, Pose, Rotation};

/// Surface-adapted pose sequence built from the deformed tracks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpedTrajectory {
    pub poses: Vec<Pose>,
    pub tip: Vec<Vector3<f64>>,
    pub base: Vec<Vector3<f64>>,
    pub contact_set: Vec<usize>,
    pub free_set: Vec<usize>,
    pub tile_id: Vec<usize>,
    /// Samples whose baseline was too short and reused the previous axis.
    pub stale_axis: Vec<usize>,
}

impl WarpedTrajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn contact_mask(&self) -> Vec<bool> {
        index_mask(self.len(), &self.contact_set)
    }
}

/// Tool axis (base to tip) at every sample, reusing the last valid axis
/// where the baseline is at most `axis_eps`. Returns the axes and the
/// indices that reused one.
pub fn axis_of(
    tracks: &DualTracks,
    fallback: &Vector3<f64>,
    axis_eps: f64,
) -> (Vec<Vector3<f64>>, Vec<usize>) {
    let mut last = fallback.normalize();
    let mut stale = Vec::new();
    let axes = tracks
        .tip
        .iter()
        .zip(&tracks.base)
        .enumerate()
        .map(|(k, (tip, base))| {
            let d = tip - base;
            let len = d.norm();
            if len > axis_eps {
                last = d / len;
            } else {
                stale.push(k);
            }
            last
        })
        .collect();
    (axes, stale)
}

/// The rotation closest to `reference` whose tool axis is `axis`.
pub fn complete_rotation(reference: &Rotation, axis: &Vector3<f64>) -> Rotation {
    let align = rotation_between(&reference.rotate(&tool_axis()), axis);
    if align == Rotation::identity() {
        *reference
    } else {
        align * *reference
    }
}

/// Positions come straight from the warped tip track; each orientation is
/// the minimum-change completion of the tiled orientation onto the warped
/// axis.
pub fn complete_poses(
    warped: &DualTracks,
    tiled: &TiledTrajectory,
    axis_eps: f64,
) -> Result<WarpedTrajectory> {
    let n = warped.len();
    if tiled.len() != n || warped.base.len() != n {
        return Err(config(format!(
            "track length {n} does not match tiled length {}",
            tiled.len()
        )));
    }
    let Some(first) = tiled.poses.first() else {
        return Err(config("cannot complete an empty trajectory"));
    };
    let fallback = first.rotation.rotate(&tool_axis());
    let (axes, stale_axis) = axis_of(warped, &fallback, axis_eps);

    let poses = tiled
        .poses
        .iter()
        .zip(&axes)
        .zip(&warped.tip)
        .map(|((tile, axis), tip)| Pose::new(complete_rotation(&tile.rotation, axis), *tip))
        .collect();

    Ok(WarpedTrajectory {
        poses,
        tip: warped.tip.clone(),
        base: warped.base.clone(),
        contact_set: tiled.contact_set.clone(),
        free_set: tiled.free_set.clone(),
        tile_id: tiled.tile_id.clone(),
        stale_axis,
    })
}
