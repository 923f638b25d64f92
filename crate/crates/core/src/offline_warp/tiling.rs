use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::primitive::PeriodicPrimitive;
use crate::error::{domain, Result};
use crate::geometry::{rotation_between, GuideCurve, Pose};

/// Periodic copies of a primitive laid along a guide curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiledTrajectory {
    pub poses: Vec<Pose>,
    /// Indices of contact-critical samples, ascending.
    pub contact_set: Vec<usize>,
    /// Indices of free-space samples, ascending.
    pub free_set: Vec<usize>,
    /// Period each sample belongs to; non-decreasing.
    pub tile_id: Vec<usize>,
    /// World position of each tile center.
    pub centers: Vec<Vector3<f64>>,
    /// Unit chord used to align each tile.
    pub chords: Vec<Vector3<f64>>,
}

impl TiledTrajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn contact_mask(&self) -> Vec<bool> {
        index_mask(self.len(), &self.contact_set)
    }

    pub fn tile_count(&self) -> usize {
        self.centers.len()
    }
}

pub(crate) fn index_mask(len: usize, set: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; len];
    for &k in set {
        mask[k] = true;
    }
    mask
}

/// Places `floor(L / period)` copies of the primitive along the guide.
///
/// Tile `i` is centered at arc length `(i + 0.5) * period`, snapped to the
/// nearest guide sample when that sample is within `tol`. Waypoint x offsets
/// advance along the guide by arc length (measured from the start of the
/// tile), z offsets lift along world z. Every sample of a tile shares the
/// orientation that maps the canonical x axis onto the chord towards the
/// next tile center; the last tile reuses the previous chord.
pub fn tile_along_guide(
    primitive: &PeriodicPrimitive,
    guide: &GuideCurve,
    tol: f64,
) -> Result<TiledTrajectory> {
    let period = primitive.period_length;
    let total = guide.total_length();
    if total < period {
        return Err(domain(format!(
            "guide length {total:.6} m is shorter than one period ({period} m)"
        )));
    }
    let tiles = (total / period).floor() as usize;

    let mut center_s = Vec::with_capacity(tiles);
    let mut centers = Vec::with_capacity(tiles);
    for i in 0..tiles {
        let target = (i as f64 + 0.5) * period;
        let (j, s_j) = guide.nearest_sample(target);
        if (s_j - target).abs() <= tol {
            center_s.push(s_j);
            centers.push(guide.samples()[j]);
        } else {
            center_s.push(target);
            centers.push(guide.point_at(target));
        }
    }

    let chords: Vec<Vector3<f64>> = if tiles == 1 {
        let s = center_s[0];
        vec![(guide.point_at(s + 0.5 * period) - guide.point_at(s - 0.5 * period)).normalize()]
    } else {
        let mut c: Vec<_> = centers
            .windows(2)
            .map(|w| (w[1] - w[0]).normalize())
            .collect();
        c.push(c[tiles - 2]);
        c
    };

    let n_w = primitive.waypoints.len();
    let mut poses = Vec::with_capacity(tiles * n_w);
    let mut contact_set = Vec::new();
    let mut free_set = Vec::new();
    let mut tile_id = Vec::with_capacity(tiles * n_w);
    for i in 0..tiles {
        let rotation = rotation_between(&Vector3::x(), &chords[i]);
        let start = center_s[i] - 0.5 * period;
        for w in &primitive.waypoints {
            let off = w.tip_offset;
            let position = guide.point_at(start + off.x) + Vector3::new(0.0, off.y, off.z);
            let k = poses.len();
            if w.contact {
                contact_set.push(k);
            } else {
                free_set.push(k);
            }
            poses.push(Pose::new(rotation, position));
            tile_id.push(i);
        }
    }

    Ok(TiledTrajectory {
        poses,
        contact_set,
        free_set,
        tile_id,
        centers,
        chords,
    })
}
