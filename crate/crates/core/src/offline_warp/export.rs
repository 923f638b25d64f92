use std::io::Write;

use crate::error::Result;
use crate::geometry::Pose;

pub const TRAJECTORY_HEADER: &str = "k,tile_id,contact_flag,px,py,pz,qw,qx,qy,qz";

/// Writes one pose per line in the trajectory CSV layout.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    poses: &[Pose],
    tile_id: &[usize],
    contact: &[bool],
) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (k, pose) in poses.iter().enumerate() {
        let p = pose.position;
        let [qw, qx, qy, qz] = pose.rotation.wxyz();
        writeln!(
            out,
            "{k},{},{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            tile_id[k], contact[k] as u8, p.x, p.y, p.z, qw, qx, qy, qz
        )?;
    }
    Ok(())
}

impl super::TiledTrajectory {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trajectory_csv(out, &self.poses, &self.tile_id, &self.contact_mask())
    }
}

impl super::WarpedTrajectory {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trajectory_csv(out, &self.poses, &self.tile_id, &self.contact_mask())
    }
}
