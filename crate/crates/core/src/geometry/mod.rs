//! Rotation and pose algebra, analytic surfaces and guide curves.

mod guide;
mod rotation;
mod surface;

pub use guide::{build_guide, GuideCurve};
pub use rotation::{
    angle_between, exp_map, exp_rotation, geodesic_angle, perpendicular_axis, rotation_between,
    Pose, Rotation, ANTIPODAL_MARGIN, MIN_VECTOR_NORM,
};
pub use surface::{surface_height, surface_normal, Surface, SurfaceFamily};
