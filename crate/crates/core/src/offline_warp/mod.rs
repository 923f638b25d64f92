//! Offline surface-constrained warping.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`extract_primitive`] and [`tile_along_guide`] lay copies of one
//!    period along the guide curve, each aligned to a chord;
//! 2. [`dual_tracks`] turns every tiled pose into a tip/base pair;
//! 3. [`deform`] composes small normal-driven increments, stronger on the
//!    tip track than on the base track, with contact tips anchored;
//! 4. [`complete_poses`] rebuilds full orientations from the deformed axes
//!    by the smallest rotation away from the tiled orientation.
//!
//! [`warp`] chains all four.

mod completion;
mod deform;
mod export;
mod primitive;
mod tiling;

use nalgebra::Vector3;

pub use completion::{axis_of, complete_poses, complete_rotation, WarpedTrajectory};
pub use deform::{
    deform, deform_traced, dual_tracks, DeformParams, DeformTrace, DualTracks, Increment, Track,
    CONVERGENCE_TOL,
};
pub use export::{write_trajectory_csv, TRAJECTORY_HEADER};
pub use primitive::{extract_primitive, PeriodicPrimitive, PrimitiveConfig, Waypoint};
pub use tiling::{tile_along_guide, TiledTrajectory};

use crate::error::Result;
use crate::geometry::{GuideCurve, Surface};

/// Tool-frame axis pointing from the tool base down to its tip.
pub fn tool_axis() -> Vector3<f64> {
    -Vector3::z()
}

/// Every intermediate product of one warp.
#[derive(Clone, Debug)]
pub struct WarpOutcome {
    pub tiled: TiledTrajectory,
    pub tracks: DualTracks,
    pub deformed: DualTracks,
    pub warped: WarpedTrajectory,
    pub trace: DeformTrace,
}

/// Warps the nominal primitive onto the surface along `guide`, returning the
/// tiled trajectory alongside the warped one for paired comparison.
pub fn warp(
    nominal: &PrimitiveConfig,
    guide: &GuideCurve,
    surface: &Surface,
    params: &DeformParams,
    tol: f64,
) -> Result<(TiledTrajectory, WarpedTrajectory)> {
    warp_traced(nominal, guide, surface, params, tol).map(|o| (o.tiled, o.warped))
}

pub fn warp_traced(
    nominal: &PrimitiveConfig,
    guide: &GuideCurve,
    surface: &Surface,
    params: &DeformParams,
    tol: f64,
) -> Result<WarpOutcome> {
    params.validate()?;
    surface.validate()?;
    let primitive = extract_primitive(nominal)?;
    let tiled = tile_along_guide(&primitive, guide, tol)?;
    let tracks = dual_tracks(&tiled, primitive.tool_length)?;
    let (deformed, trace) = deform_traced(
        &tracks,
        surface,
        &tiled.contact_set,
        &tiled.free_set,
        params,
    )?;
    let warped = complete_poses(&deformed, &tiled, params.axis_eps)?;
    Ok(WarpOutcome {
        tiled,
        tracks,
        deformed,
        warped,
        trace,
    })
}

/// Default tiling tolerance: half the guide sample spacing.
pub fn default_tolerance(guide: &GuideCurve) -> f64 {
    0.5 * guide.min_spacing()
}
