use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Parameters of the synthetic touch / lift / advance / touch cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrimitiveConfig {
    /// Waypoints per period, at least 3.
    pub waypoints: usize,
    /// Fraction of the period spent in contact; at least two waypoints
    /// (touch-down and lift-off) always stay in contact.
    pub dwell_fraction: f64,
    /// Height of the free-space waypoints above the contact plane, meters.
    pub lift_height: f64,
    /// Arc-length footprint of one period along the guide, meters.
    pub period_length: f64,
    /// Distance from tool base to tool tip, meters.
    pub tool_length: f64,
}

impl Default for PrimitiveConfig {
    fn default() -> Self {
        Self {
            waypoints: 8,
            dwell_fraction: 0.5,
            lift_height: 0.02,
            period_length: 0.2,
            tool_length: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Tip position in the primitive frame: x along the period, z up.
    pub tip_offset: Vector3<f64>,
    pub contact: bool,
}

/// One period of the nominal motion, expressed in its canonical frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPrimitive {
    pub waypoints: Vec<Waypoint>,
    pub period_length: f64,
    pub tool_length: f64,
}

impl PeriodicPrimitive {
    pub fn contact_count(&self) -> usize {
        self.waypoints.iter().filter(|w| w.contact).count()
    }
}

/// Synthesizes a single period of the canonical contact cycle.
///
/// Waypoints sit at `x_i = i * period / n` so consecutive periods tile
/// without duplicated samples. The first and last waypoints touch the
/// surface; the middle run is lifted by `lift_height`. A zero lift height
/// yields an all-contact primitive.
pub fn extract_primitive(cfg: &PrimitiveConfig) -> Result<PeriodicPrimitive> {
    let n = cfg.waypoints;
    if n < 3 {
        return Err(config(format!(
            "primitive needs at least 3 waypoints, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&cfg.dwell_fraction) {
        return Err(config(format!(
            "dwell_fraction {} outside [0, 1]",
            cfg.dwell_fraction
        )));
    }
    if !(cfg.lift_height.is_finite() && cfg.lift_height >= 0.0) {
        return Err(config(format!(
            "lift_height {} must be >= 0",
            cfg.lift_height
        )));
    }
    if !(cfg.period_length.is_finite() && cfg.period_length > 0.0) {
        return Err(config(format!(
            "period_length {} must be > 0",
            cfg.period_length
        )));
    }
    if !(cfg.tool_length.is_finite() && cfg.tool_length > 0.0) {
        return Err(config(format!(
            "tool_length {} must be > 0",
            cfg.tool_length
        )));
    }

    let free = if cfg.lift_height == 0.0 {
        0
    } else {
        let f = ((1.0 - cfg.dwell_fraction) * n as f64).round() as usize;
        f.clamp(1, n - 2)
    };
    let contact = n - free;
    let head = contact.div_ceil(2);
    let tail = contact - head;

    let step = cfg.period_length / n as f64;
    let waypoints = (0..n)
        .map(|i| {
            let in_contact = i < head || i >= n - tail;
            let z = if in_contact { 0.0 } else { cfg.lift_height };
            Waypoint {
                tip_offset: Vector3::new(step * i as f64, 0.0, z),
                contact: in_contact,
            }
        })
        .collect();

    Ok(PeriodicPrimitive {
        waypoints,
        period_length: cfg.period_length,
        tool_length: cfg.tool_length,
    })
}
