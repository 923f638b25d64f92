use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::surface::Surface;
use crate::error::{domain, Result};

/// A polyline lying on a surface, with cumulative chord length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideCurve {
    samples: Vec<Vector3<f64>>,
    cumulative_arclength: Vec<f64>,
}

impl GuideCurve {
    pub fn samples(&self) -> &[Vector3<f64>] {
        &self.samples
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative_arclength
    }

    pub fn total_length(&self) -> f64 {
        *self
            .cumulative_arclength
            .last()
            .expect("guide has at least two samples")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Smallest gap between consecutive samples, in arc length.
    pub fn min_spacing(&self) -> f64 {
        self.cumulative_arclength
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the segment `[i, i + 1]` containing arc length `s` (clamped).
    fn segment(&self, s: f64) -> usize {
        let cum = &self.cumulative_arclength;
        let i = cum.partition_point(|&c| c <= s);
        i.clamp(1, cum.len() - 1) - 1
    }

    /// Point at arc length `s` by linear interpolation between samples;
    /// `s` is clamped to the curve.
    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        let s = s.clamp(0.0, self.total_length());
        let i = self.segment(s);
        let (s0, s1) = (
            self.cumulative_arclength[i],
            self.cumulative_arclength[i + 1],
        );
        let t = (s - s0) / (s1 - s0);
        self.samples[i].lerp(&self.samples[i + 1], t)
    }

    /// The sample nearest to arc length `s`, as `(index, arclength)`.
    pub fn nearest_sample(&self, s: f64) -> (usize, f64) {
        let i = self.segment(s.clamp(0.0, self.total_length()));
        let cum = &self.cumulative_arclength;
        if (s - cum[i]).abs() <= (cum[i + 1] - s).abs() {
            (i, cum[i])
        } else {
            (i + 1, cum[i + 1])
        }
    }
}

/// Samples `n` points at uniform x spacing over `[x_start, x_end]`, lifted
/// onto the surface.
pub fn build_guide(surface: &Surface, x_start: f64, x_end: f64, n: usize) -> Result<GuideCurve> {
    if !(x_start.is_finite() && x_end.is_finite()) || x_end <= x_start {
        return Err(domain(format!("guide range [{x_start}, {x_end}] is empty")));
    }
    if n < 2 {
        return Err(domain(format!("guide needs at least 2 samples, got {n}")));
    }
    let dx = (x_end - x_start) / (n - 1) as f64;
    let samples: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            let x = if i == n - 1 {
                x_end
            } else {
                x_start + dx * i as f64
            };
            Vector3::new(x, 0.0, surface.height(x))
        })
        .collect();
    if samples.iter().any(|p| !p.z.is_finite()) {
        return Err(domain("surface height is not finite over the guide range"));
    }
    let mut cumulative_arclength = Vec::with_capacity(n);
    cumulative_arclength.push(0.0);
    for w in samples.windows(2) {
        let last = *cumulative_arclength.last().unwrap();
        cumulative_arclength.push(last + (w[1] - w[0]).norm());
    }
    Ok(GuideCurve {
        samples,
        cumulative_arclength,
    })
}
