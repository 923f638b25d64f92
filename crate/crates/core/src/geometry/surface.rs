use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};

/// The analytic profile families a [`Surface`] can take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceFamily {
    Sin,
    Cos,
    Exp,
    Parabolic,
    Cubic,
}

impl SurfaceFamily {
    pub const ALL: [SurfaceFamily; 5] = [
        SurfaceFamily::Sin,
        SurfaceFamily::Cos,
        SurfaceFamily::Exp,
        SurfaceFamily::Parabolic,
        SurfaceFamily::Cubic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceFamily::Sin => "sin",
            SurfaceFamily::Cos => "cos",
            SurfaceFamily::Exp => "exp",
            SurfaceFamily::Parabolic => "parabolic",
            SurfaceFamily::Cubic => "cubic",
        }
    }
}

impl fmt::Display for SurfaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SurfaceFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| config(format!("unknown surface family `{s}`")))
    }
}

/// A height field `z = f(x)`, extruded along y.
///
/// | family    | f(x)                    |
/// |-----------|-------------------------|
/// | sin       | h0 + A sin(w x)         |
/// | cos       | h0 + A cos(w x)         |
/// | exp       | h0 + A exp(-k x^2)      |
/// | parabolic | h0 + A x^2              |
/// | cubic     | h0 + A x^3              |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Surface {
    pub family: SurfaceFamily,
    /// A, meters (or the family's leading coefficient).
    pub amplitude: f64,
    /// w, rad/m. Used by `sin` and `cos`.
    #[serde(default = "one")]
    pub frequency: f64,
    /// k, 1/m^2. Used by `exp`.
    #[serde(default = "one")]
    pub scale: f64,
    /// h0, meters. Lowered by height-drop events during execution.
    #[serde(default)]
    pub height_offset: f64,
}

fn one() -> f64 {
    1.0
}

impl Surface {
    pub fn new(family: SurfaceFamily, amplitude: f64) -> Self {
        Self {
            family,
            amplitude,
            frequency: 1.0,
            scale: 1.0,
            height_offset: 0.0,
        }
    }

    pub fn flat() -> Self {
        Self::new(SurfaceFamily::Parabolic, 0.0)
    }

    pub fn with_frequency(mut self, frequency: f64) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_height_offset(mut self, h0: f64) -> Self {
        self.height_offset = h0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let params = [
            self.amplitude,
            self.frequency,
            self.scale,
            self.height_offset,
        ];
        if params.iter().any(|p| !p.is_finite()) {
            return Err(config(format!(
                "surface parameters must be finite: {self:?}"
            )));
        }
        if self.family == SurfaceFamily::Exp && self.scale < 0.0 {
            return Err(config("exp surface needs a non-negative scale"));
        }
        Ok(())
    }

    /// Surface height at `x`; no finiteness check.
    pub fn height(&self, x: f64) -> f64 {
        let a = self.amplitude;
        self.height_offset
            + match self.family {
                SurfaceFamily::Sin => a * (self.frequency * x).sin(),
                SurfaceFamily::Cos => a * (self.frequency * x).cos(),
                SurfaceFamily::Exp => a * (-self.scale * x * x).exp(),
                SurfaceFamily::Parabolic => a * x * x,
                SurfaceFamily::Cubic => a * x * x * x,
            }
    }

    /// Analytic derivative `f'(x)`.
    pub fn slope(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match self.family {
            SurfaceFamily::Sin => a * self.frequency * (self.frequency * x).cos(),
            SurfaceFamily::Cos => -a * self.frequency * (self.frequency * x).sin(),
            SurfaceFamily::Exp => -2.0 * self.scale * x * a * (-self.scale * x * x).exp(),
            SurfaceFamily::Parabolic => 2.0 * a * x,
            SurfaceFamily::Cubic => 3.0 * a * x * x,
        }
    }

    /// Upward unit normal `normalize(-f'(x), 0, 1)`.
    pub fn normal(&self, x: f64) -> Vector3<f64> {
        Vector3::new(-self.slope(x), 0.0, 1.0).normalize()
    }

    /// Vertical clearance of `p` above the surface (negative when below).
    pub fn clearance(&self, p: &Vector3<f64>) -> f64 {
        p.z - self.height(p.x)
    }
}

/// Checked surface height: rejects non-finite `x`.
pub fn surface_height(surface: &Surface, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!("surface_height at non-finite x = {x}")));
    }
    let z = surface.height(x);
    if !z.is_finite() {
        return Err(domain(format!("surface height overflows at x = {x}")));
    }
    Ok(z)
}

/// Unit upward normal at `x`.
pub fn surface_normal(surface: &Surface, x: f64) -> Vector3<f64> {
    surface.normal(x)
}
