use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use surfwarp_core::geometry::{Surface, SurfaceFamily};
use surfwarp_core::metrics::{DEFAULT_BAD_STEP_DEG, PRODUCTION_AXIS_SAMPLES};
use surfwarp_core::offline_warp::{DeformParams, PrimitiveConfig};
use surfwarp_core::online_exec::ExecParams;

use crate::CliError;

/// Settings shared by single runs and sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub guide_samples: usize,
    /// Tiling snap tolerance, meters; half the guide spacing when absent.
    pub tolerance: Option<f64>,
    pub primitive: PrimitiveConfig,
    pub deform: DeformParams,
    pub exec: ExecParams,
    pub bad_step_deg: f64,
    /// Collision depth tolerance, meters.
    pub clearance_tol: f64,
    pub collision_samples: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            guide_samples: 4001,
            tolerance: None,
            primitive: PrimitiveConfig::default(),
            deform: DeformParams::default(),
            exec: ExecParams::default(),
            bad_step_deg: DEFAULT_BAD_STEP_DEG,
            clearance_tol: 0.001,
            collision_samples: PRODUCTION_AXIS_SAMPLES,
        }
    }
}

/// Configuration of `warp` and `execute`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub surface: Surface,
    /// Guide extent along x.
    pub x_range: [f64; 2],
    pub pipeline: PipelineConfig,
    pub scenario: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            surface: Surface::new(SurfaceFamily::Sin, 0.08).with_frequency(8.0),
            x_range: [-1.0, 1.0],
            pipeline: PipelineConfig::default(),
            scenario: None,
            output_dir: None,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub amplitude: f64,
    #[serde(default = "one")]
    pub frequency: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl GridPoint {
    pub fn new(amplitude: f64, frequency: f64, scale: f64) -> Self {
        Self {
            amplitude,
            frequency,
            scale,
        }
    }

    pub fn surface(&self, family: SurfaceFamily) -> Surface {
        Surface::new(family, self.amplitude)
            .with_frequency(self.frequency)
            .with_scale(self.scale)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyGrid {
    pub family: SurfaceFamily,
    pub x_range: [f64; 2],
    pub points: Vec<GridPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub families: Vec<FamilyGrid>,
    pub pipeline: PipelineConfig,
    /// When set, every warped run is also executed against this scenario.
    pub scenario: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        use SurfaceFamily::*;
        let waves = || {
            vec![
                GridPoint::new(0.05, 8.0, 1.0),
                GridPoint::new(0.08, 8.0, 1.0),
                GridPoint::new(0.06, 10.0, 1.0),
                GridPoint::new(0.1, 6.0, 1.0),
            ]
        };
        let families = vec![
            FamilyGrid {
                family: Sin,
                x_range: [-1.0, 1.0],
                points: waves(),
            },
            FamilyGrid {
                family: Cos,
                x_range: [-1.0, 1.0],
                points: waves(),
            },
            FamilyGrid {
                family: Parabolic,
                x_range: [-0.5, 0.5],
                points: [1.0, 1.5, 2.0, 2.5]
                    .map(|a| GridPoint::new(a, 1.0, 1.0))
                    .to_vec(),
            },
            FamilyGrid {
                family: Exp,
                x_range: [-1.0, 1.0],
                points: vec![
                    GridPoint::new(0.1, 1.0, 10.0),
                    GridPoint::new(0.15, 1.0, 10.0),
                    GridPoint::new(0.2, 1.0, 8.0),
                ],
            },
            FamilyGrid {
                family: Cubic,
                x_range: [-1.0, 1.0],
                points: vec![GridPoint::new(0.01, 1.0, 1.0)],
            },
        ];
        Self {
            families,
            pipeline: PipelineConfig::default(),
            scenario: None,
            output_dir: None,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.families.is_empty() {
            return Err(CliError::Config("sweep needs at least one family".into()));
        }
        if let Some(g) = self.families.iter().find(|g| g.points.is_empty()) {
            return Err(CliError::Config(format!("empty grid for {}", g.family)));
        }
        Ok(())
    }
}

/// Loads `path` (or the defaults when absent) and applies `key=value`
/// overrides. Keys are dotted paths; numeric segments index arrays. Values
/// parse as JSON and fall back to plain strings.
pub fn load_config<T>(path: Option<&Path>, overrides: &[String]) -> Result<T, CliError>
where
    T: Default + Serialize + DeserializeOwned,
{
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => serde_json::to_value(T::default()).map_err(|e| CliError::Config(e.to_string()))?,
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
}

pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = root;
    for seg in key.split('.') {
        node = match node {
            Value::Array(items) => {
                let i: usize = seg
                    .parse()
                    .map_err(|_| CliError::Config(format!("`{seg}` in `{key}` is not an index")))?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| {
                    CliError::Config(format!("index {i} in `{key}` out of range (len {len})"))
                })?
            }
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut()
                    .unwrap()
                    .entry(seg)
                    .or_insert(Value::Null)
            }
            Value::Object(map) => map.entry(seg).or_insert(Value::Null),
            _ => {
                return Err(CliError::Config(format!(
                    "`{key}` descends into a non-object value"
                )))
            }
        };
    }
    *node = parsed;
    Ok(())
}
