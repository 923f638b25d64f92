//! Simulated scalar contact sensor: a clamped linear spring with seeded
//! Gaussian noise and scripted surface-drop / bias events.

use std::path::Path;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::geometry::Surface;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Lowers the whole surface by `magnitude` meters.
    HeightDrop,
    /// Replaces the additive reading bias with `magnitude`.
    ForceBias,
}

impl EventKind {
    /// Bit recorded in the execution log's event column.
    pub fn flag(self) -> u8 {
        match self {
            EventKind::HeightDrop => 1,
            EventKind::ForceBias => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent {
    pub kind: EventKind,
    pub at_step: usize,
    pub magnitude: f64,
}

/// Scenario file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Reading per meter of penetration.
    pub stiffness: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub events: Vec<ScenarioEvent>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            stiffness: 20.0,
            noise_sigma: 0.0,
            seed: 0,
            events: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness.is_finite() && self.stiffness > 0.0) {
            return Err(config(format!(
                "stiffness must be positive, got {}",
                self.stiffness
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(config(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if let Some(e) = self.events.iter().find(|e| !e.magnitude.is_finite()) {
            return Err(config(format!("event magnitude must be finite: {e:?}")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rejects events scheduled at or past `horizon` steps.
    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        match self.events.iter().find(|e| e.at_step >= horizon) {
            Some(e) => Err(config(format!(
                "event at step {} outside a {horizon}-step trajectory",
                e.at_step
            ))),
            None => Ok(()),
        }
    }
}

/// Single-owner contact environment advanced once per executed step.
#[derive(Clone, Debug)]
pub struct ContactEnv {
    surface: Surface,
    stiffness: f64,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    events: Vec<ScenarioEvent>,
    bias: f64,
    current_step: usize,
    last_flags: u8,
}

impl ContactEnv {
    /// Builds the environment and applies any events scheduled at step 0.
    pub fn new(surface: Surface, scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        surface.validate()?;
        let noise = (scenario.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, scenario.noise_sigma))
            .transpose()
            .map_err(|e| config(format!("noise model: {e}")))?;
        let mut env = Self {
            surface,
            stiffness: scenario.stiffness,
            noise,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            events: scenario.events.clone(),
            bias: 0.0,
            current_step: 0,
            last_flags: 0,
        };
        env.apply_events();
        Ok(env)
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn current_step(&self) -> usize {
        self.current_step
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Event bits applied on entering the current step.
    pub fn event_flags(&self) -> u8 {
        self.last_flags
    }

    /// Reading at `tip`: spring penetration plus bias and noise, clamped to
    /// `[0, 1]`.
    pub fn measure(&mut self, tip: &Vector3<f64>) -> Result<f64> {
        if !tip.iter().all(|c| c.is_finite()) {
            return Err(domain(format!("non-finite tool tip {tip:?}")));
        }
        let depth = (self.surface.height(tip.x) - tip.z).max(0.0);
        let noise = match &self.noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        };
        Ok((self.stiffness * depth + self.bias + noise).clamp(0.0, 1.0))
    }

    pub fn advance(&mut self) {
        self.current_step += 1;
        self.apply_events();
    }

    fn apply_events(&mut self) {
        self.last_flags = 0;
        for e in self
            .events
            .iter()
            .filter(|e| e.at_step == self.current_step)
        {
            match e.kind {
                EventKind::HeightDrop => self.surface.height_offset -= e.magnitude,
                EventKind::ForceBias => self.bias = e.magnitude,
            }
            self.last_flags |= e.kind.flag();
        }
    }
}
