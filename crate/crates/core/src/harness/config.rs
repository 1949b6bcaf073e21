//! Scenario configuration (TOML).

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::presets;
use crate::attacks::AttackConfig;
use crate::detectors::DetectorConfig;
use crate::ekf::FilterConfig;
use crate::sensors::SensorParams;
use crate::trajectory::{compose_from, MotionSegment, Trajectory};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Default ensemble size.
pub const DEFAULT_SEEDS: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Named path; mutually exclusive with `segments`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<MotionSegment>,
    /// Start position, NED meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 3]>,
}

impl TrajectorySpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<Trajectory> {
        let segments = match (&self.preset, self.segments.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config("trajectory: give either `preset` or `segments`, not both".into()))
            }
            (Some(name), true) => presets::trajectory_segments(name)?,
            (None, false) => self.segments.clone(),
            (None, true) => return Err(Error::Config("trajectory: no preset or segments".into())),
        };
        let origin = self.origin.map(Vector3::from).unwrap_or_else(presets::mission_origin);
        compose_from(&segments, origin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub sensors: SensorParams,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default = "AttackConfig::none")]
    pub attack: AttackConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEEDS).collect()
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, trajectory: TrajectorySpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            trajectory,
            sensors: SensorParams::default(),
            filter: FilterConfig::default(),
            attack: AttackConfig::none(),
            detector: DetectorConfig::default(),
            seeds: default_seeds(),
            output: OutputConfig::default(),
        }
    }

    pub fn with_attack(mut self, attack: AttackConfig) -> Self {
        self.attack = attack;
        self
    }

    pub fn with_seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.seeds = seeds.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let traj = self.trajectory.build()?;
        self.sensors.validate()?;
        self.filter.noise.validate()?;
        self.filter.p0()?;
        self.attack.kind.validate()?;
        if !self.attack.is_none() {
            self.attack.window.validate(Some(traj.duration()))?;
        }
        self.detector.validate()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{AttackKind, AttackParams, AttackWindow};

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::new("rt", TrajectorySpec::preset("straight")).with_attack(AttackConfig {
            kind: AttackKind::Ssd(AttackParams::default()),
            window: AttackWindow::new(2.0, 10.0),
        });
        let text = cfg.to_toml().unwrap();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_file() {
        let text = r#"
schema_version = 1
name = "mini"

[trajectory]
segments = [{ kind = "straight_line", speed = 2.0, duration = 5.0 }]

[attack]
kind = "bias"
low = 0.0
high = 0.0005
unit = "degrees"
window = { start = 1.0, duration = 2.0 }
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seeds.len(), DEFAULT_SEEDS as usize);
        assert!(matches!(cfg.attack.kind, AttackKind::Bias { .. }));
    }

    #[test]
    fn rejects_bad_configs() {
        let no_version = "name = \"x\"\n[trajectory]\npreset = \"straight\"\n";
        assert!(ScenarioConfig::from_toml(no_version).is_err());
        let wrong = "schema_version = 9\nname = \"x\"\n[trajectory]\npreset = \"straight\"\n";
        assert!(ScenarioConfig::from_toml(wrong).is_err());
        let unknown = "schema_version = 1\nname = \"x\"\n[trajectory]\npreset = \"nowhere\"\n";
        assert!(ScenarioConfig::from_toml(unknown).is_err());
        let typo = "schema_version = 1\nname = \"x\"\nbogus = 1\n[trajectory]\npreset = \"straight\"\n";
        assert!(ScenarioConfig::from_toml(typo).is_err());
    }
}
