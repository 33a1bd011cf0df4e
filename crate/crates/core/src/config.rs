//! Run configuration: a single JSON document with units in field names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{OspError, Result};
use crate::gdop::SubsetStrategy;
use crate::geo::{GeodeticPosition, PropagationParams};
use crate::nsga2::GaConfig;
use crate::objectives::{self, AffectRule, JammerModel, ObjectiveRequirements};
use crate::scenario::{AreaBounds, Site, SitePattern};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lat_count: usize,
    pub lon_count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lat_count: 20,
            lon_count: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateSpec {
    pub count: usize,
    pub pattern: SitePattern,
    pub seed: u64,
    pub antenna_height_m: f64,
}

impl Default for CandidateSpec {
    fn default() -> Self {
        Self {
            count: 400,
            pattern: SitePattern::Lattice,
            seed: 0,
            antenna_height_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JammerSpec {
    pub count: usize,
    pub heights_m: Vec<f64>,
    pub pattern: SitePattern,
    pub seed: u64,
    pub power_w: f64,
    pub antenna_gain: f64,
    pub transmitter_power_w: f64,
    pub transmitter_gain: f64,
    pub affect_rule: AffectRule,
}

impl Default for JammerSpec {
    fn default() -> Self {
        Self {
            count: 75,
            heights_m: vec![3000.0, 6000.0, 10000.0],
            pattern: SitePattern::Lattice,
            seed: 0,
            power_w: 1.0,
            antenna_gain: 1.0,
            transmitter_power_w: 1.0,
            transmitter_gain: 1.0,
            affect_rule: AffectRule::Los,
        }
    }
}

impl JammerSpec {
    pub fn model_at(&self, position: GeodeticPosition) -> JammerModel {
        JammerModel {
            position,
            power_w: self.power_w,
            antenna_gain: self.antenna_gain,
            transmitter_power_w: self.transmitter_power_w,
            transmitter_gain: self.transmitter_gain,
            affect_rule: self.affect_rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    #[default]
    Scratch,
    Augment {
        /// Resolved against the config file's directory.
        #[serde(default)]
        deployed_path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub area: AreaBounds,
    pub grid: GridSpec,
    pub candidates: CandidateSpec,
    pub jammers: JammerSpec,
    pub requirements: ObjectiveRequirements,
    pub of3_weights: [f64; 3],
    pub ga: GaConfig,
    pub propagation: PropagationParams,
    pub gdop_subsets: SubsetStrategy,
    pub scenario: ScenarioKind,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            area: AreaBounds::default(),
            grid: GridSpec::default(),
            candidates: CandidateSpec::default(),
            jammers: JammerSpec::default(),
            requirements: ObjectiveRequirements::default(),
            of3_weights: [1.0 / 3.0; 3],
            ga: GaConfig::default(),
            propagation: PropagationParams::default(),
            gdop_subsets: SubsetStrategy::default(),
            scenario: ScenarioKind::Scratch,
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| OspError::Input {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| OspError::Input {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        if self.grid.lat_count < 2 || self.grid.lon_count < 2 {
            return Err(OspError::config("grid", "lat_count and lon_count must be >= 2"));
        }
        if self.candidates.count == 0 {
            return Err(OspError::config("candidates.count", "must be >= 1"));
        }
        if !(self.candidates.antenna_height_m >= 0.0 && self.candidates.antenna_height_m.is_finite()) {
            return Err(OspError::config("candidates.antenna_height_m", "must be >= 0"));
        }
        if self.jammers.heights_m.is_empty() {
            return Err(OspError::config("jammers.heights_m", "must not be empty"));
        }
        if self.jammers.pattern == SitePattern::Lattice
            && !self.jammers.count.is_multiple_of(self.jammers.heights_m.len())
        {
            return Err(OspError::config(
                "jammers.count",
                "must be a multiple of the number of heights for the lattice pattern",
            ));
        }
        self.jammers
            .model_at(GeodeticPosition {
                latitude_deg: 0.0,
                longitude_deg: 0.0,
                altitude_m: 0.0,
            })
            .validate()?;
        self.requirements.validate()?;
        objectives::check_weights(&self.of3_weights)?;
        self.ga.validate()?;
        self.propagation.validate()?;
        if let Some(cap) = self.gdop_subsets.cap() {
            if cap < 4 {
                return Err(OspError::config("gdop_subsets.cap", "must be >= 4"));
            }
        }
        Ok(())
    }

    /// Short digest of everything that determines results. The output
    /// directory and scenario kind are excluded; deployed sites are hashed
    /// only when present, so an empty deployment hashes like a greenfield run.
    pub fn hash(&self, deployed: &[Site]) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        canonical.scenario = ScenarioKind::Scratch;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&canonical).expect("config serializes"));
        for s in deployed {
            let p = &s.position;
            hasher.update(
                format!(
                    "\n{},{},{},{}",
                    s.id, p.latitude_deg, p.longitude_deg, p.altitude_m
                )
                .as_bytes(),
            );
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let empty: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(empty, c);
    }

    #[test]
    fn rejects_unknown_and_invalid_fields() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"areas": {}}"#).is_err());
        let mut c = RunConfig::default();
        c.of3_weights = [0.5, 0.5, 0.5];
        assert!(matches!(c.validate(), Err(OspError::InvalidConfig { .. })));
        let mut c = RunConfig::default();
        c.jammers.count = 74;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.requirements.gdop_cap = 5.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_and_scenario() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        b.scenario = ScenarioKind::Augment {
            deployed_path: Some("x.csv".into()),
        };
        assert_eq!(a.hash(&[]), b.hash(&[]));
        let mut c = a.clone();
        c.ga.seed = 1;
        assert_ne!(a.hash(&[]), c.hash(&[]));
        let site = Site {
            id: "d".into(),
            position: GeodeticPosition::new(48.0, 8.0, 0.0).unwrap(),
        };
        assert_ne!(a.hash(&[]), a.hash(&[site]));
        assert_eq!(a.hash(&[]).len(), 16);
    }
}
