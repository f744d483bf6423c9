use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::DetectConfig;
use crate::features::FeatureConfig;
use crate::gbdt::TrainConfig;
use crate::geo::{Scale, WorldLayout};
use crate::label::LabelRules;
use crate::sim::SimConfig;
use crate::Error;

/// One file drives a whole run. Every section is optional and falls back to
/// its defaults.
///
/// ```toml
/// seed = 7
///
/// [sim]
/// n_households = 2000
///
/// [detect]
/// similarity_threshold = 0.1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub world: WorldLayout,
    pub sim: SimConfig,
    pub label: LabelRules,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub cv: CvConfig,
    pub detect: DetectConfig,
    pub aggregate: AggregateConfig,
    pub report: ReportConfig,
    /// Use existing logs instead of simulating.
    pub inputs: Option<InputFiles>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            world: WorldLayout::default(),
            sim: SimConfig::default(),
            label: LabelRules::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            cv: CvConfig::default(),
            detect: DetectConfig::default(),
            aggregate: AggregateConfig::default(),
            report: ReportConfig::default(),
            inputs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    /// Zero skips cross-validation.
    pub folds: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregateConfig {
    pub scales: Vec<Scale>,
    /// Optional `group_name:city,city,...` file.
    pub groups_file: Option<PathBuf>,
}

impl Default for AggregateConfig {
    fn default() -> Self {
        Self {
            scales: Scale::ALL.to_vec(),
            groups_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Place code for the monthly series; none skips the series.
    pub place: Option<String>,
    pub n_top: usize,
    pub n_bottom: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            place: Some("P0-C0".into()),
            n_top: 6,
            n_bottom: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFiles {
    pub scans: PathBuf,
    pub sessions: PathBuf,
    pub trades: PathBuf,
    pub buildings: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Copy run-level settings into the sections that consume them.
    pub fn sync(&mut self) {
        self.sim.seed = self.seed;
        self.sim.layout = self.world.clone();
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync();
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.world.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.sim.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.train.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.cv.folds == 1 {
            return Err(Error::Config("cv.folds must be 0 (off) or at least 2".into()));
        }
        if self.aggregate.scales.is_empty() {
            return Err(Error::Config("aggregate.scales is empty".into()));
        }
        Ok(())
    }

    /// Canonical text used for the manifest digest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
