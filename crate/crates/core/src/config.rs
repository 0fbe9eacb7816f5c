//! One TOML file for every tunable: perception thresholds, focus weights and
//! window, ensemble parameters, commit rule, simulator kinematics and seeds.
//! Missing sections fall back to defaults; document paths default to the
//! bundled kitchen.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionLibrary;
use crate::goal::PlanLibrary;
use crate::kb::KnowledgeBase;
use crate::movement::DecisionTree;
use crate::sim::SimParams;
use crate::supervisor::{train_default_tree, Models, PipelineConfig, TrainingSetup};
use crate::world::Scenario;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Documents {
    pub scenario: Option<PathBuf>,
    pub actions: Option<PathBuf>,
    pub plans: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    /// Pre-trained tree; trained from simulated traces when absent.
    pub tree: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pipeline: PipelineConfig,
    pub sim: SimParams,
    pub training: TrainingSetup,
    pub documents: Documents,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl Config {
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(source)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&read(path)?)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        match &self.documents.scenario {
            Some(p) => Scenario::parse(&read(p)?).map_err(invalid),
            None => Ok(Scenario::kitchen()),
        }
    }

    pub fn actions(&self) -> Result<ActionLibrary, ConfigError> {
        match &self.documents.actions {
            Some(p) => ActionLibrary::parse(&read(p)?).map_err(invalid),
            None => Ok(ActionLibrary::kitchen()),
        }
    }

    pub fn plans(&self) -> Result<PlanLibrary, ConfigError> {
        match &self.documents.plans {
            Some(p) => PlanLibrary::parse(&read(p)?).map_err(invalid),
            None => Ok(PlanLibrary::kitchen()),
        }
    }

    pub fn kb(&self) -> Result<KnowledgeBase, ConfigError> {
        match &self.documents.kb {
            Some(p) => KnowledgeBase::parse(&read(p)?).map_err(invalid),
            None => Ok(KnowledgeBase::kitchen()),
        }
    }

    /// The configured tree, or one trained on traces simulated in `scenario`.
    pub fn tree(&self, scenario: &Scenario) -> Result<DecisionTree, ConfigError> {
        match &self.documents.tree {
            Some(p) => DecisionTree::from_document(&read(p)?).map_err(invalid),
            None => train_default_tree(scenario, &self.pipeline, &self.training).map_err(invalid),
        }
    }

    pub fn models(&self, scenario: &Scenario) -> Result<Models, ConfigError> {
        Ok(Models {
            tree: self.tree(scenario)?,
            actions: self.actions()?,
            plans: self.plans()?,
            kb: self.kb()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn partial_sections_override() {
        let c = Config::parse(
            r#"
            [pipeline]
            verify = false
            [pipeline.focus]
            tau = 0.6
            window = 5
            [pipeline.ensemble]
            seed = 11
            [sim]
            noise_sigma = 0.02
            "#,
        )
        .unwrap();
        assert!(!c.pipeline.verify);
        assert_eq!(c.pipeline.focus.tau, 0.6);
        assert_eq!(c.pipeline.focus.window, 5);
        assert_eq!(
            c.pipeline.focus.tie_tolerance,
            PipelineConfig::default().focus.tie_tolerance
        );
        assert_eq!(c.pipeline.ensemble.seed, 11);
        assert_eq!(c.sim.noise_sigma, 0.02);
        assert_eq!(c.sim.walk_speed, SimParams::default().walk_speed);
    }

    #[test]
    fn round_trip() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::parse(&text).unwrap(), c);
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(Config::parse("[pipline]\nverify = false").is_err());
    }

    #[test]
    fn missing_document_reports_path() {
        let c = Config {
            documents: Documents {
                scenario: Some("/nonexistent/room.scn".into()),
                ..Documents::default()
            },
            ..Config::default()
        };
        let err = c.scenario().unwrap_err().to_string();
        assert!(err.contains("/nonexistent/room.scn"));
    }
}
