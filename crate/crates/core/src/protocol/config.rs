use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Name of the randomization scheme implemented in `rng.rs`. Stored in the
/// study config so sessions can be regenerated by other implementations.
pub const RNG_ALGORITHM: &str = "sha256-chacha20-fisher-yates-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StimulusPair {
    pub orig: String,
    pub anon: String,
    pub group: String,
    /// Speaker gender, used only by the fairness analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
}

fn default_likert() -> u8 {
    5
}

fn default_rng() -> String {
    RNG_ALGORITHM.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub pairs: Vec<StimulusPair>,
    pub seed_base: u64,
    pub groups: Vec<String>,
    #[serde(default)]
    pub listeners: Vec<ListenerProfile>,
    #[serde(default = "default_likert")]
    pub likert_levels: u8,
    #[serde(default = "default_rng")]
    pub rng_algorithm: String,
}

impl StudyConfig {
    pub fn new(pairs: Vec<StimulusPair>, groups: Vec<String>, seed_base: u64) -> Self {
        Self { pairs, seed_base, groups, listeners: Vec::new(), likert_levels: 5, rng_algorithm: default_rng() }
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        let config: StudyConfig =
            serde_json::from_str(text).map_err(|e| ProtocolError::Format(format!("study config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProtocolError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.pairs.is_empty() {
            return Err(ProtocolError::EmptyStudy);
        }
        if self.likert_levels != 5 {
            return Err(ProtocolError::InvalidLikertLevels(self.likert_levels));
        }
        if self.rng_algorithm != RNG_ALGORITHM {
            return Err(ProtocolError::UnsupportedRng(self.rng_algorithm.clone()));
        }
        let mut groups = HashSet::new();
        for g in &self.groups {
            if !groups.insert(g.as_str()) {
                return Err(ProtocolError::DuplicateGroup(g.clone()));
            }
        }
        let mut ids = HashSet::new();
        for p in &self.pairs {
            if !groups.contains(p.group.as_str()) {
                return Err(ProtocolError::UnknownGroup(p.group.clone()));
            }
            for id in [&p.orig, &p.anon] {
                if !ids.insert(id.as_str()) {
                    return Err(ProtocolError::DuplicateStimulus(id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn listener(&self, id: &str) -> Option<&ListenerProfile> {
        self.listeners.iter().find(|l| l.listener_id == id)
    }
}

/// CEFR level, or native speaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Proficiency {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
    #[serde(rename = "native")]
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expertise {
    Expert,
    NonExpert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListenerProfile {
    pub listener_id: String,
    pub native_language: String,
    pub german_proficiency: Proficiency,
    pub expertise: Expertise,
    #[serde(default)]
    pub clinical_years: u32,
    #[serde(default)]
    pub speech_processing_years: u32,
    #[serde(default)]
    pub engineering_years: u32,
}

impl ListenerProfile {
    pub fn is_native(&self) -> bool {
        self.german_proficiency == Proficiency::Native
    }

    pub fn is_expert(&self) -> bool {
        self.expertise == Expertise::Expert
    }
}
