//! Scripted risk assessment.

use serde::{Deserialize, Serialize};

use crate::domain::RiskLevel;

/// What the authority knows when it assesses risk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskInputs {
    pub mission_tag: String,
    pub zone_tag: String,
    pub emergency: bool,
}

/// A rule matches when every field it sets equals the input.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskRule {
    pub mission_tag: Option<String>,
    pub zone_tag: Option<String>,
    pub emergency: Option<bool>,
    pub level: Option<RiskLevel>,
}

impl RiskRule {
    fn matches(&self, i: &RiskInputs) -> bool {
        self.mission_tag.as_ref().is_none_or(|m| *m == i.mission_tag)
            && self.zone_tag.as_ref().is_none_or(|z| *z == i.zone_tag)
            && self.emergency.is_none_or(|e| e == i.emergency)
    }
}

/// First matching rule wins; `default` covers everything else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskPolicy {
    #[serde(default)]
    pub rules: Vec<RiskRule>,
    pub default: RiskLevel,
}

impl Default for RiskPolicy {
    fn default() -> Self {
        RiskPolicy::constant(RiskLevel::High)
    }
}

impl RiskPolicy {
    pub fn constant(level: RiskLevel) -> Self {
        RiskPolicy {
            rules: Vec::new(),
            default: level,
        }
    }

    pub fn assess(&self, inputs: &RiskInputs) -> RiskLevel {
        self.rules
            .iter()
            .find(|r| r.matches(inputs))
            .and_then(|r| r.level)
            .unwrap_or(self.default)
    }
}
