//! On-disk configuration formats for the simulate and serve commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sweetspot_core::fixtures;
use sweetspot_core::group::Group;
use sweetspot_core::object::ObjectSpec;
use sweetspot_core::schedule::SchedulePolicy;
use sweetspot_core::serving::{ServeConfig, ServingParams};
use sweetspot_core::simulate::{calibrate_from_table, BehaviorModel, GroupSimConfig, SimConfig};
use sweetspot_core::SaturationReport;

/// Behaviour model given explicitly or calibrated from a counts table
/// (a path or a bundled fixture name).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BehaviorSource {
    Calibrate { calibrate_from: String },
    Explicit(BehaviorModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupConfigFile {
    pub weight: f64,
    pub policy: SchedulePolicy,
    pub behavior: BehaviorSource,
}

/// Simulation run configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfigFile {
    pub n_users: u64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub dismissal_terminates: bool,
    #[serde(default)]
    pub object: Option<ObjectSpec>,
    pub groups: BTreeMap<Group, GroupConfigFile>,
}

fn default_true() -> bool {
    true
}

impl SimConfigFile {
    pub fn load(path: &Path) -> Result<SimConfigFile> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Resolves calibration sources into a concrete simulation config.
    pub fn resolve(self, base_dir: &Path) -> Result<SimConfig> {
        let mut groups = BTreeMap::new();
        for (group, gc) in self.groups {
            let behavior = match gc.behavior {
                BehaviorSource::Explicit(model) => model,
                BehaviorSource::Calibrate { calibrate_from } => {
                    let counts = load_counts_flexible(base_dir, &calibrate_from)?;
                    calibrate_from_table(&counts)
                        .with_context(|| format!("calibrating {group} from {calibrate_from}"))?
                }
            };
            groups.insert(
                group,
                GroupSimConfig {
                    weight: gc.weight,
                    policy: gc.policy,
                    behavior,
                },
            );
        }
        let config = SimConfig {
            n_users: self.n_users,
            seed: self.seed,
            dismissal_terminates: self.dismissal_terminates,
            object: self.object.unwrap_or_else(ObjectSpec::default_six_element),
            groups,
        };
        config.validate()?;
        Ok(config)
    }
}

fn load_counts_flexible(
    base_dir: &Path,
    name: &str,
) -> Result<Vec<sweetspot_core::ExposureCounts>> {
    let direct = PathBuf::from(name);
    let candidate = if direct.is_absolute() || direct.exists() {
        direct
    } else {
        let joined = base_dir.join(name);
        if joined.exists() {
            joined
        } else if fixtures::bundled(name).is_some() {
            direct
        } else {
            bail!("counts table {name} not found (no file, no bundled fixture)");
        }
    };
    Ok(fixtures::load_counts(&candidate)?)
}

/// Decision-service configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServeConfigFile {
    /// Path to an object spec JSON; bundled six-element object when absent.
    #[serde(default)]
    pub object_spec: Option<PathBuf>,
    pub group_weights: BTreeMap<Group, f64>,
    pub policies: BTreeMap<Group, SchedulePolicy>,
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    pub port: u16,
    #[serde(default)]
    pub params: Option<ServingParams>,
    /// Optional saturation report whose level seeds the serving cap.
    #[serde(default)]
    pub apply_saturation: Option<PathBuf>,
}

impl ServeConfigFile {
    pub fn load(path: &Path) -> Result<ServeConfigFile> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<(ServeConfig, Option<SaturationReport>)> {
        let object = match &self.object_spec {
            Some(rel) => {
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base_dir.join(rel)
                };
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ObjectSpec::from_json(&text)?
            }
            None => ObjectSpec::default_six_element(),
        };
        let saturation = match &self.apply_saturation {
            Some(rel) => {
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base_dir.join(rel)
                };
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(serde_json::from_str(&text)?)
            }
            None => None,
        };
        let config = ServeConfig {
            object,
            group_weights: self.group_weights.clone(),
            policies: self.policies.clone(),
            params: self.params.clone().unwrap_or_default(),
        };
        config.validate()?;
        Ok((config, saturation))
    }
}
