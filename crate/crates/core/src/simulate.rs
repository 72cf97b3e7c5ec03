//! Synthetic user population generator calibrated from per-level counts.
//!
//! Every user runs on an independent ChaCha8 substream derived from the
//! run seed and the user index, so streams are reproducible regardless of
//! how the work is scheduled, and the whole log is byte-stable for a fixed
//! configuration.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eventlog::LogHeader;
use crate::group::Group;
use crate::metrics::{
    aggregate_events, build_level_table, EventKind, ExposureCounts, ExposureEvent, GroupTotals,
    LevelStats,
};
use crate::object::{LevelVector, ObjectSpec};
use crate::report::{analyze_table, AnalysisReport, DEFAULT_SEGMENT_BOUNDARY};
use crate::saturation::{DEFAULT_EPSILON, DEFAULT_WINDOW};
use crate::schedule::{full_schedule, ScheduleKind, SchedulePolicy};

/// Name of the generator recorded in log headers.
pub const RNG_NAME: &str = "chacha8";

/// Per-level response probabilities and per-contact retention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorModel {
    /// P(click | view) per level index.
    pub click_prob: Vec<f64>,
    /// P(dismiss | view) per level index.
    pub dismiss_prob: Vec<f64>,
    /// P(return for contact C+1 | viewed contact C), indexed by C.
    pub retention_prob: Vec<f64>,
    #[serde(default = "default_max_contacts")]
    pub max_contacts: u32,
    /// Provenance note, e.g. which table the model was calibrated from.
    #[serde(default)]
    pub source: String,
}

fn default_max_contacts() -> u32 {
    25
}

impl BehaviorModel {
    pub fn validate(&self) -> Result<()> {
        if self.click_prob.is_empty() || self.click_prob.len() != self.dismiss_prob.len() {
            return Err(Error::InvalidConfig(
                "click_prob and dismiss_prob must be non-empty and equal length".into(),
            ));
        }
        for (p, q) in self.click_prob.iter().zip(&self.dismiss_prob) {
            if !(0.0..=1.0).contains(p) || !(0.0..=1.0).contains(q) || p + q > 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "response probabilities ({p}, {q}) must lie in [0,1] with sum <= 1"
                )));
            }
        }
        for r in &self.retention_prob {
            if !(0.0..=1.0).contains(r) {
                return Err(Error::InvalidConfig(format!(
                    "retention probability {r} outside [0,1]"
                )));
            }
        }
        if self.max_contacts < 1 {
            return Err(Error::InvalidConfig("max_contacts must be >= 1".into()));
        }
        Ok(())
    }

    /// Probabilities clamp at their final entry past the calibrated range.
    fn index(probs: &[f64], step: u32) -> f64 {
        let i = (step as usize).saturating_sub(1).min(probs.len() - 1);
        probs[i]
    }

    pub fn click_at(&self, step: u32) -> f64 {
        Self::index(&self.click_prob, step)
    }

    pub fn dismiss_at(&self, step: u32) -> f64 {
        Self::index(&self.dismiss_prob, step)
    }

    pub fn retention_at(&self, contact: u32) -> f64 {
        if self.retention_prob.is_empty() {
            return 0.0;
        }
        Self::index(&self.retention_prob, contact)
    }
}

/// Derives a behaviour model from an observed counts table:
/// response probabilities from per-level factors and retention from the
/// ratio of consecutive view counts.
pub fn calibrate_from_table(counts: &[ExposureCounts]) -> Result<BehaviorModel> {
    if counts.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot calibrate from an empty table".into(),
        ));
    }
    for pair in counts.windows(2) {
        if pair[1].views > pair[0].views {
            return Err(Error::InvalidConfig(format!(
                "views increase from level {} to {}; not a retention sequence",
                pair[0].level_index, pair[1].level_index
            )));
        }
    }
    let mut click_prob = Vec::with_capacity(counts.len());
    let mut dismiss_prob = Vec::with_capacity(counts.len());
    for c in counts {
        if c.views == 0 {
            return Err(Error::InvalidConfig(format!(
                "level {} has zero views; cannot calibrate",
                c.level_index
            )));
        }
        click_prob.push(c.positives as f64 / c.views as f64);
        dismiss_prob.push(c.negatives as f64 / c.views as f64);
    }
    let retention_prob = counts
        .windows(2)
        .map(|pair| pair[1].views as f64 / pair[0].views as f64)
        .collect();
    Ok(BehaviorModel {
        click_prob,
        dismiss_prob,
        retention_prob,
        max_contacts: counts.len() as u32,
        source: "calibrated-from-table".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSimConfig {
    pub weight: f64,
    pub policy: SchedulePolicy,
    pub behavior: BehaviorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_users: u64,
    pub seed: u64,
    /// When true (default) a dismissal ends that user's exposure sequence.
    #[serde(default = "default_true")]
    pub dismissal_terminates: bool,
    #[serde(default = "ObjectSpec::default_six_element")]
    pub object: ObjectSpec,
    pub groups: BTreeMap<Group, GroupSimConfig>,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.object.validate()?;
        if self.groups.is_empty() {
            return Err(Error::InvalidConfig("no groups configured".into()));
        }
        let total: f64 = self.groups.values().map(|g| g.weight).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidConfig("group weights must sum to > 0".into()));
        }
        for (group, gc) in &self.groups {
            if gc.weight < 0.0 {
                return Err(Error::InvalidConfig(format!("{group} has negative weight")));
            }
            gc.policy.validate(&self.object)?;
            gc.behavior.validate()?;
        }
        Ok(())
    }

    /// Digest over the canonical JSON encoding, recorded in log headers.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> LogHeader {
        LogHeader {
            sim_config_digest: self.digest(),
            seed: self.seed,
            rng: RNG_NAME.to_string(),
        }
    }
}

struct GroupPlan {
    group: Group,
    cum_weight: f64,
    policy: SchedulePolicy,
    schedule: Vec<LevelVector>,
    behavior: BehaviorModel,
}

/// Generates the event stream for a configured population.
///
/// Events appear in user-index order; each user's draws come only from the
/// (seed, user index) substream. Timestamps are `base_ts` plus a global
/// emission counter.
pub fn simulate_population(config: &SimConfig, base_ts: u64) -> Result<Vec<ExposureEvent>> {
    config.validate()?;
    let total_weight: f64 = config.groups.values().map(|g| g.weight).sum();
    let mut plans: Vec<GroupPlan> = Vec::with_capacity(config.groups.len());
    let mut cum = 0.0;
    for (&group, gc) in &config.groups {
        cum += gc.weight / total_weight;
        plans.push(GroupPlan {
            group,
            cum_weight: cum,
            policy: gc.policy.clone(),
            schedule: full_schedule(&gc.policy, &config.object)?
                .into_iter()
                .map(|s| s.levels)
                .collect(),
            behavior: gc.behavior.clone(),
        });
    }
    if let Some(last) = plans.last_mut() {
        last.cum_weight = 1.0; // absorb float residue
    }

    let mut events = Vec::new();
    let mut ts = base_ts;
    for user_index in 0..config.n_users {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(user_index + 1);
        let pick: f64 = rng.gen();
        let plan = plans
            .iter()
            .find(|p| pick < p.cum_weight)
            .unwrap_or_else(|| plans.last().expect("at least one group"));
        let user_id = format!("u{user_index:07}");

        let mut contact: u32 = 1;
        loop {
            let step = plan.policy.step_index(&config.object, contact)?;
            let levels = plan.schedule[(step - 1) as usize].clone();
            let mut emit = |kind: EventKind, ts: &mut u64| {
                events.push(ExposureEvent {
                    ts: *ts,
                    user_id: user_id.clone(),
                    group: plan.group,
                    contact,
                    level_index: step,
                    levels: levels.clone(),
                    kind,
                    interaction_type: 1,
                    event_id: None,
                    orphan: false,
                });
                *ts += 1;
            };
            emit(EventKind::View, &mut ts);

            let outcome: f64 = rng.gen();
            let p_click = plan.behavior.click_at(step);
            let p_dismiss = plan.behavior.dismiss_at(step);
            let mut dismissed = false;
            if outcome < p_click {
                emit(EventKind::Positive, &mut ts);
            } else if outcome < p_click + p_dismiss {
                emit(EventKind::Negative, &mut ts);
                dismissed = true;
            }

            if dismissed && config.dismissal_terminates {
                break;
            }
            if contact >= plan.behavior.max_contacts {
                break;
            }
            if rng.gen::<f64>() >= plan.behavior.retention_at(contact) {
                break;
            }
            contact += 1;
        }
    }
    Ok(events)
}

/// Tables, totals, and series analyses for one simulated run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub tables: BTreeMap<Group, Vec<LevelStats>>,
    pub totals: BTreeMap<Group, GroupTotals>,
    /// Present for multi-step (increasing/decreasing) schedules.
    pub analyses: BTreeMap<Group, AnalysisReport>,
}

/// Simulates, aggregates, and analyzes in one pass.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentOutcome> {
    let events = simulate_population(config, 0)?;
    let counts = aggregate_events(&events, None);
    let mut tables = BTreeMap::new();
    let mut totals = BTreeMap::new();
    let mut analyses = BTreeMap::new();
    for (group, group_counts) in counts {
        let table = build_level_table(&group_counts)?;
        totals.insert(group, crate::metrics::aggregate_group(&group_counts));
        let multi_step = matches!(
            config.groups[&group].policy.kind,
            ScheduleKind::Increasing | ScheduleKind::Decreasing
        );
        if multi_step {
            if let Ok(report) = analyze_table(
                group.as_str(),
                &table,
                DEFAULT_WINDOW,
                DEFAULT_EPSILON,
                DEFAULT_SEGMENT_BOUNDARY,
            ) {
                analyses.insert(group, report);
            }
        }
        tables.insert(group, table);
    }
    Ok(ExperimentOutcome {
        tables,
        totals,
        analyses,
    })
}
