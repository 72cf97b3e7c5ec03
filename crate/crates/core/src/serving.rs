//! Online decision loop: group assignment, schedule-driven level selection,
//! response recording, live per-level counters, and feedback parameters.
//!
//! The engine is synchronous and thread-safe. All mutable state sits behind
//! one mutex, which makes contact counters linearizable, parameter swaps
//! atomic, and snapshots exact at their linearization point. The append-only
//! event log is the durable record; counters are a rebuildable cache.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::metrics::{build_level_table, EventKind, ExposureCounts, ExposureEvent, LevelStats};
use crate::object::{aggregate_intensity, validate_levels, LevelVector, ObjectSpec};
use crate::saturation::SaturationReport;
use crate::schedule::{level_vector_at, SchedulePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub page_id: String,
    pub user_id: String,
    /// Client-side contact number; reconciled with the server counter as
    /// the maximum of the two when present.
    #[serde(default)]
    pub contact: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub group: Group,
    pub contact: u32,
    pub levels: LevelVector,
    /// Aggregated intensity of the served vector.
    pub ai: f64,
    pub object_id: String,
}

/// Operating limits pushed back from analysis: policy overrides, a
/// per-element cap vector, and a global maximum level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServingParams {
    #[serde(default)]
    pub policy_overrides: BTreeMap<Group, SchedulePolicy>,
    #[serde(default)]
    pub level_caps: Option<LevelVector>,
    #[serde(default)]
    pub max_level: Option<u32>,
}

impl ServingParams {
    pub fn validate(&self, object: &ObjectSpec) -> Result<()> {
        if let Some(caps) = &self.level_caps {
            validate_levels(object, caps)?;
        }
        if let Some(max) = self.max_level {
            if max < 1 || max > object.max_common_level() {
                return Err(Error::InvalidConfig(format!(
                    "max_level {max} outside 1..={}",
                    object.max_common_level()
                )));
            }
        }
        for (group, policy) in &self.policy_overrides {
            policy
                .validate(object)
                .map_err(|e| Error::InvalidConfig(format!("override for {group}: {e}")))?;
        }
        Ok(())
    }

    fn apply_caps(&self, levels: &LevelVector) -> Result<LevelVector> {
        let mut out = levels.clone();
        if let Some(max) = self.max_level {
            out = LevelVector(out.0.iter().map(|&l| l.min(max)).collect());
        }
        if let Some(caps) = &self.level_caps {
            out = out.min_with(caps)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeConfig {
    #[serde(default = "ObjectSpec::default_six_element")]
    pub object: ObjectSpec,
    pub group_weights: BTreeMap<Group, f64>,
    pub policies: BTreeMap<Group, SchedulePolicy>,
    #[serde(default)]
    pub params: ServingParams,
}

impl ServeConfig {
    pub fn validate(&self) -> Result<()> {
        self.object.validate()?;
        let total: f64 = self.group_weights.values().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidConfig("group weights must sum to > 0".into()));
        }
        for (group, weight) in &self.group_weights {
            if *weight < 0.0 {
                return Err(Error::InvalidConfig(format!("{group} has negative weight")));
            }
            if *weight > 0.0 && !self.policies.contains_key(group) {
                return Err(Error::InvalidConfig(format!(
                    "{group} has traffic but no policy"
                )));
            }
        }
        for policy in self.policies.values() {
            policy.validate(&self.object)?;
        }
        self.params.validate(&self.object)
    }
}

/// Deterministic weighted bucketing: a stable digest of the user id lands
/// in [0, 1) and the unit interval is partitioned by normalized weights in
/// group order.
pub fn assign_group(user_id: &str, weights: &BTreeMap<Group, f64>) -> Result<Group> {
    let total: f64 = weights.values().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidConfig("group weights must sum to > 0".into()));
    }
    let digest = Sha256::digest(user_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    let unit = u64::from_be_bytes(bytes) as f64 / (u64::MAX as f64 + 1.0);

    let mut cum = 0.0;
    let mut last = None;
    for (&group, &weight) in weights {
        if weight <= 0.0 {
            continue;
        }
        cum += weight / total;
        last = Some(group);
        if unit < cum {
            return Ok(group);
        }
    }
    Ok(last.expect("positive total weight implies a positive-weight group"))
}

/// Timestamp source; `Fixed` makes logs reproducible.
#[derive(Debug, Clone, Copy)]
pub enum Clock {
    System,
    Fixed(u64),
}

impl Clock {
    fn now(&self) -> u64 {
        match self {
            Clock::System => std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            Clock::Fixed(t) => *t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordAck {
    pub accepted: bool,
    /// Event id was already seen; the event was ignored.
    pub duplicate: bool,
    /// Event did not match a served (user, contact) pair.
    pub orphan: bool,
}

struct LastServe {
    contact: u32,
    step: u32,
    levels: LevelVector,
}

#[derive(Default)]
struct Counters {
    cells: BTreeMap<(Group, u32), ExposureCounts>,
    decides: BTreeMap<Group, u64>,
}

struct EngineState {
    params: ServingParams,
    users: HashMap<String, LastServe>,
    counters: Counters,
    seen_event_ids: HashSet<String>,
}

pub struct Engine {
    object: ObjectSpec,
    weights: BTreeMap<Group, f64>,
    policies: BTreeMap<Group, SchedulePolicy>,
    clock: Clock,
    state: Mutex<EngineState>,
    log: Option<Mutex<Box<dyn Write + Send>>>,
}

impl Engine {
    pub fn new(
        config: ServeConfig,
        log: Option<Box<dyn Write + Send>>,
        clock: Clock,
    ) -> Result<Engine> {
        config.validate()?;
        Ok(Engine {
            object: config.object,
            weights: config.group_weights,
            policies: config.policies,
            clock,
            state: Mutex::new(EngineState {
                params: config.params,
                users: HashMap::new(),
                counters: Counters::default(),
                seen_event_ids: HashSet::new(),
            }),
            log: log.map(Mutex::new),
        })
    }

    pub fn object(&self) -> &ObjectSpec {
        &self.object
    }

    fn policy_for<'a>(
        &'a self,
        params: &'a ServingParams,
        group: Group,
    ) -> Result<&'a SchedulePolicy> {
        params
            .policy_overrides
            .get(&group)
            .or_else(|| self.policies.get(&group))
            .ok_or_else(|| Error::InvalidConfig(format!("no policy configured for {group}")))
    }

    fn append_log(&self, event: &ExposureEvent) {
        if let Some(log) = &self.log {
            let mut writer = log.lock().expect("log lock");
            // one JSON object per line, flushed so the log survives abrupt stops
            if serde_json::to_writer(&mut *writer, event).is_ok() {
                let _ = writer.write_all(b"\n");
                let _ = writer.flush();
            }
        }
    }

    /// Resolves group, contact, and capped levels for a request, bumps the
    /// per-user counter, counts the view, and logs it.
    pub fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse> {
        if req.user_id.is_empty() {
            return Err(Error::InvalidConfig("user_id must be non-empty".into()));
        }
        if req.contact == Some(0) {
            return Err(Error::InvalidConfig("contact numbers start at 1".into()));
        }
        let group = assign_group(&req.user_id, &self.weights)?;

        let (contact, step, levels, ai) = {
            let mut state = self.state.lock().expect("state lock");
            // Bare requests advance the counter; an explicit contact
            // reconciles as max(client, server), so re-requesting the same
            // contact re-serves the same vector.
            let current = state.users.get(&req.user_id).map_or(0, |u| u.contact);
            let contact = match req.contact {
                Some(k) => k.max(current),
                None => current + 1,
            };

            let policy = self.policy_for(&state.params, group)?;
            let step = policy.step_index(&self.object, contact)?;
            let raw = level_vector_at(policy, &self.object, contact)?;
            let levels = state.params.apply_caps(&raw)?;
            let ai = aggregate_intensity(&self.object, &levels)?;

            state.users.insert(
                req.user_id.clone(),
                LastServe {
                    contact,
                    step,
                    levels: levels.clone(),
                },
            );
            let cell = state
                .counters
                .cells
                .entry((group, step))
                .or_insert_with(|| ExposureCounts {
                    level_index: step,
                    levels: levels.clone(),
                    views: 0,
                    positives: 0,
                    negatives: 0,
                });
            cell.views += 1;
            *state.counters.decides.entry(group).or_insert(0) += 1;
            (contact, step, levels, ai)
        };

        self.append_log(&ExposureEvent {
            ts: self.clock.now(),
            user_id: req.user_id.clone(),
            group,
            contact,
            level_index: step,
            levels: levels.clone(),
            kind: EventKind::View,
            interaction_type: 1,
            event_id: None,
            orphan: false,
        });

        Ok(DecisionResponse {
            group,
            contact,
            levels,
            ai,
            object_id: self.object.object_id.clone(),
        })
    }

    /// Accepts a positive/negative response, updates counters, and appends
    /// it to the log. Unknown (user, contact) pairs are accepted but
    /// flagged as orphans; duplicate event ids are ignored.
    pub fn record_event(&self, event: &ExposureEvent) -> Result<RecordAck> {
        if event.kind == EventKind::View {
            return Err(Error::InvalidConfig(
                "view events are produced by decide, not submitted".into(),
            ));
        }
        if event.user_id.is_empty() || event.contact < 1 {
            return Err(Error::InvalidConfig(
                "event must reference a user and contact".into(),
            ));
        }
        let group = assign_group(&event.user_id, &self.weights)?;

        let (orphan, step, levels) = {
            let mut state = self.state.lock().expect("state lock");
            if let Some(id) = &event.event_id {
                if !state.seen_event_ids.insert(id.clone()) {
                    return Ok(RecordAck {
                        accepted: true,
                        duplicate: true,
                        orphan: false,
                    });
                }
            }
            let (orphan, step, levels) = match state.users.get(&event.user_id) {
                Some(last) if event.contact == last.contact => {
                    (false, last.step, last.levels.clone())
                }
                Some(last) if event.contact < last.contact => {
                    // response to an earlier impression: attribute by schedule
                    let policy = self.policy_for(&state.params, group)?;
                    let step = policy.step_index(&self.object, event.contact)?;
                    (
                        false,
                        step,
                        level_vector_at(policy, &self.object, event.contact)?,
                    )
                }
                _ => {
                    let policy = self.policy_for(&state.params, group)?;
                    let step = policy.step_index(&self.object, event.contact)?;
                    (
                        true,
                        step,
                        level_vector_at(policy, &self.object, event.contact)?,
                    )
                }
            };
            let cell = state
                .counters
                .cells
                .entry((group, step))
                .or_insert_with(|| ExposureCounts {
                    level_index: step,
                    levels: levels.clone(),
                    views: 0,
                    positives: 0,
                    negatives: 0,
                });
            match event.kind {
                EventKind::Positive => cell.positives += 1,
                EventKind::Negative => cell.negatives += 1,
                EventKind::View => unreachable!(),
            }
            (orphan, step, levels)
        };

        // the logged line carries the server-side attribution
        let mut logged = event.clone();
        logged.group = group;
        logged.level_index = step;
        logged.levels = levels;
        logged.orphan = orphan;
        self.append_log(&logged);

        Ok(RecordAck {
            accepted: true,
            duplicate: false,
            orphan,
        })
    }

    /// Point-in-time statistics table for a group, contiguous from level 1
    /// to the highest level served.
    pub fn stats_snapshot(&self, group: Group) -> Result<Vec<LevelStats>> {
        let state = self.state.lock().expect("state lock");
        let cells: Vec<&ExposureCounts> = state
            .counters
            .cells
            .iter()
            .filter(|((g, _), _)| *g == group)
            .map(|(_, c)| c)
            .collect();
        let max = cells.iter().map(|c| c.level_index).max().unwrap_or(0);
        let mut rows = Vec::with_capacity(max as usize);
        for level in 1..=max {
            match cells.iter().find(|c| c.level_index == level) {
                Some(c) => rows.push((*c).clone()),
                None => {
                    let mut empty = ExposureCounts::empty(level);
                    if let Ok(policy) = self.policy_for(&state.params, group) {
                        if let Ok(lv) = level_vector_at(policy, &self.object, level) {
                            empty.levels = state.params.apply_caps(&lv)?;
                        }
                    }
                    rows.push(empty);
                }
            }
        }
        build_level_table(&rows)
    }

    /// Number of decide calls acknowledged for a group.
    pub fn decided_count(&self, group: Group) -> u64 {
        let state = self.state.lock().expect("state lock");
        state.counters.decides.get(&group).copied().unwrap_or(0)
    }

    pub fn params(&self) -> ServingParams {
        self.state.lock().expect("state lock").params.clone()
    }

    /// Atomically swaps the active parameter set; invalid parameters are
    /// rejected and the previous set stays active.
    pub fn update_params(&self, params: ServingParams) -> Result<()> {
        params.validate(&self.object)?;
        self.state.lock().expect("state lock").params = params;
        Ok(())
    }

    /// Sets the level-cap vector to the increasing schedule's step at the
    /// detected saturation level, closing the feedback loop.
    pub fn apply_saturation(&self, report: &SaturationReport) -> Result<()> {
        let cap = level_vector_at(
            &SchedulePolicy::increasing(),
            &self.object,
            report.detected_level,
        )?;
        let mut state = self.state.lock().expect("state lock");
        let mut params = state.params.clone();
        params.level_caps = Some(cap);
        params.validate(&self.object)?;
        state.params = params;
        Ok(())
    }

    pub fn flush(&self) {
        if let Some(log) = &self.log {
            let _ = log.lock().expect("log lock").flush();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rounding::pct2;

    fn config(weights: &[(Group, f64)]) -> ServeConfig {
        let mut group_weights = BTreeMap::new();
        let mut policies = BTreeMap::new();
        for &(g, w) in weights {
            group_weights.insert(g, w);
            policies.insert(
                g,
                match g {
                    Group::G1 => SchedulePolicy::flat(1),
                    Group::G2 => SchedulePolicy::flat(3),
                    Group::G3 => SchedulePolicy::flat(5),
                    Group::G4 => SchedulePolicy::increasing(),
                    Group::G5 => SchedulePolicy::decreasing(),
                },
            );
        }
        ServeConfig {
            object: ObjectSpec::default_six_element(),
            group_weights,
            policies,
            params: ServingParams::default(),
        }
    }

    fn engine(weights: &[(Group, f64)]) -> Engine {
        Engine::new(config(weights), None, Clock::Fixed(0)).unwrap()
    }

    fn decide(engine: &Engine, user: &str, contact: Option<u32>) -> DecisionResponse {
        engine
            .decide(&DecisionRequest {
                page_id: "p1".into(),
                user_id: user.into(),
                contact,
            })
            .unwrap()
    }

    #[test]
    fn assignment_is_deterministic_and_respects_weights() {
        let mut weights = BTreeMap::new();
        weights.insert(Group::G1, 1.0);
        weights.insert(Group::G2, 0.0);
        assert_eq!(assign_group("anyone", &weights).unwrap(), Group::G1);
        let equal: BTreeMap<Group, f64> = Group::ALL.iter().map(|&g| (g, 1.0)).collect();
        let a = assign_group("user-77", &equal).unwrap();
        let b = assign_group("user-77", &equal).unwrap();
        assert_eq!(a, b);
        let zero: BTreeMap<Group, f64> = Group::ALL.iter().map(|&g| (g, 0.0)).collect();
        assert!(assign_group("x", &zero).is_err());
    }

    #[test]
    fn assignment_shares_are_near_uniform() {
        let equal: BTreeMap<Group, f64> = Group::ALL.iter().map(|&g| (g, 1.0)).collect();
        let mut counts: BTreeMap<Group, u64> = BTreeMap::new();
        let n = 100_000;
        for i in 0..n {
            *counts
                .entry(assign_group(&format!("id-{i}"), &equal).unwrap())
                .or_insert(0) += 1;
        }
        for (group, count) in counts {
            let share = count as f64 / n as f64;
            assert!(
                (share - 0.2).abs() < 0.01,
                "{group} share {share} off by more than 1%"
            );
        }
    }

    #[test]
    fn g4_user_at_contact_8_gets_step_8_vector() {
        let engine = engine(&[(Group::G4, 1.0)]);
        let resp = decide(&engine, "u1", Some(8));
        assert_eq!(resp.levels, LevelVector(vec![3, 2, 2, 2, 2, 2]));
        assert_eq!(resp.group, Group::G4);
        assert_eq!(resp.contact, 8);
        assert_eq!(resp.ai, 13.0);
    }

    #[test]
    fn g1_user_always_minimal_vector() {
        let engine = engine(&[(Group::G1, 1.0)]);
        for contact in [1, 7, 40] {
            let resp = decide(&engine, "u9", Some(contact));
            assert_eq!(resp.levels, LevelVector(vec![1; 6]));
        }
    }

    #[test]
    fn g5_user_at_contact_25_reaches_all_ones() {
        let engine = engine(&[(Group::G5, 1.0)]);
        let resp = decide(&engine, "u2", Some(25));
        assert_eq!(resp.levels, LevelVector(vec![1; 6]));
    }

    #[test]
    fn server_counter_increments_without_client_contact() {
        let engine = engine(&[(Group::G4, 1.0)]);
        for expected in 1..=5 {
            let resp = decide(&engine, "visitor", None);
            assert_eq!(resp.contact, expected);
        }
    }

    #[test]
    fn client_contact_reconciles_as_max() {
        let engine = engine(&[(Group::G4, 1.0)]);
        assert_eq!(decide(&engine, "v", Some(4)).contact, 4);
        assert_eq!(decide(&engine, "v", Some(2)).contact, 4); // server ahead
        assert_eq!(decide(&engine, "v", None).contact, 5);
    }

    #[test]
    fn repeated_identical_requests_serve_identical_vectors() {
        let engine = engine(&[(Group::G4, 1.0)]);
        let first = decide(&engine, "v", Some(8));
        let second = decide(&engine, "v", Some(8));
        assert_eq!(first, second);
        assert_eq!(first.levels, LevelVector(vec![3, 2, 2, 2, 2, 2]));
    }

    #[test]
    fn rejects_empty_user_and_zero_contact() {
        let engine = engine(&[(Group::G4, 1.0)]);
        assert!(engine
            .decide(&DecisionRequest {
                page_id: "p".into(),
                user_id: String::new(),
                contact: None,
            })
            .is_err());
        assert!(engine
            .decide(&DecisionRequest {
                page_id: "p".into(),
                user_id: "u".into(),
                contact: Some(0),
            })
            .is_err());
    }

    fn response_event(
        user: &str,
        contact: u32,
        kind: EventKind,
        id: Option<&str>,
    ) -> ExposureEvent {
        ExposureEvent {
            ts: 0,
            user_id: user.into(),
            group: Group::G4,
            contact,
            level_index: contact,
            levels: LevelVector(vec![1; 6]),
            kind,
            interaction_type: 1,
            event_id: id.map(String::from),
            orphan: false,
        }
    }

    #[test]
    fn responses_update_counters() {
        let engine = engine(&[(Group::G4, 1.0)]);
        decide(&engine, "u1", None);
        let ack = engine
            .record_event(&response_event("u1", 1, EventKind::Positive, None))
            .unwrap();
        assert!(!ack.orphan);
        engine
            .record_event(&response_event("u1", 1, EventKind::Negative, None))
            .unwrap();
        let table = engine.stats_snapshot(Group::G4).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(
            (table[0].views, table[0].positives, table[0].negatives),
            (1, 1, 1)
        );
    }

    #[test]
    fn duplicate_event_id_is_idempotent() {
        let engine = engine(&[(Group::G4, 1.0)]);
        decide(&engine, "u1", None);
        let first = engine
            .record_event(&response_event("u1", 1, EventKind::Positive, Some("ev-1")))
            .unwrap();
        assert!(!first.duplicate);
        let second = engine
            .record_event(&response_event("u1", 1, EventKind::Positive, Some("ev-1")))
            .unwrap();
        assert!(second.duplicate);
        let table = engine.stats_snapshot(Group::G4).unwrap();
        assert_eq!(table[0].positives, 1);
    }

    #[test]
    fn unknown_pair_accepted_as_orphan() {
        let engine = engine(&[(Group::G4, 1.0)]);
        let ack = engine
            .record_event(&response_event("ghost", 3, EventKind::Positive, None))
            .unwrap();
        assert!(ack.accepted && ack.orphan);
        let table = engine.stats_snapshot(Group::G4).unwrap();
        assert_eq!(table[2].positives, 1);
    }

    #[test]
    fn view_submission_rejected() {
        let engine = engine(&[(Group::G4, 1.0)]);
        assert!(engine
            .record_event(&response_event("u", 1, EventKind::View, None))
            .is_err());
    }

    #[test]
    fn fresh_server_snapshot_is_empty() {
        let engine = engine(&[(Group::G4, 1.0)]);
        assert!(engine.stats_snapshot(Group::G4).unwrap().is_empty());
    }

    #[test]
    fn caps_bound_served_vectors() {
        let engine = engine(&[(Group::G4, 1.0)]);
        engine
            .update_params(ServingParams {
                policy_overrides: BTreeMap::new(),
                level_caps: None,
                max_level: Some(3),
            })
            .unwrap();
        let resp = decide(&engine, "u1", Some(20));
        assert_eq!(resp.levels, LevelVector(vec![3; 6]));
    }

    #[test]
    fn policy_override_replaces_group_schedule() {
        let engine = engine(&[(Group::G4, 1.0)]);
        let mut overrides = BTreeMap::new();
        overrides.insert(Group::G4, SchedulePolicy::flat(2));
        engine
            .update_params(ServingParams {
                policy_overrides: overrides,
                level_caps: None,
                max_level: None,
            })
            .unwrap();
        let resp = decide(&engine, "u1", Some(9));
        assert_eq!(resp.levels, LevelVector(vec![2; 6]));
        // dropping the override restores the configured schedule
        engine.update_params(ServingParams::default()).unwrap();
        let resp = decide(&engine, "u1", Some(9));
        assert_eq!(resp.levels, LevelVector(vec![3, 3, 2, 2, 2, 2]));
    }

    #[test]
    fn invalid_params_rejected_previous_retained() {
        let engine = engine(&[(Group::G4, 1.0)]);
        let good = ServingParams {
            policy_overrides: BTreeMap::new(),
            level_caps: None,
            max_level: Some(2),
        };
        engine.update_params(good.clone()).unwrap();
        let bad = ServingParams {
            policy_overrides: BTreeMap::new(),
            level_caps: Some(LevelVector(vec![9; 6])),
            max_level: None,
        };
        assert!(engine.update_params(bad).is_err());
        assert_eq!(engine.params(), good);
    }

    #[test]
    fn apply_saturation_caps_at_step_vector() {
        let engine = engine(&[(Group::G4, 1.0)]);
        let rpf: Vec<f64> = vec![
            0.02, 0.03, 0.031, 0.032, 0.032, 0.032, 0.032, 0.032, 0.032, 0.032, 0.032, 0.032,
        ];
        let rnf: Vec<f64> = (1..=12).map(|i| 0.001 * i as f64).collect();
        let mut report = crate::saturation::detect_saturation(
            &crate::series::ResponseSeries::new("rpf", rpf),
            &crate::series::ResponseSeries::new("rnf", rnf),
            3,
            0.01,
        )
        .unwrap();
        report.detected_level = 12;
        engine.apply_saturation(&report).unwrap();

        let step12 = LevelVector(vec![3, 3, 3, 3, 3, 2]);
        assert_eq!(engine.params().level_caps, Some(step12.clone()));
        let resp = decide(&engine, "u1", Some(25));
        assert_eq!(resp.levels, step12);
        let resp = decide(&engine, "u1", Some(26));
        assert!(crate::object::dominates(&step12, &resp.levels).unwrap());
    }

    #[test]
    fn snapshot_matches_reference_table_after_replay() {
        use crate::fixtures::{parse_counts_csv, TABLE1_G4};
        let fixture = parse_counts_csv(TABLE1_G4, "t1").unwrap();
        let engine = engine(&[(Group::G4, 1.0)]);
        // Walk users through their sessions: the number of users reaching
        // contact L equals the view count at level L; the first R+/R- of
        // them click/dismiss there.
        for row in &fixture {
            let contact = row.level_index;
            for u in 0..row.views {
                decide(&engine, &format!("replay-{u}"), Some(contact));
            }
            for u in 0..row.positives {
                engine
                    .record_event(&response_event(
                        &format!("replay-{u}"),
                        contact,
                        EventKind::Positive,
                        None,
                    ))
                    .unwrap();
            }
            for u in 0..row.negatives {
                engine
                    .record_event(&response_event(
                        &format!("replay-{u}"),
                        contact,
                        EventKind::Negative,
                        None,
                    ))
                    .unwrap();
            }
        }
        let snapshot = engine.stats_snapshot(Group::G4).unwrap();
        let expected = build_level_table(&fixture).unwrap();
        assert_eq!(snapshot.len(), expected.len());
        for (got, want) in snapshot.iter().zip(&expected) {
            assert_eq!(got.views, want.views, "views at {}", want.level_index);
            assert_eq!(got.positives, want.positives);
            assert_eq!(got.negatives, want.negatives);
            assert_eq!(got.levels, want.levels);
            assert_eq!(got.crp, want.crp);
            assert_eq!(
                got.rpf.map(|f| pct2((f * 1e6) as u64, 10_000)),
                want.rpf.map(|f| pct2((f * 1e6) as u64, 10_000))
            );
        }
        assert_eq!(engine.decided_count(Group::G4), 399_146);
    }

    #[test]
    fn concurrent_decides_have_gap_free_user_sequences() {
        use std::sync::Arc;
        let engine = Arc::new(engine(&[(Group::G4, 1.0)]));
        let users = 20;
        let per_user = 50;
        let mut handles = Vec::new();
        for t in 0..4 {
            let engine = Arc::clone(&engine);
            handles.push(std::thread::spawn(move || {
                let mut contacts: Vec<(String, u32)> = Vec::new();
                for i in 0..(users * per_user / 4) {
                    let user = format!("u{}", (t * 7 + i) % users);
                    let resp = engine
                        .decide(&DecisionRequest {
                            page_id: "p".into(),
                            user_id: user.clone(),
                            contact: None,
                        })
                        .unwrap();
                    contacts.push((user, resp.contact));
                }
                contacts
            }));
        }
        let mut by_user: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for handle in handles {
            for (user, contact) in handle.join().unwrap() {
                by_user.entry(user).or_default().push(contact);
            }
        }
        for (user, mut contacts) in by_user {
            contacts.sort_unstable();
            let expected: Vec<u32> = (1..=contacts.len() as u32).collect();
            assert_eq!(contacts, expected, "user {user}");
        }
        assert_eq!(engine.decided_count(Group::G4), (users * per_user) as u64);
    }

    #[test]
    fn log_records_view_events() {
        use std::sync::{Arc, Mutex as StdMutex};

        #[derive(Clone)]
        struct Sink(Arc<StdMutex<Vec<u8>>>);
        impl Write for Sink {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }

        let buffer = Arc::new(StdMutex::new(Vec::new()));
        let engine = Engine::new(
            config(&[(Group::G4, 1.0)]),
            Some(Box::new(Sink(Arc::clone(&buffer)))),
            Clock::Fixed(99),
        )
        .unwrap();
        decide(&engine, "u1", None);
        engine.flush();
        let text = String::from_utf8(buffer.lock().unwrap().clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1);
        let ev: ExposureEvent = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(ev.kind, EventKind::View);
        assert_eq!(ev.ts, 99);
    }

    #[test]
    fn log_replay_rebuilds_live_counters() {
        use std::sync::{Arc, Mutex as StdMutex};

        #[derive(Clone)]
        struct Sink(Arc<StdMutex<Vec<u8>>>);
        impl Write for Sink {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }

        let buffer = Arc::new(StdMutex::new(Vec::new()));
        let engine = Engine::new(
            config(&[(Group::G4, 1.0)]),
            Some(Box::new(Sink(Arc::clone(&buffer)))),
            Clock::Fixed(0),
        )
        .unwrap();
        for contact in 1..=4 {
            decide(&engine, "a", Some(contact));
        }
        decide(&engine, "b", None);
        engine
            .record_event(&response_event("a", 4, EventKind::Positive, None))
            .unwrap();
        engine
            .record_event(&response_event("b", 1, EventKind::Negative, None))
            .unwrap();
        engine
            .record_event(&response_event("ghost", 2, EventKind::Positive, None))
            .unwrap();
        engine.flush();

        // the append-only log is the source of truth: replaying it yields
        // exactly the live counters
        let bytes = buffer.lock().unwrap().clone();
        let (_, events) = crate::eventlog::read_log(std::io::Cursor::new(&bytes), "mem").unwrap();
        let rebuilt = crate::metrics::aggregate_events(&events, None);
        let snapshot = engine.stats_snapshot(Group::G4).unwrap();
        let rebuilt_table = build_level_table(&rebuilt[&Group::G4]).unwrap();
        assert_eq!(snapshot, rebuilt_table);
    }
}
