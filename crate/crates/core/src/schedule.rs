//! Intensity schedules: maps (policy, contact number) to a level vector.
//!
//! The increasing schedule starts at all-ones and raises one element by one
//! level per contact, sweeping elements left to right before moving to the
//! next level; the decreasing schedule is its mirror image. Both span
//! `k * (Lmax - 1) + 1` steps (25 for a six-element object with five
//! variants) and by default hold the final vector once the sweep completes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::object::{LevelVector, ObjectSpec};

/// Rule family for adjusting levels between contacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Same constant vector on every contact.
    Flat { flat_level: u32 },
    /// All-ones upward sweep to the common maximum level.
    Increasing,
    /// All-max downward sweep to all-ones.
    Decreasing,
    /// Alternates between two constant vectors every `pulse_period` contacts.
    Pulse {
        pulse_low: u32,
        pulse_high: u32,
        #[serde(default = "default_period")]
        pulse_period: u32,
    },
}

fn default_period() -> u32 {
    1
}

fn default_clamp() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePolicy {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    /// Hold the final vector once the sweep is exhausted; when false the
    /// sweep cycles from the start instead.
    #[serde(default = "default_clamp")]
    pub clamp: bool,
}

impl SchedulePolicy {
    pub fn flat(level: u32) -> Self {
        SchedulePolicy {
            kind: ScheduleKind::Flat { flat_level: level },
            clamp: true,
        }
    }

    pub fn increasing() -> Self {
        SchedulePolicy {
            kind: ScheduleKind::Increasing,
            clamp: true,
        }
    }

    pub fn decreasing() -> Self {
        SchedulePolicy {
            kind: ScheduleKind::Decreasing,
            clamp: true,
        }
    }

    /// Validates the policy against the object it will drive.
    pub fn validate(&self, spec: &ObjectSpec) -> Result<()> {
        spec.validate()?;
        let lmax = spec.max_common_level();
        match self.kind {
            ScheduleKind::Flat { flat_level } => {
                if flat_level < 1 || flat_level > lmax {
                    return Err(Error::InvalidPolicy(format!(
                        "flat_level {flat_level} outside 1..={lmax}"
                    )));
                }
            }
            ScheduleKind::Pulse {
                pulse_low,
                pulse_high,
                pulse_period,
            } => {
                if pulse_period < 1 {
                    return Err(Error::InvalidPolicy("pulse_period must be >= 1".into()));
                }
                if pulse_low < 1 || pulse_high > lmax || pulse_low > pulse_high {
                    return Err(Error::InvalidPolicy(format!(
                        "pulse levels {pulse_low}..{pulse_high} outside 1..={lmax}"
                    )));
                }
            }
            ScheduleKind::Increasing | ScheduleKind::Decreasing => {}
        }
        Ok(())
    }

    /// Number of distinct steps before the schedule repeats or clamps.
    pub fn step_count(&self, spec: &ObjectSpec) -> usize {
        let k = spec.element_count();
        let lmax = spec.max_common_level() as usize;
        match self.kind {
            ScheduleKind::Flat { .. } => 1,
            ScheduleKind::Increasing | ScheduleKind::Decreasing => k * (lmax - 1) + 1,
            ScheduleKind::Pulse { pulse_period, .. } => 2 * pulse_period as usize,
        }
    }

    /// Maps a contact number onto the step index actually served,
    /// applying the clamp (or cycle) once the sweep is exhausted.
    pub fn step_index(&self, spec: &ObjectSpec, contact: u32) -> Result<u32> {
        if contact < 1 {
            return Err(Error::InvalidConfig("contact numbers start at 1".into()));
        }
        let steps = self.step_count(spec) as u32;
        Ok(match self.kind {
            ScheduleKind::Flat { .. } => 1,
            ScheduleKind::Pulse { .. } => (contact - 1) % steps + 1,
            _ if contact <= steps => contact,
            _ if self.clamp => steps,
            _ => (contact - 1) % steps + 1,
        })
    }
}

/// One entry of a generated schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub contact: u32,
    pub levels: LevelVector,
}

fn sweep_vector(spec: &ObjectSpec, step: u32, increasing: bool) -> LevelVector {
    let k = spec.element_count() as u32;
    let lmax = spec.max_common_level();
    let start = if increasing { 1 } else { lmax };
    let mut levels = vec![start; k as usize];
    // Steps 2..=s replay the sweep: element ((s-2) mod k) moves to level
    // ((s-2)/k + 2) going up, or its mirror going down. Only the most recent
    // pass per element matters, so apply the final assignment per element.
    if step >= 2 {
        let done = step - 1; // number of single-element moves applied
        for (j, slot) in levels.iter_mut().enumerate() {
            let j = j as u32;
            // moves hitting element j: j+1, j+1+k, ... count how many <= done
            let hits = if done > j { (done - j - 1) / k + 1 } else { 0 };
            if hits > 0 {
                *slot = if increasing { 1 + hits } else { lmax - hits };
            }
        }
    }
    LevelVector(levels)
}

/// Level vector served at a given contact number.
pub fn level_vector_at(
    policy: &SchedulePolicy,
    spec: &ObjectSpec,
    contact: u32,
) -> Result<LevelVector> {
    policy.validate(spec)?;
    let step = policy.step_index(spec, contact)?;
    let k = spec.element_count();
    Ok(match policy.kind {
        ScheduleKind::Flat { flat_level } => LevelVector::uniform(flat_level, k),
        ScheduleKind::Increasing => sweep_vector(spec, step, true),
        ScheduleKind::Decreasing => sweep_vector(spec, step, false),
        ScheduleKind::Pulse {
            pulse_low,
            pulse_high,
            pulse_period,
        } => {
            let phase = (step - 1) / pulse_period;
            LevelVector::uniform(if phase == 0 { pulse_low } else { pulse_high }, k)
        }
    })
}

/// The complete list of distinct steps for a policy: the full sweep for
/// increasing/decreasing, a single step for flat, one period for pulse.
pub fn full_schedule(policy: &SchedulePolicy, spec: &ObjectSpec) -> Result<Vec<ScheduleStep>> {
    policy.validate(spec)?;
    (1..=policy.step_count(spec) as u32)
        .map(|contact| {
            Ok(ScheduleStep {
                contact,
                levels: level_vector_at(policy, spec, contact)?,
            })
        })
        .collect()
}
