//! Exposure/response aggregation per intensity level and the derived
//! factor columns: response factors, negative response rate, change rates,
//! interaction shares, and segment statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::object::LevelVector;
use crate::rounding::{pct2, ratio4};

/// A single logged exposure or response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureEvent {
    /// Seconds since epoch (logical time in simulated logs).
    pub ts: u64,
    pub user_id: String,
    pub group: Group,
    pub contact: u32,
    /// Intensity level index the exposure was served at.
    pub level_index: u32,
    pub levels: LevelVector,
    pub kind: EventKind,
    #[serde(default = "default_interaction")]
    pub interaction_type: u32,
    /// Idempotency key; present on response events submitted over the API.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    /// Set when the event did not match a served (user, contact) pair.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub orphan: bool,
}

fn default_interaction() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    View,
    Positive,
    Negative,
}

/// Raw per-level tallies: views and positive/negative responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureCounts {
    pub level_index: u32,
    pub levels: LevelVector,
    pub views: u64,
    pub positives: u64,
    pub negatives: u64,
}

impl ExposureCounts {
    pub fn empty(level_index: u32) -> Self {
        ExposureCounts {
            level_index,
            levels: LevelVector(Vec::new()),
            views: 0,
            positives: 0,
            negatives: 0,
        }
    }

    /// Associative, order-insensitive merge of two partial tallies for the
    /// same level. Ties on the level vector resolve to the smaller one so
    /// parallel partial aggregation stays deterministic.
    pub fn merge(&mut self, other: &ExposureCounts) {
        debug_assert_eq!(self.level_index, other.level_index);
        self.views += other.views;
        self.positives += other.positives;
        self.negatives += other.negatives;
        if self.levels.is_empty() || (!other.levels.is_empty() && other.levels < self.levels) {
            self.levels = other.levels.clone();
        }
    }
}

/// Positive response factor: positives / views.
pub fn positive_response_factor(counts: &ExposureCounts) -> Result<f64> {
    if counts.views == 0 {
        return Err(Error::UndefinedRate(
            "positive response factor with zero views",
        ));
    }
    Ok(counts.positives as f64 / counts.views as f64)
}

/// Negative response factor: negatives / views.
pub fn negative_response_factor(counts: &ExposureCounts) -> Result<f64> {
    if counts.views == 0 {
        return Err(Error::UndefinedRate(
            "negative response factor with zero views",
        ));
    }
    Ok(counts.negatives as f64 / counts.views as f64)
}

/// Negative response rate: negatives / positives, from raw counts.
pub fn negative_response_rate(counts: &ExposureCounts) -> Result<f64> {
    if counts.positives == 0 {
        return Err(Error::UndefinedRate(
            "negative response rate with zero positives",
        ));
    }
    Ok(counts.negatives as f64 / counts.positives as f64)
}

/// Shares of positive and negative interactions among all interactions.
pub fn share_factors(counts: &ExposureCounts) -> Result<(f64, f64)> {
    let total = counts.positives + counts.negatives;
    if total == 0 {
        return Err(Error::UndefinedRate("shares with zero interactions"));
    }
    Ok((
        counts.positives as f64 / total as f64,
        counts.negatives as f64 / total as f64,
    ))
}

/// How consecutive-level change rates are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrMode {
    /// Full-precision ratio of the underlying fractions.
    Raw,
    /// Each factor is first rounded half-up to a two-decimal percentage and
    /// the ratio is then rounded half-up to four decimals. This reproduces
    /// change-rate columns computed from displayed two-decimal values.
    RoundedPercent2,
}

/// Consecutive ratios f(i)/f(i-1) over a factor series.
///
/// Returns one entry per adjacent pair; a zero denominator (in the chosen
/// representation) yields `None` at that position.
pub fn change_rate(series: &[f64], mode: CrMode) -> Result<Vec<Option<f64>>> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    Ok(match mode {
        CrMode::Raw => series
            .windows(2)
            .map(|w| (w[0] != 0.0).then(|| w[1] / w[0]))
            .collect(),
        CrMode::RoundedPercent2 => {
            // fraction -> centi-percent integer (2.31% -> 231)
            let cents: Vec<i64> = series
                .iter()
                .map(|v| (v * 10_000.0).round() as i64)
                .collect();
            cents
                .windows(2)
                .map(|w| ratio4(w[1], w[0]).map(|r| r as f64 / 10_000.0))
                .collect()
        }
    })
}

/// Mean and standard deviation over an inclusive index span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub mean: f64,
    /// Divides by N.
    pub sd_population: f64,
    /// Divides by N-1 (0 for a single value).
    pub sd_sample: f64,
}

pub fn segment_stats(
    values: &[f64],
    span: std::ops::RangeInclusive<usize>,
) -> Result<SegmentStats> {
    let (start, end) = (*span.start(), *span.end());
    if start > end {
        return Err(Error::EmptySpan);
    }
    if end >= values.len() {
        return Err(Error::SpanOutOfBounds {
            start,
            end,
            len: values.len(),
        });
    }
    let slice = &values[start..=end];
    let n = slice.len() as f64;
    let mean = slice.iter().sum::<f64>() / n;
    let ss: f64 = slice.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(SegmentStats {
        mean,
        sd_population: (ss / n).sqrt(),
        sd_sample: if slice.len() > 1 {
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        },
    })
}

/// One fully derived statistics row for an intensity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level_index: u32,
    pub levels: LevelVector,
    pub views: u64,
    pub positives: u64,
    pub negatives: u64,
    /// Positive response factor (fraction).
    pub rpf: Option<f64>,
    /// Negative response factor (fraction).
    pub rnf: Option<f64>,
    /// Negative response rate (fraction).
    pub rnr: Option<f64>,
    /// Positive change rate in RoundedPercent2 mode; absent at level 1.
    pub crp: Option<f64>,
    pub crn: Option<f64>,
    /// Full-precision change rates.
    pub crp_raw: Option<f64>,
    pub crn_raw: Option<f64>,
    /// Share of positive interactions among all interactions.
    pub rps: Option<f64>,
    pub rns: Option<f64>,
}

/// Derives the full statistics table from per-level counts.
///
/// Counts must be keyed by contiguous levels starting at 1. Undefined
/// factors (zero denominators) become absent cells rather than aborting.
pub fn build_level_table(counts: &[ExposureCounts]) -> Result<Vec<LevelStats>> {
    for (i, c) in counts.iter().enumerate() {
        if c.level_index != (i + 1) as u32 {
            return Err(Error::NonContiguousLevels {
                missing: (i + 1) as u32,
            });
        }
    }
    let mut rows = Vec::with_capacity(counts.len());
    for (i, c) in counts.iter().enumerate() {
        let rpf = positive_response_factor(c).ok();
        let rnf = negative_response_factor(c).ok();
        let (crp, crn, crp_raw, crn_raw) = if i == 0 {
            (None, None, None, None)
        } else {
            let prev = &counts[i - 1];
            let crp = cr_rounded(c.positives, c.views, prev.positives, prev.views);
            let crn = cr_rounded(c.negatives, c.views, prev.negatives, prev.views);
            let crp_raw = cr_raw(c.positives, c.views, prev.positives, prev.views);
            let crn_raw = cr_raw(c.negatives, c.views, prev.negatives, prev.views);
            (crp, crn, crp_raw, crn_raw)
        };
        let shares = share_factors(c).ok();
        rows.push(LevelStats {
            level_index: c.level_index,
            levels: c.levels.clone(),
            views: c.views,
            positives: c.positives,
            negatives: c.negatives,
            rpf,
            rnf,
            rnr: negative_response_rate(c).ok(),
            crp,
            crn,
            crp_raw,
            crn_raw,
            rps: shares.map(|s| s.0),
            rns: shares.map(|s| s.1),
        });
    }
    Ok(rows)
}

/// Exact RoundedPercent2 change rate straight from integer counts.
pub fn cr_rounded(num: u64, den: u64, prev_num: u64, prev_den: u64) -> Option<f64> {
    let cur = pct2(num, den)?;
    let prev = pct2(prev_num, prev_den)?;
    ratio4(cur, prev).map(|r| r as f64 / 10_000.0)
}

fn cr_raw(num: u64, den: u64, prev_num: u64, prev_den: u64) -> Option<f64> {
    if den == 0 || prev_den == 0 || prev_num == 0 {
        return None;
    }
    Some((num as f64 / den as f64) / (prev_num as f64 / prev_den as f64))
}

/// Whole-group totals with factors recomputed from the summed counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTotals {
    pub views: u64,
    pub positives: u64,
    pub negatives: u64,
    pub rpf: Option<f64>,
    pub rnf: Option<f64>,
}

pub fn aggregate_group(counts: &[ExposureCounts]) -> GroupTotals {
    let views: u64 = counts.iter().map(|c| c.views).sum();
    let positives: u64 = counts.iter().map(|c| c.positives).sum();
    let negatives: u64 = counts.iter().map(|c| c.negatives).sum();
    GroupTotals {
        views,
        positives,
        negatives,
        rpf: (views > 0).then(|| positives as f64 / views as f64),
        rnf: (views > 0).then(|| negatives as f64 / views as f64),
    }
}

/// Folds an event stream into per-group, per-level counts.
///
/// `window` restricts aggregation to timestamps in `[start, end)`. Levels
/// between 1 and the highest observed index with no events get zero rows so
/// the output is always contiguous.
pub fn aggregate_events<'a, I>(
    events: I,
    window: Option<(u64, u64)>,
) -> BTreeMap<Group, Vec<ExposureCounts>>
where
    I: IntoIterator<Item = &'a ExposureEvent>,
{
    let mut by_group: BTreeMap<Group, BTreeMap<u32, ExposureCounts>> = BTreeMap::new();
    for ev in events {
        if let Some((start, end)) = window {
            if ev.ts < start || ev.ts >= end {
                continue;
            }
        }
        let slot = by_group
            .entry(ev.group)
            .or_default()
            .entry(ev.level_index)
            .or_insert_with(|| ExposureCounts::empty(ev.level_index));
        let mut single = ExposureCounts {
            level_index: ev.level_index,
            levels: ev.levels.clone(),
            views: 0,
            positives: 0,
            negatives: 0,
        };
        match ev.kind {
            EventKind::View => single.views = 1,
            EventKind::Positive => single.positives = 1,
            EventKind::Negative => single.negatives = 1,
        }
        slot.merge(&single);
    }
    by_group
        .into_iter()
        .map(|(group, levels)| {
            let max = levels.keys().max().copied().unwrap_or(0);
            let filled = (1..=max)
                .map(|l| {
                    levels
                        .get(&l)
                        .cloned()
                        .unwrap_or_else(|| ExposureCounts::empty(l))
                })
                .collect();
            (group, filled)
        })
        .collect()
}
