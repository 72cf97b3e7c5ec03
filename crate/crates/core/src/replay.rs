//! Replay verification: recompute every derived column from a raw-count
//! fixture and compare, cell by cell, against the published reference
//! values. Only raw counts are ever stored; the expected display values
//! below are the comparison targets, frozen from the printed tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{self, GroupCountsRow};
use crate::group::Group;
use crate::metrics::{aggregate_group, build_level_table, segment_stats, ExposureCounts};
use crate::report::{analyze_table, stats_csv, AnalysisReport, DEFAULT_SEGMENT_BOUNDARY};
use crate::rounding::{fmt_pct2, fmt_ratio4, pct2, ratio4};
use crate::saturation::{DEFAULT_EPSILON, DEFAULT_WINDOW};

/// Printed reference cells per level: (level, R+F, R-F, R-R in
/// centi-percent, CR+, CR- in 1e-4 units).
type ExpectedRow = (u32, i64, i64, i64, Option<i64>, Option<i64>);

const TABLE1_EXPECTED: [ExpectedRow; 25] = [
    (1, 231, 22, 938, None, None),
    (2, 303, 28, 916, Some(13117), Some(12727)),
    (3, 319, 20, 626, Some(10528), Some(7143)),
    (4, 403, 30, 749, Some(12633), Some(15000)),
    (5, 391, 16, 411, Some(9702), Some(5333)),
    (6, 464, 16, 346, Some(11867), Some(10000)),
    (7, 420, 19, 451, Some(9052), Some(11875)),
    (8, 503, 20, 396, Some(11976), Some(10526)),
    (9, 477, 18, 381, Some(9483), Some(9000)),
    (10, 476, 19, 410, Some(9979), Some(10556)),
    (11, 454, 40, 875, Some(9538), Some(21053)),
    (12, 456, 28, 616, Some(10044), Some(7000)),
    (13, 440, 34, 777, Some(9649), Some(12143)),
    (14, 492, 22, 438, Some(11182), Some(6471)),
    (15, 486, 48, 987, Some(9878), Some(21818)),
    (16, 456, 45, 979, Some(9383), Some(9375)),
    (17, 473, 61, 1292, Some(10373), Some(13556)),
    (18, 466, 40, 855, Some(9852), Some(6557)),
    (19, 497, 34, 690, Some(10665), Some(8500)),
    (20, 484, 47, 976, Some(9738), Some(13824)),
    (21, 498, 52, 1053, Some(10289), Some(11064)),
    (22, 485, 40, 816, Some(9739), Some(7692)),
    (23, 460, 45, 976, Some(9485), Some(11250)),
    (24, 461, 38, 822, Some(10022), Some(8444)),
    (25, 404, 49, 1207, Some(8764), Some(12895)),
];

const TABLE2_EXPECTED: [ExpectedRow; 25] = [
    (1, 316, 99, 3121, None, None),
    (2, 368, 69, 1877, Some(11646), Some(6970)),
    (3, 416, 38, 916, Some(11304), Some(5507)),
    (4, 435, 46, 1052, Some(10457), Some(12105)),
    (5, 408, 29, 714, Some(9379), Some(6304)),
    (6, 431, 37, 862, Some(10564), Some(12759)),
    (7, 456, 24, 537, Some(10580), Some(6486)),
    (8, 422, 29, 683, Some(9254), Some(12083)),
    (9, 425, 4, 101, Some(10071), Some(1379)),
    (10, 425, 11, 266, Some(10000), Some(27500)),
    (11, 403, 27, 659, Some(9482), Some(24545)),
    (12, 429, 7, 164, Some(10645), Some(2593)),
    (13, 379, 11, 302, Some(8834), Some(15714)),
    (14, 365, 2, 52, Some(9631), Some(1818)),
    (15, 404, 17, 432, Some(11068), Some(85000)),
    (16, 347, 18, 507, Some(8589), Some(10588)),
    (17, 386, 20, 511, Some(11124), Some(11111)),
    (18, 362, 19, 536, Some(9378), Some(9500)),
    (19, 329, 11, 345, Some(9088), Some(5789)),
    (20, 294, 9, 294, Some(8936), Some(8182)),
    (21, 320, 10, 308, Some(10884), Some(11111)),
    (22, 338, 16, 484, Some(10563), Some(16000)),
    (23, 360, 13, 357, Some(10651), Some(8125)),
    (24, 238, 7, 303, Some(6611), Some(5385)),
    (25, 203, 8, 400, Some(8529), Some(11429)),
];

/// Published totals the fixture sums must reproduce: (V, R+, R-, R+F, R-F).
const TABLE1_TOTALS: (u64, u64, u64, i64, i64) = (399_146, 14_134, 983, 354, 25);
const TABLE2_TOTALS: (u64, u64, u64, i64, i64) = (376_637, 14_354, 1950, 381, 52);

/// Printed per-group factors of the totals table.
const TABLE3_EXPECTED: [(Group, i64, i64); 5] = [
    (Group::G1, 254, 22),
    (Group::G2, 344, 11),
    (Group::G3, 410, 69),
    (Group::G4, 354, 25),
    (Group::G5, 381, 52),
];

/// Published segment statistics of the increasing table's change-rate
/// columns: (name, column, span over the 24 CR values, mean, sd).
type SegmentSpec = (&'static str, CrColumn, (usize, usize), f64, f64);

const TABLE1_SEGMENTS: [SegmentSpec; 6] = [
    ("crp.all", CrColumn::Positive, (0, 23), 1.0289, 0.1110),
    ("crp.levels2-10", CrColumn::Positive, (0, 8), 1.0926, 0.1494),
    (
        "crp.levels11-25",
        CrColumn::Positive,
        (9, 23),
        0.9907,
        0.0574,
    ),
    ("crn.all", CrColumn::Negative, (0, 23), 1.0992, 0.4130),
    ("crn.levels2-10", CrColumn::Negative, (0, 8), 1.0240, 0.2893),
    (
        "crn.levels11-25",
        CrColumn::Negative,
        (9, 23),
        1.1443,
        0.4760,
    ),
];

pub const SEGMENT_MEAN_TOLERANCE: f64 = 0.0005;
pub const SEGMENT_SD_TOLERANCE: f64 = 0.002;
/// Fraction of change-rate cells that must reproduce exactly.
pub const CR_PASS_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CrColumn {
    Positive,
    Negative,
}

/// Known fixture identities with reference expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureId {
    Table1G4,
    Table2G5,
    Table3Groups,
}

impl FixtureId {
    pub fn from_name(name: &str) -> Option<FixtureId> {
        match name.trim_end_matches(".csv") {
            "table1_g4" => Some(FixtureId::Table1G4),
            "table2_g5" => Some(FixtureId::Table2G5),
            "table3_groups" => Some(FixtureId::Table3Groups),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FixtureId::Table1G4 => "table1_g4",
            FixtureId::Table2G5 => "table2_g5",
            FixtureId::Table3Groups => "table3_groups",
        }
    }
}

/// One computed-vs-reference cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    /// E.g. "L02.crp" or "G4.views".
    pub cell: String,
    pub computed: Option<String>,
    pub expected: String,
    /// Full-precision companion value (raw-mode change rate for CR cells).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentCheck {
    pub name: String,
    pub mean: f64,
    pub expected_mean: f64,
    pub mean_pass: bool,
    pub sd_sample: f64,
    pub sd_population: f64,
    pub expected_sd: f64,
    /// Convention under which the printed SD reproduces, if any.
    pub sd_convention: Option<String>,
    pub sd_pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub fixture: String,
    pub factor_cells: Vec<CellCheck>,
    pub cr_cells: Vec<CellCheck>,
    pub total_cells: Vec<CellCheck>,
    pub segment_checks: Vec<SegmentCheck>,
    /// Observed (not reference-gated) segment statistics, name -> (mean, sd).
    pub observed_segments: Vec<(String, f64, f64)>,
    pub cr_pass_rate: Option<f64>,
    pub analysis: Option<AnalysisReport>,
    /// Rendered statistics table in the reference layout.
    pub table_csv: Option<String>,
    pub gate_failures: Vec<String>,
    pub passed: bool,
}

fn factor_cell(cell: String, computed: Option<i64>, expected: i64) -> CellCheck {
    CellCheck {
        cell,
        computed: computed.map(fmt_pct2),
        expected: fmt_pct2(expected),
        raw: None,
        pass: computed == Some(expected),
    }
}

fn cr_cell(
    cell: String,
    computed: Option<i64>,
    expected: Option<i64>,
    raw: Option<f64>,
) -> CellCheck {
    CellCheck {
        cell,
        computed: computed.map(fmt_ratio4),
        expected: expected.map(fmt_ratio4).unwrap_or_default(),
        raw,
        pass: computed == expected,
    }
}

fn count_cell(cell: String, computed: u64, expected: u64) -> CellCheck {
    CellCheck {
        cell,
        computed: Some(computed.to_string()),
        expected: expected.to_string(),
        raw: None,
        pass: computed == expected,
    }
}

fn replay_level_table(
    label: &str,
    counts: &[ExposureCounts],
    expected: &[ExpectedRow],
    totals: (u64, u64, u64, i64, i64),
) -> Result<ReplayReport> {
    if counts.len() != expected.len() {
        return Err(Error::InvalidConfig(format!(
            "fixture {label} has {} levels, reference table has {}",
            counts.len(),
            expected.len()
        )));
    }
    let table = build_level_table(counts)?;

    let mut factor_cells = Vec::new();
    let mut cr_cells = Vec::new();
    let mut crp_column = Vec::new();
    let mut crn_column = Vec::new();

    for (i, &(level, e_rpf, e_rnf, e_rnr, e_crp, e_crn)) in expected.iter().enumerate() {
        let c = &counts[i];
        debug_assert_eq!(c.level_index, level);
        factor_cells.push(factor_cell(
            format!("L{level:02}.rpf"),
            pct2(c.positives, c.views),
            e_rpf,
        ));
        factor_cells.push(factor_cell(
            format!("L{level:02}.rnf"),
            pct2(c.negatives, c.views),
            e_rnf,
        ));
        factor_cells.push(factor_cell(
            format!("L{level:02}.rnr"),
            pct2(c.negatives, c.positives),
            e_rnr,
        ));
        if i > 0 {
            let prev = &counts[i - 1];
            let crp = pct2(c.positives, c.views)
                .zip(pct2(prev.positives, prev.views))
                .and_then(|(cur, p)| ratio4(cur, p));
            let crn = pct2(c.negatives, c.views)
                .zip(pct2(prev.negatives, prev.views))
                .and_then(|(cur, p)| ratio4(cur, p));
            cr_cells.push(cr_cell(
                format!("L{level:02}.crp"),
                crp,
                e_crp,
                table[i].crp_raw,
            ));
            cr_cells.push(cr_cell(
                format!("L{level:02}.crn"),
                crn,
                e_crn,
                table[i].crn_raw,
            ));
            if let Some(v) = crp {
                crp_column.push(v as f64 / 10_000.0);
            }
            if let Some(v) = crn {
                crn_column.push(v as f64 / 10_000.0);
            }
        }
    }

    let agg = aggregate_group(counts);
    let (v, rp, rn, e_rpf, e_rnf) = totals;
    let total_cells = vec![
        count_cell("total.views".into(), agg.views, v),
        count_cell("total.positives".into(), agg.positives, rp),
        count_cell("total.negatives".into(), agg.negatives, rn),
        factor_cell("total.rpf".into(), pct2(agg.positives, agg.views), e_rpf),
        factor_cell("total.rnf".into(), pct2(agg.negatives, agg.views), e_rnf),
    ];

    // Segment statistics over the recomputed display-mode CR columns.
    let mut segment_checks = Vec::new();
    let mut observed_segments = Vec::new();
    let gated = label == FixtureId::Table1G4.label();
    for (name, column, (start, end), e_mean, e_sd) in TABLE1_SEGMENTS {
        let column_values = match column {
            CrColumn::Positive => &crp_column,
            CrColumn::Negative => &crn_column,
        };
        if end >= column_values.len() {
            continue;
        }
        let stats = segment_stats(column_values, start..=end)?;
        if gated {
            let mean_pass = (stats.mean - e_mean).abs() <= SEGMENT_MEAN_TOLERANCE;
            let sample_ok = (stats.sd_sample - e_sd).abs() <= SEGMENT_SD_TOLERANCE;
            let population_ok = (stats.sd_population - e_sd).abs() <= SEGMENT_SD_TOLERANCE;
            segment_checks.push(SegmentCheck {
                name: name.to_string(),
                mean: stats.mean,
                expected_mean: e_mean,
                mean_pass,
                sd_sample: stats.sd_sample,
                sd_population: stats.sd_population,
                expected_sd: e_sd,
                sd_convention: if sample_ok {
                    Some("sample".into())
                } else if population_ok {
                    Some("population".into())
                } else {
                    None
                },
                sd_pass: sample_ok || population_ok,
            });
        } else {
            observed_segments.push((name.to_string(), stats.mean, stats.sd_sample));
        }
    }

    let analysis = analyze_table(
        label,
        &table,
        DEFAULT_WINDOW,
        DEFAULT_EPSILON,
        DEFAULT_SEGMENT_BOUNDARY,
    )?;

    let cr_pass = cr_cells.iter().filter(|c| c.pass).count();
    let cr_pass_rate = cr_pass as f64 / cr_cells.len() as f64;

    let mut gate_failures = Vec::new();
    for cell in factor_cells.iter().chain(&total_cells) {
        if !cell.pass {
            gate_failures.push(format!(
                "{}: computed {:?}, expected {}",
                cell.cell, cell.computed, cell.expected
            ));
        }
    }
    if cr_pass_rate < CR_PASS_THRESHOLD {
        gate_failures.push(format!(
            "change-rate reproduction {cr_pass}/{} below {CR_PASS_THRESHOLD}",
            cr_cells.len()
        ));
    }
    for check in &segment_checks {
        if !check.mean_pass {
            gate_failures.push(format!(
                "{} mean {:.4} vs {:.4}",
                check.name, check.mean, check.expected_mean
            ));
        }
        if !check.sd_pass {
            gate_failures.push(format!(
                "{} sd {:.4}/{:.4} vs {:.4}",
                check.name, check.sd_sample, check.sd_population, check.expected_sd
            ));
        }
    }
    if let Some(saturation) = &analysis.saturation {
        if label == FixtureId::Table1G4.label()
            && (saturation.fallback || !(10..=12).contains(&saturation.detected_level))
        {
            gate_failures.push(format!(
                "saturation level {} outside 10..=12",
                saturation.detected_level
            ));
        }
        if label == FixtureId::Table2G5.label() {
            if let Some(crossover) = saturation.evidence.share_crossover {
                if crossover <= 10 {
                    gate_failures.push(format!(
                        "unexpected early negative-share crossover at {crossover}"
                    ));
                }
            }
        }
    }

    let passed = gate_failures.is_empty();
    Ok(ReplayReport {
        fixture: label.to_string(),
        factor_cells,
        cr_cells,
        total_cells,
        segment_checks,
        observed_segments,
        cr_pass_rate: Some(cr_pass_rate),
        table_csv: Some(stats_csv(&table)),
        analysis: Some(analysis),
        gate_failures,
        passed,
    })
}

fn replay_group_totals(rows: &[GroupCountsRow]) -> Result<ReplayReport> {
    let mut factor_cells = Vec::new();
    let mut gate_failures = Vec::new();
    for (group, e_rpf, e_rnf) in TABLE3_EXPECTED {
        let row = rows
            .iter()
            .find(|r| r.group == group)
            .ok_or_else(|| Error::InvalidConfig(format!("fixture missing group {group}")))?;
        factor_cells.push(factor_cell(
            format!("{group}.rpf"),
            pct2(row.positives, row.views),
            e_rpf,
        ));
        factor_cells.push(factor_cell(
            format!("{group}.rnf"),
            pct2(row.negatives, row.views),
            e_rnf,
        ));
    }
    for cell in &factor_cells {
        if !cell.pass {
            gate_failures.push(format!(
                "{}: computed {:?}, expected {}",
                cell.cell, cell.computed, cell.expected
            ));
        }
    }
    let passed = gate_failures.is_empty();
    Ok(ReplayReport {
        fixture: FixtureId::Table3Groups.label().to_string(),
        factor_cells,
        cr_cells: Vec::new(),
        total_cells: Vec::new(),
        segment_checks: Vec::new(),
        observed_segments: Vec::new(),
        cr_pass_rate: None,
        table_csv: None,
        analysis: None,
        gate_failures,
        passed,
    })
}

/// Replays a fixture against its reference expectations.
pub fn replay_fixture(id: FixtureId, text: &str) -> Result<ReplayReport> {
    match id {
        FixtureId::Table1G4 => replay_level_table(
            id.label(),
            &fixtures::parse_counts_csv(text, id.label())?,
            &TABLE1_EXPECTED,
            TABLE1_TOTALS,
        ),
        FixtureId::Table2G5 => replay_level_table(
            id.label(),
            &fixtures::parse_counts_csv(text, id.label())?,
            &TABLE2_EXPECTED,
            TABLE2_TOTALS,
        ),
        FixtureId::Table3Groups => {
            replay_group_totals(&fixtures::parse_groups_csv(text, id.label())?)
        }
    }
}

/// Replays one of the bundled fixtures.
pub fn replay_bundled(id: FixtureId) -> Result<ReplayReport> {
    let text = fixtures::bundled(id.label()).expect("bundled fixture exists");
    replay_fixture(id, text)
}

impl ReplayReport {
    /// Number of reference cells compared (each exactly once).
    pub fn cell_count(&self) -> usize {
        self.factor_cells.len() + self.cr_cells.len() + self.total_cells.len()
    }

    /// Human-readable summary, one line per block plus any failures.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let count_pass = |cells: &[CellCheck]| cells.iter().filter(|c| c.pass).count();
        lines.push(format!(
            "fixture {}: {} cells compared",
            self.fixture,
            self.cell_count()
        ));
        if !self.factor_cells.is_empty() {
            lines.push(format!(
                "  factors (2-decimal %): {}/{} exact",
                count_pass(&self.factor_cells),
                self.factor_cells.len()
            ));
        }
        if !self.cr_cells.is_empty() {
            lines.push(format!(
                "  change rates (4-decimal): {}/{} exact",
                count_pass(&self.cr_cells),
                self.cr_cells.len()
            ));
        }
        if !self.total_cells.is_empty() {
            lines.push(format!(
                "  totals: {}/{} exact",
                count_pass(&self.total_cells),
                self.total_cells.len()
            ));
        }
        for check in &self.segment_checks {
            lines.push(format!(
                "  segment {}: mean {:.4} (ref {:.4}) sd {:.4} [{}]",
                check.name,
                check.mean,
                check.expected_mean,
                check.sd_sample,
                check.sd_convention.as_deref().unwrap_or("no match")
            ));
        }
        for (name, mean, sd) in &self.observed_segments {
            lines.push(format!(
                "  observed segment {name}: mean {mean:.4} sd {sd:.4}"
            ));
        }
        if let Some(analysis) = &self.analysis {
            lines.push(format!(
                "  dtw p=1: full {:.4}, head {}, tail {} (normalized, observational)",
                analysis.dtw_p1.full,
                analysis
                    .dtw_p1
                    .head
                    .map(|d| format!("{d:.4}"))
                    .unwrap_or_else(|| "-".into()),
                analysis
                    .dtw_p1
                    .tail
                    .map(|d| format!("{d:.4}"))
                    .unwrap_or_else(|| "-".into()),
            ));
            if let Some(corr) = analysis.correlation {
                lines.push(format!("  correlation: {corr:.6}"));
            }
            if let Some(saturation) = &analysis.saturation {
                lines.push(format!(
                    "  saturation: level {} (fallback: {}), share crossover {:?}, argmax {}",
                    saturation.detected_level,
                    saturation.fallback,
                    saturation.evidence.share_crossover,
                    saturation.evidence.rpf_argmax
                ));
            }
        }
        for mismatch in self
            .factor_cells
            .iter()
            .chain(&self.cr_cells)
            .chain(&self.total_cells)
            .filter(|c| !c.pass)
        {
            lines.push(format!(
                "  MISMATCH {}: computed {} expected {}{}",
                mismatch.cell,
                mismatch.computed.as_deref().unwrap_or("<absent>"),
                mismatch.expected,
                mismatch
                    .raw
                    .map(|r| format!(" (raw {r:.6})"))
                    .unwrap_or_default()
            ));
        }
        for failure in &self.gate_failures {
            lines.push(format!("  GATE FAILURE: {failure}"));
        }
        lines.push(format!(
            "  result: {}",
            if self.passed { "PASS" } else { "FAIL" }
        ));
        lines
    }
}
