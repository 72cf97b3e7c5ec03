//! Analysis report over a statistics table: normalized series, distances,
//! correlation, per-level gaps, and the saturation verdict. Also renders
//! the table itself in the reference CSV layout.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::LevelStats;
use crate::rounding::{fmt_pct2, fmt_ratio4};
use crate::saturation::{detect_saturation, SaturationReport};
use crate::series::{
    dtw, minkowski_distance, normalize, per_level_distance, similarity_correlation,
    NormalizeMethod, ResponseSeries,
};

/// Levels 1..=boundary form the head segment of segmented distances.
pub const DEFAULT_SEGMENT_BOUNDARY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwSummary {
    pub full: f64,
    /// Distance over the head segment, normalized independently.
    pub head: Option<f64>,
    pub tail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: String,
    pub levels: Vec<u32>,
    /// Raw positive/negative response factors (fractions).
    pub rpf: Vec<f64>,
    pub rnf: Vec<f64>,
    pub rpf_normalized: Vec<f64>,
    pub rnf_normalized: Vec<f64>,
    /// |normalized rpf - normalized rnf| per level.
    pub per_level_gap: Vec<f64>,
    pub correlation: Option<f64>,
    pub minkowski_p1: f64,
    pub minkowski_p2: f64,
    pub dtw_p1: DtwSummary,
    pub dtw_p2: DtwSummary,
    pub segment_boundary: usize,
    pub saturation: Option<SaturationReport>,
    pub notes: Vec<String>,
}

fn normalized_or_zeros(series: &ResponseSeries, notes: &mut Vec<String>) -> Vec<f64> {
    match normalize(series, NormalizeMethod::MinMax) {
        Ok(out) => out.values,
        Err(_) => {
            notes.push(format!(
                "series {:?} is constant; min-max normalization skipped",
                series.label
            ));
            vec![0.0; series.len()]
        }
    }
}

fn dtw_summary(
    rpf: &ResponseSeries,
    rnf: &ResponseSeries,
    boundary: usize,
    p: f64,
    notes: &mut Vec<String>,
) -> Result<DtwSummary> {
    let slice_norm = |values: &[f64], label: &str, notes: &mut Vec<String>| {
        normalized_or_zeros(&ResponseSeries::new(label, values.to_vec()), notes)
    };
    let a = ResponseSeries::new("rpf", slice_norm(&rpf.values, "rpf", notes));
    let b = ResponseSeries::new("rnf", slice_norm(&rnf.values, "rnf", notes));
    let full = dtw(&a, &b, p)?.distance;
    let (head, tail) = if rpf.len() > boundary + 1 && boundary >= 2 {
        let head_a = ResponseSeries::new(
            "rpf",
            slice_norm(&rpf.values[..boundary], "rpf head", notes),
        );
        let head_b = ResponseSeries::new(
            "rnf",
            slice_norm(&rnf.values[..boundary], "rnf head", notes),
        );
        let tail_a = ResponseSeries::new(
            "rpf",
            slice_norm(&rpf.values[boundary..], "rpf tail", notes),
        );
        let tail_b = ResponseSeries::new(
            "rnf",
            slice_norm(&rnf.values[boundary..], "rnf tail", notes),
        );
        (
            Some(dtw(&head_a, &head_b, p)?.distance),
            Some(dtw(&tail_a, &tail_b, p)?.distance),
        )
    } else {
        (None, None)
    };
    Ok(DtwSummary { full, head, tail })
}

/// Runs the full series analysis over a statistics table.
///
/// Undefined factors (levels with no views) enter the series as zero.
pub fn analyze_table(
    label: &str,
    table: &[LevelStats],
    window: usize,
    epsilon: f64,
    segment_boundary: usize,
) -> Result<AnalysisReport> {
    let mut notes = Vec::new();
    let rpf = ResponseSeries::new(
        "rpf",
        table
            .iter()
            .map(|r| r.rpf.unwrap_or(0.0))
            .collect::<Vec<_>>(),
    );
    let rnf = ResponseSeries::new(
        "rnf",
        table
            .iter()
            .map(|r| r.rnf.unwrap_or(0.0))
            .collect::<Vec<_>>(),
    );

    let rpf_normalized = normalized_or_zeros(&rpf, &mut notes);
    let rnf_normalized = normalized_or_zeros(&rnf, &mut notes);
    let norm_a = ResponseSeries::new("rpf", rpf_normalized.clone());
    let norm_b = ResponseSeries::new("rnf", rnf_normalized.clone());

    let correlation = match similarity_correlation(&rpf, &rnf) {
        Ok(c) => Some(c),
        Err(e) => {
            notes.push(format!("correlation unavailable: {e}"));
            None
        }
    };

    let saturation = match detect_saturation(&rpf, &rnf, window, epsilon) {
        Ok(report) => Some(report),
        Err(e) => {
            notes.push(format!("saturation detection unavailable: {e}"));
            None
        }
    };

    Ok(AnalysisReport {
        label: label.to_string(),
        levels: table.iter().map(|r| r.level_index).collect(),
        per_level_gap: per_level_distance(&norm_a, &norm_b)?.values,
        minkowski_p1: minkowski_distance(&norm_a, &norm_b, 1.0)?,
        minkowski_p2: minkowski_distance(&norm_a, &norm_b, 2.0)?,
        dtw_p1: dtw_summary(&rpf, &rnf, segment_boundary, 1.0, &mut notes)?,
        dtw_p2: dtw_summary(&rpf, &rnf, segment_boundary, 2.0, &mut notes)?,
        rpf: rpf.values,
        rnf: rnf.values,
        rpf_normalized,
        rnf_normalized,
        correlation,
        segment_boundary,
        saturation,
        notes,
    })
}

fn opt_pct2(fraction: Option<f64>) -> String {
    fraction
        .map(|f| fmt_pct2((f * 10_000.0).round() as i64))
        .unwrap_or_default()
}

fn opt_ratio4(ratio: Option<f64>) -> String {
    ratio
        .map(|r| fmt_ratio4((r * 10_000.0).round() as i64))
        .unwrap_or_default()
}

fn opt_raw(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// Renders a statistics table in the reference column order: factors as
/// two-decimal percentages, change rates at four decimals, plus the
/// full-precision change-rate columns.
pub fn stats_csv(table: &[LevelStats]) -> String {
    let k = table.iter().map(|r| r.levels.len()).max().unwrap_or(0);
    let mut out = String::from("level");
    for i in 1..=k {
        out.push_str(&format!(",e{i}"));
    }
    out.push_str(",views,positives,negatives,rpf,rnf,rnr,crp,crn,crp_raw,crn_raw,rps,rns\n");
    for row in table {
        out.push_str(&row.level_index.to_string());
        for i in 0..k {
            out.push(',');
            if let Some(level) = row.levels.0.get(i) {
                out.push_str(&level.to_string());
            }
        }
        out.push_str(&format!(
            ",{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.views,
            row.positives,
            row.negatives,
            opt_pct2(row.rpf),
            opt_pct2(row.rnf),
            opt_pct2(row.rnr),
            opt_ratio4(row.crp),
            opt_ratio4(row.crn),
            opt_raw(row.crp_raw),
            opt_raw(row.crn_raw),
            opt_raw(row.rps),
            opt_raw(row.rns),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{parse_counts_csv, TABLE1_G4};
    use crate::metrics::build_level_table;
    use crate::saturation::{DEFAULT_EPSILON, DEFAULT_WINDOW};

    fn table1() -> Vec<LevelStats> {
        build_level_table(&parse_counts_csv(TABLE1_G4, "t1").unwrap()).unwrap()
    }

    #[test]
    fn reference_table_analysis_shape() {
        let report = analyze_table(
            "G4",
            &table1(),
            DEFAULT_WINDOW,
            DEFAULT_EPSILON,
            DEFAULT_SEGMENT_BOUNDARY,
        )
        .unwrap();
        assert_eq!(report.levels.len(), 25);
        assert!(report.saturation.is_some());
        // min-max output attains both bounds
        let min = report
            .rpf_normalized
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let max = report
            .rpf_normalized
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((min, max), (0.0, 1.0));
        assert!(report.dtw_p1.head.is_some());
    }

    #[test]
    fn degenerate_series_noted_not_fatal() {
        let counts = crate::metrics::ExposureCounts {
            level_index: 1,
            levels: crate::object::LevelVector(vec![1]),
            views: 10,
            positives: 0,
            negatives: 0,
        };
        let rows: Vec<crate::metrics::ExposureCounts> = (1..=6)
            .map(|l| {
                let mut c = counts.clone();
                c.level_index = l;
                c
            })
            .collect();
        let table = build_level_table(&rows).unwrap();
        let report = analyze_table("flat", &table, 3, 0.01, 10).unwrap();
        assert!(report.correlation.is_none());
        assert!(report.per_level_gap.iter().all(|g| *g == 0.0));
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn stats_csv_layout() {
        let csv = stats_csv(&table1());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "level,e1,e2,e3,e4,e5,e6,views,positives,negatives,rpf,rnf,rnr,crp,crn,crp_raw,crn_raw,rps,rns"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("1,1,1,1,1,1,1,106329,2452,230,2.31,0.22,9.38,,,"));
        let second = lines.next().unwrap();
        assert!(second.contains(",3.03,0.28,9.16,1.3117,1.2727,"));
    }
}
