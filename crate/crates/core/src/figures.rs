//! Figure-data extraction: per-level series for each chart reproduced from
//! a statistics table, exported as `level,value` CSV files.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::LevelStats;
use crate::report::{analyze_table, AnalysisReport};
use crate::saturation::{DEFAULT_EPSILON, DEFAULT_WINDOW};

/// Which chart family a table belongs to. Increasing-intensity tables map
/// onto figures 4-9, decreasing ones onto figures 10-15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureSet {
    Increasing,
    Decreasing,
}

/// One exported series. Factor series are percentages at full precision;
/// normalized and gap series are unitless; shares are fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSeries {
    /// File stem, e.g. "fig4" or "fig6_negative".
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub set: FigureSet,
    pub levels: Vec<u32>,
    pub figures: Vec<FigureSeries>,
}

/// Guesses the chart family from the direction of the level vectors.
pub fn infer_figure_set(table: &[LevelStats]) -> FigureSet {
    let sum = |row: &LevelStats| row.levels.0.iter().map(|&l| u64::from(l)).sum::<u64>();
    match (table.first(), table.last()) {
        (Some(first), Some(last)) if sum(first) > sum(last) => FigureSet::Decreasing,
        _ => FigureSet::Increasing,
    }
}

pub fn figure_data(table: &[LevelStats], set: FigureSet) -> Result<FigureData> {
    let report: AnalysisReport = analyze_table(
        match set {
            FigureSet::Increasing => "increasing",
            FigureSet::Decreasing => "decreasing",
        },
        table,
        DEFAULT_WINDOW,
        DEFAULT_EPSILON,
        crate::report::DEFAULT_SEGMENT_BOUNDARY,
    )?;
    // (rpf, rnf, normalized pair, gap, positive share, negative share)
    let numbers: [u32; 6] = match set {
        FigureSet::Increasing => [4, 5, 6, 7, 8, 9],
        FigureSet::Decreasing => [10, 11, 14, 15, 12, 13],
    };
    let pct = |v: &[f64]| v.iter().map(|x| x * 100.0).collect::<Vec<_>>();
    let figures = vec![
        FigureSeries {
            name: format!("fig{}", numbers[0]),
            values: pct(&report.rpf),
        },
        FigureSeries {
            name: format!("fig{}", numbers[1]),
            values: pct(&report.rnf),
        },
        FigureSeries {
            name: format!("fig{}_positive", numbers[2]),
            values: report.rpf_normalized.clone(),
        },
        FigureSeries {
            name: format!("fig{}_negative", numbers[2]),
            values: report.rnf_normalized.clone(),
        },
        FigureSeries {
            name: format!("fig{}", numbers[3]),
            values: report.per_level_gap.clone(),
        },
        FigureSeries {
            name: format!("fig{}", numbers[4]),
            values: table.iter().map(|r| r.rps.unwrap_or(0.0)).collect(),
        },
        FigureSeries {
            name: format!("fig{}", numbers[5]),
            values: table.iter().map(|r| r.rns.unwrap_or(0.0)).collect(),
        },
    ];
    Ok(FigureData {
        set,
        levels: report.levels,
        figures,
    })
}

/// Renders one figure as `level,value` CSV at full precision.
pub fn figure_csv(levels: &[u32], series: &FigureSeries) -> String {
    let mut out = String::from("level,value\n");
    for (level, value) in levels.iter().zip(&series.values) {
        out.push_str(&format!("{level},{value}\n"));
    }
    out
}
