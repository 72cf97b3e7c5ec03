//! Bundled reference fixtures and the CSV formats for per-level counts and
//! per-group totals.
//!
//! Count fixtures carry raw tallies only (level vectors, views, responses);
//! every derived column is recomputed downstream so transcription problems
//! surface as systematic mismatches instead of hiding in stored values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::metrics::ExposureCounts;
use crate::object::LevelVector;

/// Reference dataset, increasing-intensity group (25 levels).
pub const TABLE1_G4: &str = include_str!("../data/table1_g4.csv");
/// Reference dataset, decreasing-intensity group (25 levels).
pub const TABLE2_G5: &str = include_str!("../data/table2_g5.csv");
/// Reference per-group totals across all five groups.
pub const TABLE3_GROUPS: &str = include_str!("../data/table3_groups.csv");

/// Resolves a bundled fixture by name ("table1_g4", "table2_g5.csv", ...).
pub fn bundled(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".csv") {
        "table1_g4" => Some(TABLE1_G4),
        "table2_g5" => Some(TABLE2_G5),
        "table3_groups" => Some(TABLE3_GROUPS),
        _ => None,
    }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_u64(path: &str, line: usize, field: &str, raw: &str) -> Result<u64> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {field}: {raw:?}")))
}

/// Parses a per-level counts CSV: `level,e1..ek,views,positives,negatives`.
pub fn parse_counts_csv(text: &str, path: &str) -> Result<Vec<ExposureCounts>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"level") {
        return Err(parse_err(path, 1, "first column must be 'level'"));
    }
    let tail = ["views", "positives", "negatives"];
    if columns.len() < 4 || columns[columns.len() - 3..] != tail {
        return Err(parse_err(
            path,
            1,
            "header must end with views,positives,negatives",
        ));
    }
    let k = columns.len() - 4;
    for (i, col) in columns[1..1 + k].iter().enumerate() {
        let expected = format!("e{}", i + 1);
        if *col != expected {
            return Err(parse_err(
                path,
                1,
                format!("expected column {expected}, found {col}"),
            ));
        }
    }

    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != columns.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let level_index = parse_u64(path, line_no, "level", fields[0])? as u32;
        let levels: Vec<u32> = fields[1..1 + k]
            .iter()
            .enumerate()
            .map(|(i, f)| parse_u64(path, line_no, &format!("e{}", i + 1), f).map(|v| v as u32))
            .collect::<Result<_>>()?;
        rows.push(ExposureCounts {
            level_index,
            levels: LevelVector(levels),
            views: parse_u64(path, line_no, "views", fields[k + 1])?,
            positives: parse_u64(path, line_no, "positives", fields[k + 2])?,
            negatives: parse_u64(path, line_no, "negatives", fields[k + 3])?,
        });
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    Ok(rows)
}

/// One row of the per-group totals fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCountsRow {
    pub group: Group,
    pub intensity: String,
    pub views: u64,
    pub positives: u64,
    pub negatives: u64,
}

/// Parses the totals CSV: `group,intensity,views,positives,negatives`.
pub fn parse_groups_csv(text: &str, path: &str) -> Result<Vec<GroupCountsRow>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if header.trim() != "group,intensity,views,positives,negatives" {
        return Err(parse_err(path, 1, "unexpected header for group totals"));
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(path, line_no, "expected 5 fields"));
        }
        rows.push(GroupCountsRow {
            group: fields[0]
                .trim()
                .parse()
                .map_err(|e| parse_err(path, line_no, format!("{e}")))?,
            intensity: fields[1].trim().to_string(),
            views: parse_u64(path, line_no, "views", fields[2])?,
            positives: parse_u64(path, line_no, "positives", fields[3])?,
            negatives: parse_u64(path, line_no, "negatives", fields[4])?,
        });
    }
    Ok(rows)
}

/// Loads a counts fixture from disk, falling back to a bundled fixture when
/// the path does not exist but matches a bundled name.
pub fn load_counts(path: &Path) -> Result<Vec<ExposureCounts>> {
    let display = path.display().to_string();
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        return parse_counts_csv(&text, &display);
    }
    if let Some(text) = path.file_name().and_then(|n| n.to_str()).and_then(bundled) {
        return parse_counts_csv(text, &display);
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{display}: no such file or bundled fixture"),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_parse() {
        let t1 = parse_counts_csv(TABLE1_G4, "table1_g4.csv").unwrap();
        assert_eq!(t1.len(), 25);
        assert_eq!(t1[0].views, 106_329);
        assert_eq!(t1[7].levels, LevelVector(vec![3, 2, 2, 2, 2, 2]));
        assert_eq!(t1[24].views, 1434);

        let t2 = parse_counts_csv(TABLE2_G5, "table2_g5.csv").unwrap();
        assert_eq!(t2.len(), 25);
        assert_eq!(t2[0].levels, LevelVector(vec![5; 6]));
        assert_eq!(t2[0].negatives, 939);

        let t3 = parse_groups_csv(TABLE3_GROUPS, "table3_groups.csv").unwrap();
        assert_eq!(t3.len(), 5);
        assert_eq!(t3[3].group, Group::G4);
        assert_eq!(t3[3].views, 399_146);
    }

    #[test]
    fn truncated_row_names_line() {
        let text = "level,e1,views,positives,negatives\n1,1,10,2\n";
        let err = parse_counts_csv(text, "bad.csv").unwrap_err();
        match err {
            Error::Parse { path, line, .. } => {
                assert_eq!(path, "bad.csv");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn garbage_value_names_line() {
        let text = "level,e1,views,positives,negatives\n1,1,ten,2,0\n";
        let err = parse_counts_csv(text, "bad.csv").unwrap_err();
        assert!(err.to_string().contains("bad.csv:2"));
    }

    #[test]
    fn bundled_lookup() {
        assert!(bundled("table1_g4").is_some());
        assert!(bundled("table1_g4.csv").is_some());
        assert!(bundled("nope").is_none());
    }
}
