//! Frozen analysis results over the bundled reference tables. Expected
//! values were computed once with an independent implementation and pinned
//! here as regression baselines.

use sweetspot_core::fixtures::{parse_counts_csv, TABLE1_G4, TABLE2_G5};
use sweetspot_core::metrics::{build_level_table, LevelStats};
use sweetspot_core::report::{analyze_table, DEFAULT_SEGMENT_BOUNDARY};
use sweetspot_core::saturation::{detect_saturation, DEFAULT_EPSILON, DEFAULT_WINDOW};
use sweetspot_core::series::ResponseSeries;

fn table(text: &str) -> Vec<LevelStats> {
    build_level_table(&parse_counts_csv(text, "fixture").unwrap()).unwrap()
}

fn factor_series(table: &[LevelStats]) -> (ResponseSeries, ResponseSeries) {
    (
        ResponseSeries::new(
            "rpf",
            table.iter().map(|r| r.rpf.unwrap()).collect::<Vec<_>>(),
        ),
        ResponseSeries::new(
            "rnf",
            table.iter().map(|r| r.rnf.unwrap()).collect::<Vec<_>>(),
        ),
    )
}

#[test]
fn increasing_table_detects_level_10_with_crossover_11() {
    let (rpf, rnf) = factor_series(&table(TABLE1_G4));
    let report = detect_saturation(&rpf, &rnf, DEFAULT_WINDOW, DEFAULT_EPSILON).unwrap();
    assert_eq!(report.detected_level, 10);
    assert!(!report.fallback);
    assert_eq!(report.evidence.rpf_argmax, 8);
    assert_eq!(report.evidence.share_crossover, Some(11));
    assert!(report.evidence.rnf_slope_from_detected > 0.0);
    // the strictly forward-looking window reads the dip earlier
    let forward = report
        .candidates
        .iter()
        .find(|c| c.criterion == "forward-window")
        .unwrap();
    assert_eq!(forward.level, 8);
}

#[test]
fn decreasing_table_has_no_share_crossover() {
    let (rpf, rnf) = factor_series(&table(TABLE2_G5));
    let report = detect_saturation(&rpf, &rnf, DEFAULT_WINDOW, DEFAULT_EPSILON).unwrap();
    assert_eq!(report.evidence.share_crossover, None);
    assert_eq!(report.evidence.rpf_argmax, 7);
    assert!(report.evidence.rnf_slope_full < 0.0);
    // negative-share decline concentrated in the first ten levels
    let shares: Vec<f64> = report
        .evidence
        .negative_share
        .iter()
        .map(|s| s.unwrap())
        .collect();
    let head_min = shares[..10].iter().cloned().fold(f64::INFINITY, f64::min);
    let total_min = shares.iter().cloned().fold(f64::INFINITY, f64::min);
    let concentration = (shares[0] - head_min) / (shares[0] - total_min);
    assert!(
        concentration >= 0.9,
        "decline concentration {concentration}"
    );
}

#[test]
fn increasing_analysis_frozen_values() {
    let report = analyze_table(
        "t1",
        &table(TABLE1_G4),
        DEFAULT_WINDOW,
        DEFAULT_EPSILON,
        DEFAULT_SEGMENT_BOUNDARY,
    )
    .unwrap();
    // DTW over min-max normalized series, |x - y| cell cost
    assert!(
        (report.dtw_p1.full - 4.2801).abs() < 5e-4,
        "{}",
        report.dtw_p1.full
    );
    assert!((report.dtw_p1.head.unwrap() - 5.2543).abs() < 5e-4);
    assert!((report.dtw_p1.tail.unwrap() - 3.5353).abs() < 5e-4);
    assert!((report.correlation.unwrap() - 0.3280088657).abs() < 1e-9);
    // largest normalized gap sits at the positive-factor peak
    let argmax = report
        .per_level_gap
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0
        + 1;
    assert_eq!(argmax, 8);
}

#[test]
fn decreasing_analysis_frozen_values() {
    let report = analyze_table(
        "t2",
        &table(TABLE2_G5),
        DEFAULT_WINDOW,
        DEFAULT_EPSILON,
        DEFAULT_SEGMENT_BOUNDARY,
    )
    .unwrap();
    assert!(
        (report.dtw_p1.full - 4.3691).abs() < 5e-4,
        "{}",
        report.dtw_p1.full
    );
    assert!((report.dtw_p1.head.unwrap() - 5.6434).abs() < 5e-4);
    assert!((report.dtw_p1.tail.unwrap() - 3.0159).abs() < 5e-4);
    assert!((report.correlation.unwrap() - 0.1231287618).abs() < 1e-9);
    let argmax = report
        .per_level_gap
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0
        + 1;
    assert_eq!(argmax, 9);
}

#[test]
fn normalized_positive_factor_minmax_positions() {
    let t1 = table(TABLE1_G4);
    let rpf: Vec<f64> = t1.iter().map(|r| r.rpf.unwrap()).collect();
    let argmin = rpf
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0
        + 1;
    let argmax = rpf
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0
        + 1;
    assert_eq!((argmin, argmax), (1, 8));
}
