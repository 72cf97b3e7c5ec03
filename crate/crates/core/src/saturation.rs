//! Saturation-point detection over positive/negative response trajectories.
//!
//! The detector looks for the earliest level where positive-response growth
//! has levelled off while negative response keeps rising. Growth is judged
//! by the mean of raw change rates inside a window centred on the level;
//! the negative trend by the least-squares slope of the negative factor
//! from the level onward. All intermediate evidence is emitted so that
//! alternative readings (factor argmax, share crossover, a strictly
//! forward-looking window) stay visible next to the primary verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ResponseSeries;

pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Alternative level suggested by a named secondary criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationCandidate {
    pub criterion: String,
    pub level: u32,
}

/// Intermediate signals backing a detection verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationEvidence {
    /// Mean of raw positive change rates within `window` of each level.
    pub windowed_cr_means: Vec<Option<f64>>,
    /// Least-squares slope of the negative factor from the detected level on.
    pub rnf_slope_from_detected: f64,
    /// Slope of the negative factor over the whole series.
    pub rnf_slope_full: f64,
    /// First level where the negative interaction share jumps above its
    /// recent past and stays above the earlier regime (median comparison).
    pub share_crossover: Option<u32>,
    /// Level with the highest positive response factor.
    pub rpf_argmax: u32,
    /// Negative interaction share per level (negatives over all responses).
    pub negative_share: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub detected_level: u32,
    /// True when no level satisfied the rule and the factor argmax was
    /// reported instead.
    pub fallback: bool,
    pub window: usize,
    pub epsilon: f64,
    pub evidence: SaturationEvidence,
    pub candidates: Vec<SaturationCandidate>,
}

fn lsq_slope(ys: &[f64], first_x: usize) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = first_x as f64 + (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, y) in ys.iter().enumerate() {
        let dx = (first_x + k) as f64 - mx;
        num += dx * (y - my);
        den += dx * dx;
    }
    num / den
}

/// Lower median: a pure order statistic, so comparisons between medians
/// survive any strictly monotone transform of the values (averaging the
/// two middle elements would not).
fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Mean of the defined change rates at levels within `window` of `level`
/// (change rates exist for levels 2..=n).
fn centered_mean(cr: &[Option<f64>], level: usize, n: usize, window: usize) -> Option<f64> {
    let lo = level.saturating_sub(window).max(2);
    let hi = (level + window).min(n);
    let defined: Vec<f64> = (lo..=hi).filter_map(|l| cr[l - 2]).collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

fn forward_mean(cr: &[Option<f64>], level: usize, n: usize, window: usize) -> Option<f64> {
    let lo = (level + 1).max(2);
    let hi = (level + window).min(n);
    if lo > hi {
        return None;
    }
    let defined: Vec<f64> = (lo..=hi).filter_map(|l| cr[l - 2]).collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// First level whose negative share jumps strictly above the trailing
/// window and whose tail regime sits above the earlier one. Medians rather
/// than means keep the test invariant under separate positive rescaling of
/// the two factor series.
fn share_crossover(shares: &[Option<f64>], window: usize) -> Option<u32> {
    let n = shares.len();
    for level in 2..=n {
        let cur = match shares[level - 1] {
            Some(v) => v,
            None => continue,
        };
        let lo = level.saturating_sub(window).max(1);
        let prev: Vec<f64> = (lo..level).filter_map(|l| shares[l - 1]).collect();
        if prev.is_empty() || cur <= prev.iter().cloned().fold(f64::NEG_INFINITY, f64::max) {
            continue;
        }
        let head: Vec<f64> = shares[..level - 1].iter().flatten().copied().collect();
        let tail: Vec<f64> = shares[level - 1..].iter().flatten().copied().collect();
        match (median(&head), median(&tail)) {
            (Some(h), Some(t)) if t > h => return Some(level as u32),
            _ => {}
        }
    }
    None
}

/// Detects the saturation level of a positive/negative factor pair.
pub fn detect_saturation(
    rpf: &ResponseSeries,
    rnf: &ResponseSeries,
    window: usize,
    epsilon: f64,
) -> Result<SaturationReport> {
    if rpf.len() != rnf.len() {
        return Err(Error::LengthMismatch {
            left: rpf.len(),
            right: rnf.len(),
        });
    }
    let n = rpf.len();
    if n < window + 2 {
        return Err(Error::TooShort {
            needed: window + 2,
            got: n,
        });
    }
    if window == 0 {
        return Err(Error::InvalidConfig("window must be >= 1".into()));
    }

    // raw change rates of the positive factor, one per level 2..=n
    let cr: Vec<Option<f64>> = rpf
        .values
        .windows(2)
        .map(|w| (w[0] != 0.0).then(|| w[1] / w[0]))
        .collect();

    let windowed_cr_means: Vec<Option<f64>> =
        (1..=n).map(|l| centered_mean(&cr, l, n, window)).collect();

    let tail_slope = |level: usize| lsq_slope(&rnf.values[level - 1..], level);

    let mut detected = None;
    for level in 1..=n {
        let plateau = matches!(windowed_cr_means[level - 1], Some(m) if m <= 1.0 + epsilon);
        if plateau && tail_slope(level) > 0.0 {
            detected = Some(level);
            break;
        }
    }

    let rpf_argmax = rpf
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i + 1)
        .unwrap() as u32;

    let shares: Vec<Option<f64>> = rpf
        .values
        .iter()
        .zip(&rnf.values)
        .map(|(p, q)| {
            let total = p + q;
            (total > 0.0).then(|| q / total)
        })
        .collect();
    let crossover = share_crossover(&shares, window);

    let mut candidates = vec![SaturationCandidate {
        criterion: "rpf-argmax".into(),
        level: rpf_argmax,
    }];
    if let Some(level) = crossover {
        candidates.push(SaturationCandidate {
            criterion: "share-crossover".into(),
            level,
        });
    }
    for level in 1..=n {
        let plateau = matches!(forward_mean(&cr, level, n, window), Some(m) if m <= 1.0 + epsilon);
        if plateau && tail_slope(level) > 0.0 {
            candidates.push(SaturationCandidate {
                criterion: "forward-window".into(),
                level: level as u32,
            });
            break;
        }
    }

    let (detected_level, fallback) = match detected {
        Some(level) => (level as u32, false),
        None => (rpf_argmax, true),
    };

    Ok(SaturationReport {
        detected_level,
        fallback,
        window,
        epsilon,
        evidence: SaturationEvidence {
            windowed_cr_means,
            rnf_slope_from_detected: tail_slope(detected_level as usize),
            rnf_slope_full: lsq_slope(&rnf.values, 1),
            share_crossover: crossover,
            rpf_argmax,
            negative_share: shares,
        },
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(values: Vec<f64>) -> ResponseSeries {
        ResponseSeries::new("t", values)
    }

    #[test]
    fn constant_rpf_rising_rnf_detects_level_one() {
        let rpf = s(vec![0.05; 8]);
        let rnf = s((1..=8).map(|i| 0.001 * i as f64).collect());
        let report = detect_saturation(&rpf, &rnf, DEFAULT_WINDOW, DEFAULT_EPSILON).unwrap();
        assert_eq!(report.detected_level, 1);
        assert!(!report.fallback);
    }

    #[test]
    fn growing_rpf_flat_zero_rnf_falls_back_to_argmax() {
        let rpf = s((1..=8).map(|i| 0.01 * 1.5f64.powi(i)).collect());
        let rnf = s(vec![0.0; 8]);
        let report = detect_saturation(&rpf, &rnf, DEFAULT_WINDOW, DEFAULT_EPSILON).unwrap();
        assert!(report.fallback);
        assert_eq!(report.detected_level, 8);
        assert_eq!(report.evidence.rpf_argmax, 8);
    }

    #[test]
    fn too_short_series_is_an_error() {
        let rpf = s(vec![0.1, 0.2, 0.3]);
        let rnf = s(vec![0.0, 0.0, 0.1]);
        assert!(matches!(
            detect_saturation(&rpf, &rnf, 3, 0.01),
            Err(Error::TooShort { needed: 5, .. })
        ));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let rpf = s(vec![0.1; 6]);
        let rnf = s(vec![0.1; 5]);
        assert!(detect_saturation(&rpf, &rnf, 3, 0.01).is_err());
    }

    #[test]
    fn invariant_under_separate_positive_scaling() {
        let rpf = s(vec![
            0.02, 0.03, 0.033, 0.04, 0.041, 0.040, 0.042, 0.041, 0.040, 0.041,
        ]);
        let rnf = s(vec![
            0.002, 0.002, 0.001, 0.002, 0.002, 0.003, 0.004, 0.004, 0.005, 0.006,
        ]);
        let base = detect_saturation(&rpf, &rnf, 3, 0.01).unwrap();
        let scaled = detect_saturation(
            &s(rpf.values.iter().map(|v| v * 37.0).collect()),
            &s(rnf.values.iter().map(|v| v * 0.013).collect()),
            3,
            0.01,
        )
        .unwrap();
        assert_eq!(base.detected_level, scaled.detected_level);
        assert_eq!(base.fallback, scaled.fallback);
        assert_eq!(base.evidence.rpf_argmax, scaled.evidence.rpf_argmax);
        assert_eq!(
            base.evidence.share_crossover,
            scaled.evidence.share_crossover
        );
    }

    #[test]
    fn slope_helper_signs() {
        assert!(lsq_slope(&[1.0, 2.0, 3.0], 5) > 0.0);
        assert!(lsq_slope(&[3.0, 2.0, 1.0], 5) < 0.0);
        assert_eq!(lsq_slope(&[1.0], 5), 0.0);
    }

    #[test]
    fn median_helper() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.0));
        assert_eq!(median(&[]), None);
    }
}
