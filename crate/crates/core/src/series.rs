//! Response-series comparison: normalization, Minkowski distance, dynamic
//! time warping, Pearson correlation, and per-level gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered series of factor values indexed by intensity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl ResponseSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        ResponseSeries {
            label: label.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMethod {
    /// (v - min) / (max - min), mapping onto [0, 1].
    MinMax,
    /// (v - mean) / population standard deviation.
    ZScore,
}

pub fn normalize(series: &ResponseSeries, method: NormalizeMethod) -> Result<ResponseSeries> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let values = &series.values;
    let mapped = match method {
        NormalizeMethod::MinMax => {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max <= min {
                return Err(Error::DegenerateSeries("constant series under min-max"));
            }
            values.iter().map(|v| (v - min) / (max - min)).collect()
        }
        NormalizeMethod::ZScore => {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd == 0.0 {
                return Err(Error::DegenerateSeries("constant series under z-score"));
            }
            values.iter().map(|v| (v - mean) / sd).collect()
        }
    };
    Ok(ResponseSeries::new(series.label.clone(), mapped))
}

/// Minkowski distance of order `p >= 1` between equal-length series.
pub fn minkowski_distance(a: &ResponseSeries, b: &ResponseSeries, p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "minkowski order p={p} must be >= 1"
        )));
    }
    let sum: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// Minimal-cost monotone alignment between two series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpingResult {
    pub distance: f64,
    /// 1-based (i, j) pairs from (1, 1) to (n, m); each step advances i, j,
    /// or both by exactly one.
    pub path: Vec<(usize, usize)>,
    /// Pairwise cell costs |x_i - y_j|^p (not cumulative).
    pub cost_matrix: Vec<Vec<f64>>,
}

/// Dynamic time warping with step set {(i-1,j), (i,j-1), (i-1,j-1)} and
/// cell cost |x - y|^p (p = 1 by default convention).
///
/// Traceback ties prefer the diagonal step, then the vertical (advance in
/// `a`), then the horizontal, so the reported path is deterministic.
pub fn dtw(a: &ResponseSeries, b: &ResponseSeries, p: f64) -> Result<WarpingResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let (n, m) = (a.len(), b.len());
    let cost = |i: usize, j: usize| -> f64 {
        let d = (a.values[i] - b.values[j]).abs();
        if p == 1.0 {
            d
        } else {
            d.powf(p)
        }
    };
    let cost_matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|j| cost(i, j)).collect())
        .collect();

    // cumulative[i][j] over 1-based borders initialized to infinity
    let mut cum = vec![vec![f64::INFINITY; m + 1]; n + 1];
    cum[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let best = cum[i - 1][j - 1].min(cum[i - 1][j]).min(cum[i][j - 1]);
            cum[i][j] = cost_matrix[i - 1][j - 1] + best;
        }
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i, j));
        if i == 1 && j == 1 {
            break;
        }
        let diag = cum[i - 1][j - 1];
        let vert = cum[i - 1][j];
        let horiz = cum[i][j - 1];
        if diag <= vert && diag <= horiz {
            i -= 1;
            j -= 1;
        } else if vert <= horiz {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();

    Ok(WarpingResult {
        distance: cum[n][m],
        path,
        cost_matrix,
    })
}

/// Pearson correlation coefficient between equal-length series.
pub fn similarity_correlation(a: &ResponseSeries, b: &ResponseSeries) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.values.iter().sum::<f64>() / n;
    let mb = b.values.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::DegenerateSeries(
            "constant series has no correlation",
        ));
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Elementwise |a_i - b_i| between equal-length series.
pub fn per_level_distance(a: &ResponseSeries, b: &ResponseSeries) -> Result<ResponseSeries> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(ResponseSeries::new(
        format!("|{} - {}|", a.label, b.label),
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .collect(),
    ))
}
