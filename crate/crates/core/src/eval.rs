//! Recovery and prediction metrics.

use alloc::vec::Vec;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::Dataset;
use crate::rng::{child, Stream};

/// Maximum number of thresholds used by [`default_thresholds`].
pub const MAX_THRESHOLDS: usize = 500;

/// Residual sum of squares between two equally shaped matrices.
pub fn rss(truth: &Matrix, predicted: &Matrix) -> Result<f64> {
    if truth.shape() != predicted.shape() {
        return Err(Error::shape("rss", truth.shape(), predicted.shape()));
    }
    Ok(truth
        .as_slice()
        .iter()
        .zip(predicted.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Random train/test split of the samples; `test_fraction` of the rows
/// (rounded, at least one) are held out. Row order within each part follows
/// the input.
pub fn holdout_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.n_samples();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument {
            name: "test_fraction",
            reason: alloc::format!("must lie in (0, 1), got {test_fraction}"),
        });
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
    if n_test + 2 > n {
        return Err(Error::Argument {
            name: "test_fraction",
            reason: alloc::format!("holding out {n_test} of {n} samples leaves fewer than 2 for training"),
        });
    }
    let mut rng = child(seed, Stream::Holdout, 0);
    let mut test = rand::seq::index::sample(&mut rng, n, n_test).into_vec();
    test.sort_unstable();
    let mut is_test = alloc::vec![false; n];
    for &r in &test {
        is_test[r] = true;
    }
    let train: Vec<usize> = (0..n).filter(|&r| !is_test[r]).collect();
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PRCurve {
    /// Ordered by strictly decreasing threshold.
    pub points: Vec<PrPoint>,
    /// Trapezoidal area under precision as a function of recall.
    pub auc: f64,
}

impl PRCurve {
    /// Precision at the first threshold whose recall reaches `recall`.
    pub fn precision_at_recall(&self, recall: f64) -> Option<f64> {
        self.points.iter().find(|pt| pt.recall >= recall).map(|pt| pt.precision)
    }

    /// Recall at the lowest threshold whose precision is still at least `precision`.
    pub fn recall_at_precision(&self, precision: f64) -> Option<f64> {
        self.points
            .iter()
            .filter(|pt| pt.precision >= precision)
            .map(|pt| pt.recall)
            .fold(None, |best: Option<f64>, r| Some(best.map_or(r, |b| b.max(r))))
    }
}

/// Sorted unique finite scores in descending order, evenly subsampled to at
/// most `max_points` values. The extreme values are always kept.
pub fn default_thresholds(scores: &Matrix, max_points: usize) -> Vec<f64> {
    let mut v: Vec<f64> = scores.as_slice().iter().copied().filter(|s| s.is_finite()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    if max_points == 0 {
        return Vec::new();
    }
    if v.len() <= max_points {
        return v;
    }
    if max_points == 1 {
        return alloc::vec![v[v.len() - 1]];
    }
    let last = v.len() - 1;
    let mut out: Vec<f64> = (0..max_points)
        .map(|i| v[(i * last + (max_points - 1) / 2) / (max_points - 1)])
        .collect();
    out[0] = v[0];
    out[max_points - 1] = v[last];
    out.dedup();
    out
}

/// Precision and recall of `scores >= t` against a binary `mask` at each
/// threshold. Thresholds are sorted descending and deduplicated first.
pub fn precision_recall(scores: &Matrix, mask: &Matrix, thresholds: &[f64]) -> Result<PRCurve> {
    if scores.shape() != mask.shape() {
        return Err(Error::shape("precision_recall mask", scores.shape(), mask.shape()));
    }
    let positives = mask.as_slice().iter().filter(|&&m| m != 0.0).count();
    if positives == 0 {
        return Err(Error::Argument {
            name: "mask",
            reason: "mask has no positive entries".into(),
        });
    }
    let mut ts: Vec<f64> = thresholds.iter().copied().filter(|t| !t.is_nan()).collect();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();

    let mut pairs: Vec<(f64, bool)> = scores
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .map(|(&s, &m)| (s, m != 0.0))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::with_capacity(ts.len());
    let (mut tp, mut fp, mut i) = (0usize, 0usize, 0usize);
    for &t in &ts {
        while i < pairs.len() && pairs[i].0 >= t {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        points.push(PrPoint {
            threshold: t,
            precision,
            recall: tp as f64 / positives as f64,
        });
    }

    let mut auc = 0.0;
    let mut prev = (0.0, points.first().map_or(1.0, |pt| pt.precision));
    for pt in &points {
        auc += (pt.recall - prev.0) * 0.5 * (pt.precision + prev.1);
        prev = (pt.recall, pt.precision);
    }
    Ok(PRCurve { points, auc })
}

/// Sample mean and sample standard deviation; the deviation is zero for a
/// single sample.
pub fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1) as f64))
}

/// Student-t confidence interval for the mean.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Argument {
            name: "samples",
            reason: alloc::format!("need at least 2 samples, got {}", samples.len()),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument {
            name: "level",
            reason: alloc::format!("must lie in (0, 1), got {level}"),
        });
    }
    let n = samples.len() as f64;
    let (mean, sd) = mean_sd(samples);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::numerical("confidence_interval", alloc::format!("{e}")))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * sd / libm::sqrt(n);
    Ok((mean - half, mean + half))
}
