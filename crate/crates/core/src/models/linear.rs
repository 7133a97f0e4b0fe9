//! Single straight-line CDF model fit by least squares.

use crate::error::{Error, Result};
use crate::table::SortedTable;

use super::{round_rank, PredictedInterval};

/// A line `rank = slope * key + intercept` over raw key values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinearFn {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFn {
    #[inline]
    pub fn eval(&self, key: u64) -> f64 {
        self.slope * key as f64 + self.intercept
    }

    pub const fn constant(value: f64) -> Self {
        LinearFn { slope: 0.0, intercept: value }
    }
}

/// Least-squares fit of `(key, rank)` points, computed around the means
/// for numerical stability. Degenerate inputs collapse to a constant.
pub(crate) fn least_squares(points: &[(u64, usize)]) -> LinearFn {
    match points.len() {
        0 => LinearFn::constant(0.0),
        1 => LinearFn::constant(points[0].1 as f64),
        _ => {
            let n = points.len() as f64;
            let mean_x = points.iter().map(|&(k, _)| k as f64).sum::<f64>() / n;
            let mean_y = points.iter().map(|&(_, r)| r as f64).sum::<f64>() / n;
            let mut sxy = 0.0;
            let mut sxx = 0.0;
            for &(k, r) in points {
                let dx = k as f64 - mean_x;
                sxy += dx * (r as f64 - mean_y);
                sxx += dx * dx;
            }
            if sxx == 0.0 {
                LinearFn::constant(mean_y)
            } else {
                let slope = sxy / sxx;
                LinearFn { slope, intercept: mean_y - slope * mean_x }
            }
        }
    }
}

/// Linear CDF model: a least-squares line over `(key, 0-based rank)`
/// plus the ceiling of its maximum rank error.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCdfModel {
    line: LinearFn,
    eps: usize,
    max_err: f64,
    n: usize,
}

/// Fits the line and measures `eps = ceil(max |F(key) - rank|)` over the
/// table keys (0-based ranks).
pub fn fit_linear_cdf(table: &SortedTable) -> Result<LinearCdfModel> {
    let n = table.len();
    if n < 2 {
        return Err(Error::Train(format!(
            "linear CDF fit needs at least 2 keys, got {n}"
        )));
    }
    let points: Vec<(u64, usize)> = table.keys().iter().copied().zip(0..).collect();
    let line = least_squares(&points);
    let max_err = points
        .iter()
        .map(|&(k, r)| (line.eval(k) - r as f64).abs())
        .fold(0.0f64, f64::max);
    Ok(LinearCdfModel { line, eps: max_err.ceil() as usize, max_err, n })
}

impl LinearCdfModel {
    pub fn eps(&self) -> usize {
        self.eps
    }

    pub fn slope(&self) -> f64 {
        self.line.slope
    }

    pub fn intercept(&self) -> f64 {
        self.line.intercept
    }

    pub fn table_len(&self) -> usize {
        self.n
    }

    /// Maximum unrounded rank error of the fitted line over its table.
    pub fn max_abs_error(&self) -> f64 {
        self.max_err
    }

    pub fn predict_interval(&self, query: u64) -> PredictedInterval {
        let pred = round_rank(self.line.eval(query));
        PredictedInterval::around(pred, self.eps, self.eps, self.n)
    }

    pub(crate) fn from_parts(slope: f64, intercept: f64, max_err: f64, eps: usize, n: usize) -> Self {
        LinearCdfModel { line: LinearFn { slope, intercept }, eps, max_err, n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::oracle_lower_bound;

    fn fig2() -> SortedTable {
        SortedTable::new(vec![47, 105, 140, 289, 316, 358, 386, 398, 819, 939]).unwrap()
    }

    #[test]
    fn fig2_eps_is_three() {
        let m = fit_linear_cdf(&fig2()).unwrap();
        assert_eq!(m.eps(), 3);
    }

    #[test]
    fn fig2_max_unrounded_error_at_398() {
        let t = fig2();
        let m = fit_linear_cdf(&t).unwrap();
        let mut worst = (0u64, 0.0f64);
        for (r, &k) in t.keys().iter().enumerate() {
            let e = (m.slope() * k as f64 + m.intercept() - r as f64).abs();
            if e > worst.1 {
                worst = (k, e);
            }
        }
        assert_eq!(worst.0, 398);
        assert!((worst.1 - 2.32).abs() < 0.01, "max error {}", worst.1);
    }

    #[test]
    fn perfectly_linear_table() {
        let t = SortedTable::new((0..10).collect()).unwrap();
        let m = fit_linear_cdf(&t).unwrap();
        assert!((m.slope() - 1.0).abs() < 1e-12);
        assert!(m.intercept().abs() < 1e-9);
        assert_eq!(m.eps(), 0);
        assert_eq!(
            m.predict_interval(5),
            PredictedInterval { lo: 5, hi: 6 }
        );
    }

    #[test]
    fn member_containment() {
        let t = fig2();
        let m = fit_linear_cdf(&t).unwrap();
        for &k in t.keys() {
            let iv = m.predict_interval(k);
            let rank = oracle_lower_bound(&t, k, t.full_range());
            assert!(iv.lo <= rank && rank < iv.hi, "key {k}: rank {rank} not in [{}, {})", iv.lo, iv.hi);
        }
    }

    #[test]
    fn fig2_interval_for_316_contains_rank_4() {
        let m = fit_linear_cdf(&fig2()).unwrap();
        let iv = m.predict_interval(316);
        assert!(iv.lo <= 4 && 4 < iv.hi);
    }

    #[test]
    fn too_small_table_is_training_error() {
        let t = SortedTable::new(vec![7]).unwrap();
        assert!(fit_linear_cdf(&t).is_err());
    }
}
