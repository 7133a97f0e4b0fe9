//! Multi-level epsilon-bounded piecewise-linear model, built bottom-up
//! with a greedy shrinking-cone fitter and queried top-down.

use crate::error::{Error, Result};
use crate::table::SortedTable;

use super::{round_rank, PredictedInterval};

/// One linear piece: `pos(q) = slope * (q - first_key) + intercept`,
/// where `intercept` is the position of the segment's first key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub first_key: u64,
    pub slope: f64,
    pub intercept: f64,
}

impl Segment {
    #[inline]
    fn eval(&self, query: u64) -> f64 {
        self.slope * (query as f64 - self.first_key as f64) + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmModel {
    /// `levels[0]` is the single-segment root; the last level covers the
    /// table itself. `levels[i]` predicts positions in `levels[i + 1]`'s
    /// segment array (or table ranks, for the last level).
    levels: Vec<Vec<Segment>>,
    eps: usize,
    n: usize,
}

/// Greedy streaming shrinking-cone segmentation: each segment guarantees
/// `|prediction - pos| <= eps` on the points it covers. Slopes are kept
/// non-negative so per-segment prediction is monotone in the key.
fn shrinking_cone(points: &[(u64, usize)], eps: usize) -> Vec<Segment> {
    let eps = eps as f64;
    let mut segments = Vec::new();
    let mut start = points[0];
    let mut slope_lo = f64::NEG_INFINITY;
    let mut slope_hi = f64::INFINITY;
    for &(key, pos) in &points[1..] {
        let dx = key as f64 - start.0 as f64;
        let dy = pos as f64 - start.1 as f64;
        let cand_hi = (dy + eps) / dx;
        let cand_lo = (dy - eps) / dx;
        if cand_lo > slope_hi || cand_hi < slope_lo {
            segments.push(close_segment(start, slope_lo, slope_hi));
            start = (key, pos);
            slope_lo = f64::NEG_INFINITY;
            slope_hi = f64::INFINITY;
        } else {
            slope_lo = slope_lo.max(cand_lo);
            slope_hi = slope_hi.min(cand_hi);
        }
    }
    segments.push(close_segment(start, slope_lo, slope_hi));
    segments
}

fn close_segment(start: (u64, usize), slope_lo: f64, slope_hi: f64) -> Segment {
    // Upper cone bounds are always positive on ascending points, so a
    // non-negative slope always exists inside the cone.
    let slope = if slope_hi.is_infinite() {
        0.0
    } else {
        (slope_lo.max(0.0) + slope_hi) / 2.0
    };
    Segment { first_key: start.0, slope, intercept: start.1 as f64 }
}

/// Builds the bottom level over `(key, rank)` and recurses on segment
/// first keys until one segment remains.
pub fn build_pgm(table: &SortedTable, eps: usize) -> Result<PgmModel> {
    if eps == 0 {
        return Err(Error::Config("PGM eps must be >= 1 (eps = 0 degenerates the cones)".into()));
    }
    let n = table.len();
    if n == 0 {
        return Err(Error::Train("cannot train a PGM on an empty table".into()));
    }
    let mut points: Vec<(u64, usize)> = table.keys().iter().copied().zip(0..).collect();
    let mut levels = Vec::new();
    loop {
        let segs = shrinking_cone(&points, eps);
        let done = segs.len() == 1;
        points = segs.iter().map(|s| s.first_key).zip(0..).collect();
        levels.push(segs);
        if done {
            break;
        }
    }
    levels.reverse();
    Ok(PgmModel { levels, eps, n })
}

impl PgmModel {
    pub fn eps(&self) -> usize {
        self.eps
    }

    pub fn table_len(&self) -> usize {
        self.n
    }

    /// Segment counts per level, root first.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    pub fn levels(&self) -> &[Vec<Segment>] {
        &self.levels
    }

    /// Top-down descent: each level's prediction is refined by scanning
    /// the +/- eps neighborhood of the next level's segment array for
    /// the last segment whose first key does not exceed the query.
    pub fn predict_interval(&self, query: u64) -> PredictedInterval {
        let mut seg = self.levels[0][0];
        for level in &self.levels[1..] {
            let pred = round_rank(seg.eval(query)).clamp(0, level.len() as i64 - 1) as usize;
            seg = level[locate_segment(level, query, pred, self.eps)];
        }
        let pred = round_rank(seg.eval(query));
        PredictedInterval::around(pred, self.eps, self.eps, self.n)
    }

    pub(crate) fn from_parts(levels: Vec<Vec<Segment>>, eps: usize, n: usize) -> Self {
        PgmModel { levels, eps, n }
    }
}

/// Last segment with `first_key <= query` near the predicted position.
/// The eps guarantee keeps the true segment within the window; the walk
/// below the window floor is a safety net for edge rounding.
fn locate_segment(level: &[Segment], query: u64, pred: usize, eps: usize) -> usize {
    let lo = pred.saturating_sub(eps + 1);
    let hi = (pred + eps + 1).min(level.len() - 1);
    let mut idx = lo;
    for i in lo..=hi {
        if level[i].first_key <= query {
            idx = i;
        } else {
            break;
        }
    }
    while idx > 0 && level[idx].first_key > query {
        idx -= 1;
    }
    idx
}
