//! Radix spline: a greedy epsilon-bounded spline over the CDF plus a
//! radix prefix table that narrows the spline-point search.

use crate::error::{Error, Result};
use crate::table::SortedTable;

use super::{round_rank, PredictedInterval};

#[derive(Debug, Clone, PartialEq)]
pub struct RsModel {
    radix_bits: u32,
    shift: u32,
    min_key: u64,
    max_key: u64,
    /// `2^radix_bits + 1` offsets; entry p is the index of the first
    /// spline point whose shifted prefix is >= p.
    radix_table: Vec<u32>,
    /// Ascending `(key, rank)` spline points; interpolation between
    /// bracketing points errs by at most eps on table keys.
    spline: Vec<(u64, usize)>,
    eps: usize,
    n: usize,
}

/// Greedy spline corridor over `(key, rank)`: a point becomes a knot
/// whenever the corridor from the last knot can no longer pass within
/// eps of every point seen since. A verification pass then inserts
/// knots for any residual violation, so the eps bound holds
/// unconditionally.
fn greedy_spline(points: &[(u64, usize)], eps: usize) -> Vec<(u64, usize)> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let epsf = eps as f64;
    let mut knots = vec![points[0]];
    let mut base = points[0];
    let mut slope_lo = f64::NEG_INFINITY;
    let mut slope_hi = f64::INFINITY;
    let mut last = points[0];
    for &p in &points[1..] {
        let dx = p.0 as f64 - base.0 as f64;
        let dy = p.1 as f64 - base.1 as f64;
        let cand_hi = (dy + epsf) / dx;
        let cand_lo = (dy - epsf) / dx;
        if cand_lo > slope_hi || cand_hi < slope_lo {
            knots.push(last);
            base = last;
            let dx = p.0 as f64 - base.0 as f64;
            let dy = p.1 as f64 - base.1 as f64;
            slope_hi = (dy + epsf) / dx;
            slope_lo = (dy - epsf) / dx;
        } else {
            slope_lo = slope_lo.max(cand_lo);
            slope_hi = slope_hi.min(cand_hi);
        }
        last = p;
    }
    if knots.last() != Some(&last) {
        knots.push(last);
    }
    repair_spline(points, knots, epsf)
}

/// Splits any inter-knot span whose interpolation error exceeds eps at
/// a table point. Normally a no-op; terminates because every split
/// strictly shrinks a span.
fn repair_spline(points: &[(u64, usize)], mut knots: Vec<(u64, usize)>, epsf: f64) -> Vec<(u64, usize)> {
    loop {
        let mut violation = None;
        let mut ki = 0;
        for &(k, r) in points {
            while knots[ki + 1].0 < k {
                ki += 1;
            }
            let (a, b) = (knots[ki], knots[ki + 1]);
            let t = (k as f64 - a.0 as f64) / (b.0 as f64 - a.0 as f64);
            let pred = a.1 as f64 + t * (b.1 as f64 - a.1 as f64);
            if (pred - r as f64).abs() > epsf {
                violation = Some((ki + 1, (k, r)));
                break;
            }
        }
        match violation {
            Some((at, knot)) => knots.insert(at, knot),
            None => return knots,
        }
    }
}

fn shift_for(diff: u64, radix_bits: u32) -> u32 {
    let significant = 64 - diff.leading_zeros();
    significant.saturating_sub(radix_bits)
}

/// Builds the spline and the radix prefix table. Prefixes are taken
/// from the top `radix_bits` of `key - min_key`, so narrow key bands
/// still spread over the prefix space.
pub fn build_rs(table: &SortedTable, eps: usize, radix_bits: u32) -> Result<RsModel> {
    if eps == 0 {
        return Err(Error::Config("radix spline eps must be >= 1".into()));
    }
    if !(1..=28).contains(&radix_bits) {
        return Err(Error::Config(format!(
            "radix_bits must be in 1..=28, got {radix_bits}"
        )));
    }
    let n = table.len();
    if n == 0 {
        return Err(Error::Train("cannot train a radix spline on an empty table".into()));
    }
    let points: Vec<(u64, usize)> = table.keys().iter().copied().zip(0..).collect();
    let spline = greedy_spline(&points, eps);

    let min_key = table.min_key().unwrap();
    let max_key = table.max_key().unwrap();
    let shift = shift_for(max_key - min_key, radix_bits);
    let buckets = 1usize << radix_bits;
    // Entry p = first spline index with prefix >= p.
    let mut radix_table = vec![0u32; buckets + 1];
    let mut idx = 0usize;
    for (p, slot) in radix_table.iter_mut().enumerate() {
        while idx < spline.len() && (((spline[idx].0 - min_key) >> shift) as usize) < p {
            idx += 1;
        }
        *slot = idx as u32;
    }

    Ok(RsModel { radix_bits, shift, min_key, max_key, radix_table, spline, eps, n })
}

impl RsModel {
    pub fn eps(&self) -> usize {
        self.eps
    }

    pub fn radix_bits(&self) -> u32 {
        self.radix_bits
    }

    pub fn table_len(&self) -> usize {
        self.n
    }

    pub fn spline_points(&self) -> &[(u64, usize)] {
        &self.spline
    }

    /// Radix lookup narrows the spline range, binary search finds the
    /// bracketing points, linear interpolation gives the prediction.
    pub fn predict_interval(&self, query: u64) -> PredictedInterval {
        let q = query.clamp(self.min_key, self.max_key);
        let prefix = ((q - self.min_key) >> self.shift) as usize;
        let begin = self.radix_table[prefix] as usize;
        let end = (self.radix_table[prefix + 1] as usize).min(self.spline.len() - 1);
        // First spline point with key >= q inside [begin, end].
        let window = &self.spline[begin..=end];
        let upper = begin + window.partition_point(|&(k, _)| k < q);
        let pred = if upper == 0 {
            0.0
        } else {
            let (k1, r1) = self.spline[upper - 1];
            if k1 == q {
                r1 as f64
            } else {
                let (k2, r2) = self.spline[upper.min(self.spline.len() - 1)];
                if k2 == k1 {
                    r1 as f64
                } else {
                    let t = (q as f64 - k1 as f64) / (k2 as f64 - k1 as f64);
                    r1 as f64 + t * (r2 as f64 - r1 as f64)
                }
            }
        };
        PredictedInterval::around(round_rank(pred), self.eps, self.eps, self.n)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        radix_bits: u32,
        shift: u32,
        min_key: u64,
        max_key: u64,
        radix_table: Vec<u32>,
        spline: Vec<(u64, usize)>,
        eps: usize,
        n: usize,
    ) -> Self {
        RsModel { radix_bits, shift, min_key, max_key, radix_table, spline, eps, n }
    }

    pub(crate) fn parts(
        &self,
    ) -> (u32, u32, u64, u64, &[u32], &[(u64, usize)], usize, usize) {
        (
            self.radix_bits,
            self.shift,
            self.min_key,
            self.max_key,
            &self.radix_table,
            &self.spline,
            self.eps,
            self.n,
        )
    }
}
