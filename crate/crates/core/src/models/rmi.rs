//! Two-stage recursive model index: a linear root routes each key to
//! one of B linear leaves, each carrying measured error bounds.

use crate::error::{Error, Result};
use crate::table::SortedTable;

use super::linear::{least_squares, LinearFn};
use super::{round_rank, PredictedInterval};

#[derive(Debug, Clone, PartialEq)]
pub struct RmiModel {
    root: LinearFn,
    leaves: Vec<LinearFn>,
    err_lo: Vec<usize>,
    err_hi: Vec<usize>,
    branching: usize,
    n: usize,
}

/// Builds the two-stage model: the root is a least-squares line over the
/// full CDF, scaled to pick a leaf; each leaf is a least-squares line
/// over its assigned keys. Empty leaves inherit the previous leaf's
/// line. Error bounds are the observed per-leaf under/over-predictions.
pub fn build_rmi(table: &SortedTable, branching: usize) -> Result<RmiModel> {
    if branching == 0 {
        return Err(Error::Config("RMI branching factor must be >= 1".into()));
    }
    let n = table.len();
    if n == 0 {
        return Err(Error::Train("cannot train an RMI on an empty table".into()));
    }
    let points: Vec<(u64, usize)> = table.keys().iter().copied().zip(0..).collect();
    let root = least_squares(&points);

    let mut assigned: Vec<Vec<(u64, usize)>> = vec![Vec::new(); branching];
    for &(k, r) in &points {
        assigned[route(&root, k, branching, n)].push((k, r));
    }

    let mut leaves = Vec::with_capacity(branching);
    let mut err_lo = vec![0usize; branching];
    let mut err_hi = vec![0usize; branching];
    let mut last = LinearFn::constant(0.0);
    for (leaf, keys) in assigned.iter().enumerate() {
        let line = if keys.is_empty() { last } else { least_squares(keys) };
        for &(k, r) in keys {
            let pred = round_rank(line.eval(k));
            let diff = pred - r as i64;
            if diff > 0 {
                err_lo[leaf] = err_lo[leaf].max(diff as usize);
            } else {
                err_hi[leaf] = err_hi[leaf].max((-diff) as usize);
            }
        }
        last = line;
        leaves.push(line);
    }

    Ok(RmiModel { root, leaves, err_lo, err_hi, branching, n })
}

#[inline]
fn route(root: &LinearFn, key: u64, branching: usize, n: usize) -> usize {
    let scaled = root.eval(key) * branching as f64 / n as f64;
    (scaled.floor() as i64).clamp(0, branching as i64 - 1) as usize
}

impl RmiModel {
    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn table_len(&self) -> usize {
        self.n
    }

    pub fn leaf_error_bounds(&self) -> (&[usize], &[usize]) {
        (&self.err_lo, &self.err_hi)
    }

    /// Largest leaf error bound in either direction.
    pub fn max_leaf_error(&self) -> usize {
        self.err_lo
            .iter()
            .chain(self.err_hi.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn leaf_of(&self, query: u64) -> usize {
        route(&self.root, query, self.branching, self.n)
    }

    pub fn predict_interval(&self, query: u64) -> PredictedInterval {
        let leaf = self.leaf_of(query);
        let pred = round_rank(self.leaves[leaf].eval(query));
        PredictedInterval::around(pred, self.err_lo[leaf], self.err_hi[leaf], self.n)
    }

    pub(crate) fn into_parts(self) -> (LinearFn, Vec<LinearFn>, Vec<usize>, Vec<usize>, usize, usize) {
        (self.root, self.leaves, self.err_lo, self.err_hi, self.branching, self.n)
    }

    pub(crate) fn from_parts(
        root: LinearFn,
        leaves: Vec<LinearFn>,
        err_lo: Vec<usize>,
        err_hi: Vec<usize>,
        branching: usize,
        n: usize,
    ) -> Self {
        RmiModel { root, leaves, err_lo, err_hi, branching, n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::oracle_lower_bound;

    fn fig2() -> SortedTable {
        SortedTable::new(vec![47, 105, 140, 289, 316, 358, 386, 398, 819, 939]).unwrap()
    }

    fn check_containment(table: &SortedTable, m: &RmiModel) {
        for &k in table.keys() {
            let iv = m.predict_interval(k);
            let rank = oracle_lower_bound(table, k, table.full_range());
            assert!(
                iv.lo <= rank && rank < iv.hi,
                "key {k}: rank {rank} outside [{}, {})",
                iv.lo,
                iv.hi
            );
        }
    }

    #[test]
    fn single_leaf_degenerates_to_global_fit() {
        let t = fig2();
        let m = build_rmi(&t, 1).unwrap();
        check_containment(&t, &m);
    }

    #[test]
    fn fig2_containment_across_branchings() {
        let t = fig2();
        for b in [1, 2, 4] {
            check_containment(&t, &build_rmi(&t, b).unwrap());
        }
    }

    #[test]
    fn exactly_linear_data_has_zero_errors() {
        let t = SortedTable::new((0..1024).collect()).unwrap();
        let m = build_rmi(&t, 16).unwrap();
        assert_eq!(m.max_leaf_error(), 0);
        check_containment(&t, &m);
    }

    #[test]
    fn zero_branching_is_config_error() {
        assert!(build_rmi(&fig2(), 0).is_err());
    }
}
