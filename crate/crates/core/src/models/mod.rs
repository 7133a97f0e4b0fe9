//! CDF-approximating models that map a query key to a predicted rank
//! interval, plus the lookup path that finalizes a search with one of
//! the sorted-array routines.

mod linear;
mod pgm;
mod rmi;
mod serialize;
mod spline;

pub use linear::{fit_linear_cdf, LinearCdfModel};
pub use pgm::{build_pgm, PgmModel, Segment};
pub use rmi::{build_rmi, RmiModel};
pub use serialize::{read_model, write_model};
pub use spline::{build_rs, RsModel};

use crate::error::{Error, Result};
use crate::table::{Rank, SearchRange, SortedTable};

/// A `[lo, hi)` rank range a model claims contains the query's
/// lower-bound rank. Clamped to `[0, n]` at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictedInterval {
    pub lo: Rank,
    pub hi: Rank,
}

impl PredictedInterval {
    /// Builds `[pred - below, pred + above + 1)` clamped to `[0, n]`.
    pub(crate) fn around(pred: i64, below: usize, above: usize, n: usize) -> Self {
        let lo = pred.saturating_sub(below as i64).clamp(0, n as i64) as usize;
        let hi = pred
            .saturating_add(above as i64)
            .saturating_add(1)
            .clamp(0, n as i64) as usize;
        PredictedInterval { lo, hi: hi.max(lo) }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }
}

/// Round half up to an integer rank; predictions are computed in double
/// precision and rounded before clamping.
#[inline]
pub(crate) fn round_rank(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// A trained CDF approximator of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearCdfModel),
    Rmi(RmiModel),
    Pgm(PgmModel),
    Rs(RsModel),
}

impl Model {
    pub fn predict_interval(&self, query: u64) -> PredictedInterval {
        match self {
            Model::Linear(m) => m.predict_interval(query),
            Model::Rmi(m) => m.predict_interval(query),
            Model::Pgm(m) => m.predict_interval(query),
            Model::Rs(m) => m.predict_interval(query),
        }
    }

    /// Size of the table the model was trained on.
    pub fn table_len(&self) -> usize {
        match self {
            Model::Linear(m) => m.table_len(),
            Model::Rmi(m) => m.table_len(),
            Model::Pgm(m) => m.table_len(),
            Model::Rs(m) => m.table_len(),
        }
    }

    pub fn class_name(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Rmi(_) => "rmi",
            Model::Pgm(_) => "pgm",
            Model::Rs(_) => "rs",
        }
    }

    /// Short parameter summary for CSV/report output.
    pub fn params_string(&self) -> String {
        match self {
            Model::Linear(m) => format!("eps={}", m.eps()),
            Model::Rmi(m) => format!("branching={}", m.branching()),
            Model::Pgm(m) => format!("eps={}", m.eps()),
            Model::Rs(m) => format!("eps={};radix_bits={}", m.eps(), m.radix_bits()),
        }
    }
}

/// Identifier for a final-stage search routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoutineId {
    StandardBinary,
    UniformBinary,
    LowerBound,
    StandardKary,
    UniformKary,
    Eytzinger,
}

impl RoutineId {
    pub const ALL: [RoutineId; 6] = [
        RoutineId::StandardBinary,
        RoutineId::UniformBinary,
        RoutineId::LowerBound,
        RoutineId::StandardKary,
        RoutineId::UniformKary,
        RoutineId::Eytzinger,
    ];

    /// Routines permitted as the final stage of a learned lookup.
    pub const LEARNED: [RoutineId; 5] = [
        RoutineId::StandardBinary,
        RoutineId::UniformBinary,
        RoutineId::LowerBound,
        RoutineId::StandardKary,
        RoutineId::UniformKary,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RoutineId::StandardBinary => "s-bs",
            RoutineId::UniformBinary => "u-bs",
            RoutineId::LowerBound => "lower-bound",
            RoutineId::StandardKary => "s-ks",
            RoutineId::UniformKary => "u-ks",
            RoutineId::Eytzinger => "u-el",
        }
    }

    pub fn parse(s: &str) -> Result<RoutineId> {
        match s {
            "s-bs" => Ok(RoutineId::StandardBinary),
            "u-bs" => Ok(RoutineId::UniformBinary),
            "lower-bound" | "lb" => Ok(RoutineId::LowerBound),
            "s-ks" => Ok(RoutineId::StandardKary),
            "u-ks" => Ok(RoutineId::UniformKary),
            "u-el" => Ok(RoutineId::Eytzinger),
            other => Err(Error::Usage(format!(
                "unknown routine '{other}' (expected s-bs, u-bs, lower-bound, s-ks, u-ks or u-el)"
            ))),
        }
    }

    /// Dispatches a sorted-array search. `Eytzinger` is not a
    /// sorted-layout routine and is rejected here.
    pub fn search(
        &self,
        table: &SortedTable,
        query: u64,
        range: SearchRange,
        k: usize,
        prefetch: bool,
    ) -> Result<Rank> {
        use crate::search::*;
        match self {
            RoutineId::StandardBinary => Ok(standard_binary_search(table, query, range, prefetch)),
            RoutineId::UniformBinary => Ok(uniform_binary_search(table, query, range, prefetch)),
            RoutineId::LowerBound => Ok(branchy_lower_bound(table, query, range)),
            RoutineId::StandardKary => Ok(standard_kary_search(table, query, range, k, prefetch)),
            RoutineId::UniformKary => Ok(uniform_kary_search(table, query, range, k, prefetch)),
            RoutineId::Eytzinger => Err(Error::Usage(
                "the Eytzinger routine requires its own layout and cannot search a model interval"
                    .into(),
            )),
        }
    }
}

/// Model-predicted interval search followed by edge correction: a model
/// guarantees containment only for member keys, so lower bounds of
/// absent keys can fall just outside the interval. A routine saturating
/// at `hi` means every ranked key in the interval is below the query;
/// saturating at `lo` with a qualifying left neighbor means the rank
/// lies further left. One follow-up search restores the exact rank.
pub fn learned_lookup(
    model: &Model,
    table: &SortedTable,
    query: u64,
    routine: RoutineId,
    k: usize,
    prefetch: bool,
) -> Result<Rank> {
    if routine == RoutineId::Eytzinger {
        return Err(Error::Usage(
            "Eytzinger layout search cannot be used as a learned final stage".into(),
        ));
    }
    let n = table.len();
    if model.table_len() != n {
        return Err(Error::Usage(format!(
            "model was trained on {} keys but the table has {}",
            model.table_len(),
            n
        )));
    }
    let iv = model.predict_interval(query);
    let range = SearchRange { lo: iv.lo, hi: iv.hi };
    let r = routine.search(table, query, range, k, prefetch)?;
    if r == iv.hi && iv.hi < n {
        return routine.search(table, query, SearchRange { lo: iv.hi, hi: n }, k, prefetch);
    }
    if r == iv.lo && iv.lo > 0 && table.keys()[iv.lo - 1] >= query {
        return routine.search(table, query, SearchRange { lo: 0, hi: iv.lo }, k, prefetch);
    }
    Ok(r)
}

/// Mean over queries of `1 - interval_length / n`.
pub fn reduction_factor(model: &Model, table: &SortedTable, queries: &[u64]) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::Usage("reduction factor over an empty query set".into()));
    }
    let n = table.len() as f64;
    let sum: f64 = queries
        .iter()
        .map(|&q| 1.0 - model.predict_interval(q).len() as f64 / n)
        .sum();
    Ok(sum / queries.len() as f64)
}

/// Arithmetic mean and population standard deviation of predicted
/// interval lengths over a query batch.
pub fn interval_stats(model: &Model, queries: &[u64]) -> Result<(f64, f64)> {
    if queries.is_empty() {
        return Err(Error::Usage("interval stats over an empty query batch".into()));
    }
    let lens: Vec<f64> = queries
        .iter()
        .map(|&q| model.predict_interval(q).len() as f64)
        .collect();
    let mean = lens.iter().sum::<f64>() / lens.len() as f64;
    let var = lens.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / lens.len() as f64;
    Ok((mean, var.sqrt()))
}
