//! The search substrate: a sorted table of distinct u64 keys, plus the
//! rank and range conventions shared by every search routine.

use crate::error::{Error, Result};

/// 0-based position in a sorted table. `n` encodes "no key >= query".
pub type Rank = usize;

/// Ascending, distinct unsigned 64-bit keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedTable {
    keys: Vec<u64>,
}

impl SortedTable {
    /// Builds a table from keys, rejecting unsorted input and duplicates.
    pub fn new(keys: Vec<u64>) -> Result<Self> {
        for w in keys.windows(2) {
            if w[1] == w[0] {
                return Err(Error::Data(format!("duplicate key {}", w[0])));
            }
            if w[1] < w[0] {
                return Err(Error::Data(format!(
                    "keys not ascending: {} before {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(SortedTable { keys })
    }

    /// Builds a table from keys already known to be strictly ascending.
    pub(crate) fn from_sorted_unchecked(keys: Vec<u64>) -> Self {
        debug_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        SortedTable { keys }
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Full-table search range `[0, n)`.
    pub fn full_range(&self) -> SearchRange {
        SearchRange {
            lo: 0,
            hi: self.keys.len(),
        }
    }

    pub fn contains(&self, key: u64) -> bool {
        self.keys.binary_search(&key).is_ok()
    }

    pub fn min_key(&self) -> Option<u64> {
        self.keys.first().copied()
    }

    pub fn max_key(&self) -> Option<u64> {
        self.keys.last().copied()
    }
}

/// Half-open rank range `[lo, hi)` a search is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchRange {
    pub lo: Rank,
    pub hi: Rank,
}

impl SearchRange {
    /// Validated constructor: requires `lo <= hi <= n`.
    pub fn new(lo: Rank, hi: Rank, n: usize) -> Result<Self> {
        if lo > hi || hi > n {
            return Err(Error::Usage(format!(
                "invalid search range [{lo}, {hi}) for table of {n} keys"
            )));
        }
        Ok(SearchRange { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }
}
