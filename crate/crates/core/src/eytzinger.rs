//! Breadth-first (Eytzinger) layout of a balanced BST over a sorted
//! table, its branch-free search, and the mapping from layout positions
//! back to sorted ranks.

use crate::error::{Error, Result};
use crate::search::prefetch_hint;
use crate::table::{Rank, SortedTable};

/// Default prefetch hint reach: descend 4 levels ahead, covering one
/// 64-byte line of 8-byte keys.
pub const DEFAULT_PREFETCH_MULTIPLIER: usize = 16;
pub const DEFAULT_PREFETCH_OFFSET: usize = 16;

/// BFS-of-balanced-BST permutation of a sorted table plus the
/// layout-index -> sorted-rank permutation.
#[derive(Debug, Clone)]
pub struct EytzingerTable {
    elayout: Vec<u64>,
    rank_of: Vec<Rank>,
    prefetch_multiplier: usize,
    prefetch_offset: usize,
}

impl EytzingerTable {
    /// In-order fill of the implicit heap indices; handles any size
    /// without padding sentinels.
    pub fn build(table: &SortedTable) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Data("cannot build Eytzinger layout of an empty table".into()));
        }
        let n = table.len();
        let mut elayout = vec![0u64; n];
        let mut rank_of = vec![0usize; n];
        // Iterative in-order traversal of heap indices 0..n.
        let mut stack = Vec::with_capacity(64);
        let mut i = 0usize;
        let mut rank = 0usize;
        let keys = table.keys();
        loop {
            while i < n {
                stack.push(i);
                i = 2 * i + 1;
            }
            match stack.pop() {
                Some(node) => {
                    elayout[node] = keys[rank];
                    rank_of[node] = rank;
                    rank += 1;
                    i = 2 * node + 2;
                }
                None => break,
            }
        }
        debug_assert_eq!(rank, n);
        Ok(EytzingerTable {
            elayout,
            rank_of,
            prefetch_multiplier: DEFAULT_PREFETCH_MULTIPLIER,
            prefetch_offset: DEFAULT_PREFETCH_OFFSET,
        })
    }

    pub fn with_prefetch_params(mut self, multiplier: usize, offset: usize) -> Self {
        self.prefetch_multiplier = multiplier;
        self.prefetch_offset = offset;
        self
    }

    pub fn len(&self) -> usize {
        self.elayout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elayout.is_empty()
    }

    pub fn layout(&self) -> &[u64] {
        &self.elayout
    }

    /// Branch-free descent: layout index of the smallest key >= query,
    /// or `n` when every key is below the query.
    pub fn search(&self, query: u64, prefetch: bool) -> usize {
        let a = &self.elayout;
        let n = a.len();
        let mut i = 0usize;
        while i < n {
            if prefetch {
                prefetch_hint(a, self.prefetch_multiplier * i + self.prefetch_offset);
            }
            i = if query <= a[i] { 2 * i + 1 } else { 2 * i + 2 };
        }
        // Undo the final descent: strip trailing ones of i+1, step up once.
        let t = i + 1;
        let j = t >> (t.trailing_ones() + 1);
        if j == 0 {
            n
        } else {
            j - 1
        }
    }

    /// Maps a layout index back to its sorted rank; `n` passes through.
    pub fn layout_index_to_rank(&self, idx: usize) -> Result<Rank> {
        let n = self.elayout.len();
        if idx > n {
            return Err(Error::Usage(format!(
                "layout index {idx} out of bounds for table of {n} keys"
            )));
        }
        if idx == n {
            Ok(n)
        } else {
            Ok(self.rank_of[idx])
        }
    }

    /// Lower-bound rank via Eytzinger search plus rank mapping.
    pub fn lower_bound_rank(&self, query: u64, prefetch: bool) -> Rank {
        let idx = self.search(query, prefetch);
        if idx == self.elayout.len() {
            idx
        } else {
            self.rank_of[idx]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(keys: &[u64]) -> SortedTable {
        SortedTable::new(keys.to_vec()).unwrap()
    }

    #[test]
    fn layout_of_15() {
        let t = table(&(1..=15).collect::<Vec<_>>());
        let e = EytzingerTable::build(&t).unwrap();
        assert_eq!(
            e.layout(),
            &[8, 4, 12, 2, 6, 10, 14, 1, 3, 5, 7, 9, 11, 13, 15]
        );
    }

    #[test]
    fn layout_small() {
        let one = table(&[5]);
        assert_eq!(EytzingerTable::build(&one).unwrap().layout(), &[5]);
        let three = table(&[1, 2, 3]);
        assert_eq!(EytzingerTable::build(&three).unwrap().layout(), &[2, 1, 3]);
    }

    #[test]
    fn search_on_15() {
        let t = table(&(1..=15).collect::<Vec<_>>());
        let e = EytzingerTable::build(&t).unwrap();
        assert_eq!(e.search(8, false), 0);
        assert_eq!(e.search(16, false), 15);
        // Below minimum: smallest key (1) sits at layout index 7.
        assert_eq!(e.search(0, false), 7);
        assert_eq!(e.layout()[e.search(0, false)], 1);
    }

    #[test]
    fn rank_mapping() {
        let t = table(&(1..=15).collect::<Vec<_>>());
        let e = EytzingerTable::build(&t).unwrap();
        assert_eq!(e.layout_index_to_rank(0).unwrap(), 7);
        assert_eq!(e.layout_index_to_rank(15).unwrap(), 15);
        assert!(e.layout_index_to_rank(16).is_err());
        let one = table(&[5]);
        let e1 = EytzingerTable::build(&one).unwrap();
        assert_eq!(e1.layout_index_to_rank(0).unwrap(), 0);
    }

    #[test]
    fn empty_table_rejected() {
        let t = SortedTable::new(vec![]).unwrap();
        assert!(EytzingerTable::build(&t).is_err());
    }

    #[test]
    fn round_trip_multiset() {
        let t = table(&[2, 3, 5, 7, 11, 13, 17]);
        let e = EytzingerTable::build(&t).unwrap();
        let mut sorted: Vec<(usize, u64)> = e
            .layout()
            .iter()
            .enumerate()
            .map(|(i, &k)| (e.layout_index_to_rank(i).unwrap(), k))
            .collect();
        sorted.sort();
        let keys: Vec<u64> = sorted.into_iter().map(|(_, k)| k).collect();
        assert_eq!(keys, t.keys());
    }

    #[test]
    fn prefetch_transparency() {
        let t = table(&(1..=100).map(|i| i * 3).collect::<Vec<_>>());
        let e = EytzingerTable::build(&t).unwrap();
        for q in 0..320 {
            assert_eq!(e.search(q, true), e.search(q, false));
        }
    }
}
