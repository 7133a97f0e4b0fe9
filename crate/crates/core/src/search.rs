//! Final-stage search routines over a plain sorted array.
//!
//! Every routine honors the same contract: return the smallest rank `r`
//! in `[range.lo, range.hi)` with `keys[r] >= query`, or `range.hi` when
//! no such key exists. Prefetch flags issue non-binding cache hints and
//! never change the returned rank.

use crate::table::{Rank, SearchRange, SortedTable};

/// Non-binding read prefetch hint. Compiles to a no-op on targets
/// without a hint primitive. Out-of-bounds hints are dropped.
#[inline(always)]
pub(crate) fn prefetch_hint(keys: &[u64], idx: usize) {
    #[cfg(target_arch = "x86_64")]
    {
        if idx < keys.len() {
            unsafe {
                use core::arch::x86_64::{_mm_prefetch, _MM_HINT_NTA};
                _mm_prefetch(keys.as_ptr().add(idx) as *const i8, _MM_HINT_NTA);
            }
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        let _ = (keys, idx);
    }
}

#[inline(always)]
fn check_range(range: SearchRange, n: usize) {
    assert!(
        range.lo <= range.hi && range.hi <= n,
        "invalid search range [{}, {}) for table of {} keys",
        range.lo,
        range.hi,
        n
    );
}

/// Textbook three-way branchy binary search with equality early exit.
/// The exit equals the lower bound because keys are distinct. Hints
/// target the two possible next midpoints.
pub fn standard_binary_search(
    table: &SortedTable,
    query: u64,
    range: SearchRange,
    prefetch: bool,
) -> Rank {
    let keys = table.keys();
    check_range(range, keys.len());
    let mut left = range.lo;
    let mut right = range.hi;
    while left < right {
        let m = left + (right - left) / 2;
        if prefetch {
            prefetch_hint(keys, left + (m - left) / 2);
            prefetch_hint(keys, m + (right - m) / 2);
        }
        if query < keys[m] {
            right = m;
        } else if query > keys[m] {
            left = m + 1;
        } else {
            return m;
        }
    }
    right
}

/// Fixed-trip-count binary search: the range halves every iteration and
/// there is no in-loop exit. Base advance is a conditional selection so
/// the compiler can emit predicated code.
pub fn uniform_binary_search(
    table: &SortedTable,
    query: u64,
    range: SearchRange,
    prefetch: bool,
) -> Rank {
    let keys = table.keys();
    check_range(range, keys.len());
    if range.is_empty() {
        return range.hi;
    }
    let mut base = range.lo;
    let mut n = range.len();
    while n > 1 {
        let half = n / 2;
        if prefetch {
            prefetch_hint(keys, base + half / 2);
            prefetch_hint(keys, base + half + half / 2);
        }
        base = if keys[base + half] < query { base + half } else { base };
        n -= half;
    }
    base + (keys[base] < query) as usize
}

/// Half-count iteration with explicit if-then-else advance, mirroring
/// the standard-library lower-bound template. No prefetch variant.
pub fn branchy_lower_bound(table: &SortedTable, query: u64, range: SearchRange) -> Rank {
    let keys = table.keys();
    check_range(range, keys.len());
    let mut first = range.lo;
    let mut count = range.len();
    while count > 0 {
        let step = count / 2;
        let it = first + step;
        if keys[it] < query {
            first = it + 1;
            count -= step + 1;
        } else {
            count = step;
        }
    }
    first
}

/// k-ary search: each round partitions `[left, right)` into k segments
/// via k-1 separator probes, breaking early on `query <= separator`.
pub fn standard_kary_search(
    table: &SortedTable,
    query: u64,
    range: SearchRange,
    k: usize,
    prefetch: bool,
) -> Rank {
    let keys = table.keys();
    check_range(range, keys.len());
    assert!(k >= 2, "k-ary search requires k >= 2, got {k}");
    let mut left = range.lo;
    let mut right = range.hi;
    while left < right {
        let d = right - left;
        let mut seg_left = left;
        let mut seg_right = left + d / k;
        for i in 2..=k {
            if query <= keys[seg_right] {
                break;
            }
            seg_left = seg_right + 1;
            seg_right = left + (i * d) / k;
        }
        if prefetch && seg_right > seg_left {
            let nd = seg_right - seg_left;
            prefetch_hint(keys, seg_left + nd / k);
            prefetch_hint(keys, seg_left + (2 * nd) / k);
        }
        left = seg_left;
        right = seg_right;
    }
    left
}

/// k-ary search with segment selection via conditional-select
/// expressions and no early break.
pub fn uniform_kary_search(
    table: &SortedTable,
    query: u64,
    range: SearchRange,
    k: usize,
    prefetch: bool,
) -> Rank {
    let keys = table.keys();
    check_range(range, keys.len());
    assert!(k >= 2, "k-ary search requires k >= 2, got {k}");
    let mut left = range.lo;
    let mut right = range.hi;
    while left < right {
        let d = right - left;
        let mut seg_left = left;
        let mut seg_right = left + d / k;
        for i in 2..=k {
            let next = left + (i * d) / k;
            let advance = query > keys[seg_right];
            seg_left = if advance { seg_right + 1 } else { seg_left };
            seg_right = if advance { next } else { seg_right };
        }
        if prefetch && seg_right > seg_left {
            let nd = seg_right - seg_left;
            prefetch_hint(keys, seg_left + nd / k);
            prefetch_hint(keys, seg_left + (2 * nd) / k);
        }
        left = seg_left;
        right = seg_right;
    }
    left
}

/// Ground-truth lower bound by linear scan. Test and verification
/// reference only; never used on a hot path.
pub fn oracle_lower_bound(table: &SortedTable, query: u64, range: SearchRange) -> Rank {
    let keys = table.keys();
    check_range(range, keys.len());
    for r in range.lo..range.hi {
        if keys[r] >= query {
            return r;
        }
    }
    range.hi
}

/// Predecessor rank: largest rank with `keys[r] <= query`, if any.
pub fn predecessor(table: &SortedTable, query: u64) -> Option<Rank> {
    let r = branchy_lower_bound(table, query, table.full_range());
    if r < table.len() && table.keys()[r] == query {
        Some(r)
    } else if r > 0 {
        Some(r - 1)
    } else {
        None
    }
}
