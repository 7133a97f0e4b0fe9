//! Dataset and query-workload generation, CDF-preserving resampling,
//! and binary key-file I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::table::SortedTable;

/// Default generation refusal threshold, in elements (2 GiB of keys).
pub const DEFAULT_MAX_ELEMENTS: usize = 1 << 28;

/// The paper's cache-level table sizes for the Intel I7 hierarchy;
/// overridable from suite configs since they encode one machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LevelConfig {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
    pub l4: usize,
}

impl Default for LevelConfig {
    fn default() -> Self {
        LevelConfig { l1: 3_700, l2: 31_500, l3: 750_000, l4: 200_000_000 }
    }
}

impl LevelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l1 < self.l2 && self.l2 < self.l3 && self.l3 < self.l4 {
            Ok(())
        } else {
            Err(Error::Config("level sizes must be strictly increasing".into()))
        }
    }
}

/// A query workload with its composition metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBatch {
    pub queries: Vec<u64>,
    pub present: usize,
    pub absent: usize,
    pub seed: u64,
}

/// The n odd integers {1, 3, ..., 2n-1}. Deterministic; the seed is
/// reserved for future randomized variants.
pub fn gen_synthetic(n: usize, _seed: u64) -> Result<SortedTable> {
    gen_synthetic_bounded(n, _seed, DEFAULT_MAX_ELEMENTS)
}

pub fn gen_synthetic_bounded(n: usize, _seed: u64, max_elements: usize) -> Result<SortedTable> {
    if n == 0 {
        return Err(Error::Usage("synthetic table size must be >= 1".into()));
    }
    if n > max_elements {
        return Err(Error::Usage(format!(
            "requested {n} elements exceeds the configured budget of {max_elements}"
        )));
    }
    let keys = (0..n as u64).map(|i| 2 * i + 1).collect();
    Ok(SortedTable::from_sorted_unchecked(keys))
}

/// Half present odd keys sampled from the table with replacement, half
/// even keys from [0, 2n+2) (absent by parity), shuffled by seed.
pub fn gen_synthetic_queries(table: &SortedTable, total: usize, seed: u64) -> Result<QueryBatch> {
    if total % 2 != 0 {
        return Err(Error::Usage(format!("query total must be even, got {total}")));
    }
    let n = table.len() as u64;
    if n == 0 {
        return Err(Error::Usage("cannot generate queries for an empty table".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = total / 2;
    let mut queries = Vec::with_capacity(total);
    for _ in 0..half {
        let r = rng.gen_range(0..n) as usize;
        queries.push(table.keys()[r]);
    }
    for _ in 0..half {
        // Even values in [0, 2n+2): exactly {0, 2, ..., 2n}.
        queries.push(2 * rng.gen_range(0..=n));
    }
    queries.shuffle(&mut rng);
    Ok(QueryBatch { queries, present: half, absent: half, seed })
}

/// Keys at source ranks floor(i * (N-1) / (n-1)); injective for n <= N,
/// preserves endpoints and the shape of the source CDF.
pub fn resample_cdf(source: &SortedTable, n: usize) -> Result<SortedTable> {
    let big_n = source.len();
    if n < 2 || n > big_n {
        return Err(Error::Usage(format!(
            "resample target {n} must be in [2, {big_n}]"
        )));
    }
    let keys = (0..n)
        .map(|i| source.keys()[i * (big_n - 1) / (n - 1)])
        .collect();
    Ok(SortedTable::from_sorted_unchecked(keys))
}

const ABSENT_REJECTION_LIMIT: usize = 1000;

/// Half members sampled with replacement, half non-members sampled from
/// [min_key, max_key] with member rejection, shuffled by seed.
pub fn gen_mixed_queries(table: &SortedTable, count: usize, seed: u64) -> Result<QueryBatch> {
    if count % 2 != 0 {
        return Err(Error::Usage(format!("query count must be even, got {count}")));
    }
    if table.is_empty() {
        return Err(Error::Usage("cannot generate queries for an empty table".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = count / 2;
    let n = table.len();
    let (min, max) = (table.min_key().unwrap(), table.max_key().unwrap());
    let mut queries = Vec::with_capacity(count);
    for _ in 0..half {
        queries.push(table.keys()[rng.gen_range(0..n)]);
    }
    for _ in 0..half {
        let mut found = None;
        for _ in 0..ABSENT_REJECTION_LIMIT {
            let q = rng.gen_range(min..=max);
            if !table.contains(q) {
                found = Some(q);
                break;
            }
        }
        match found {
            Some(q) => queries.push(q),
            None => {
                return Err(Error::Data(format!(
                    "could not find an absent key in [{min}, {max}] after {ABSENT_REJECTION_LIMIT} attempts"
                )))
            }
        }
    }
    queries.shuffle(&mut rng);
    Ok(QueryBatch { queries, present: half, absent: half, seed })
}

fn write_keys(path: &Path, keys: &[u64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(keys.len() as u64).to_le_bytes())?;
    for &k in keys {
        w.write_all(&k.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_keys(path: &Path) -> Result<Vec<u64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut count_buf = [0u8; 8];
    r.read_exact(&mut count_buf)
        .map_err(|_| Error::Format(format!("{}: missing key count", path.display())))?;
    let count = u64::from_le_bytes(count_buf) as usize;
    let mut keys = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for i in 0..count {
        r.read_exact(&mut buf).map_err(|_| {
            Error::Format(format!(
                "{}: truncated after {i} of {count} keys",
                path.display()
            ))
        })?;
        keys.push(u64::from_le_bytes(buf));
    }
    Ok(keys)
}

/// Writes the binary key-file format: u64 LE count, then count u64 LE keys.
pub fn write_table(path: &Path, table: &SortedTable) -> Result<()> {
    write_keys(path, table.keys())
}

/// Reads a key file, validating ascending order and distinctness.
pub fn read_table(path: &Path) -> Result<SortedTable> {
    SortedTable::new(read_keys(path)?)
}

/// Query files share the key-file encoding but are unsorted; callers
/// flag them with a distinct extension (`.qry` by convention).
pub fn write_queries(path: &Path, batch: &QueryBatch) -> Result<()> {
    write_keys(path, &batch.queries)
}

pub fn read_queries(path: &Path) -> Result<Vec<u64>> {
    read_keys(path)
}
