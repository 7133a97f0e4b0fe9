//! Learned static indexing on sorted integer keys: bounded-error models
//! (linear CDF, two-stage RMI, PGM, RadixSpline) that predict a rank
//! interval, plus the sorted-array search routines used to finish the
//! lookup inside that interval, an Eytzinger-layout alternative, data
//! and query generators, and a batch timing harness.

pub mod bench;
pub mod data;
pub mod error;
pub mod eytzinger;
pub mod models;
pub mod search;
pub mod table;

pub use error::{Error, Result};
pub use eytzinger::EytzingerTable;
pub use models::{learned_lookup, Model, PredictedInterval, RoutineId};
pub use table::{Rank, SearchRange, SortedTable};
