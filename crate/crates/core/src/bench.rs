//! Batch timing protocol, sweep driver, best-configuration selection,
//! and CSV / plot-data emission.
//!
//! Timing is whole-batch only: per-query timers are deliberately not
//! offered. Timed passes run on the calling thread; sweep-level
//! parallelism exists only behind an explicit correctness-only flag.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Deserialize;

use crate::data::{
    gen_mixed_queries, gen_synthetic, gen_synthetic_queries, read_table, resample_cdf, LevelConfig,
};
use crate::error::{Error, Result};
use crate::eytzinger::EytzingerTable;
use crate::models::{
    build_pgm, build_rmi, build_rs, fit_linear_cdf, interval_stats, learned_lookup,
    reduction_factor, Model, RoutineId,
};
use crate::table::SortedTable;

/// One benchmark measurement: mean ns/query over a batch plus the fold
/// checksum and, for learned configurations, interval statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub dataset: String,
    pub n: usize,
    pub routine: String,
    pub model: String,
    pub params: String,
    pub prefetch: bool,
    pub reps: usize,
    pub mean_ns_per_query: f64,
    pub checksum: u64,
    pub reduction_factor: Option<f64>,
    pub interval_mean: Option<f64>,
    pub interval_stddev: Option<f64>,
}

impl BenchResult {
    /// Stable identifier used for deterministic tie-breaking.
    pub fn config_id(&self) -> String {
        format!(
            "{}/{}/{}/{}/{}",
            self.dataset, self.routine, self.model, self.params, self.prefetch
        )
    }
}

/// One configuration to time.
#[derive(Debug, Clone)]
pub struct BatchConfig<'a> {
    pub dataset: String,
    pub routine: RoutineId,
    pub model: Option<&'a Model>,
    pub k: usize,
    pub reps: usize,
    pub prefetch: bool,
}

fn run_pass(
    table: &SortedTable,
    etable: Option<&EytzingerTable>,
    queries: &[u64],
    cfg: &BatchConfig,
) -> Result<u64> {
    let mut checksum = 0u64;
    match (cfg.model, cfg.routine) {
        (None, RoutineId::Eytzinger) => {
            let e = etable.expect("Eytzinger layout prepared before timing");
            for &q in queries {
                checksum ^= e.lower_bound_rank(q, cfg.prefetch) as u64;
            }
        }
        (None, routine) => {
            let full = table.full_range();
            for &q in queries {
                checksum ^= routine.search(table, q, full, cfg.k, cfg.prefetch)? as u64;
            }
        }
        (Some(model), routine) => {
            for &q in queries {
                checksum ^= learned_lookup(model, table, q, routine, cfg.k, cfg.prefetch)? as u64;
            }
        }
    }
    Ok(checksum)
}

/// Median of recorded pass times; invariant under pass ordering.
pub fn median_ns(times: &[u128]) -> f64 {
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    }
}

/// One untimed warmup pass, then `reps` timed passes over the batch.
/// Reports the median pass divided by batch size and folds every rank
/// into the checksum so the work cannot be elided.
pub fn run_batch(table: &SortedTable, queries: &[u64], cfg: &BatchConfig) -> Result<BenchResult> {
    if queries.is_empty() {
        return Err(Error::Usage("cannot benchmark an empty query batch".into()));
    }
    if cfg.reps == 0 {
        return Err(Error::Config("repetition count must be >= 1".into()));
    }
    if cfg.model.is_some() && cfg.routine == RoutineId::Eytzinger {
        return Err(Error::Usage(
            "Eytzinger layout search cannot be used as a learned final stage".into(),
        ));
    }
    let etable = if cfg.routine == RoutineId::Eytzinger {
        Some(EytzingerTable::build(table)?)
    } else {
        None
    };

    let warmup = run_pass(table, etable.as_ref(), queries, cfg)?;
    let mut times = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let start = Instant::now();
        let checksum = run_pass(table, etable.as_ref(), queries, cfg)?;
        times.push(start.elapsed().as_nanos());
        if checksum != warmup {
            return Err(Error::Internal(format!(
                "checksum mismatch across passes ({checksum:#x} vs {warmup:#x}): nondeterministic routine"
            )));
        }
    }

    let (rf, stats) = match cfg.model {
        Some(model) => (
            Some(reduction_factor(model, table, queries)?),
            Some(interval_stats(model, queries)?),
        ),
        None => (None, None),
    };

    Ok(BenchResult {
        dataset: cfg.dataset.clone(),
        n: table.len(),
        routine: cfg.routine.name().to_string(),
        model: cfg.model.map_or("none".to_string(), |m| m.class_name().to_string()),
        params: cfg.model.map_or_else(
            || if uses_k(cfg.routine) { format!("k={}", cfg.k) } else { String::new() },
            |m| {
                if uses_k(cfg.routine) {
                    format!("{};k={}", m.params_string(), cfg.k)
                } else {
                    m.params_string()
                }
            },
        ),
        prefetch: cfg.prefetch,
        reps: cfg.reps,
        mean_ns_per_query: median_ns(&times) / queries.len() as f64,
        checksum: warmup,
        reduction_factor: rf,
        interval_mean: stats.map(|s| s.0),
        interval_stddev: stats.map(|s| s.1),
    })
}

fn uses_k(routine: RoutineId) -> bool {
    matches!(routine, RoutineId::StandardKary | RoutineId::UniformKary)
}

/// Exclusive-or fold of lower-bound ranks over a batch, computed via
/// the standard library's partition point: the reference the harness
/// checksums are compared against. Parallel when the `parallel` feature
/// is enabled (XOR is order-independent).
pub fn reference_checksum(table: &SortedTable, queries: &[u64]) -> u64 {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        queries
            .par_iter()
            .map(|&q| table.keys().partition_point(|&k| k < q) as u64)
            .reduce(|| 0, |a, b| a ^ b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        reference_checksum_seq(table, queries)
    }
}

/// Sequential fallback of [`reference_checksum`]; always available so
/// the two code paths can be compared.
pub fn reference_checksum_seq(table: &SortedTable, queries: &[u64]) -> u64 {
    queries
        .iter()
        .map(|&q| table.keys().partition_point(|&k| k < q) as u64)
        .fold(0, |a, b| a ^ b)
}

fn default_seed() -> u64 {
    42
}
fn default_reps() -> usize {
    3
}
fn default_k() -> usize {
    3
}
fn default_queries() -> usize {
    2_000_000
}
fn default_routines() -> Vec<String> {
    RoutineId::ALL.iter().map(|r| r.name().to_string()).collect()
}
fn default_learned_routines() -> Vec<String> {
    vec!["s-bs".into(), "u-bs".into(), "s-ks".into()]
}
fn default_prefetch() -> Vec<bool> {
    vec![false, true]
}
fn default_rmi_branching() -> Vec<usize> {
    // 2^6 .. 2^18 stepping by x4.
    vec![64, 256, 1024, 4096, 16384, 65536, 262144]
}
fn default_model_eps() -> Vec<usize> {
    vec![4, 16, 64, 256, 1024]
}
fn default_rs_radix_bits() -> Vec<u32> {
    vec![12, 16, 20]
}

/// Parameter grids for the learned sweep.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelGrid {
    #[serde(default)]
    pub include_linear: bool,
    #[serde(default = "default_rmi_branching")]
    pub rmi_branching: Vec<usize>,
    #[serde(default = "default_model_eps")]
    pub pgm_eps: Vec<usize>,
    #[serde(default = "default_model_eps")]
    pub rs_eps: Vec<usize>,
    #[serde(default = "default_rs_radix_bits")]
    pub rs_radix_bits: Vec<u32>,
    #[serde(default = "default_learned_routines")]
    pub routines: Vec<String>,
}

impl Default for ModelGrid {
    fn default() -> Self {
        ModelGrid {
            include_linear: false,
            rmi_branching: default_rmi_branching(),
            pgm_eps: default_model_eps(),
            rs_eps: default_model_eps(),
            rs_radix_bits: default_rs_radix_bits(),
            routines: default_learned_routines(),
        }
    }
}

/// Declarative sweep description, parseable from TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_queries")]
    pub queries_per_batch: usize,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_k")]
    pub kary_k: usize,
    /// Synthetic table sizes as exponents: size = 2^e.
    #[serde(default)]
    pub synthetic_exponents: Vec<u32>,
    /// Key files to benchmark as-is.
    #[serde(default)]
    pub table_files: Vec<PathBuf>,
    /// Resample each table file to the configured cache-level sizes.
    #[serde(default)]
    pub resample_to_levels: bool,
    #[serde(default)]
    pub levels: Option<LevelConfig>,
    #[serde(default = "default_routines")]
    pub routines: Vec<String>,
    #[serde(default = "default_prefetch")]
    pub prefetch: Vec<bool>,
    #[serde(default)]
    pub models: Option<ModelGrid>,
    /// Run configurations in parallel. Timings are then unreliable;
    /// intended for correctness-only runs.
    #[serde(default)]
    pub parallel_correctness: bool,
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SuiteConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("suite config: {e}")))?;
        if cfg.kary_k < 2 || cfg.kary_k > 16 {
            return Err(Error::Config(format!(
                "kary_k must be in 2..=16, got {}",
                cfg.kary_k
            )));
        }
        if let Some(levels) = &cfg.levels {
            levels.validate()?;
        }
        Ok(cfg)
    }

    fn routine_ids(names: &[String]) -> Result<Vec<RoutineId>> {
        names.iter().map(|s| RoutineId::parse(s)).collect()
    }
}

/// A failed configuration, recorded instead of aborting the suite.
#[derive(Debug)]
pub struct SuiteFailure {
    pub config_id: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct SuiteOutcome {
    pub results: Vec<BenchResult>,
    pub failures: Vec<SuiteFailure>,
}

struct Workload {
    name: String,
    table: SortedTable,
    queries: Vec<u64>,
}

fn build_workloads(cfg: &SuiteConfig) -> Result<Vec<Workload>> {
    let mut out = Vec::new();
    for &e in &cfg.synthetic_exponents {
        let n = 1usize << e;
        let table = gen_synthetic(n, cfg.seed)?;
        let queries = gen_synthetic_queries(&table, cfg.queries_per_batch, cfg.seed)?.queries;
        out.push(Workload { name: format!("synthetic-2^{e}"), table, queries });
    }
    for path in &cfg.table_files {
        let source = read_table(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        if cfg.resample_to_levels {
            let levels = cfg.levels.unwrap_or_default();
            for (suffix, n) in [
                ("L1", levels.l1),
                ("L2", levels.l2),
                ("L3", levels.l3),
                ("L4", levels.l4),
            ] {
                if n > source.len() {
                    continue;
                }
                let table = resample_cdf(&source, n)?;
                let queries = gen_mixed_queries(&table, cfg.queries_per_batch, cfg.seed)?.queries;
                out.push(Workload { name: format!("{stem}-{suffix}"), table, queries });
            }
        } else {
            let queries = gen_mixed_queries(&source, cfg.queries_per_batch, cfg.seed)?.queries;
            out.push(Workload { name: stem, table: source, queries });
        }
    }
    Ok(out)
}

fn grid_models(grid: &ModelGrid, table: &SortedTable) -> Vec<(Result<Model>, String)> {
    let mut out = Vec::new();
    if grid.include_linear {
        out.push((fit_linear_cdf(table).map(Model::Linear), "linear".to_string()));
    }
    for &b in &grid.rmi_branching {
        out.push((
            build_rmi(table, b).map(Model::Rmi),
            format!("rmi/branching={b}"),
        ));
    }
    for &eps in &grid.pgm_eps {
        out.push((build_pgm(table, eps).map(Model::Pgm), format!("pgm/eps={eps}")));
    }
    for &eps in &grid.rs_eps {
        for &bits in &grid.rs_radix_bits {
            out.push((
                build_rs(table, eps, bits).map(Model::Rs),
                format!("rs/eps={eps};radix_bits={bits}"),
            ));
        }
    }
    out
}

/// Cartesian sweep over the configured workloads, routines, prefetch
/// modes and model grids. Per-configuration failures are recorded, not
/// fatal. Output ordering is deterministic.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let workloads = build_workloads(cfg)?;
    let standalone = SuiteConfig::routine_ids(&cfg.routines)?;
    let learned = match &cfg.models {
        Some(grid) => {
            let ids = SuiteConfig::routine_ids(&grid.routines)?;
            if ids.contains(&RoutineId::Eytzinger) {
                return Err(Error::Config(
                    "the Eytzinger routine cannot appear in the learned final-stage list".into(),
                ));
            }
            ids
        }
        None => Vec::new(),
    };

    let mut outcome = SuiteOutcome::default();
    for wl in &workloads {
        let mut jobs: Vec<(RoutineId, Option<Model>, bool)> = Vec::new();
        for &routine in &standalone {
            for &prefetch in &cfg.prefetch {
                jobs.push((routine, None, prefetch));
            }
        }
        if let Some(grid) = &cfg.models {
            for (model, label) in grid_models(grid, &wl.table) {
                match model {
                    Ok(model) => {
                        for &routine in &learned {
                            for &prefetch in &cfg.prefetch {
                                jobs.push((routine, Some(model.clone()), prefetch));
                            }
                        }
                    }
                    Err(error) => outcome.failures.push(SuiteFailure {
                        config_id: format!("{}/{}", wl.name, label),
                        error,
                    }),
                }
            }
        }

        let run_one = |(routine, model, prefetch): &(RoutineId, Option<Model>, bool)| {
            let bc = BatchConfig {
                dataset: wl.name.clone(),
                routine: *routine,
                model: model.as_ref(),
                k: cfg.kary_k,
                reps: cfg.repetitions,
                prefetch: *prefetch,
            };
            run_batch(&wl.table, &wl.queries, &bc).map_err(|error| SuiteFailure {
                config_id: format!(
                    "{}/{}/{}/{}",
                    wl.name,
                    routine.name(),
                    model.as_ref().map_or("none", |m| m.class_name()),
                    prefetch
                ),
                error,
            })
        };

        let results: Vec<_> = if cfg.parallel_correctness {
            run_jobs_parallel(&jobs, run_one)
        } else {
            jobs.iter().map(run_one).collect()
        };
        for r in results {
            match r {
                Ok(res) => outcome.results.push(res),
                Err(fail) => outcome.failures.push(fail),
            }
        }
    }
    Ok(outcome)
}

#[cfg(feature = "parallel")]
fn run_jobs_parallel<J, F>(jobs: &[J], f: F) -> Vec<std::result::Result<BenchResult, SuiteFailure>>
where
    J: Sync,
    F: Fn(&J) -> std::result::Result<BenchResult, SuiteFailure> + Sync + Send,
{
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_jobs_parallel<J, F>(jobs: &[J], f: F) -> Vec<std::result::Result<BenchResult, SuiteFailure>>
where
    F: Fn(&J) -> std::result::Result<BenchResult, SuiteFailure>,
{
    jobs.iter().map(f).collect()
}

/// Minimum mean ns/query among results for (dataset, model class); ties
/// broken by smaller interval mean, then lexicographic config id.
pub fn select_best<'a>(
    results: &'a [BenchResult],
    dataset: &str,
    model_class: &str,
) -> Result<&'a BenchResult> {
    results
        .iter()
        .filter(|r| r.dataset == dataset && r.model == model_class)
        .min_by(|a, b| {
            a.mean_ns_per_query
                .total_cmp(&b.mean_ns_per_query)
                .then_with(|| {
                    a.interval_mean
                        .unwrap_or(f64::INFINITY)
                        .total_cmp(&b.interval_mean.unwrap_or(f64::INFINITY))
                })
                .then_with(|| a.config_id().cmp(&b.config_id()))
        })
        .ok_or_else(|| {
            Error::Usage(format!(
                "no results for dataset '{dataset}' and model class '{model_class}'"
            ))
        })
}

pub const CSV_HEADER: &str = "dataset,n,routine,model,params,prefetch,reps,mean_ns_per_query,checksum,reduction_factor,interval_mean,interval_stddev";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

pub fn emit_csv(results: &[BenchResult], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.n,
            r.routine,
            r.model,
            r.params,
            r.prefetch,
            r.reps,
            r.mean_ns_per_query,
            r.checksum,
            fmt_opt(r.reduction_factor),
            fmt_opt(r.interval_mean),
            fmt_opt(r.interval_stddev),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|e| Error::Format(format!("line {line}: bad float '{s}': {e}")))
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchResult>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => return Err(Error::Format("missing or unexpected CSV header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Format(format!(
                "line {}: expected 12 fields, got {}",
                i + 1,
                f.len()
            )));
        }
        let bad = |what: &str| Error::Format(format!("line {}: bad {what}", i + 1));
        out.push(BenchResult {
            dataset: f[0].to_string(),
            n: f[1].parse().map_err(|_| bad("n"))?,
            routine: f[2].to_string(),
            model: f[3].to_string(),
            params: f[4].to_string(),
            prefetch: f[5].parse().map_err(|_| bad("prefetch"))?,
            reps: f[6].parse().map_err(|_| bad("reps"))?,
            mean_ns_per_query: f[7].parse().map_err(|_| bad("mean_ns_per_query"))?,
            checksum: f[8].parse().map_err(|_| bad("checksum"))?,
            reduction_factor: parse_opt(f[9], i + 1)?,
            interval_mean: parse_opt(f[10], i + 1)?,
            interval_stddev: parse_opt(f[11], i + 1)?,
        });
    }
    Ok(out)
}

/// One whitespace-separated series file per routine: table size vs mean
/// query time, for the size-vs-time curves. Stand-alone rows only.
pub fn emit_plot_data(results: &[BenchResult], dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut routines: Vec<&str> = results
        .iter()
        .filter(|r| r.model == "none")
        .map(|r| r.routine.as_str())
        .collect();
    routines.sort_unstable();
    routines.dedup();
    for routine in routines {
        let mut rows: Vec<(usize, bool, f64)> = results
            .iter()
            .filter(|r| r.model == "none" && r.routine == routine)
            .map(|r| (r.n, r.prefetch, r.mean_ns_per_query))
            .collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let path = dir.join(format!("{stem}-{routine}.dat"));
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# n prefetch mean_ns_per_query")?;
        for (n, prefetch, mean) in rows {
            writeln!(w, "{n} {} {mean}", prefetch as u8)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Human-readable summary: the best configuration per (dataset, model
/// class) plus annotations on whether the hardware-dependent orderings
/// reported in the literature hold on this machine. Annotations are
/// informational and never asserted.
pub fn report(results: &[BenchResult]) -> String {
    let mut datasets: Vec<&str> = results.iter().map(|r| r.dataset.as_str()).collect();
    datasets.sort_unstable();
    datasets.dedup();

    let mut out = String::new();
    for dataset in datasets {
        let _ = writeln!(out, "## {dataset}");
        let standalone: Vec<&BenchResult> = results
            .iter()
            .filter(|r| r.dataset == dataset && r.model == "none")
            .collect();
        if !standalone.is_empty() {
            let best = select_best(results, dataset, "none").expect("non-empty group");
            let _ = writeln!(
                out,
                "stand-alone winner: {} (prefetch={}) at {:.2} ns/query",
                best.routine, best.prefetch, best.mean_ns_per_query
            );
            let note = if best.routine == "u-el" {
                "u-el fastest stand-alone: agrees with the expected ordering"
            } else {
                "u-el fastest stand-alone: disagrees on this machine"
            };
            let _ = writeln!(out, "  note: {note}");
        }
        let mut classes: Vec<&str> = results
            .iter()
            .filter(|r| r.dataset == dataset && r.model != "none")
            .map(|r| r.model.as_str())
            .collect();
        classes.sort_unstable();
        classes.dedup();
        for class in classes {
            let best = select_best(results, dataset, class).expect("non-empty group");
            let _ = writeln!(
                out,
                "best {class}: {} ({}) prefetch={} at {:.2} ns/query, interval mean {:.2}",
                best.routine,
                best.params,
                best.prefetch,
                best.mean_ns_per_query,
                best.interval_mean.unwrap_or(f64::NAN)
            );
            let note = if best.routine == "s-ks" {
                "s-ks wins the learned final stage: agrees with the expected ordering"
            } else {
                "s-ks wins the learned final stage: disagrees on this machine"
            };
            let _ = writeln!(out, "  note: {note}");
        }
        let _ = writeln!(out);
    }
    out
}
