//! Acceptance suite: ten criteria, one test each, printing a PASS line
//! on success (run with `--nocapture` to see them). Every asserted
//! value is checked against an independent oracle computed inside the
//! test, never against the implementation under test.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use learned_search::bench::{
    emit_csv, emit_plot_data, median_ns, report, run_batch, run_suite, BatchConfig, SuiteConfig,
};
use learned_search::data::{gen_synthetic, gen_synthetic_queries};
use learned_search::eytzinger::EytzingerTable;
use learned_search::models::{
    build_pgm, build_rmi, build_rs, fit_linear_cdf, learned_lookup, reduction_factor, Model,
    RoutineId,
};
use learned_search::search::oracle_lower_bound;
use learned_search::table::{SearchRange, SortedTable};

/// The ten-key example table used throughout.
const FIG2_KEYS: [u64; 10] = [47, 105, 140, 289, 316, 358, 386, 398, 819, 939];

const K_VALUES: [usize; 4] = [2, 3, 5, 16];

const RMI_GRID: [usize; 7] = [64, 256, 1024, 4096, 16384, 65536, 262144];
const EPS_GRID: [usize; 5] = [4, 16, 64, 256, 1024];
const RADIX_GRID: [u32; 3] = [12, 16, 20];

fn fig2_table() -> SortedTable {
    SortedTable::new(FIG2_KEYS.to_vec()).unwrap()
}

/// Randomized distinct-key table with a random key spread so both
/// dense and sparse layouts are exercised.
fn random_table(rng: &mut ChaCha8Rng) -> SortedTable {
    let n = rng.gen_range(1..=4096usize);
    let stride: u64 = *[1, 2, 7, 1000, 1 << 32].choose(rng).unwrap();
    let start = rng.gen_range(0..1000u64);
    let mut keys = Vec::with_capacity(n);
    let mut k = start;
    for _ in 0..n {
        keys.push(k);
        k = k.saturating_add(1 + rng.gen_range(0..=stride));
    }
    keys.dedup();
    SortedTable::new(keys).unwrap()
}

/// Member, gap, below-min and above-max probes for a table.
fn query_classes(table: &SortedTable, rng: &mut ChaCha8Rng, per_class: usize) -> Vec<u64> {
    let keys = table.keys();
    let mut out = Vec::new();
    for _ in 0..per_class {
        let &k = keys.choose(rng).unwrap();
        out.push(k); // member
        out.push(k.saturating_add(1)); // gap (or next member)
        out.push(k.saturating_sub(1));
    }
    out.push(keys[0].saturating_sub(1));
    out.push(0);
    out.push(keys[keys.len() - 1].saturating_add(1));
    out.push(u64::MAX);
    out
}

fn random_subrange(n: usize, rng: &mut ChaCha8Rng) -> SearchRange {
    let lo = rng.gen_range(0..=n);
    let hi = rng.gen_range(lo..=n);
    SearchRange::new(lo, hi, n).unwrap()
}

#[test]
fn criterion_01_fig2_epsilon() {
    let start = std::time::Instant::now();
    let model = fit_linear_cdf(&fig2_table()).unwrap();

    // Closed-form least squares recomputed independently.
    let n = FIG2_KEYS.len() as f64;
    let xs: Vec<f64> = FIG2_KEYS.iter().map(|&k| k as f64).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = (n - 1.0) / 2.0;
    let sxy: f64 = xs.iter().enumerate().map(|(r, x)| (x - xm) * (r as f64 - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let max_err = xs
        .iter()
        .enumerate()
        .map(|(r, x)| (slope * x + intercept - r as f64).abs())
        .fold(0.0f64, f64::max);

    assert!((model.slope() - slope).abs() < 1e-12);
    assert!((model.intercept() - intercept).abs() < 1e-9);
    assert!((model.max_abs_error() - max_err).abs() < 1e-9);
    assert!((max_err - 2.32).abs() < 0.01, "unrounded max error {max_err}");
    assert_eq!(model.eps(), 3);
    assert!(start.elapsed().as_secs() < 1);
    println!("criterion 1 (fig2 epsilon reproduction): PASS");
}

#[test]
fn criterion_02_oracle_equivalence() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    let mut checked = 0u64;
    for t in 0..1000 {
        let table = random_table(&mut rng);
        let n = table.len();
        let queries = query_classes(&table, &mut rng, 8);
        let mut ranges = vec![table.full_range()];
        for _ in 0..3 {
            ranges.push(random_subrange(n, &mut rng));
        }
        for &q in &queries {
            for &range in &ranges {
                let expect = oracle_lower_bound(&table, q, range);
                for routine in RoutineId::LEARNED {
                    for prefetch in [false, true] {
                        let ks: &[usize] = match routine {
                            RoutineId::StandardKary | RoutineId::UniformKary => &K_VALUES,
                            _ => &[3],
                        };
                        for &k in ks {
                            let got = routine.search(&table, q, range, k, prefetch).unwrap();
                            assert_eq!(
                                got, expect,
                                "table {t} routine {} q {q} range [{},{}) k {k}",
                                routine.name(), range.lo, range.hi
                            );
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(start.elapsed().as_secs() < 60);
    println!("criterion 2 (oracle equivalence, {checked} searches): PASS");
}

#[test]
fn criterion_03_eytzinger() {
    let table = SortedTable::new((1..=15).collect()).unwrap();
    let e = EytzingerTable::build(&table).unwrap();
    assert_eq!(e.layout(), &[8, 4, 12, 2, 6, 10, 14, 1, 3, 5, 7, 9, 11, 13, 15]);

    let mut rng = ChaCha8Rng::seed_from_u64(0xE1);
    for _ in 0..1000 {
        let table = random_table(&mut rng);
        let e = EytzingerTable::build(&table).unwrap();
        for q in query_classes(&table, &mut rng, 8) {
            let expect = oracle_lower_bound(&table, q, table.full_range());
            for prefetch in [false, true] {
                assert_eq!(e.lower_bound_rank(q, prefetch), expect, "q {q}");
            }
        }
    }
    println!("criterion 3 (eytzinger layout and search): PASS");
}

fn model_corpus() -> Vec<(SortedTable, usize)> {
    // (table, member stride for the end-to-end queries)
    vec![
        (gen_synthetic(1 << 8, 0).unwrap(), 1),
        (gen_synthetic(1 << 12, 0).unwrap(), 1),
        (gen_synthetic(1 << 16, 0).unwrap(), 16),
    ]
}

fn grid_models(table: &SortedTable) -> Vec<Model> {
    let mut out = vec![Model::Linear(fit_linear_cdf(table).unwrap())];
    for b in RMI_GRID {
        out.push(Model::Rmi(build_rmi(table, b).unwrap()));
    }
    for eps in EPS_GRID {
        out.push(Model::Pgm(build_pgm(table, eps).unwrap()));
    }
    for eps in EPS_GRID {
        for bits in RADIX_GRID {
            out.push(Model::Rs(build_rs(table, eps, bits).unwrap()));
        }
    }
    out
}

#[test]
fn criterion_04_containment_and_width() {
    let start = std::time::Instant::now();
    for (table, _) in model_corpus() {
        let n = table.len();
        for model in grid_models(&table) {
            let width_bound = match &model {
                Model::Pgm(m) => Some(2 * m.eps() + 1),
                Model::Rs(m) => Some(2 * m.eps() + 1),
                _ => None,
            };
            for (rank, &key) in table.keys().iter().enumerate() {
                let iv = model.predict_interval(key);
                assert!(
                    iv.lo <= rank && rank < iv.hi,
                    "{} n {n}: rank {rank} outside [{},{})",
                    model.class_name(), iv.lo, iv.hi
                );
                if let Some(bound) = width_bound {
                    assert!(
                        iv.len() <= bound,
                        "{} n {n}: width {} > {bound}",
                        model.params_string(), iv.len()
                    );
                }
            }
        }
    }
    assert!(start.elapsed().as_secs() < 120);
    println!("criterion 4 (model containment and width bounds): PASS");
}

#[test]
fn criterion_05_end_to_end_learned_lookup() {
    let final_stages = [
        RoutineId::StandardBinary,
        RoutineId::UniformBinary,
        RoutineId::StandardKary,
    ];
    for (table, stride) in model_corpus() {
        let mut queries = Vec::new();
        for &k in table.keys().iter().step_by(stride) {
            // member plus the absent even neighbors at interval edges
            queries.push(k);
            queries.push(k - 1);
            queries.push(k + 1);
        }
        queries.push(0);
        queries.push(table.max_key().unwrap() + 2);
        queries.push(u64::MAX);
        let models = grid_models(&table);
        for &q in &queries {
            let expect = oracle_lower_bound(&table, q, table.full_range());
            for model in &models {
                for routine in final_stages {
                    for prefetch in [false, true] {
                        let got = learned_lookup(model, &table, q, routine, 3, prefetch).unwrap();
                        assert_eq!(
                            got, expect,
                            "{} + {} q {q} n {}",
                            model.params_string(), routine.name(), table.len()
                        );
                    }
                }
            }
        }
    }
    println!("criterion 5 (end-to-end learned lookup): PASS");
}

#[test]
fn criterion_06_prefetch_transparency() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    for _ in 0..200 {
        let table = random_table(&mut rng);
        let queries = query_classes(&table, &mut rng, 8);
        for routine in RoutineId::LEARNED {
            for &q in &queries {
                let range = table.full_range();
                let off = routine.search(&table, q, range, 3, false).unwrap();
                let on = routine.search(&table, q, range, 3, true).unwrap();
                assert_eq!(off, on, "routine {} q {q}", routine.name());
            }
        }
        let e = EytzingerTable::build(&table).unwrap();
        for &q in &queries {
            assert_eq!(e.lower_bound_rank(q, false), e.lower_bound_rank(q, true));
        }
    }

    // Batch checksums must also be bit-identical.
    let table = gen_synthetic(1 << 12, 0).unwrap();
    let queries = gen_synthetic_queries(&table, 4000, 9).unwrap().queries;
    for routine in RoutineId::ALL {
        let run = |prefetch| {
            run_batch(
                &table,
                &queries,
                &BatchConfig {
                    dataset: "t".into(),
                    routine,
                    model: None,
                    k: 3,
                    reps: 1,
                    prefetch,
                },
            )
            .unwrap()
            .checksum
        };
        assert_eq!(run(false), run(true), "routine {}", routine.name());
    }
    println!("criterion 6 (prefetch transparency): PASS");
}

#[test]
fn criterion_07_workload_composition() {
    let table = gen_synthetic(1 << 14, 0).unwrap();
    for seed in [0u64, 1, 42] {
        let batch = gen_synthetic_queries(&table, 10_000, seed).unwrap();
        assert_eq!(batch.queries.len(), 10_000);
        assert_eq!(batch.present, 5_000);
        assert_eq!(batch.absent, 5_000);
        // Recount by membership: present queries are odd members,
        // absent ones even non-members.
        let mut present = 0;
        let mut absent = 0;
        for &q in &batch.queries {
            if table.contains(q) {
                assert_eq!(q % 2, 1);
                present += 1;
            } else {
                assert_eq!(q % 2, 0);
                absent += 1;
            }
        }
        assert_eq!((present, absent), (5_000, 5_000));
        let again = gen_synthetic_queries(&table, 10_000, seed).unwrap();
        assert_eq!(batch.queries, again.queries, "seed determinism");
    }
    assert_ne!(
        gen_synthetic_queries(&table, 10_000, 0).unwrap().queries,
        gen_synthetic_queries(&table, 10_000, 1).unwrap().queries
    );

    // Mixed batches over a sparse table: exact 50/50 as well.
    let sparse = SortedTable::new((0..1000).map(|i| i * 1000).collect()).unwrap();
    let mixed = learned_search::data::gen_mixed_queries(&sparse, 2_000, 3).unwrap();
    assert_eq!(mixed.present, 1_000);
    assert_eq!(mixed.absent, 1_000);
    let (p, a) = mixed
        .queries
        .iter()
        .fold((0, 0), |(p, a), &q| if sparse.contains(q) { (p + 1, a) } else { (p, a + 1) });
    assert_eq!((p, a), (1_000, 1_000));
    println!("criterion 7 (workload composition): PASS");
}

#[test]
fn criterion_08_reduction_factor() {
    let table = fig2_table();
    let model = fit_linear_cdf(&table).unwrap();
    let n = FIG2_KEYS.len();

    // Brute-force enumeration of clamped intervals, independent of the
    // library's interval code: round-half-up prediction, +/- eps, clamp.
    let slope = model.slope();
    let intercept = model.intercept();
    let eps = model.eps() as i64;
    let mut sum = 0.0;
    for &k in &FIG2_KEYS {
        let pred = (slope * k as f64 + intercept + 0.5).floor() as i64;
        let lo = (pred - eps).clamp(0, n as i64);
        let hi = (pred + eps + 1).clamp(lo, n as i64);
        sum += 1.0 - (hi - lo) as f64 / n as f64;
    }
    let expect = sum / n as f64;

    let got = reduction_factor(&Model::Linear(model), &table, &FIG2_KEYS).unwrap();
    assert!(
        (got - expect).abs() < 1e-9,
        "reduction factor {got} vs brute force {expect}"
    );
    // Order-of-magnitude sanity from the uncorrected 2*eps+1 width.
    let uncorrected = 1.0 - (2 * eps + 1) as f64 / n as f64;
    assert!((uncorrected - 0.3).abs() < 1e-9);
    println!("criterion 8 (reduction factor, value {got:.6}): PASS");
}

#[test]
fn criterion_09_harness_integrity() {
    let table = gen_synthetic(1 << 13, 0).unwrap();
    let queries = gen_synthetic_queries(&table, 6000, 5).unwrap().queries;
    let oracle: u64 = queries
        .iter()
        .map(|&q| oracle_lower_bound(&table, q, table.full_range()) as u64)
        .fold(0, |a, b| a ^ b);

    let model = Model::Pgm(build_pgm(&table, 16).unwrap());
    let mut configs: Vec<(RoutineId, Option<&Model>)> =
        RoutineId::ALL.iter().map(|&r| (r, None)).collect();
    for r in [RoutineId::StandardBinary, RoutineId::UniformBinary, RoutineId::StandardKary] {
        configs.push((r, Some(&model)));
    }
    for (routine, model) in configs {
        for prefetch in [false, true] {
            let res = run_batch(
                &table,
                &queries,
                &BatchConfig {
                    dataset: "t".into(),
                    routine,
                    model,
                    k: 3,
                    reps: 3,
                    prefetch,
                },
            )
            .unwrap();
            assert_eq!(
                res.checksum, oracle,
                "routine {} learned={}",
                routine.name(), model.is_some()
            );
        }
    }

    // Median reporting is invariant under pass ordering.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut times: Vec<u128> = (0..9).map(|_| rng.gen_range(1..1_000_000)).collect();
    let m = median_ns(&times);
    for _ in 0..20 {
        times.shuffle(&mut rng);
        assert_eq!(median_ns(&times), m);
    }
    println!("criterion 9 (harness checksum and median integrity): PASS");
}

#[test]
fn criterion_10_trend_report() {
    let cfg = SuiteConfig::from_toml(
        r#"
        synthetic_exponents = [4, 6, 8, 10, 12, 14, 16, 18, 20]
        queries_per_batch = 4000
        repetitions = 3
        models = { rmi_branching = [1024], pgm_eps = [16], rs_eps = [16], rs_radix_bits = [16] }
        "#,
    )
    .unwrap();
    let outcome = run_suite(&cfg).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    // 9 sizes x (6 routines + 3 models x 3 final stages) x 2 prefetch.
    assert_eq!(outcome.results.len(), 9 * (6 + 9) * 2);

    let dir = tempfile::tempdir().unwrap();
    emit_csv(&outcome.results, &dir.path().join("trend.csv")).unwrap();
    emit_plot_data(&outcome.results, dir.path(), "trend").unwrap();
    for routine in RoutineId::ALL {
        let path = dir.path().join(format!("trend-{}.dat", routine.name()));
        let text = std::fs::read_to_string(&path).unwrap();
        // one header + 9 sizes x 2 prefetch rows per routine
        assert_eq!(text.lines().count(), 1 + 18, "{}", path.display());
    }

    let summary = report(&outcome.results);
    assert!(summary.contains("u-el fastest stand-alone"));
    assert!(summary.contains("s-ks wins the learned final stage"));
    println!("criterion 10 (trend report, informational):");
    print!("{summary}");
    println!("criterion 10 (trend report, informational): PASS");
}
