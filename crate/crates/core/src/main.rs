//! `lsearch`: generate key/query files, train models, run timed
//! batches and sweeps, and summarize result CSVs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use learned_search::bench::{
    emit_csv, emit_plot_data, parse_csv, report, run_batch, run_suite, BatchConfig, SuiteConfig,
};
use learned_search::data::{
    gen_mixed_queries, gen_synthetic, gen_synthetic_queries, read_queries, read_table,
    resample_cdf, write_queries, write_table,
};
use learned_search::error::{Error, Result};
use learned_search::models::{
    build_pgm, build_rmi, build_rs, fit_linear_cdf, read_model, write_model, Model, RoutineId,
};

#[derive(Parser)]
#[command(name = "lsearch", version, about = "learned static indexing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate key and query files.
    Generate {
        #[command(subcommand)]
        what: GenerateCmd,
    },
    /// Fit a model on a key file and write it to disk.
    Train(TrainArgs),
    /// Time one (routine, model, prefetch) configuration on a batch.
    Bench(BenchArgs),
    /// Run a full sweep described by a TOML config.
    Sweep(SweepArgs),
    /// Summarize a results CSV: best configuration per dataset and
    /// model class, with informational ordering notes.
    Report {
        /// Results CSV produced by `bench` or `sweep`.
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Dense synthetic table: the odd integers 1,3,...,2n-1.
    Synthetic {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query batch over an existing key file: half present keys, half
    /// absent values.
    Queries {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long, default_value_t = 2_000_000)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sample absent values by rejection from the key range instead
        /// of assuming the dense odd-integer layout.
        #[arg(long)]
        mixed: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resample a key file down to n keys at evenly spaced CDF ranks.
    Resample {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    keys: PathBuf,
    /// Model class: linear, rmi, pgm, or rs.
    #[arg(long)]
    model: String,
    /// RMI leaf count.
    #[arg(long)]
    branching: Option<usize>,
    /// Error bound for pgm / rs.
    #[arg(long)]
    eps: Option<usize>,
    /// RadixSpline prefix-table bits.
    #[arg(long)]
    radix_bits: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// s-bs, u-bs, lower-bound, s-ks, u-ks, or u-el.
    #[arg(long)]
    routine: String,
    /// Optional trained model file; the routine then runs as the final
    /// stage over predicted intervals.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    prefetch: bool,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Dataset label for the CSV row; defaults to the key file stem.
    #[arg(long)]
    dataset: Option<String>,
    /// Append/write the result row to this CSV instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also emit per-routine plot series files into this directory.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Usage(format!("missing required option --{what}")))
}

fn cmd_generate(what: GenerateCmd) -> Result<()> {
    match what {
        GenerateCmd::Synthetic { n, seed, out } => {
            let table = gen_synthetic(n, seed)?;
            write_table(&out, &table)?;
            println!("wrote {} keys to {}", table.len(), out.display());
        }
        GenerateCmd::Queries { keys, count, seed, mixed, out } => {
            let table = read_table(&keys)?;
            let batch = if mixed {
                gen_mixed_queries(&table, count, seed)?
            } else {
                gen_synthetic_queries(&table, count, seed)?
            };
            write_queries(&out, &batch)?;
            println!(
                "wrote {} queries ({} present, {} absent) to {}",
                batch.queries.len(),
                batch.present,
                batch.absent,
                out.display()
            );
        }
        GenerateCmd::Resample { keys, n, out } => {
            let table = read_table(&keys)?;
            let small = resample_cdf(&table, n)?;
            write_table(&out, &small)?;
            println!("wrote {} resampled keys to {}", small.len(), out.display());
        }
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let table = read_table(&args.keys)?;
    let model = match args.model.as_str() {
        "linear" => {
            let m = fit_linear_cdf(&table)?;
            println!("linear: eps={}", m.eps());
            Model::Linear(m)
        }
        "rmi" => {
            let b = require(args.branching, "branching")?;
            let m = build_rmi(&table, b)?;
            println!(
                "rmi: branching={} max_leaf_error={}",
                m.branching(),
                m.max_leaf_error()
            );
            Model::Rmi(m)
        }
        "pgm" => {
            let eps = require(args.eps, "eps")?;
            let m = build_pgm(&table, eps)?;
            let sizes = m.level_sizes();
            println!("pgm: eps={} levels={} segments={:?}", m.eps(), sizes.len(), sizes);
            Model::Pgm(m)
        }
        "rs" => {
            let eps = require(args.eps, "eps")?;
            let bits = require(args.radix_bits, "radix-bits")?;
            let m = build_rs(&table, eps, bits)?;
            println!(
                "rs: eps={} radix_bits={} knots={}",
                m.eps(),
                m.radix_bits(),
                m.spline_points().len()
            );
            Model::Rs(m)
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown model class '{other}' (expected linear, rmi, pgm, or rs)"
            )))
        }
    };
    write_model(&args.out, &model)?;
    println!("wrote model to {}", args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let table = read_table(&args.keys)?;
    let queries = read_queries(&args.queries)?;
    let model = match &args.model {
        Some(path) => Some(read_model(path)?),
        None => None,
    };
    if let Some(m) = &model {
        if m.table_len() != table.len() {
            return Err(Error::Usage(format!(
                "model was trained on {} keys but the table has {}",
                m.table_len(),
                table.len()
            )));
        }
    }
    let dataset = args.dataset.clone().unwrap_or_else(|| {
        args.keys
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "keys".to_string())
    });
    let cfg = BatchConfig {
        dataset,
        routine: RoutineId::parse(&args.routine)?,
        model: model.as_ref(),
        k: args.k,
        reps: args.reps,
        prefetch: args.prefetch,
    };
    let result = run_batch(&table, &queries, &cfg)?;
    match &args.csv {
        Some(path) => {
            emit_csv(std::slice::from_ref(&result), path)?;
            println!("wrote 1 row to {}", path.display());
        }
        None => {
            println!("{}", learned_search::bench::CSV_HEADER);
            let dir = tempfile_free_row(&result);
            println!("{dir}");
        }
    }
    Ok(())
}

fn tempfile_free_row(r: &learned_search::bench::BenchResult) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    format!(
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
        opt(r.reduction_factor),
        opt(r.interval_mean),
        opt(r.interval_stddev),
    )
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg = SuiteConfig::from_toml(&text)?;
    let outcome = run_suite(&cfg)?;
    emit_csv(&outcome.results, &args.out)?;
    println!("wrote {} rows to {}", outcome.results.len(), args.out.display());
    if let Some(dir) = &args.plot_dir {
        emit_plot_data(&outcome.results, dir, "sweep")?;
        println!("wrote plot series to {}", dir.display());
    }
    for fail in &outcome.failures {
        eprintln!("failed: {}: {}", fail.config_id, fail.error);
    }
    if !outcome.failures.is_empty() {
        return Err(Error::Internal(format!(
            "{} configuration(s) failed",
            outcome.failures.len()
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { what } => cmd_generate(what),
        Command::Train(args) => cmd_train(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report { csv } => {
            let text = std::fs::read_to_string(&csv)?;
            let results = parse_csv(&text)?;
            if results.is_empty() {
                return Err(Error::Usage("results CSV contains no rows".into()));
            }
            print!("{}", report(&results));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
