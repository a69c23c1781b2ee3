use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use copulasmote::resampling::{Method, DEFAULT_JITTER_SD, DEFAULT_K_NEIGHBORS};
use copulasmote::runner::{load_dataset, run_experiment, DatasetSpec, ExperimentConfig, MetricMode};

/// Run a 5x2 cross-validated comparison of minority oversampling methods
/// with a logistic-regression classifier.
#[derive(Debug, Parser)]
#[command(name = "copulasmote", version)]
struct Args {
    /// Dataset CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Dataset description JSON (target column, positive label, recodes).
    #[arg(long)]
    spec: PathBuf,
    /// Comma-separated methods: copulasmote, smote, borderline, adasyn.
    #[arg(long, value_delimiter = ',', default_value = "copulasmote,smote,borderline,adasyn")]
    methods: Vec<String>,
    /// Master seed for splits, resampling and jitter.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for metrics.csv, pairwise.json, failures.json, folds.json.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Vine truncation level (default: min(3, d - 1)).
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    k_neighbors: usize,
    /// Standard deviation of the pseudo-observation jitter.
    #[arg(long, default_value_t = DEFAULT_JITTER_SD)]
    jitter_sd: f64,
    /// Use a seeded stratified subsample of this many rows.
    #[arg(long)]
    subsample: Option<usize>,
    /// Also write every resampled training half to OUT/resampled/.
    #[arg(long)]
    export_resampled: bool,
}

const SUMMARY_METRICS: [&str; 4] = ["f1", "auc", "balanced_accuracy", "recall"];

fn main() -> Result<()> {
    let args = Args::parse();
    let spec = DatasetSpec::from_json_file(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let mut table = load_dataset(&args.data, &spec).with_context(|| format!("loading {}", args.data.display()))?;
    if let Some(n) = args.subsample {
        table = table.stratified_subsample(n, args.seed)?;
    }
    let methods = args.methods.iter().map(|m| Method::parse(m)).collect::<Result<Vec<_>, _>>()?;

    let mut cfg = ExperimentConfig::new(methods, args.seed);
    cfg.truncation_level = args.truncation;
    cfg.k_neighbors = args.k_neighbors;
    cfg.jitter_sd = args.jitter_sd;
    if args.export_resampled {
        cfg.export_dir = Some(args.out.join("resampled"));
    }

    let (n0, n1) = table.class_counts();
    println!(
        "{}: {} rows ({} dropped), {} features, class 0/1 = {n0}/{n1}",
        spec.name,
        table.y.len(),
        table.n_dropped,
        table.feature_names.len()
    );
    let store = run_experiment(&table, &cfg)?;
    store.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;

    println!("\n{:<18}{}", "method", SUMMARY_METRICS.map(|m| format!("{m:>19}")).join(""));
    for method in &store.methods {
        let cells: Vec<String> = SUMMARY_METRICS
            .iter()
            .map(|m| match store.mean(method, m, MetricMode::Overall) {
                Some(v) => format!("{v:>19.4}"),
                None => format!("{:>19}", "NA"),
            })
            .collect();
        println!("{method:<18}{}", cells.join(""));
    }
    let (pairs, _) = store.all_pairwise();
    let f1: Vec<_> = pairs.iter().filter(|p| p.metric == "f1" && p.mode == MetricMode::Overall).collect();
    if !f1.is_empty() {
        println!("\n5x2 paired t-test on F1:");
        for p in f1 {
            println!("  {} - {}: mean diff {:+.4}, p = {:.4}", p.method_a, p.method_b, p.mean_difference, p.p);
        }
    }
    if !store.failures.is_empty() {
        eprintln!("\n{} fold(s) failed; see failures.json", store.failures.len());
    }
    println!("\nwrote results to {}", args.out.display());
    Ok(())
}
