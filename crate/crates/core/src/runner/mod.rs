//! End-to-end 5x2 experiments: per fold, impute and scale on the training
//! half, oversample the training half only, fit logistic regression and
//! score the untouched test half.

mod dataset;
mod results;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    compute_metrics, fit_logistic, predict_proba, LogisticModel, MetricReport, DEFAULT_MAX_ITER, DEFAULT_THRESHOLD,
    DEFAULT_TOL,
};
use crate::matrix::Matrix;
use crate::preprocess::{fit_fold_transform, make_5x2_splits, Fold, FoldTransform, SplitPlan};
use crate::resampling::{resample, Method, ResampleConfig, ResampleOutput, DEFAULT_JITTER_SD, DEFAULT_K_NEIGHBORS};
use crate::Label;

pub use dataset::{load_dataset, parse_dataset, DatasetSpec, DatasetTable};
pub use results::{
    pairwise_test, pairwise_tests, FoldFailure, FoldRecord, MetricRow, PairwiseFailure, PairwiseRecord,
    ResultStore,
};

/// Which label counts as positive when scoring a fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// The dataset's declared positive label.
    Overall,
    /// The minority class of the training half.
    Minority,
}

impl MetricMode {
    pub const ALL: [MetricMode; 2] = [MetricMode::Overall, MetricMode::Minority];

    pub fn name(self) -> &'static str {
        match self {
            MetricMode::Overall => "overall",
            MetricMode::Minority => "minority",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "overall" => Ok(MetricMode::Overall),
            "minority" => Ok(MetricMode::Minority),
            _ => Err(Error::invalid(format!("unknown metric mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub truncation_level: Option<usize>,
    pub k_neighbors: usize,
    pub jitter_sd: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// When set, every resampled training half is written here as CSV.
    pub export_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<Method>, master_seed: u64) -> Self {
        ExperimentConfig {
            methods,
            master_seed,
            truncation_level: None,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            jitter_sd: DEFAULT_JITTER_SD,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            export_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method is required"));
        }
        ResampleConfig {
            method: self.methods[0],
            jitter_sd: self.jitter_sd,
            truncation_level: self.truncation_level,
            k_neighbors: self.k_neighbors,
            seed: 0,
        }
        .validate()?;
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::invalid("classifier needs max_iter >= 1 and tol > 0"));
        }
        Ok(())
    }

    /// Display names; repeated methods get a `#k` suffix.
    pub fn method_labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.methods.len());
        for (i, m) in self.methods.iter().enumerate() {
            let k = self.methods[..i].iter().filter(|p| *p == m).count();
            out.push(if k == 0 { m.name().to_string() } else { format!("{}#{}", m.name(), k + 1) });
        }
        out
    }
}

/// Seed of one (iteration, half, method) cell, independent of which other
/// methods are in the run.
pub fn fold_seed(master_seed: u64, iteration: usize, half: usize, method: Method) -> u64 {
    let mut h = splitmix(master_seed ^ 0x6a09_e667_f3bc_c909);
    for v in [iteration as u64, half as u64] {
        h = splitmix(h ^ v);
    }
    for b in method.name().bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything fitted on one training half.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPipeline {
    pub transform: FoldTransform,
    pub resampled: ResampleOutput,
    pub model: LogisticModel,
}

impl FoldPipeline {
    /// Fits the imputer, scaler, resampler and classifier on raw training rows.
    pub fn fit(
        x_train: &Matrix,
        y_train: &[Label],
        zero_coded_columns: &[usize],
        resample_cfg: &ResampleConfig,
        max_iter: usize,
        tol: f64,
    ) -> Result<Self> {
        let (train, _, transform) = fit_fold_transform(x_train, &Matrix::zeros(0, x_train.ncols()), zero_coded_columns)?;
        Self::fit_transformed(transform, &train, y_train, resample_cfg, max_iter, tol)
    }

    /// As [`FoldPipeline::fit`] for rows already passed through `transform`.
    pub fn fit_transformed(
        transform: FoldTransform,
        train: &Matrix,
        y_train: &[Label],
        resample_cfg: &ResampleConfig,
        max_iter: usize,
        tol: f64,
    ) -> Result<Self> {
        let resampled = resample(train, y_train, resample_cfg)?;
        let model = fit_logistic(&resampled.features, &resampled.labels, max_iter, tol)?;
        Ok(FoldPipeline { transform, resampled, model })
    }

    /// Metrics on raw held-out rows for both modes.
    pub fn score(&self, x_test: &Matrix, y_test: &[Label], overall_positive: Label) -> Result<Vec<(MetricMode, MetricReport)>> {
        let p = predict_proba(&self.model, &self.transform.apply(x_test)?)?;
        let mut reports = Vec::with_capacity(2);
        for mode in MetricMode::ALL {
            let positive = match mode {
                MetricMode::Overall => overall_positive,
                MetricMode::Minority => self.resampled.minority_label,
            };
            let scores: Vec<f64> =
                if positive == self.model.positive_label { p.clone() } else { p.iter().map(|v| 1.0 - v).collect() };
            reports.push((mode, compute_metrics(y_test, &scores, DEFAULT_THRESHOLD, positive)?));
        }
        Ok(reports)
    }
}

impl ExperimentConfig {
    pub fn resample_config(&self, method: Method, iteration: usize, half: usize) -> ResampleConfig {
        ResampleConfig {
            method,
            jitter_sd: self.jitter_sd,
            truncation_level: self.truncation_level,
            k_neighbors: self.k_neighbors,
            seed: fold_seed(self.master_seed, iteration, half, method),
        }
    }
}

struct CellOutcome {
    method_index: usize,
    iteration: usize,
    half: usize,
    result: std::result::Result<(FoldRecord, Vec<(MetricMode, MetricReport)>), String>,
}

/// Runs every method on the ten folds of one split plan seeded by
/// `cfg.master_seed`. Failing cells are recorded and skipped.
pub fn run_experiment(table: &DatasetTable, cfg: &ExperimentConfig) -> Result<ResultStore> {
    cfg.validate()?;
    let plan = make_5x2_splits(&table.y, cfg.master_seed)?;
    let zero_cols = table.zero_coded_indices();
    if let Some(dir) = &cfg.export_dir {
        std::fs::create_dir_all(dir)?;
    }

    let folds: Vec<Fold<'_>> = plan.folds().collect();
    let labels = cfg.method_labels();
    let cells: Vec<(usize, usize)> =
        (0..folds.len()).flat_map(|f| (0..cfg.methods.len()).map(move |m| (f, m))).collect();
    let mut outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(f, m)| {
            let fold = &folds[f];
            let result = run_cell(table, cfg, &labels[m], cfg.methods[m], fold, &zero_cols).map_err(|e| match e {
                Error::GlobalMissing { column } => {
                    let name = column.parse::<usize>().ok().and_then(|j| table.feature_names.get(j)).cloned();
                    Error::GlobalMissing { column: name.unwrap_or(column) }.to_string()
                }
                e => e.to_string(),
            });
            CellOutcome { method_index: m, iteration: fold.iteration, half: fold.half, result }
        })
        .collect();

    let mut store = ResultStore::new(&table.spec.name, labels.clone(), plan.clone());
    outcomes.sort_by_key(|o| (o.method_index, o.iteration, o.half));
    for o in outcomes {
        let method = &labels[o.method_index];
        match o.result {
            Ok((record, reports)) => {
                for (mode, report) in reports {
                    for (name, value) in MetricReport::NAMES.iter().zip(report.values()) {
                        store.rows.push(MetricRow {
                            dataset: table.spec.name.clone(),
                            method: method.clone(),
                            iteration: o.iteration + 1,
                            half: o.half + 1,
                            mode,
                            metric: (*name).to_string(),
                            value,
                        });
                    }
                }
                store.folds.push(record);
            }
            Err(error) => store.failures.push(FoldFailure {
                method: method.clone(),
                iteration: o.iteration + 1,
                half: o.half + 1,
                error,
            }),
        }
    }
    Ok(store)
}

fn run_cell(
    table: &DatasetTable,
    cfg: &ExperimentConfig,
    label: &str,
    method: Method,
    fold: &Fold<'_>,
    zero_cols: &[usize],
) -> Result<(FoldRecord, Vec<(MetricMode, MetricReport)>)> {
    let x_train = table.x.select_rows(fold.train);
    let y_train: Vec<Label> = fold.train.iter().map(|&i| table.y[i]).collect();
    let rcfg = cfg.resample_config(method, fold.iteration, fold.half);
    let pipe = FoldPipeline::fit(&x_train, &y_train, zero_cols, &rcfg, cfg.max_iter, cfg.tol)?;
    if let Some(dir) = &cfg.export_dir {
        let path = dir.join(format!("{label}_iter{}_half{}.csv", fold.iteration + 1, fold.half + 1));
        pipe.resampled.write_csv(&path, &table.feature_names, &table.spec.target)?;
    }
    let x_test = table.x.select_rows(fold.test);
    let y_test: Vec<Label> = fold.test.iter().map(|&i| table.y[i]).collect();
    let reports = pipe.score(&x_test, &y_test, table.spec.positive_label)?;
    let out = &pipe.resampled;
    let record = FoldRecord {
        method: label.to_string(),
        iteration: fold.iteration + 1,
        half: fold.half + 1,
        seed: rcfg.seed,
        minority_label: out.minority_label,
        n_min: out.n_min,
        n_maj: out.n_maj,
        n_syn: out.n_syn,
        resample_flags: out.flags.clone(),
        classifier_converged: pipe.model.converged,
        classifier_iterations: pipe.model.iterations,
    };
    Ok((record, reports))
}

/// The split plan `run_experiment` uses for `table` and `master_seed`.
pub fn split_plan(table: &DatasetTable, master_seed: u64) -> Result<SplitPlan> {
    make_5x2_splits(&table.y, master_seed)
}
