use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricMode;
use crate::error::{Error, Result};
use crate::eval::MetricReport;
use crate::preprocess::SplitPlan;
use crate::resampling::ResampleFlag;
use crate::stats_test::{dietterich_5x2, DiffTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub dataset: String,
    pub method: String,
    /// 1-based.
    pub iteration: usize,
    /// 1-based index of the training half.
    pub half: usize,
    pub mode: MetricMode,
    pub metric: String,
    /// `None` when the metric is undefined on the fold.
    pub value: Option<f64>,
}

/// Bookkeeping for one successful (method, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub method: String,
    pub iteration: usize,
    pub half: usize,
    pub seed: u64,
    pub minority_label: crate::Label,
    pub n_min: usize,
    pub n_maj: usize,
    pub n_syn: usize,
    pub resample_flags: Vec<ResampleFlag>,
    pub classifier_converged: bool,
    pub classifier_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldFailure {
    pub method: String,
    pub iteration: usize,
    pub half: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRecord {
    pub method_a: String,
    pub method_b: String,
    pub metric: String,
    pub mode: MetricMode,
    /// `None` when the statistic is infinite (zero variance, nonzero first difference).
    pub t: Option<f64>,
    pub p: f64,
    pub df: u32,
    pub degenerate: bool,
    /// Mean over folds of `method_a - method_b`.
    pub mean_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseFailure {
    pub method_a: String,
    pub method_b: String,
    pub metric: String,
    pub mode: MetricMode,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultStore {
    pub dataset: String,
    pub methods: Vec<String>,
    pub plan: SplitPlan,
    /// Canonical order: method, iteration, half, mode, metric.
    pub rows: Vec<MetricRow>,
    pub folds: Vec<FoldRecord>,
    pub failures: Vec<FoldFailure>,
}

impl ResultStore {
    pub fn new(dataset: &str, methods: Vec<String>, plan: SplitPlan) -> Self {
        ResultStore { dataset: dataset.to_string(), methods, plan, rows: Vec::new(), folds: Vec::new(), failures: Vec::new() }
    }

    /// The ten fold values of one cell in split-plan order; `None` entries
    /// are missing or undefined.
    pub fn fold_values(&self, method: &str, metric: &str, mode: MetricMode) -> Vec<Option<f64>> {
        let mut out = vec![None; 10];
        for r in &self.rows {
            if r.method == method && r.metric == metric && r.mode == mode {
                out[(r.iteration - 1) * 2 + (r.half - 1)] = r.value;
            }
        }
        out
    }

    /// Mean over the folds where the metric is defined.
    pub fn mean(&self, method: &str, metric: &str, mode: MetricMode) -> Option<f64> {
        let v: Vec<f64> = self.fold_values(method, metric, mode).into_iter().flatten().collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn metrics_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "method", "iteration", "half", "mode", "metric", "value"])?;
        for r in &self.rows {
            let value = r.value.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([
                r.dataset.as_str(),
                r.method.as_str(),
                &r.iteration.to_string(),
                &r.half.to_string(),
                r.mode.name(),
                r.metric.as_str(),
                &value,
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Every metric, mode and method pair (earlier method as `method_a`).
    pub fn all_pairwise(&self) -> (Vec<PairwiseRecord>, Vec<PairwiseFailure>) {
        let mut ok = Vec::new();
        let mut failed = Vec::new();
        for mode in MetricMode::ALL {
            for metric in MetricReport::NAMES {
                for i in 0..self.methods.len() {
                    for j in i + 1..self.methods.len() {
                        let (a, b) = (&self.methods[i], &self.methods[j]);
                        match pairwise_test(self, a, b, metric, mode) {
                            Ok(r) => ok.push(r),
                            Err(e) => failed.push(PairwiseFailure {
                                method_a: a.clone(),
                                method_b: b.clone(),
                                metric: metric.to_string(),
                                mode,
                                error: e.to_string(),
                            }),
                        }
                    }
                }
            }
        }
        (ok, failed)
    }

    /// Writes `metrics.csv`, `pairwise.json`, `failures.json` and
    /// `folds.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), self.metrics_csv()?)?;
        let (pairs, pair_failures) = self.all_pairwise();
        std::fs::write(dir.join("pairwise.json"), serde_json::to_string_pretty(&pairs)?)?;
        let failures = serde_json::json!({ "folds": self.failures, "pairwise": pair_failures });
        std::fs::write(dir.join("failures.json"), serde_json::to_string_pretty(&failures)?)?;
        std::fs::write(dir.join("folds.json"), serde_json::to_string_pretty(&self.folds)?)?;
        Ok(())
    }
}

/// Dietterich test on `method_a - method_b` for one metric and mode.
pub fn pairwise_test(
    store: &ResultStore,
    method_a: &str,
    method_b: &str,
    metric: &str,
    mode: MetricMode,
) -> Result<PairwiseRecord> {
    let a = store.fold_values(method_a, metric, mode);
    let b = store.fold_values(method_b, metric, mode);
    let mut diffs = Vec::with_capacity(10);
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        let cell = |m: &str| format!("{m} {metric} ({}) iteration {} half {}", mode.name(), k / 2 + 1, k % 2 + 1);
        let x = x.ok_or_else(|| Error::MissingData(cell(method_a)))?;
        let y = y.ok_or_else(|| Error::MissingData(cell(method_b)))?;
        diffs.push(x - y);
    }
    let r = dietterich_5x2(&DiffTable::from_folds(&diffs)?);
    Ok(PairwiseRecord {
        method_a: method_a.to_string(),
        method_b: method_b.to_string(),
        metric: metric.to_string(),
        mode,
        t: r.t.is_finite().then_some(r.t),
        p: r.p_two_sided,
        df: r.df,
        degenerate: r.degenerate,
        mean_difference: diffs.iter().sum::<f64>() / 10.0,
    })
}

/// [`pairwise_test`] for every pair of methods in the store.
pub fn pairwise_tests(store: &ResultStore, metric: &str, mode: MetricMode) -> Result<Vec<PairwiseRecord>> {
    let mut out = Vec::new();
    for i in 0..store.methods.len() {
        for j in i + 1..store.methods.len() {
            out.push(pairwise_test(store, &store.methods[i], &store.methods[j], metric, mode)?);
        }
    }
    Ok(out)
}
