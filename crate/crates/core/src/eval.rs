//! L2-regularised logistic regression and the thresholded and ranking
//! metrics reported per fold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Label;

pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Label modelled as the event (the larger training label).
    pub positive_label: Label,
    pub negative_label: Label,
    pub iterations: usize,
    /// Max-norm of the objective gradient at the returned coefficients.
    pub grad_norm: f64,
    pub converged: bool,
}

impl LogisticModel {
    pub fn zeros(d: usize, positive_label: Label, negative_label: Label) -> Self {
        LogisticModel {
            weights: vec![0.0; d],
            intercept: 0.0,
            positive_label,
            negative_label,
            iterations: 0,
            grad_norm: f64::NAN,
            converged: false,
        }
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a Matrix,
    t: Vec<f64>,
    lambda: f64,
}

impl Problem<'_> {
    /// Coefficient layout: weights then intercept.
    fn linear(&self, beta: &[f64], i: usize) -> f64 {
        let d = self.x.ncols();
        self.x.row(i).iter().zip(&beta[..d]).map(|(a, b)| a * b).sum::<f64>() + beta[d]
    }

    fn loss(&self, beta: &[f64]) -> f64 {
        let n = self.x.nrows() as f64;
        let d = self.x.ncols();
        let nll: f64 = (0..self.x.nrows())
            .map(|i| {
                let z = self.linear(beta, i);
                softplus(z) - self.t[i] * z
            })
            .sum::<f64>()
            / n;
        nll + 0.5 * self.lambda * beta[..d].iter().map(|w| w * w).sum::<f64>()
    }

    fn grad(&self, beta: &[f64], g: &mut [f64]) {
        let n = self.x.nrows() as f64;
        let d = self.x.ncols();
        g.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.x.nrows() {
            let r = sigmoid(self.linear(beta, i)) - self.t[i];
            for (gj, xj) in g[..d].iter_mut().zip(self.x.row(i)) {
                *gj += r * xj;
            }
            g[d] += r;
        }
        for v in g.iter_mut() {
            *v /= n;
        }
        for j in 0..d {
            g[j] += self.lambda * beta[j];
        }
    }
}

/// Minimises the mean negative log-likelihood plus `(1 / 2n) ||w||^2` (the
/// intercept is not penalised) by gradient descent with Barzilai-Borwein
/// steps and Armijo backtracking. Stops once the gradient max-norm falls
/// below `tol` or after `max_iter` iterations.
pub fn fit_logistic(x: &Matrix, y: &[Label], max_iter: usize, tol: f64) -> Result<LogisticModel> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::InvalidDimension(format!("{n} feature rows but {} labels", y.len())));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    let (lo, hi) = match (y.iter().min(), y.iter().max()) {
        (Some(&lo), Some(&hi)) if lo != hi => (lo, hi),
        _ => return Err(Error::invalid("logistic regression needs two classes")),
    };
    if y.iter().any(|&l| l != lo && l != hi) {
        return Err(Error::invalid("logistic regression needs exactly two classes"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let d = x.ncols();
    let prob = Problem { x, t: y.iter().map(|&l| f64::from(l == hi)).collect(), lambda: 1.0 / n as f64 };
    let max_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut beta = vec![0.0; d + 1];
    let mut g = vec![0.0; d + 1];
    prob.grad(&beta, &mut g);
    let mut f = prob.loss(&beta);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut cand = vec![0.0; d + 1];
    let mut g_new = vec![0.0; d + 1];
    while iterations < max_iter && max_norm(&g) >= tol {
        iterations += 1;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut accepted = false;
        for _ in 0..60 {
            for ((c, b), gj) in cand.iter_mut().zip(&beta).zip(&g) {
                *c = b - step * gj;
            }
            let fc = prob.loss(&cand);
            if fc.is_finite() && fc <= f - 1e-4 * step * gg {
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        prob.grad(&cand, &mut g_new);
        // Barzilai-Borwein step for the next iteration
        let (mut sy, mut ss) = (0.0, 0.0);
        for j in 0..=d {
            let s = cand[j] - beta[j];
            sy += s * (g_new[j] - g[j]);
            ss += s * s;
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { 1.0 };
        std::mem::swap(&mut beta, &mut cand);
        std::mem::swap(&mut g, &mut g_new);
    }
    if !f.is_finite() || beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericFailure("logistic loss is not finite".into()));
    }
    let grad_norm = max_norm(&g);
    let intercept = beta.pop().expect("intercept");
    Ok(LogisticModel {
        weights: beta,
        intercept,
        positive_label: hi,
        negative_label: lo,
        iterations,
        grad_norm,
        converged: grad_norm < tol,
    })
}

/// Objective value and gradient (weights, then intercept) at the given
/// coefficients; the event is the larger label in `y`.
pub fn logistic_objective(x: &Matrix, y: &[Label], weights: &[f64], intercept: f64) -> Result<(f64, Vec<f64>)> {
    if x.nrows() != y.len() || weights.len() != x.ncols() || y.is_empty() {
        return Err(Error::InvalidDimension("objective arguments do not conform".into()));
    }
    let hi = *y.iter().max().expect("nonempty");
    let prob = Problem { x, t: y.iter().map(|&l| f64::from(l == hi)).collect(), lambda: 1.0 / x.nrows() as f64 };
    let mut beta = weights.to_vec();
    beta.push(intercept);
    let mut g = vec![0.0; beta.len()];
    prob.grad(&beta, &mut g);
    Ok((prob.loss(&beta), g))
}

/// Probability of `model.positive_label` for every row.
pub fn predict_proba(model: &LogisticModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::InvalidDimension(format!(
            "model has {} weights, matrix has {} columns",
            model.weights.len(),
            x.ncols()
        )));
    }
    Ok(x.rows_iter()
        .map(|r| sigmoid(r.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>() + model.intercept))
        .collect())
}

/// Ratios whose denominator was zero and that were reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricFlag {
    PrecisionUndefined,
    RecallUndefined,
    SpecificityUndefined,
    F1Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when `y` holds a single class.
    pub auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub positive_label: Label,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub flags: Vec<MetricFlag>,
}

impl MetricReport {
    pub const NAMES: [&'static str; 7] =
        ["accuracy", "balanced_accuracy", "precision", "recall", "f1", "auc", "pr_auc"];

    /// Metrics in [`MetricReport::NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 7] {
        [
            Some(self.accuracy),
            Some(self.balanced_accuracy),
            Some(self.precision),
            Some(self.recall),
            Some(self.f1),
            self.auc,
            self.pr_auc,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES.iter().position(|n| *n == name).and_then(|i| self.values()[i])
    }
}

/// Scores are the probability (or any monotone score) of `positive_label`;
/// a row is predicted positive when its score is at least `threshold`.
pub fn compute_metrics(y: &[Label], scores: &[f64], threshold: f64, positive_label: Label) -> Result<MetricReport> {
    if y.len() != scores.len() {
        return Err(Error::InvalidDimension(format!("{} labels but {} scores", y.len(), scores.len())));
    }
    if y.is_empty() {
        return Err(Error::invalid("no rows to evaluate"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores must not be NaN"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&l, &s) in y.iter().zip(scores) {
        match (l == positive_label, s >= threshold) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let mut flags = Vec::new();
    let mut ratio = |num: usize, den: usize, flag: MetricFlag| {
        if den == 0 {
            flags.push(flag);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp, MetricFlag::PrecisionUndefined);
    let recall = ratio(tp, tp + fn_, MetricFlag::RecallUndefined);
    let specificity = ratio(tn, tn + fp, MetricFlag::SpecificityUndefined);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        flags.push(MetricFlag::F1Undefined);
        0.0
    };
    let positive: Vec<bool> = y.iter().map(|&l| l == positive_label).collect();
    Ok(MetricReport {
        accuracy: (tp + tn) as f64 / y.len() as f64,
        balanced_accuracy: 0.5 * (recall + specificity),
        precision,
        recall,
        f1,
        auc: roc_auc(&positive, scores),
        pr_auc: average_precision(&positive, scores),
        positive_label,
        tp,
        fp,
        tn,
        fn_,
        flags,
    })
}

/// Mann-Whitney estimate of P(score+ > score-) with half credit for ties.
pub fn roc_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the concordance count, kept integral
    let (mut twice, mut neg_below) = (0u64, 0u64);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let pos_here = idx[i..j].iter().filter(|&&k| positive[k]).count() as u64;
        let neg_here = (j - i) as u64 - pos_here;
        twice += pos_here * (2 * neg_below + neg_here);
        neg_below += neg_here;
        i = j;
    }
    Some(twice as f64 / (2 * n_pos * n_neg) as f64)
}

/// Step-wise average precision: `sum_k (R_k - R_{k-1}) P_k` over distinct
/// score thresholds taken in decreasing order.
pub fn average_precision(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 || n_pos == positive.len() {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let mut tp_here = 0;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            tp_here += usize::from(positive[idx[j]]);
            j += 1;
        }
        tp += tp_here;
        seen += j - i;
        ap += tp_here as f64 / n_pos as f64 * (tp as f64 / seen as f64);
        i = j;
    }
    Some(ap)
}
