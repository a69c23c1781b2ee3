mod common;

use common::rng;
use copulasmote::eval::*;
use copulasmote::{Label, Matrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn brute_auc(y: &[bool], s: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] && !y[j] {
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Precision at each distinct threshold, weighted by the recall gained.
fn brute_ap(y: &[bool], s: &[f64]) -> f64 {
    let n_pos = y.iter().filter(|&&p| p).count() as f64;
    let mut thresholds: Vec<f64> = s.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let sel: Vec<usize> = (0..y.len()).filter(|&i| s[i] >= t).collect();
        let tp = sel.iter().filter(|&&i| y[i]).count() as f64;
        let recall = tp / n_pos;
        ap += (recall - prev_recall) * tp / sel.len() as f64;
        prev_recall = recall;
    }
    ap
}

fn logistic_data(n: usize, w: &[f64], b: f64, seed: u64) -> (Matrix, Vec<Label>) {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let x: Vec<f64> = w.iter().map(|_| StandardNormal.sample(&mut r)).collect();
        let z: f64 = x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        y.push(u8::from(r.random::<f64>() < 1.0 / (1.0 + (-z).exp())));
        rows.push(x);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

#[test]
fn worked_auc_example() {
    let r = compute_metrics(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8], 0.5, 1).unwrap();
    assert_eq!(r.auc, Some(0.75));
    assert_eq!((r.tp, r.fp, r.tn, r.fn_), (1, 0, 2, 1));
}

#[test]
fn confusion_ratios() {
    // TP = 2, FP = 1, FN = 1, TN = 1
    let y = [1, 1, 1, 0, 0];
    let s = [0.9, 0.8, 0.2, 0.7, 0.1];
    let r = compute_metrics(&y, &s, 0.5, 1).unwrap();
    assert_eq!((r.tp, r.fp, r.fn_, r.tn), (2, 1, 1, 1));
    assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
    assert!((r.recall - 2.0 / 3.0).abs() < 1e-15);
    assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
    assert!((r.balanced_accuracy - 0.5 * (2.0 / 3.0 + 0.5)).abs() < 1e-15);
    assert!((r.accuracy - 0.6).abs() < 1e-15);
    assert!(r.flags.is_empty());
}

#[test]
fn separating_scores_are_perfect() {
    let y = [0, 1, 0, 1, 1];
    let s = [0.1, 0.7, 0.2, 0.9, 0.6];
    let r = compute_metrics(&y, &s, 0.5, 1).unwrap();
    assert_eq!(r.auc, Some(1.0));
    assert_eq!(r.pr_auc, Some(1.0));
    assert_eq!(r.f1, 1.0);
}

#[test]
fn single_class_ranking_metrics_are_undefined() {
    let r = compute_metrics(&[1, 1, 1], &[0.2, 0.6, 0.9], 0.5, 1).unwrap();
    assert_eq!(r.auc, None);
    assert_eq!(r.pr_auc, None);
    assert!(r.flags.contains(&MetricFlag::SpecificityUndefined));
    let r = compute_metrics(&[0, 0], &[0.2, 0.3], 0.5, 1).unwrap();
    assert_eq!(r.precision, 0.0);
    assert!(r.flags.contains(&MetricFlag::PrecisionUndefined));
    assert!(r.flags.contains(&MetricFlag::RecallUndefined));
    assert!(compute_metrics(&[0, 1], &[0.2], 0.5, 1).is_err());
}

#[test]
fn metric_lookup_by_name() {
    let r = compute_metrics(&[0, 1], &[0.2, 0.9], 0.5, 1).unwrap();
    assert_eq!(r.get("auc"), Some(1.0));
    assert_eq!(r.get("accuracy"), Some(1.0));
    assert_eq!(r.get("nope"), None);
}

#[test]
fn separable_pair_is_fitted_exactly() {
    let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
    let y = [0, 1];
    let m = fit_logistic(&x, &y, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    let p = predict_proba(&m, &x).unwrap();
    let r = compute_metrics(&y, &p, 0.5, 1).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert!(m.converged);
}

#[test]
fn gradient_matches_finite_differences_at_optimum() {
    let (x, y) = logistic_data(300, &[1.0, -0.5, 0.25], 0.3, 2);
    let m = fit_logistic(&x, &y, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    assert!(m.converged, "grad norm {}", m.grad_norm);
    let (_, g) = logistic_objective(&x, &y, &m.weights, m.intercept).unwrap();
    let h = 1e-5;
    let mut beta = m.weights.clone();
    beta.push(m.intercept);
    for j in 0..beta.len() {
        let f = |delta: f64| {
            let mut b = beta.clone();
            b[j] += delta;
            let d = b.len() - 1;
            logistic_objective(&x, &y, &b[..d], b[d]).unwrap().0
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!((fd - g[j]).abs() < 1e-5, "coordinate {j}: {fd} vs {}", g[j]);
        assert!(g[j].abs() < 1e-5);
    }
}

#[test]
fn recovers_generating_coefficients() {
    let (x, y) = logistic_data(20000, &[1.0, -0.5], 0.3, 3);
    let m = fit_logistic(&x, &y, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    assert!((m.weights[0] - 1.0).abs() < 0.08);
    assert!((m.weights[1] + 0.5).abs() < 0.08);
    assert!((m.intercept - 0.3).abs() < 0.08);
}

#[test]
fn permuted_labels_give_chance_auc() {
    let mut aucs = Vec::new();
    for seed in 0..50 {
        let (x, mut y) = logistic_data(200, &[1.0, 1.0, 1.0], 0.0, 100 + seed);
        y.shuffle(&mut rng(seed));
        let m = fit_logistic(&x, &y, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let (xt, mut yt) = logistic_data(200, &[1.0, 1.0, 1.0], 0.0, 900 + seed);
        yt.shuffle(&mut rng(seed + 7));
        let p = predict_proba(&m, &xt).unwrap();
        aucs.push(compute_metrics(&yt, &p, 0.5, 1).unwrap().auc.unwrap());
    }
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    assert!((mean - 0.5).abs() < 0.05, "mean AUC {mean}");
}

#[test]
fn predictions_match_direct_log_odds() {
    let (x, y) = logistic_data(100, &[0.7, -1.2], 0.1, 5);
    let m = fit_logistic(&x, &y, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    let p = predict_proba(&m, &x).unwrap();
    for (i, row) in x.rows_iter().enumerate() {
        let z = m.intercept + row[0] * m.weights[0] + row[1] * m.weights[1];
        assert!((p[i] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        assert!(p[i] > 0.0 && p[i] < 1.0);
    }
    let zero = LogisticModel::zeros(2, 1, 0);
    assert!(predict_proba(&zero, &x).unwrap().iter().all(|&v| v == 0.5));
    assert!(predict_proba(&zero, &Matrix::zeros(1, 3)).is_err());
    // monotone in a positively weighted feature
    let pos = if m.weights[0] > 0.0 { 0 } else { 1 };
    let mut lo = Matrix::zeros(1, 2);
    let mut hi = Matrix::zeros(1, 2);
    lo.set(0, pos, -1.0);
    hi.set(0, pos, 1.0);
    let (a, b) = (predict_proba(&m, &lo).unwrap()[0], predict_proba(&m, &hi).unwrap()[0]);
    assert!(if m.weights[pos] > 0.0 { b > a } else { b < a });
}

#[test]
fn fit_rejects_bad_input() {
    let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
    assert!(fit_logistic(&x, &[1, 1], 10, 1e-6).is_err());
    assert!(fit_logistic(&x, &[1], 10, 1e-6).is_err());
    assert!(fit_logistic(&x, &[0, 1], 10, 0.0).is_err());
}

#[test]
fn label_swap_exchanges_rates() {
    let y = [1, 1, 1, 0, 0, 0, 0];
    let s = [0.9, 0.4, 0.6, 0.3, 0.55, 0.1, 0.2];
    let a = compute_metrics(&y, &s, 0.5, 1).unwrap();
    let flipped: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
    let b = compute_metrics(&y, &flipped, 0.5, 0).unwrap();
    // threshold ties aside, TPR and TNR trade places
    let tpr = |r: &MetricReport| r.tp as f64 / (r.tp + r.fn_) as f64;
    let tnr = |r: &MetricReport| r.tn as f64 / (r.tn + r.fp) as f64;
    assert_eq!(tpr(&a), tnr(&b));
    assert_eq!(tnr(&a), tpr(&b));
    assert_eq!(a.balanced_accuracy, b.balanced_accuracy);
    assert_eq!(a.auc, b.auc);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ranking_metrics_match_brute_force(
        pairs in prop::collection::vec((any::<bool>(), 0u8..20), 2..200),
    ) {
        let y: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        // coarse scores force plenty of ties
        let s: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 19.0).collect();
        let n_pos = y.iter().filter(|&&p| p).count();
        prop_assume!(n_pos > 0 && n_pos < y.len());
        prop_assert_eq!(roc_auc(&y, &s).unwrap(), brute_auc(&y, &s));
        prop_assert!((average_precision(&y, &s).unwrap() - brute_ap(&y, &s)).abs() < 1e-12);
    }

    #[test]
    fn swapping_positive_label_keeps_balanced_accuracy(
        pairs in prop::collection::vec((0u8..2, 0.0f64..1.0), 2..100),
    ) {
        let y: Vec<Label> = pairs.iter().map(|p| p.0).collect();
        let s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(s.iter().all(|&v| v != 0.5));
        let a = compute_metrics(&y, &s, 0.5, 1).unwrap();
        let flipped: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
        let b = compute_metrics(&y, &flipped, 0.5, 0).unwrap();
        prop_assert!((a.balanced_accuracy - b.balanced_accuracy).abs() < 1e-15);
        prop_assert_eq!((a.tp, a.fp, a.tn, a.fn_), (b.tn, b.fn_, b.tp, b.fp));
    }
}
