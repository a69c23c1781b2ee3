//! Per-fold transforms fitted on a training half only, and the stratified
//! 5x2 split generator.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Label;

pub const N_ITERATIONS: usize = 5;

/// Medians used to replace zero-coded missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputation {
    /// Declared zero-coded columns, sorted.
    pub columns: Vec<usize>,
    /// Parallel to `columns`.
    pub medians: Vec<f64>,
}

impl Imputation {
    pub fn identity() -> Self {
        Imputation { columns: Vec::new(), medians: Vec::new() }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if let Some(&j) = self.columns.iter().find(|&&j| j >= x.ncols()) {
            return Err(Error::InvalidDimension(format!("column {j} outside a {}-column matrix", x.ncols())));
        }
        let mut out = x.clone();
        for (&j, &m) in self.columns.iter().zip(&self.medians) {
            for i in 0..out.nrows() {
                if out.get(i, j) == 0.0 {
                    out.set(i, j, m);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Sample standard deviations; 1 for constant columns.
    pub sds: Vec<f64>,
    /// Columns that were constant on the training half.
    pub constant_columns: Vec<usize>,
}

impl Standardization {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.means.len() {
            return Err(Error::InvalidDimension(format!(
                "scaler fitted on {} columns, got {}",
                self.means.len(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for i in 0..out.nrows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.sds[j];
            }
        }
        Ok(out)
    }
}

/// Imputation followed by standardization, both fitted on one training half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTransform {
    pub imputation: Imputation,
    pub standardization: Standardization,
}

impl FoldTransform {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.standardization.apply(&self.imputation.apply(x)?)
    }
}

/// Median with the midpoint rule for even counts. `values` must be nonempty.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Treats zeros in `zero_coded_columns` as missing and fills them, in both
/// matrices, with the median of the non-zero training values.
pub fn fit_apply_imputer(
    train: &Matrix,
    test: &Matrix,
    zero_coded_columns: &[usize],
) -> Result<(Matrix, Matrix, Imputation)> {
    check_widths(train, test)?;
    let mut columns = zero_coded_columns.to_vec();
    columns.sort_unstable();
    columns.dedup();
    let mut medians = Vec::with_capacity(columns.len());
    for &j in &columns {
        if j >= train.ncols() {
            return Err(Error::invalid(format!("zero-coded column {j} does not exist")));
        }
        let mut present: Vec<f64> = (0..train.nrows()).map(|i| train.get(i, j)).filter(|&v| v != 0.0).collect();
        if present.is_empty() {
            return Err(Error::GlobalMissing { column: j.to_string() });
        }
        medians.push(median(&mut present));
    }
    let imp = Imputation { columns, medians };
    Ok((imp.apply(train)?, imp.apply(test)?, imp))
}

/// Centres and scales by the training mean and sample standard deviation.
pub fn fit_apply_scaler(train: &Matrix, test: &Matrix) -> Result<(Matrix, Matrix, Standardization)> {
    check_widths(train, test)?;
    let n = train.nrows();
    if n < 2 {
        return Err(Error::invalid(format!("scaler needs at least 2 training rows, got {n}")));
    }
    let d = train.ncols();
    let mut means = vec![0.0; d];
    let mut sds = vec![1.0; d];
    let mut constant_columns = Vec::new();
    for j in 0..d {
        let col = train.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        means[j] = mean;
        if col.iter().all(|&v| v == col[0]) || !(var > 0.0) {
            constant_columns.push(j);
        } else {
            sds[j] = var.sqrt();
        }
    }
    let s = Standardization { means, sds, constant_columns };
    Ok((s.apply(train)?, s.apply(test)?, s))
}

/// Imputer then scaler, fitted on `train`.
pub fn fit_fold_transform(
    train: &Matrix,
    test: &Matrix,
    zero_coded_columns: &[usize],
) -> Result<(Matrix, Matrix, FoldTransform)> {
    let (tr, te, imputation) = fit_apply_imputer(train, test, zero_coded_columns)?;
    let (tr, te, standardization) = fit_apply_scaler(&tr, &te)?;
    Ok((tr, te, FoldTransform { imputation, standardization }))
}

fn check_widths(train: &Matrix, test: &Matrix) -> Result<()> {
    if train.ncols() != test.ncols() {
        return Err(Error::InvalidDimension(format!(
            "train has {} columns, test has {}",
            train.ncols(),
            test.ncols()
        )));
    }
    if train.as_slice().iter().chain(test.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    Ok(())
}

/// One train/test fold of a [`SplitPlan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold<'a> {
    /// 0-based iteration.
    pub iteration: usize,
    /// Index (0 or 1) of the half used for training.
    pub half: usize,
    pub train: &'a [usize],
    pub test: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub master_seed: u64,
    /// `halves[i]` holds the two sorted row-index sets of iteration `i`.
    pub halves: Vec<[Vec<usize>; 2]>,
}

impl SplitPlan {
    /// The ten folds in canonical order: iteration 0 half 0, iteration 0
    /// half 1, iteration 1 half 0, ...
    pub fn folds(&self) -> impl Iterator<Item = Fold<'_>> {
        self.halves.iter().enumerate().flat_map(|(i, h)| {
            (0..2).map(move |r| Fold { iteration: i, half: r, train: &h[r], test: &h[1 - r] })
        })
    }
}

/// Five stratified half splits. Iteration `i` uses ChaCha stream `i` of
/// `master_seed`: each class (in label order) is permuted, then its rows
/// are dealt alternately to the halves with a counter shared across
/// classes, so odd class counts differ by one between the halves and the
/// extras alternate.
pub fn make_5x2_splits(labels: &[Label], master_seed: u64) -> Result<SplitPlan> {
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::invalid(format!("5x2 splits need exactly two classes, found {}", classes.len())));
    }
    let members: Vec<Vec<usize>> =
        classes.iter().map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect()).collect();
    if let Some((c, m)) = classes.iter().zip(&members).find(|(_, m)| m.len() < 2) {
        return Err(Error::invalid(format!("class {c} has {} member(s); at least 2 are needed", m.len())));
    }
    let mut halves = Vec::with_capacity(N_ITERATIONS);
    for i in 0..N_ITERATIONS {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(i as u64);
        let mut h: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut counter = 0usize;
        for m in &members {
            let mut perm = m.clone();
            perm.shuffle(&mut rng);
            for idx in perm {
                h[counter % 2].push(idx);
                counter += 1;
            }
        }
        h[0].sort_unstable();
        h[1].sort_unstable();
        halves.push(h);
    }
    Ok(SplitPlan { master_seed, halves })
}
