//! Minority oversampling of a training fold.
//!
//! Every method balances the two classes exactly: `n_maj - n_min` synthetic
//! minority rows are appended and the augmented fold is shuffled.

mod copula;
mod interpolation;

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::vine::VineModel;
use crate::Label;

pub use copula::copulasmote_resample;
pub use interpolation::{
    adasyn_resample, allocate_largest_remainder, borderline_smote_resample, smote_resample,
};

pub const DEFAULT_JITTER_SD: f64 = 1e-6;
pub const DEFAULT_K_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    CopulaSmote,
    Smote,
    BorderlineSmote,
    Adasyn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::CopulaSmote, Method::Smote, Method::BorderlineSmote, Method::Adasyn];

    pub fn name(self) -> &'static str {
        match self {
            Method::CopulaSmote => "CopulaSMOTE",
            Method::Smote => "SMOTE",
            Method::BorderlineSmote => "BorderlineSMOTE",
            Method::Adasyn => "ADASYN",
        }
    }

    /// Case-insensitive; `-` and `_` are ignored.
    pub fn parse(s: &str) -> Result<Self> {
        let key: String = s.trim().chars().filter(|c| *c != '-' && *c != '_').collect();
        match key.to_ascii_lowercase().as_str() {
            "copulasmote" | "copula" | "vine" => Ok(Method::CopulaSmote),
            "smote" => Ok(Method::Smote),
            "borderlinesmote" | "borderline" => Ok(Method::BorderlineSmote),
            "adasyn" => Ok(Method::Adasyn),
            _ => Err(Error::invalid(format!("unknown resampling method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub method: Method,
    /// Standard deviation of the Gaussian jitter added before ranking.
    pub jitter_sd: f64,
    /// `None` means `min(3, d - 1)`.
    pub truncation_level: Option<usize>,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl ResampleConfig {
    pub fn new(method: Method, seed: u64) -> Self {
        ResampleConfig {
            method,
            jitter_sd: DEFAULT_JITTER_SD,
            truncation_level: None,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sd.is_finite() && self.jitter_sd > 0.0) {
            return Err(Error::invalid(format!("jitter_sd must be positive, got {}", self.jitter_sd)));
        }
        if self.k_neighbors == 0 {
            return Err(Error::invalid("k_neighbors must be at least 1"));
        }
        if self.truncation_level == Some(0) {
            return Err(Error::invalid("truncation level must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResampleFlag {
    /// Classes were already balanced; nothing was generated.
    AlreadyBalanced,
    /// A single minority row was duplicated.
    SingleMinorityDuplicated,
    /// The minority sample was too small or had a constant column, so an
    /// all-independence vine was used.
    DegenerateVine,
    /// At least one pair copula fell back to independence.
    PairCopulaFallback,
    /// Borderline-SMOTE found no DANGER points and ran plain SMOTE.
    BorderlineFellBackToSmote,
    /// ADASYN weights were all zero or non-finite and plain SMOTE ran.
    AdasynFellBackToSmote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleOutput {
    pub features: Matrix,
    pub labels: Vec<Label>,
    pub minority_label: Label,
    pub n_min: usize,
    pub n_maj: usize,
    pub n_syn: usize,
    pub synthetic_mask: Vec<bool>,
    /// Input row of each output row, `None` for synthetic rows.
    pub source_index: Vec<Option<usize>>,
    pub flags: Vec<ResampleFlag>,
    /// The fitted vine (CopulaSMOTE only).
    pub vine: Option<VineModel>,
}

impl ResampleOutput {
    /// Writes features, the label column and an `is_synthetic` 0/1 column.
    pub fn write_csv(&self, path: &Path, feature_names: &[String], label_name: &str) -> Result<()> {
        if feature_names.len() != self.features.ncols() {
            return Err(Error::invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                self.features.ncols()
            )));
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
        header.push(label_name);
        header.push("is_synthetic");
        w.write_record(&header)?;
        for (i, row) in self.features.rows_iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            rec.push(u8::from(self.synthetic_mask[i]).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the configured method with a ChaCha stream seeded from `cfg.seed`.
pub fn resample(x: &Matrix, y: &[Label], cfg: &ResampleConfig) -> Result<ResampleOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.method {
        Method::CopulaSmote => copulasmote_resample(x, y, cfg, &mut rng),
        Method::Smote => smote_resample(x, y, cfg, &mut rng),
        Method::BorderlineSmote => borderline_smote_resample(x, y, cfg, &mut rng),
        Method::Adasyn => adasyn_resample(x, y, cfg, &mut rng),
    }
}

/// Rank-based pseudo-observations `R / (n + 1)` per column after adding
/// `N(0, jitter_sd)` noise. Exact ties that survive the jitter are ranked
/// by row index. `jitter_sd = 0` disables the noise.
pub fn pseudo_observations<R: Rng + ?Sized>(minority: &Matrix, jitter_sd: f64, rng: &mut R) -> Result<Matrix> {
    let (n, d) = (minority.nrows(), minority.ncols());
    if n < 2 {
        return Err(Error::invalid(format!("pseudo-observations need at least 2 rows, got {n}")));
    }
    if !(jitter_sd.is_finite() && jitter_sd >= 0.0) {
        return Err(Error::invalid(format!("jitter_sd must be non-negative, got {jitter_sd}")));
    }
    if minority.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("minority features must be finite"));
    }
    let mut jittered = minority.clone();
    if jitter_sd > 0.0 {
        let noise = Normal::new(0.0, jitter_sd).map_err(|e| Error::invalid(e.to_string()))?;
        for i in 0..n {
            for v in jittered.row_mut(i) {
                *v += noise.sample(rng);
            }
        }
    }
    let mut out = Matrix::zeros(n, d);
    let denom = (n + 1) as f64;
    let mut idx: Vec<usize> = (0..n).collect();
    for j in 0..d {
        idx.sort_by(|&a, &b| jittered.get(a, j).total_cmp(&jittered.get(b, j)).then(a.cmp(&b)));
        for (rank, &i) in idx.iter().enumerate() {
            out.set(i, j, (rank + 1) as f64 / denom);
        }
    }
    Ok(out)
}

/// The `k`-th smallest value with `k = max(1, min(n, ceil(u n)))`.
pub fn empirical_inverse_cdf(sorted_values: &[f64], u: f64) -> Result<f64> {
    let n = sorted_values.len();
    if n == 0 {
        return Err(Error::invalid("empirical inverse CDF of an empty sample"));
    }
    if !u.is_finite() {
        return Err(Error::invalid(format!("probability must be finite, got {u}")));
    }
    let k = ((u * n as f64).ceil() as i64).clamp(1, n as i64) as usize;
    Ok(sorted_values[k - 1])
}

/// Class counts of a two-class training fold.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ClassSplit {
    pub minority: Label,
    pub n_min: usize,
    pub n_maj: usize,
}

/// The smaller class is the minority; on equal counts the smaller label.
pub(crate) fn split_classes(x: &Matrix, y: &[Label]) -> Result<ClassSplit> {
    if x.nrows() != y.len() {
        return Err(Error::InvalidDimension(format!("{} feature rows but {} labels", x.nrows(), y.len())));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    let mut labels: Vec<Label> = y.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != 2 {
        return Err(Error::invalid(format!("resampling needs exactly two classes, found {}", labels.len())));
    }
    let count = |l: Label| y.iter().filter(|&&v| v == l).count();
    let (a, b) = (count(labels[0]), count(labels[1]));
    Ok(if b < a {
        ClassSplit { minority: labels[1], n_min: b, n_maj: a }
    } else {
        ClassSplit { minority: labels[0], n_min: a, n_maj: b }
    })
}

pub(crate) fn unchanged(x: &Matrix, y: &[Label], split: ClassSplit) -> ResampleOutput {
    ResampleOutput {
        features: x.clone(),
        labels: y.to_vec(),
        minority_label: split.minority,
        n_min: split.n_min,
        n_maj: split.n_maj,
        n_syn: 0,
        synthetic_mask: vec![false; y.len()],
        source_index: (0..y.len()).map(Some).collect(),
        flags: vec![ResampleFlag::AlreadyBalanced],
        vine: None,
    }
}

/// Appends the synthetic rows with the minority label and shuffles.
pub(crate) fn assemble<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[Label],
    split: ClassSplit,
    synthetic: Matrix,
    flags: Vec<ResampleFlag>,
    vine: Option<VineModel>,
    rng: &mut R,
) -> ResampleOutput {
    let n = x.nrows();
    let total = n + synthetic.nrows();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(rng);
    let mut features = Matrix::zeros(total, x.ncols());
    let mut labels = Vec::with_capacity(total);
    let mut mask = Vec::with_capacity(total);
    let mut source = Vec::with_capacity(total);
    for (out_i, &k) in order.iter().enumerate() {
        if k < n {
            features.row_mut(out_i).copy_from_slice(x.row(k));
            labels.push(y[k]);
            mask.push(false);
            source.push(Some(k));
        } else {
            features.row_mut(out_i).copy_from_slice(synthetic.row(k - n));
            labels.push(split.minority);
            mask.push(true);
            source.push(None);
        }
    }
    ResampleOutput {
        features,
        labels,
        minority_label: split.minority,
        n_min: split.n_min,
        n_maj: split.n_maj,
        n_syn: synthetic.nrows(),
        synthetic_mask: mask,
        source_index: source,
        flags,
        vine,
    }
}

pub(crate) fn minority_rows(x: &Matrix, y: &[Label], minority: Label) -> Matrix {
    let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority).collect();
    x.select_rows(&idx)
}
