use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Label;

/// How to turn a CSV file into a binary classification table.
///
/// All listed values are compared after trimming surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    /// Name of the label column.
    pub target: String,
    /// Label (after recoding) treated as positive in the overall metrics.
    pub positive_label: Label,
    /// Columns where 0 means "missing".
    #[serde(default)]
    pub zero_coded_columns: Vec<String>,
    /// Raw label value to class id. Empty means the column already holds 0/1.
    #[serde(default)]
    pub label_recode: BTreeMap<String, Label>,
    /// Rows with these raw label values are removed before recoding.
    #[serde(default)]
    pub drop_labels: Vec<String>,
    /// Columns excluded from the features (identifiers and the like).
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Per-column value maps for non-numeric feature columns.
    #[serde(default)]
    pub column_maps: BTreeMap<String, BTreeMap<String, f64>>,
}

impl DatasetSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetTable {
    pub spec: DatasetSpec,
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<Label>,
    /// Rows removed through `drop_labels`.
    pub n_dropped: usize,
}

impl DatasetTable {
    /// `(count of label 0, count of label 1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.y.iter().filter(|&&l| l == 1).count();
        (self.y.len() - ones, ones)
    }

    /// Indices of the zero-coded columns among the features.
    pub fn zero_coded_indices(&self) -> Vec<usize> {
        self.spec
            .zero_coded_columns
            .iter()
            .filter_map(|c| self.feature_names.iter().position(|f| f == c))
            .collect()
    }

    /// Stratified subsample of `n` rows: class quotas by largest remainder,
    /// rows drawn without replacement, original order kept.
    pub fn stratified_subsample(&self, n: usize, seed: u64) -> Result<DatasetTable> {
        use rand::seq::index::sample;
        use rand::SeedableRng;
        if n >= self.y.len() {
            return Ok(self.clone());
        }
        let (c0, c1) = self.class_counts();
        let quota = crate::resampling::allocate_largest_remainder(&[c0 as f64, c1 as f64], n)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut keep = Vec::with_capacity(n);
        for (label, q) in [(0u8, quota[0]), (1u8, quota[1])] {
            let members: Vec<usize> = (0..self.y.len()).filter(|&i| self.y[i] == label).collect();
            keep.extend(sample(&mut rng, members.len(), q).into_iter().map(|k| members[k]));
        }
        keep.sort_unstable();
        Ok(DatasetTable {
            spec: self.spec.clone(),
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(&keep),
            y: keep.iter().map(|&i| self.y[i]).collect(),
            n_dropped: self.n_dropped,
        })
    }
}

/// Reads a comma-separated file with a header row.
pub fn load_dataset(path: &Path, spec: &DatasetSpec) -> Result<DatasetTable> {
    let rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    read_dataset(rdr, spec)
}

/// [`load_dataset`] over in-memory CSV text.
pub fn parse_dataset(text: &str, spec: &DatasetSpec) -> Result<DatasetTable> {
    let rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    read_dataset(rdr, spec)
}

fn read_dataset<R: std::io::Read>(mut rdr: csv::Reader<R>, spec: &DatasetSpec) -> Result<DatasetTable> {
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let position = |name: &str| header.iter().position(|h| h == name);
    let target = position(&spec.target)
        .ok_or_else(|| Error::invalid(format!("target column `{}` not found", spec.target)))?;
    let referenced = spec
        .zero_coded_columns
        .iter()
        .chain(&spec.drop_columns)
        .chain(spec.column_maps.keys());
    for c in referenced {
        if position(c).is_none() {
            return Err(Error::invalid(format!("column `{c}` not found")));
        }
    }
    if spec.drop_columns.contains(&spec.target) || spec.zero_coded_columns.iter().any(|c| spec.drop_columns.contains(c)) {
        return Err(Error::invalid("a dropped column is also used as target or zero-coded"));
    }
    if !spec.label_recode.is_empty() && !spec.label_recode.values().any(|&l| l == spec.positive_label) {
        return Err(Error::invalid(format!("positive label {} is not produced by the recode map", spec.positive_label)));
    }
    let features: Vec<usize> =
        (0..header.len()).filter(|&j| j != target && !spec.drop_columns.contains(&header[j])).collect();
    let maps: HashMap<usize, &BTreeMap<String, f64>> =
        spec.column_maps.iter().map(|(c, m)| (position(c).expect("checked"), m)).collect();

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut n_dropped = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let raw = rec.get(target).unwrap_or("");
        if spec.drop_labels.iter().any(|d| d == raw) {
            n_dropped += 1;
            continue;
        }
        y.push(parse_label(raw, spec)?);
        for &j in &features {
            let cell = rec.get(j).unwrap_or("");
            let parse_err = || Error::Parse { row, column: header[j].clone(), value: cell.to_string() };
            let v = match maps.get(&j) {
                Some(m) => *m.get(cell).ok_or_else(parse_err)?,
                None => cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(parse_err)?,
            };
            data.push(v);
        }
    }
    if y.is_empty() {
        return Err(Error::invalid("dataset has no rows"));
    }
    Ok(DatasetTable {
        spec: spec.clone(),
        feature_names: features.iter().map(|&j| header[j].clone()).collect(),
        x: Matrix::from_vec(y.len(), features.len(), data)?,
        y,
        n_dropped,
    })
}

fn parse_label(raw: &str, spec: &DatasetSpec) -> Result<Label> {
    if !spec.label_recode.is_empty() {
        return spec.label_recode.get(raw).copied().ok_or_else(|| Error::UnknownLabel(raw.to_string()));
    }
    match raw.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(Error::UnknownLabel(raw.to_string())),
    }
}
