//! SMOTE-family baselines: synthetic rows on segments between a seed
//! minority point and one of its nearest minority neighbours.

use rand::Rng;

use super::{assemble, minority_rows, split_classes, unchanged, ClassSplit, ResampleConfig, ResampleFlag, ResampleOutput};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Label;

pub fn smote_resample<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[Label],
    cfg: &ResampleConfig,
    rng: &mut R,
) -> Result<ResampleOutput> {
    cfg.validate()?;
    let split = split_classes(x, y)?;
    if split.n_maj == split.n_min {
        return Ok(unchanged(x, y, split));
    }
    smote_inner(x, y, split, cfg.k_neighbors, Vec::new(), rng)
}

/// Borderline-SMOTE: seeds are restricted to DANGER minority points, those
/// whose `m = k_neighbors` nearest training points contain at least `m/2`
/// but fewer than `m` majority points.
pub fn borderline_smote_resample<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[Label],
    cfg: &ResampleConfig,
    rng: &mut R,
) -> Result<ResampleOutput> {
    cfg.validate()?;
    let split = split_classes(x, y)?;
    let n_syn = split.n_maj - split.n_min;
    if n_syn == 0 {
        return Ok(unchanged(x, y, split));
    }
    let min_idx = minority_index(y, split.minority);
    let majority_counts = majority_neighbour_counts(x, y, &min_idx, split.minority, cfg.k_neighbors);
    let danger: Vec<usize> = majority_counts
        .iter()
        .enumerate()
        .filter(|(_, &(maj, m))| 2 * maj >= m && maj < m)
        .map(|(i, _)| i)
        .collect();
    if danger.is_empty() || split.n_min < 2 {
        return smote_inner(x, y, split, cfg.k_neighbors, vec![ResampleFlag::BorderlineFellBackToSmote], rng);
    }
    let xmin = minority_rows(x, y, split.minority);
    let neighbours = minority_neighbours(&xmin, cfg.k_neighbors);
    let mut synthetic = Matrix::zeros(n_syn, x.ncols());
    for s in 0..n_syn {
        let seed = danger[rng.random_range(0..danger.len())];
        interpolate(&xmin, seed, &neighbours[seed], synthetic.row_mut(s), rng);
    }
    Ok(assemble(x, y, split, synthetic, Vec::new(), None, rng))
}

/// ADASYN: seed `i` receives a share of the synthetic rows proportional to
/// the majority fraction among its `k_neighbors` nearest training points.
pub fn adasyn_resample<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[Label],
    cfg: &ResampleConfig,
    rng: &mut R,
) -> Result<ResampleOutput> {
    cfg.validate()?;
    let split = split_classes(x, y)?;
    let n_syn = split.n_maj - split.n_min;
    if n_syn == 0 {
        return Ok(unchanged(x, y, split));
    }
    let min_idx = minority_index(y, split.minority);
    let ratios: Vec<f64> = majority_neighbour_counts(x, y, &min_idx, split.minority, cfg.k_neighbors)
        .into_iter()
        .map(|(maj, m)| maj as f64 / m as f64)
        .collect();
    let total: f64 = ratios.iter().sum();
    if !(total.is_finite() && total > 0.0) || split.n_min < 2 {
        return smote_inner(x, y, split, cfg.k_neighbors, vec![ResampleFlag::AdasynFellBackToSmote], rng);
    }
    let counts = allocate_largest_remainder(&ratios, n_syn)?;
    let xmin = minority_rows(x, y, split.minority);
    let neighbours = minority_neighbours(&xmin, cfg.k_neighbors);
    let mut synthetic = Matrix::zeros(n_syn, x.ncols());
    let mut s = 0;
    for (seed, &g) in counts.iter().enumerate() {
        for _ in 0..g {
            interpolate(&xmin, seed, &neighbours[seed], synthetic.row_mut(s), rng);
            s += 1;
        }
    }
    Ok(assemble(x, y, split, synthetic, Vec::new(), None, rng))
}

/// Splits `total` into integer parts proportional to `weights` (Hamilton's
/// method). Leftover units go to the largest fractional remainders, lower
/// index first on ties.
pub fn allocate_largest_remainder(weights: &[f64], total: usize) -> Result<Vec<usize>> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(sum > 0.0) {
        return Err(Error::invalid("allocation weights must be non-negative with a positive sum"));
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..weights.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    Ok(counts)
}

fn smote_inner<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[Label],
    split: ClassSplit,
    k: usize,
    mut flags: Vec<ResampleFlag>,
    rng: &mut R,
) -> Result<ResampleOutput> {
    let n_syn = split.n_maj - split.n_min;
    let xmin = minority_rows(x, y, split.minority);
    let mut synthetic = Matrix::zeros(n_syn, x.ncols());
    if split.n_min == 1 {
        flags.push(ResampleFlag::SingleMinorityDuplicated);
        for s in 0..n_syn {
            synthetic.row_mut(s).copy_from_slice(xmin.row(0));
        }
    } else {
        let neighbours = minority_neighbours(&xmin, k);
        for s in 0..n_syn {
            let seed = rng.random_range(0..split.n_min);
            interpolate(&xmin, seed, &neighbours[seed], synthetic.row_mut(s), rng);
        }
    }
    Ok(assemble(x, y, split, synthetic, flags, None, rng))
}

#[inline]
fn interpolate<R: Rng + ?Sized>(xmin: &Matrix, seed: usize, neighbours: &[usize], out: &mut [f64], rng: &mut R) {
    let nn = neighbours[rng.random_range(0..neighbours.len())];
    let lambda: f64 = rng.random();
    let (a, b) = (xmin.row(seed), xmin.row(nn));
    for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
        *o = ai + lambda * (bi - ai);
    }
}

fn minority_index(y: &[Label], minority: Label) -> Vec<usize> {
    (0..y.len()).filter(|&i| y[i] == minority).collect()
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other rows among `candidates` (distance, then
/// index, ascending).
fn nearest(points: &Matrix, query: usize, candidates: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    let q = points.row(query);
    let mut d: Vec<(f64, usize)> =
        candidates.filter(|&j| j != query).map(|j| (sq_dist(q, points.row(j)), j)).collect();
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().map(|(_, j)| j).collect()
}

/// `min(k, n_min - 1)` nearest minority neighbours of every minority row,
/// indexed within `xmin`.
fn minority_neighbours(xmin: &Matrix, k: usize) -> Vec<Vec<usize>> {
    let n = xmin.nrows();
    (0..n).map(|i| nearest(xmin, i, 0..n, k)).collect()
}

/// For each minority row: (majority count, neighbourhood size) over its
/// `k` nearest training points.
fn majority_neighbour_counts(
    x: &Matrix,
    y: &[Label],
    min_idx: &[usize],
    minority: Label,
    k: usize,
) -> Vec<(usize, usize)> {
    min_idx
        .iter()
        .map(|&i| {
            let nn = nearest(x, i, 0..x.nrows(), k);
            (nn.iter().filter(|&&j| y[j] != minority).count(), nn.len().max(1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(allocate_largest_remainder(&[0.2, 0.8], 10).unwrap(), vec![2, 8]);
        assert_eq!(allocate_largest_remainder(&[1.0, 1.0, 1.0], 10).unwrap(), vec![4, 3, 3]);
        assert_eq!(allocate_largest_remainder(&[0.0, 3.0], 5).unwrap(), vec![0, 5]);
        assert!(allocate_largest_remainder(&[0.0, 0.0], 5).is_err());
    }

    #[test]
    fn nearest_orders_by_distance_then_index() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [-1.0], [3.0]]).unwrap();
        assert_eq!(nearest(&m, 0, 0..4, 2), vec![1, 2]);
        assert_eq!(nearest(&m, 0, 0..4, 10), vec![1, 2, 3]);
    }
}
