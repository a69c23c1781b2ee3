//! Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallTau {
    pub tau: f64,
    /// Set when either sequence is constant, in which case `tau` is 0.
    pub degenerate: bool,
}

/// Tau-b of two equally sized samples. Ties are handled with the usual
/// `sqrt((n0 - n1)(n0 - n2))` denominator.
pub fn empirical_kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallTau> {
    if x.len() != y.len() {
        return Err(Error::InvalidDimension(format!(
            "kendall tau needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("kendall tau input contains NaN"));
    }
    let n = x.len();
    if n < 2 {
        return Ok(KendallTau { tau: 0.0, degenerate: true });
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let n0 = (n * (n - 1) / 2) as i128;
    let mut tied_x: i128 = 0;
    let mut tied_xy: i128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        tied_x += pairs(j - i);
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && y[idx[l]] == y[idx[k]] {
                l += 1;
            }
            tied_xy += pairs(l - k);
            k = l;
        }
        i = j;
    }

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf) as i128;

    let mut tied_y: i128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        tied_y += pairs(j - i);
        i = j;
    }

    if tied_x == n0 || tied_y == n0 {
        return Ok(KendallTau { tau: 0.0, degenerate: true });
    }
    let concordant_minus_discordant = n0 - tied_x - tied_y + tied_xy - 2 * swaps;
    let denom = (((n0 - tied_x) as f64) * ((n0 - tied_y) as f64)).sqrt();
    let tau = (concordant_minus_discordant as f64 / denom).clamp(-1.0, 1.0);
    Ok(KendallTau { tau, degenerate: false })
}

fn pairs(m: usize) -> i128 {
    (m * m.saturating_sub(1) / 2) as i128
}

/// Stable merge sort of `a`, returning the number of strictly inverted pairs.
fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = a.split_at_mut(mid);
    let mut swaps = merge_count(left, &mut buf[..mid]) + merge_count(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            buf[k] = right[j];
            swaps += (left.len() - i) as u64;
            j += 1;
        } else {
            buf[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    buf[k..k + right.len() - j].copy_from_slice(&right[j..]);
    a.copy_from_slice(&buf[..n]);
    swaps
}
