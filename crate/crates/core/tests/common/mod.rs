#![allow(dead_code)]

use copulasmote::pair_copula::{inverse_h_function, CopulaFamily, PairCopulaSpec, Rotation};
use copulasmote::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// O(n^2) tau-b.
pub fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut s, mut tx, mut ty) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let dx = sign(x[i] - x[j]);
            let dy = sign(y[i] - y[j]);
            s += dx * dy;
            tx += dx * dx;
            ty += dy * dy;
        }
    }
    if tx == 0.0 || ty == 0.0 {
        0.0
    } else {
        s / (tx * ty).sqrt()
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pairs `(u, v)` from a pair copula by conditional inversion.
pub fn sample_pairs(spec: &PairCopulaSpec, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let mut us = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let v: f64 = r.random_range(1e-9..1.0 - 1e-9);
        let w: f64 = r.random_range(1e-9..1.0 - 1e-9);
        us.push(inverse_h_function(spec, w, v).unwrap());
        vs.push(v);
    }
    (us, vs)
}

/// Rows of a Gaussian copula with correlation matrix `corr`, on the uniform scale.
pub fn gaussian_copula(corr: &[Vec<f64>], n: usize, seed: u64) -> Matrix {
    let d = corr.len();
    let l = cholesky(corr);
    let norm = Normal::new(0.0, 1.0).unwrap();
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
        let row: Vec<f64> = (0..d)
            .map(|i| {
                let x: f64 = (0..=i).map(|k| l[i][k] * z[k]).sum();
                norm.cdf(x)
            })
            .collect();
        rows.push(row);
    }
    Matrix::from_rows(&rows).unwrap()
}

pub fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// Equicorrelated-ish 5x5 matrix with mixed signs.
pub fn corr5() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 0.6, 0.3, -0.2, 0.1],
        vec![0.6, 1.0, 0.4, 0.0, 0.2],
        vec![0.3, 0.4, 1.0, -0.3, 0.5],
        vec![-0.2, 0.0, -0.3, 1.0, -0.1],
        vec![0.1, 0.2, 0.5, -0.1, 1.0],
    ]
}

/// Pairwise tau-b matrix of the columns.
pub fn tau_matrix(m: &Matrix) -> Vec<Vec<f64>> {
    let cols = m.columns();
    let d = cols.len();
    let mut t = vec![vec![1.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let v = copulasmote::pair_copula::empirical_kendall_tau(&cols[i], &cols[j]).unwrap().tau;
            t[i][j] = v;
            t[j][i] = v;
        }
    }
    t
}

/// Family/rotation/parameter grid shared by the property checks.
pub fn grid() -> Vec<PairCopulaSpec> {
    use CopulaFamily::*;
    let mut out = vec![PairCopulaSpec::independence()];
    for rho in [-0.7, 0.3, 0.8] {
        out.push(PairCopulaSpec::new(Gaussian, Rotation::R0, vec![rho]).unwrap());
    }
    for (rho, nu) in [(0.5, 4.0), (-0.3, 10.0), (0.7, 25.0)] {
        out.push(PairCopulaSpec::new(StudentT, Rotation::R0, vec![rho, nu]).unwrap());
    }
    for r in Rotation::ALL {
        for theta in [0.5, 2.0, 5.0] {
            out.push(PairCopulaSpec::new(Clayton, r, vec![theta]).unwrap());
        }
        for theta in [1.5, 3.0] {
            out.push(PairCopulaSpec::new(Gumbel, r, vec![theta]).unwrap());
        }
    }
    for theta in [-5.0, 2.0, 10.0] {
        out.push(PairCopulaSpec::new(Frank, Rotation::R0, vec![theta]).unwrap());
    }
    out
}

pub fn interior() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}
