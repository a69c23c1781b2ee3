use rand::Rng;
use rand::distr::Open01;

use super::{
    assemble, empirical_inverse_cdf, minority_rows, pseudo_observations, split_classes, unchanged,
    ResampleConfig, ResampleFlag, ResampleOutput,
};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::pair_copula::{default_library, FitFlag};
use crate::vine::{
    default_truncation, fit_truncated_vine, independence_vine, sample_vine, VineFlag,
};
use crate::Label;

/// Vine-copula oversampling of the minority class.
///
/// Jittered minority features are turned into pseudo-observations, a
/// truncated vine is fitted to them and sampled, and each synthetic
/// uniform is mapped back through the empirical quantile function of the
/// (un-jittered) minority column, so every synthetic value is one that
/// occurs in the minority class.
pub fn copulasmote_resample<R: Rng + ?Sized>(
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
    let xmin = minority_rows(x, y, split.minority);
    let d = x.ncols();
    let mut flags = Vec::new();

    if split.n_min == 1 {
        flags.push(ResampleFlag::SingleMinorityDuplicated);
        let row = xmin.row(0).to_vec();
        let synthetic = Matrix::from_rows(&vec![row; n_syn])?;
        return Ok(assemble(x, y, split, synthetic, flags, None, rng));
    }

    let sorted: Vec<Vec<f64>> = xmin
        .columns()
        .into_iter()
        .map(|mut c| {
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();

    let (uniforms, vine) = if d == 1 {
        let u: Vec<f64> = (0..n_syn).map(|_| rng.sample(Open01)).collect();
        (Matrix::from_vec(n_syn, 1, u)?, None)
    } else {
        let trunc = cfg.truncation_level.unwrap_or_else(|| default_truncation(d));
        let u = pseudo_observations(&xmin, cfg.jitter_sd, rng)?;
        let constant_column = sorted.iter().any(|c| c[0] == c[c.len() - 1]);
        let model = if constant_column {
            let mut m = independence_vine(d, trunc)?;
            m.flag = Some(VineFlag::DegenerateInput);
            m
        } else {
            fit_truncated_vine(&u, trunc, &default_library())?
        };
        if model.flag.is_some() {
            flags.push(ResampleFlag::DegenerateVine);
        }
        if model.fit_diagnostics.iter().any(|e| e.flag == Some(FitFlag::AllCandidatesFailed)) {
            flags.push(ResampleFlag::PairCopulaFallback);
        }
        (sample_vine(&model, n_syn, rng)?, Some(model))
    };

    let mut synthetic = Matrix::zeros(n_syn, d);
    for i in 0..n_syn {
        for (j, col) in sorted.iter().enumerate() {
            synthetic.set(i, j, empirical_inverse_cdf(col, uniforms.get(i, j))?);
        }
    }
    Ok(assemble(x, y, split, synthetic, flags, vine, rng))
}
