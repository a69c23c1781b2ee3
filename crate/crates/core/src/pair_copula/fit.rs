//! Maximum-likelihood fitting of each candidate family and BIC selection.

use serde::{Deserialize, Serialize};

use super::{
    kendall::empirical_kendall_tau, tau_to_parameter, CopulaFamily, PairCopulaSpec,
    Rotation, CLAMP_EPS, CLAYTON_MAX, FRANK_MAX, GUMBEL_MAX, NU_MAX, NU_MIN, RHO_BOUND,
};
use crate::error::{Error, Result};
use crate::numerics::optimize::{brent_minimize, golden_section};
use crate::numerics::special::{norm_quantile, StudentT};

const BRENT_REL_TOL: f64 = 1e-8;
const BRENT_MAX_ITER: usize = 200;
const NU_GRID: [f64; 8] = [2.0, 3.0, 4.0, 6.0, 9.0, 14.0, 20.0, 30.0];
const NU_REFINE_TOL: f64 = 1e-3;
const NU_REFINE_MAX_ITER: usize = 60;
const CLAYTON_MIN: f64 = 1e-4;
const FRANK_MIN: f64 = 1e-4;
/// Smallest sample accepted by [`fit_pair_copula`].
pub const MIN_OBS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitFlag {
    /// One of the margins is constant; independence was returned.
    Degenerate,
    /// No candidate produced a finite likelihood; independence was returned.
    AllCandidatesFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub spec: PairCopulaSpec,
    pub flag: Option<FitFlag>,
}

/// Every family, with all four rotations of Clayton and Gumbel.
pub fn default_library() -> Vec<(CopulaFamily, Rotation)> {
    let mut lib = Vec::new();
    for family in CopulaFamily::ALL {
        if family.admits_rotation() {
            lib.extend(Rotation::ALL.iter().map(|&r| (family, r)));
        } else {
            lib.push((family, Rotation::R0));
        }
    }
    lib
}

/// Fits every `(family, rotation)` candidate in `library` to the
/// pseudo-observations `(u, v)` and keeps the one with the smallest BIC.
///
/// Exact BIC ties go to independence, then to fewer parameters, then to
/// the earlier candidate in library order.
pub fn fit_pair_copula(
    u: &[f64],
    v: &[f64],
    library: &[(CopulaFamily, Rotation)],
) -> Result<PairFit> {
    if u.len() != v.len() {
        return Err(Error::InvalidDimension(format!(
            "pair copula fit needs equal lengths, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    if library.is_empty() {
        return Err(Error::invalid("empty copula library"));
    }
    if let Some((f, r)) = library.iter().find(|(f, r)| *r != Rotation::R0 && !f.admits_rotation()) {
        return Err(Error::InvalidSpec(format!("{f} does not admit rotation {}", r.degrees())));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::invalid("pseudo-observations must be finite"));
    }
    let n = u.len();
    if n < MIN_OBS {
        return Err(Error::invalid(format!("pair copula fit needs at least {MIN_OBS} pairs, got {n}")));
    }
    let tau = empirical_kendall_tau(u, v)?;
    if tau.degenerate {
        let spec = PairCopulaSpec { n_obs: n, ..PairCopulaSpec::independence() };
        return Ok(PairFit { spec, flag: Some(FitFlag::Degenerate) });
    }
    let u: Vec<f64> = u.iter().map(|x| x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)).collect();
    let v: Vec<f64> = v.iter().map(|x| x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)).collect();
    let tau = tau.tau;

    let mut best: Option<PairCopulaSpec> = None;
    for &(family, rotation) in library {
        let Some(cand) = fit_candidate(family, rotation, &u, &v, tau) else { continue };
        if !cand.bic.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| prefer(&cand, b)) {
            best = Some(cand);
        }
    }
    Ok(match best {
        Some(spec) => PairFit { spec, flag: None },
        None => PairFit {
            spec: PairCopulaSpec { n_obs: n, ..PairCopulaSpec::independence() },
            flag: Some(FitFlag::AllCandidatesFailed),
        },
    })
}

// Strictly better than the incumbent; equal keys keep the earlier candidate.
fn prefer(cand: &PairCopulaSpec, inc: &PairCopulaSpec) -> bool {
    if cand.bic != inc.bic {
        return cand.bic < inc.bic;
    }
    if cand.is_independence() != inc.is_independence() {
        return cand.is_independence();
    }
    cand.family.arity() < inc.family.arity()
}

fn fit_candidate(
    family: CopulaFamily,
    rotation: Rotation,
    u: &[f64],
    v: &[f64],
    tau: f64,
) -> Option<PairCopulaSpec> {
    let n = u.len();
    let base_tau = rotation.tau_sign() * tau;
    let one_param = |lo: f64, hi: f64, start: Option<f64>| {
        let (bu, bv): (Vec<f64>, Vec<f64>) =
            u.iter().zip(v).map(|(&a, &b)| rotation.to_base(a, b)).unzip();
        let nll = |theta: f64| {
            let spec = PairCopulaSpec {
                family,
                rotation: Rotation::R0,
                params: vec![theta],
                ..PairCopulaSpec::independence()
            };
            let base = spec.base();
            -bu.iter().zip(&bv).map(|(&a, &b)| base.log_pdf(a, b)).sum::<f64>()
        };
        let res = brent_minimize(nll, lo, hi, start, BRENT_REL_TOL, BRENT_MAX_ITER);
        res.fx.is_finite().then(|| {
            PairCopulaSpec::fitted(family, rotation, vec![res.x], -res.fx, n)
        })
    };
    let start = |fam: CopulaFamily, t: f64| tau_to_parameter(fam, t).ok().map(|p| p[0]);

    match family {
        CopulaFamily::Independence => {
            Some(PairCopulaSpec { n_obs: n, ..PairCopulaSpec::independence() })
        }
        CopulaFamily::Gaussian => fit_gaussian(u, v, tau),
        CopulaFamily::StudentT => fit_student(u, v, tau),
        CopulaFamily::Clayton => {
            if base_tau <= 0.0 {
                return None;
            }
            one_param(CLAYTON_MIN, CLAYTON_MAX, start(family, base_tau))
        }
        CopulaFamily::Gumbel => {
            if base_tau <= 0.0 {
                return None;
            }
            one_param(1.0, GUMBEL_MAX, start(family, base_tau))
        }
        CopulaFamily::Frank => {
            if rotation != Rotation::R0 {
                return None;
            }
            let (lo, hi) = if tau >= 0.0 { (FRANK_MIN, FRANK_MAX) } else { (-FRANK_MAX, -FRANK_MIN) };
            one_param(lo, hi, start(family, tau))
        }
    }
}

fn fit_gaussian(u: &[f64], v: &[f64], tau: f64) -> Option<PairCopulaSpec> {
    let n = u.len() as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (x, y) = (norm_quantile(a), norm_quantile(b));
        sxx += x * x + y * y;
        sxy += x * y;
    }
    let nll = |rho: f64| {
        let r2 = 1.0 - rho * rho;
        0.5 * n * r2.ln() + (rho * rho * sxx - 2.0 * rho * sxy) / (2.0 * r2)
    };
    let start = (std::f64::consts::FRAC_PI_2 * tau).sin();
    let res = brent_minimize(nll, -RHO_BOUND, RHO_BOUND, Some(start), BRENT_REL_TOL, BRENT_MAX_ITER);
    res.fx.is_finite().then(|| {
        PairCopulaSpec::fitted(CopulaFamily::Gaussian, Rotation::R0, vec![res.x], -res.fx, u.len())
    })
}

// Profile likelihood in nu: rho is optimised by Brent for each nu.
fn fit_student(u: &[f64], v: &[f64], tau: f64) -> Option<PairCopulaSpec> {
    let start_rho = (std::f64::consts::FRAC_PI_2 * tau).sin();
    let profile = |nu: f64| -> (f64, f64) {
        let t = StudentT::new(nu);
        let xs: Vec<f64> = u.iter().map(|&a| t.quantile(a)).collect();
        let ys: Vec<f64> = v.iter().map(|&b| t.quantile(b)).collect();
        let konst = super::student_const(nu);
        let nll = |rho: f64| {
            -xs.iter()
                .zip(&ys)
                .map(|(&x, &y)| super::student_log_pdf(rho, nu, konst, x, y))
                .sum::<f64>()
        };
        let res =
            brent_minimize(nll, -RHO_BOUND, RHO_BOUND, Some(start_rho), BRENT_REL_TOL, BRENT_MAX_ITER);
        (res.x, res.fx)
    };

    let grid: Vec<(f64, f64)> = NU_GRID.iter().map(|&nu| profile(nu)).collect();
    let (best_i, _) = grid
        .iter()
        .enumerate()
        .filter(|(_, g)| g.1.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let lo = NU_GRID[best_i.saturating_sub(1)];
    let hi = NU_GRID[(best_i + 1).min(NU_GRID.len() - 1)];
    let (mut nu, (mut rho, mut fx)) = (NU_GRID[best_i], grid[best_i]);
    let refined = golden_section(|nu| profile(nu).1, lo, hi, NU_REFINE_TOL, NU_REFINE_MAX_ITER);
    if refined.fx.is_finite() && refined.fx < fx {
        nu = refined.x.clamp(NU_MIN, NU_MAX);
        (rho, fx) = profile(nu);
    }
    fx.is_finite().then(|| {
        PairCopulaSpec::fitted(CopulaFamily::StudentT, Rotation::R0, vec![rho, nu], -fx, u.len())
    })
}
