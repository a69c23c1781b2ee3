//! Bivariate copula families with rotations, conditional distributions
//! (h-functions), parameter estimation and BIC-based family selection.

mod family;
mod fit;
mod kendall;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use family::BaseCopula;

pub use fit::{default_library, fit_pair_copula, FitFlag, PairFit, MIN_OBS};
pub use kendall::{empirical_kendall_tau, KendallTau};

pub(crate) use family::{frank_tau, student_const, student_log_pdf};

/// Arguments are clamped into `[EPS, 1 - EPS]` before evaluation.
pub const CLAMP_EPS: f64 = 1e-10;

pub const RHO_BOUND: f64 = 0.9999;
pub const NU_MIN: f64 = 2.0;
pub const NU_MAX: f64 = 30.0;
pub const CLAYTON_MAX: f64 = 28.0;
pub const GUMBEL_MAX: f64 = 17.0;
pub const FRANK_MAX: f64 = 35.0;

const BISECTION_STEPS: usize = 200;
const INVERSE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CopulaFamily {
    Independence,
    Gaussian,
    StudentT,
    Clayton,
    Gumbel,
    Frank,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 6] = [
        CopulaFamily::Independence,
        CopulaFamily::Gaussian,
        CopulaFamily::StudentT,
        CopulaFamily::Clayton,
        CopulaFamily::Gumbel,
        CopulaFamily::Frank,
    ];

    pub fn arity(self) -> usize {
        match self {
            CopulaFamily::Independence => 0,
            CopulaFamily::StudentT => 2,
            _ => 1,
        }
    }

    /// Only the families without radial symmetry take non-zero rotations.
    pub fn admits_rotation(self) -> bool {
        matches!(self, CopulaFamily::Clayton | CopulaFamily::Gumbel)
    }

    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::StudentT => "student_t",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::Frank => "frank",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "independence" | "indep" => CopulaFamily::Independence,
            "gaussian" | "normal" => CopulaFamily::Gaussian,
            "student_t" | "studentt" | "t" => CopulaFamily::StudentT,
            "clayton" => CopulaFamily::Clayton,
            "gumbel" => CopulaFamily::Gumbel,
            "frank" => CopulaFamily::Frank,
            _ => return Err(Error::invalid(format!("unknown copula family {s:?}"))),
        })
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Counter-clockwise rotation of the copula's unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(deg: u16) -> Result<Self> {
        match deg {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            _ => Err(Error::InvalidSpec(format!("rotation must be 0, 90, 180 or 270, got {deg}"))),
        }
    }

    /// Rotation of `C(v, u)` when the copula is `C(u, v)` rotated by `self`.
    pub fn transposed(self) -> Rotation {
        match self {
            Rotation::R90 => Rotation::R270,
            Rotation::R270 => Rotation::R90,
            r => r,
        }
    }

    /// Maps data on the rotated scale to the argument of the base density.
    #[inline]
    pub(crate) fn to_base(self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Rotation::R0 => (u, v),
            Rotation::R90 => (1.0 - u, v),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (u, 1.0 - v),
        }
    }

    /// Sign applied to the base family's Kendall tau.
    pub fn tau_sign(self) -> f64 {
        match self {
            Rotation::R90 | Rotation::R270 => -1.0,
            _ => 1.0,
        }
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}

impl TryFrom<u16> for Rotation {
    type Error = Error;
    fn try_from(deg: u16) -> Result<Self> {
        Rotation::from_degrees(deg)
    }
}

/// A fitted (or hand-specified) bivariate copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCopulaSpec {
    pub family: CopulaFamily,
    pub rotation: Rotation,
    pub params: Vec<f64>,
    pub loglik: f64,
    pub bic: f64,
    pub n_obs: usize,
}

impl PairCopulaSpec {
    pub fn independence() -> Self {
        PairCopulaSpec {
            family: CopulaFamily::Independence,
            rotation: Rotation::R0,
            params: Vec::new(),
            loglik: 0.0,
            bic: 0.0,
            n_obs: 1,
        }
    }

    /// Validated spec with no fit attached (`loglik = bic = 0`, `n_obs = 1`).
    pub fn new(family: CopulaFamily, rotation: Rotation, params: Vec<f64>) -> Result<Self> {
        let spec = PairCopulaSpec { family, rotation, params, loglik: 0.0, bic: 0.0, n_obs: 1 };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn fitted(
        family: CopulaFamily,
        rotation: Rotation,
        params: Vec<f64>,
        loglik: f64,
        n_obs: usize,
    ) -> Self {
        if family == CopulaFamily::Independence {
            return PairCopulaSpec { n_obs, ..PairCopulaSpec::independence() };
        }
        let bic = bic(family.arity(), n_obs, loglik);
        PairCopulaSpec { family, rotation, params, loglik, bic, n_obs }
    }

    pub fn is_independence(&self) -> bool {
        self.family == CopulaFamily::Independence
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family;
        if self.params.len() != fam.arity() {
            return Err(Error::InvalidSpec(format!(
                "{fam} takes {} parameter(s), got {}",
                fam.arity(),
                self.params.len()
            )));
        }
        if self.rotation != Rotation::R0 && !fam.admits_rotation() {
            return Err(Error::InvalidSpec(format!("{fam} only admits rotation 0")));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSpec(format!("{fam} has non-finite parameters")));
        }
        let ok = match fam {
            CopulaFamily::Independence => true,
            CopulaFamily::Gaussian => self.params[0].abs() < 1.0,
            CopulaFamily::StudentT => {
                self.params[0].abs() < 1.0 && (NU_MIN..=NU_MAX).contains(&self.params[1])
            }
            CopulaFamily::Clayton => self.params[0] > 0.0 && self.params[0] <= CLAYTON_MAX,
            CopulaFamily::Gumbel => (1.0..=GUMBEL_MAX).contains(&self.params[0]),
            CopulaFamily::Frank => self.params[0] != 0.0 && self.params[0].abs() <= FRANK_MAX,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("{fam} parameters {:?} out of bounds", self.params)))
        }
    }

    pub(crate) fn base(&self) -> BaseCopula {
        match self.family {
            CopulaFamily::Independence => BaseCopula::Independence,
            CopulaFamily::Gaussian => BaseCopula::Gaussian { rho: self.params[0] },
            CopulaFamily::StudentT => BaseCopula::StudentT { rho: self.params[0], nu: self.params[1] },
            CopulaFamily::Clayton => BaseCopula::Clayton { theta: self.params[0] },
            CopulaFamily::Gumbel => BaseCopula::Gumbel { theta: self.params[0] },
            CopulaFamily::Frank => BaseCopula::Frank { theta: self.params[0] },
        }
    }

    /// Kendall's tau implied by the family parameters.
    pub fn kendall_tau(&self) -> f64 {
        self.rotation.tau_sign() * self.base().kendall_tau()
    }

    /// Same copula with its arguments swapped.
    pub fn transposed(&self) -> PairCopulaSpec {
        PairCopulaSpec { rotation: self.rotation.transposed(), ..self.clone() }
    }
}

/// `k ln n - 2 loglik`.
pub fn bic(arity: usize, n_obs: usize, loglik: f64) -> f64 {
    arity as f64 * (n_obs as f64).ln() - 2.0 * loglik
}

#[inline]
fn clamp_unit(x: f64) -> f64 {
    x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

fn check_args(u: f64, v: f64) -> Result<(f64, f64)> {
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::invalid(format!("non-finite copula argument ({u}, {v})")));
    }
    Ok((clamp_unit(u), clamp_unit(v)))
}

/// Pair copula with validated parameters; the hot paths of fitting and vine
/// evaluation go through this instead of the checked free functions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairEval {
    base: BaseCopula,
    rotation: Rotation,
}

impl PairEval {
    pub(crate) fn new(spec: &PairCopulaSpec) -> Result<Self> {
        spec.validate()?;
        Ok(PairEval { base: spec.base(), rotation: spec.rotation })
    }

    pub(crate) fn is_independence(&self) -> bool {
        matches!(self.base, BaseCopula::Independence)
    }

    pub(crate) fn cdf(&self, u: f64, v: f64) -> f64 {
        let b = &self.base;
        let c = match self.rotation {
            Rotation::R0 => b.cdf(u, v),
            Rotation::R90 => v - b.cdf(1.0 - u, v),
            Rotation::R180 => u + v - 1.0 + b.cdf(1.0 - u, 1.0 - v),
            Rotation::R270 => u - b.cdf(u, 1.0 - v),
        };
        c.clamp(0.0, 1.0)
    }

    #[inline]
    pub(crate) fn log_pdf(&self, u: f64, v: f64) -> f64 {
        let (bu, bv) = self.rotation.to_base(u, v);
        self.base.log_pdf(bu, bv)
    }

    /// `∂C(u, v) / ∂v`.
    #[inline]
    pub(crate) fn h(&self, u: f64, v: f64) -> f64 {
        let b = &self.base;
        match self.rotation {
            Rotation::R0 => b.h(u, v),
            Rotation::R90 => 1.0 - b.h(1.0 - u, v),
            Rotation::R180 => 1.0 - b.h(1.0 - u, 1.0 - v),
            Rotation::R270 => b.h(u, 1.0 - v),
        }
    }

    /// `∂C(u, v) / ∂u`, the conditional distribution of `v` given `u`.
    #[inline]
    pub(crate) fn h_given_u(&self, u: f64, v: f64) -> f64 {
        self.transposed().h(v, u)
    }

    #[inline]
    fn transposed(&self) -> PairEval {
        PairEval { base: self.base, rotation: self.rotation.transposed() }
    }

    /// Solves `h(u | v) = p` for `u`.
    pub(crate) fn h_inverse(&self, p: f64, v: f64) -> Result<f64> {
        let p = clamp_unit(p);
        let v = clamp_unit(v);
        let b = &self.base;
        let closed = match self.rotation {
            Rotation::R0 => b.h_inverse_closed(p, v),
            Rotation::R90 => b.h_inverse_closed(1.0 - p, v).map(|x| 1.0 - x),
            Rotation::R180 => b.h_inverse_closed(1.0 - p, 1.0 - v).map(|x| 1.0 - x),
            Rotation::R270 => b.h_inverse_closed(p, 1.0 - v),
        };
        match closed {
            Some(u) if u.is_finite() => Ok(clamp_unit(u)),
            Some(_) => Err(Error::NumericFailure(format!(
                "closed-form inverse h-function not finite at p={p}, v={v}"
            ))),
            None => self.h_inverse_bisect(p, v),
        }
    }

    /// Solves `∂C(u, v)/∂u = p` for `v`.
    #[inline]
    pub(crate) fn h_given_u_inverse(&self, p: f64, u: f64) -> Result<f64> {
        self.transposed().h_inverse(p, u)
    }

    fn h_inverse_bisect(&self, p: f64, v: f64) -> Result<f64> {
        let mut lo = CLAMP_EPS;
        let mut hi = 1.0 - CLAMP_EPS;
        let h_lo = self.h(lo, v);
        let h_hi = self.h(hi, v);
        if !h_lo.is_finite() || !h_hi.is_finite() {
            return Err(Error::NumericFailure(format!("h-function not finite at v={v}")));
        }
        if p <= h_lo {
            return Ok(lo);
        }
        if p >= h_hi {
            return Ok(hi);
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let hm = self.h(mid, v);
            if !hm.is_finite() {
                return Err(Error::NumericFailure(format!("h-function not finite at ({mid}, {v})")));
            }
            if (hm - p).abs() < INVERSE_TOL {
                return Ok(mid);
            }
            if hm < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                // bracket collapsed to adjacent floats around a jump in h
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::NumericFailure(format!(
            "inverse h-function did not converge after {BISECTION_STEPS} bisection steps (p={p}, v={v})"
        )))
    }
}

/// `C(u, v)`.
pub fn copula_cdf(spec: &PairCopulaSpec, u: f64, v: f64) -> Result<f64> {
    let (u, v) = check_args(u, v)?;
    Ok(PairEval::new(spec)?.cdf(u, v))
}

/// `ln c(u, v)`.
pub fn copula_log_density(spec: &PairCopulaSpec, u: f64, v: f64) -> Result<f64> {
    let (u, v) = check_args(u, v)?;
    let ld = PairEval::new(spec)?.log_pdf(u, v);
    if ld.is_nan() {
        return Err(Error::NumericFailure(format!("log density undefined at ({u}, {v})")));
    }
    Ok(ld)
}

/// `h(u | v) = ∂C(u, v) / ∂v`.
pub fn h_function(spec: &PairCopulaSpec, u: f64, v: f64) -> Result<f64> {
    let (u, v) = check_args(u, v)?;
    Ok(PairEval::new(spec)?.h(u, v))
}

/// `∂C(u, v) / ∂u`.
pub fn h_function_given_u(spec: &PairCopulaSpec, u: f64, v: f64) -> Result<f64> {
    let (u, v) = check_args(u, v)?;
    Ok(PairEval::new(spec)?.h_given_u(u, v))
}

/// The `u` with `h(u | v) = p`.
pub fn inverse_h_function(spec: &PairCopulaSpec, p: f64, v: f64) -> Result<f64> {
    let (p, v) = check_args(p, v)?;
    PairEval::new(spec)?.h_inverse(p, v)
}

/// Moment-style initial parameters from Kendall's tau.
///
/// Clayton and Gumbel only reach non-negative tau; negative dependence is
/// handled by fitting their 90/270 degree rotations. Student-t gets the
/// Gaussian correlation paired with a moderate `nu`.
pub fn tau_to_parameter(family: CopulaFamily, tau: f64) -> Result<Vec<f64>> {
    let unattainable = || Error::UnattainableTau { family: family.to_string(), tau };
    if !(tau > -1.0 && tau < 1.0) {
        return Err(unattainable());
    }
    match family {
        CopulaFamily::Independence => Ok(Vec::new()),
        CopulaFamily::Gaussian => Ok(vec![(std::f64::consts::FRAC_PI_2 * tau).sin()]),
        CopulaFamily::StudentT => Ok(vec![(std::f64::consts::FRAC_PI_2 * tau).sin(), 8.0]),
        CopulaFamily::Clayton => {
            let theta = 2.0 * tau / (1.0 - tau);
            if tau > 0.0 && theta <= CLAYTON_MAX {
                Ok(vec![theta])
            } else {
                Err(unattainable())
            }
        }
        CopulaFamily::Gumbel => {
            let theta = 1.0 / (1.0 - tau);
            if tau >= 0.0 && theta <= GUMBEL_MAX {
                Ok(vec![theta])
            } else {
                Err(unattainable())
            }
        }
        CopulaFamily::Frank => {
            let max_tau = frank_tau(FRANK_MAX);
            if tau == 0.0 || tau.abs() > max_tau {
                return Err(unattainable());
            }
            let (lo, hi) = if tau > 0.0 { (1e-12, FRANK_MAX) } else { (-FRANK_MAX, -1e-12) };
            crate::numerics::optimize::bisect_root(|t| frank_tau(t) - tau, lo, hi, 1e-12, 200)
                .map(|t| vec![t])
                .ok_or_else(unattainable)
        }
    }
}
