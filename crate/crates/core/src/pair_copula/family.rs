//! Unrotated, exchangeable bivariate copula families.
//!
//! Every family here satisfies `C(u, v) = C(v, u)`, which the rotation layer
//! relies on when it derives conditional distributions in the first argument.

use std::f64::consts::PI;

use crate::numerics::quadrature::adaptive_simpson;
use crate::numerics::special::{ln_gamma, norm_cdf, norm_quantile, StudentT};

#[derive(Debug, Clone, Copy)]
pub(crate) enum BaseCopula {
    Independence,
    Gaussian { rho: f64 },
    StudentT { rho: f64, nu: f64 },
    Clayton { theta: f64 },
    Gumbel { theta: f64 },
    Frank { theta: f64 },
}

impl BaseCopula {
    pub(crate) fn cdf(&self, u: f64, v: f64) -> f64 {
        match *self {
            BaseCopula::Independence => u * v,
            BaseCopula::Gaussian { rho } => {
                bvn_upper(-norm_quantile(u), -norm_quantile(v), rho)
            }
            BaseCopula::StudentT { .. } => {
                // C(u, v) = ∫_0^v h(u | s) ds; h is bounded and smooth in s.
                let f = |s: f64| if s <= 0.0 { 0.0 } else { self.h(u, s.min(1.0 - 1e-16)) };
                adaptive_simpson(f, 0.0, v, 1e-13, 45).clamp(0.0, u.min(v))
            }
            BaseCopula::Clayton { theta } => {
                let s = (-theta * u.ln()).exp_m1() + (-theta * v.ln()).exp();
                (-s.ln() / theta).exp()
            }
            BaseCopula::Gumbel { theta } => {
                let a = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
                (-a.powf(1.0 / theta)).exp()
            }
            BaseCopula::Frank { theta } => {
                let ln_d = frank_ln_abs_d(theta, u, v);
                let ln_c = (-theta).exp_m1().abs().ln();
                -(ln_d - ln_c) / theta
            }
        }
    }

    pub(crate) fn log_pdf(&self, u: f64, v: f64) -> f64 {
        match *self {
            BaseCopula::Independence => 0.0,
            BaseCopula::Gaussian { rho } => {
                gaussian_log_pdf(rho, norm_quantile(u), norm_quantile(v))
            }
            BaseCopula::StudentT { rho, nu } => {
                let t = StudentT::new(nu);
                student_log_pdf(rho, nu, student_const(nu), t.quantile(u), t.quantile(v))
            }
            BaseCopula::Clayton { theta } => {
                let (lu, lv) = (u.ln(), v.ln());
                let s = (-theta * lu).exp_m1() + (-theta * lv).exp();
                theta.ln_1p() - (1.0 + theta) * (lu + lv) - (2.0 + 1.0 / theta) * s.ln()
            }
            BaseCopula::Gumbel { theta } => {
                let (lx, ly) = (-u.ln(), -v.ln());
                let a = lx.powf(theta) + ly.powf(theta);
                let a_root = a.powf(1.0 / theta);
                -a_root - u.ln() - v.ln() + (theta - 1.0) * (lx.ln() + ly.ln())
                    + (1.0 / theta - 2.0) * a.ln()
                    + (a_root + theta - 1.0).ln()
            }
            BaseCopula::Frank { theta } => {
                theta.abs().ln() + (-theta).exp_m1().abs().ln()
                    - theta * (u + v)
                    - 2.0 * frank_ln_abs_d(theta, u, v)
            }
        }
    }

    /// `h(u | v) = ∂C(u, v) / ∂v`.
    pub(crate) fn h(&self, u: f64, v: f64) -> f64 {
        let h = match *self {
            BaseCopula::Independence => u,
            BaseCopula::Gaussian { rho } => {
                let (x, y) = (norm_quantile(u), norm_quantile(v));
                norm_cdf((x - rho * y) / (1.0 - rho * rho).sqrt())
            }
            BaseCopula::StudentT { rho, nu } => {
                let t = StudentT::new(nu);
                let (x, y) = (t.quantile(u), t.quantile(v));
                let scale = ((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                StudentT::new(nu + 1.0).cdf((x - rho * y) / scale)
            }
            BaseCopula::Clayton { theta } => {
                let lv = v.ln();
                let s = (-theta * u.ln()).exp_m1() + (-theta * lv).exp();
                ((-theta - 1.0) * lv + (-1.0 / theta - 1.0) * s.ln()).exp()
            }
            BaseCopula::Gumbel { theta } => {
                let (lx, ly) = (-u.ln(), -v.ln());
                let a = lx.powf(theta) + ly.powf(theta);
                let ln_h = -a.powf(1.0 / theta) + (1.0 / theta - 1.0) * a.ln()
                    + (theta - 1.0) * ly.ln()
                    - v.ln();
                ln_h.exp()
            }
            BaseCopula::Frank { theta } => {
                // e^{-θv} (e^{-θu} - 1) / D, numerator and D share a sign
                let num = (-theta * v).exp() * (-theta * u).exp_m1().abs();
                num / frank_ln_abs_d(theta, u, v).exp()
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// Closed-form inverse of `h(· | v)` when one exists.
    pub(crate) fn h_inverse_closed(&self, p: f64, v: f64) -> Option<f64> {
        match *self {
            BaseCopula::Independence => Some(p),
            BaseCopula::Gaussian { rho } => {
                let y = norm_quantile(v);
                Some(norm_cdf(norm_quantile(p) * (1.0 - rho * rho).sqrt() + rho * y))
            }
            BaseCopula::StudentT { rho, nu } => {
                let t = StudentT::new(nu);
                let y = t.quantile(v);
                let scale = ((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                let x = StudentT::new(nu + 1.0).quantile(p) * scale + rho * y;
                Some(t.cdf(x))
            }
            BaseCopula::Clayton { theta } => {
                let lv = v.ln();
                let a = (-theta / (theta + 1.0) * (p.ln() + (theta + 1.0) * lv)).exp();
                let s = a - (-theta * lv).exp_m1();
                Some((-s.ln() / theta).exp())
            }
            BaseCopula::Gumbel { .. } => None,
            BaseCopula::Frank { theta } => {
                let c = (-theta).exp_m1();
                let b = (-theta * v).exp_m1();
                let a = p * c / (1.0 + b * (1.0 - p));
                Some(-a.ln_1p() / theta)
            }
        }
    }

    pub(crate) fn kendall_tau(&self) -> f64 {
        match *self {
            BaseCopula::Independence => 0.0,
            BaseCopula::Gaussian { rho } | BaseCopula::StudentT { rho, .. } => {
                2.0 / PI * rho.asin()
            }
            BaseCopula::Clayton { theta } => theta / (theta + 2.0),
            BaseCopula::Gumbel { theta } => 1.0 - 1.0 / theta,
            BaseCopula::Frank { theta } => frank_tau(theta),
        }
    }
}

pub(crate) fn frank_tau(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    1.0 - 4.0 / theta * (1.0 - crate::numerics::special::debye1(theta))
}

// ln |e^{-θ} - 1 + (e^{-θu} - 1)(e^{-θv} - 1)| written as a sum of two
// same-signed terms so strong dependence does not cancel.
#[inline]
fn frank_ln_abs_d(theta: f64, u: f64, v: f64) -> f64 {
    let t1 = (-theta * u).exp() * (-theta * v).exp_m1();
    let t2 = (-theta * v).exp() * (-theta * (1.0 - v)).exp_m1();
    (t1 + t2).abs().ln()
}

#[inline]
pub(crate) fn gaussian_log_pdf(rho: f64, x: f64, y: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    -0.5 * r2.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)
}

/// Normalising constant of the bivariate t copula density.
#[inline]
pub(crate) fn student_const(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu) - 2.0 * ln_gamma(0.5 * (nu + 1.0))
}

#[inline]
pub(crate) fn student_log_pdf(rho: f64, nu: f64, konst: f64, x: f64, y: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    let quad = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2);
    konst - 0.5 * r2.ln() - 0.5 * (nu + 2.0) * quad.ln_1p()
        + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
}

const GL6_W: [f64; 3] = [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4];
const GL6_X: [f64; 3] = [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197];
const GL12_W: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const GL12_X: [f64; 6] = [
    0.981_560_634_246_719_1,
    0.904_117_256_370_475,
    0.769_902_674_194_305,
    0.587_317_954_286_617_1,
    0.367_831_498_998_180_2,
    0.125_233_408_511_469_2,
];
const GL20_W: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];
const GL20_X: [f64; 10] = [
    0.993_128_599_185_094_9,
    0.963_971_927_277_913_8,
    0.912_234_428_251_325_9,
    0.839_116_971_822_218_8,
    0.746_331_906_460_150_8,
    0.636_053_680_726_515,
    0.510_867_001_950_827_1,
    0.373_706_088_715_419_6,
    0.227_785_851_141_645_1,
    0.076_526_521_133_497_33,
];

/// Bivariate normal upper orthant probability `P(X > h, Y > k)` with
/// correlation `r` (Genz's refinement of the Drezner–Wesolowsky method).
pub(crate) fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { norm_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6_W, &GL6_X)
    } else if r.abs() < 0.75 {
        (&GL12_W, &GL12_X)
    } else {
        (&GL20_W, &GL20_X)
    };
    let tp = 2.0 * PI;
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for (wi, xi) in w.iter().zip(x) {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (1.0 + sign * xi)).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_s = 1.0 - r * r;
            let mut a = a_s.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / a_s + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let mut acc = 0.0;
            for (wi, xi) in w.iter().zip(x) {
                for sign in [-1.0, 1.0] {
                    let xs = (a * (1.0 + sign * xi)).powi(2);
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        acc += wi * asr.exp() * (sp - ep);
                    }
                }
            }
            bvn = (a * acc - bvn) / tp;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 { norm_cdf(k) - norm_cdf(h) } else { norm_cdf(-h) - norm_cdf(-k) };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}
