//! Normal and Student-t distribution functions.
//!
//! The t distribution is evaluated through the regularized incomplete beta
//! function; its quantile is a safeguarded Newton iteration on the log tail.

use std::f64::consts::{PI, SQRT_2};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 500;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal quantile (Wichura's AS241), polished with one Halley step.
pub fn norm_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    let mut x = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * poly(
            r,
            &[
                3.387_132_872_796_366_608,
                133.141_667_891_784_377_45,
                1_971.590_950_306_551_442_7,
                13_731.693_765_509_461_125,
                45_921.953_931_549_871_457,
                67_265.770_927_008_700_853,
                33_430.575_583_588_128_105,
                2_509.080_928_730_122_672_7,
            ],
        ) / poly(
            r,
            &[
                1.0,
                42.313_330_701_600_911_252,
                687.187_007_492_057_908_3,
                5_394.196_021_424_751_107_7,
                21_213.794_301_586_595_867,
                39_307.895_800_092_710_61,
                28_729.085_735_721_942_674,
                5_226.495_278_852_854_561,
            ],
        )
    } else {
        let tail = if q < 0.0 { p } else { 1.0 - p };
        let mut r = (-tail.ln()).sqrt();
        let v = if r <= 5.0 {
            r -= 1.6;
            poly(
                r,
                &[
                    1.423_437_110_749_683_577_34,
                    4.630_337_846_156_545_295_9,
                    5.769_497_221_460_691_405_5,
                    3.647_848_324_763_204_605_04,
                    1.270_458_252_452_368_382_58,
                    0.241_780_725_177_450_611_77,
                    0.022_723_844_989_269_184_583_3,
                    7.745_450_142_783_414_076_4e-4,
                ],
            ) / poly(
                r,
                &[
                    1.0,
                    2.053_191_626_637_758_821_87,
                    1.676_384_830_183_803_849_4,
                    0.689_767_334_985_100_004_55,
                    0.148_103_976_427_480_074_59,
                    0.015_198_666_563_616_457_196_6,
                    5.475_938_084_995_344_946e-4,
                    1.050_750_071_644_416_843_24e-9,
                ],
            )
        } else {
            r -= 5.0;
            poly(
                r,
                &[
                    6.657_904_643_501_103_777_2,
                    5.463_784_911_164_114_369_9,
                    1.784_826_539_917_291_335_8,
                    0.296_560_571_828_504_891_23,
                    0.026_532_189_526_576_123_093,
                    0.001_242_660_947_388_078_438_6,
                    2.711_555_568_743_487_578_15e-5,
                    2.010_334_399_292_288_132_65e-7,
                ],
            ) / poly(
                r,
                &[
                    1.0,
                    0.599_832_206_555_887_937_69,
                    0.136_929_880_922_735_805_31,
                    0.014_875_361_290_850_614_852_5,
                    7.868_691_311_456_132_591e-4,
                    1.846_318_317_510_054_681_8e-5,
                    1.421_511_758_316_445_888_7e-7,
                    2.044_263_103_389_939_785_64e-15,
                ],
            )
        };
        if q < 0.0 {
            -v
        } else {
            v
        }
    };
    // Halley refinement against the lower tail for p < 0.5 and the upper tail
    // otherwise, so tiny tail probabilities keep full relative accuracy.
    let pdf = norm_pdf(x);
    if pdf > 0.0 {
        let err = if p < 0.5 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
        let u = err / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[inline]
fn poly(x: f64, coef: &[f64]) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Regularized incomplete beta `I_x(a, b)`; `y` must equal `1 - x` and is
/// passed separately so callers can avoid cancellation.
pub fn beta_reg_xy(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

#[inline]
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_xy(a, b, x, 1.0 - x)
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Student-t distribution with `nu > 0` degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct StudentT {
    nu: f64,
    ln_norm: f64,
}

impl StudentT {
    pub fn new(nu: f64) -> Self {
        let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
        StudentT { nu, ln_norm }
    }

    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    #[inline]
    pub fn ln_pdf(&self, t: f64) -> f64 {
        self.ln_norm - 0.5 * (self.nu + 1.0) * (t * t / self.nu).ln_1p()
    }

    #[inline]
    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        if t == 0.0 {
            return 0.5;
        }
        if t.is_infinite() {
            return if t > 0.0 { 1.0 } else { 0.0 };
        }
        let nu = self.nu;
        let t2 = t * t;
        if t2 < nu {
            // P(|T| < |t|) = I_{t²/(ν+t²)}(1/2, ν/2)
            let w = beta_reg_xy(0.5, 0.5 * nu, t2 / (nu + t2), nu / (nu + t2));
            0.5 + 0.5 * w.copysign(t)
        } else {
            let tail = 0.5 * beta_reg_xy(0.5 * nu, 0.5, nu / (nu + t2), t2 / (nu + t2));
            if t > 0.0 {
                1.0 - tail
            } else {
                tail
            }
        }
    }

    /// Upper tail probability `P(T > t)`.
    #[inline]
    pub fn sf(&self, t: f64) -> f64 {
        self.cdf(-t)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return f64::NAN;
        }
        if p == 0.5 {
            return 0.0;
        }
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        if p == 1.0 {
            return f64::INFINITY;
        }
        let (tail, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
        sign * self.upper_quantile(tail)
    }

    // Solves sf(t) = q for t > 0, q in (0, 0.5) by safeguarded Newton
    // iteration on ln sf, started from Hill's approximation.
    fn upper_quantile(&self, q: f64) -> f64 {
        let ln_q = q.ln();
        let mut t = hill_upper_quantile(q, self.nu);
        if !t.is_finite() || t <= 0.0 {
            t = (-norm_quantile(q)).max(1e-3);
        }
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        for _ in 0..200 {
            let s = self.sf(t);
            if s > q {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            let f = s.ln() - ln_q;
            if f.abs() < 1e-15 {
                break;
            }
            let mut next = t + f * s / self.pdf(t);
            if !next.is_finite() || next <= lo || next >= hi {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t.max(lo) };
            }
            let step = (next - t).abs();
            t = next;
            if step <= 1e-15 * t || hi - lo <= 1e-15 * t {
                break;
            }
        }
        t
    }
}

/// Hill's (1970) closed-form approximation of the upper `q` quantile.
fn hill_upper_quantile(q: f64, n: f64) -> f64 {
    let p = 2.0 * q;
    if n == 1.0 {
        return 1.0 / (0.5 * PI * p).tan();
    }
    if n == 2.0 {
        return (2.0 / (p * (2.0 - p)) - 2.0).sqrt();
    }
    let a = 1.0 / (n - 0.5);
    let b = 48.0 / (a * a);
    let mut c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
    let d = ((94.5 / (b + c) - 3.0) / b + 1.0) * (a * PI / 2.0).sqrt() * n;
    let x = d * p;
    let mut y = x.powf(2.0 / n);
    if y > 0.05 + a {
        let x = norm_quantile(0.5 * p);
        y = x * x;
        if n < 5.0 {
            c += 0.3 * (n - 4.5) * (x + 0.6);
        }
        c += (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b;
        y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
        y = (a * y * y).exp_m1();
    } else {
        y = ((1.0 / (((n + 6.0) / (n * y) - 0.089 * d - 0.822) * (n + 2.0) * 3.0) + 0.5 / (n + 4.0)) * y
            - 1.0)
            * (n + 1.0)
            / (n + 2.0)
            + 1.0 / y;
    }
    (n * y).sqrt()
}

/// Upper tail probability of the Student-t distribution.
pub fn student_t_sf(t: f64, df: u32) -> f64 {
    StudentT::new(f64::from(df)).sf(t)
}

/// Debye function of the first kind, `D1(x) = (1/x) ∫_0^x t/(e^t - 1) dt`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    crate::numerics::quadrature::adaptive_simpson(integrand, 0.0, x, 1e-13, 50) / x
}
