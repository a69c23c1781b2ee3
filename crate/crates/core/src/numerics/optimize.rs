//! Bounded scalar minimisation and root bracketing.

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt(5)) / 2

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Brent's method on `[lo, hi]`.
///
/// `start`, when inside the interval, replaces the first golden-section probe
/// so the search begins at a caller-supplied estimate.
pub fn brent_minimize<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    start: Option<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> ScalarMin
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let abs_tol = 1e-12;
    let mut x = match start {
        Some(s) if s > a && s < b => s,
        _ => a + GOLDEN * (b - a),
    };
    let mut w = x;
    let mut v = x;
    let mut fx = guard(f(x));
    let mut fw = fx;
    let mut fv = fx;
    let mut d = 0.0_f64;
    let mut e = 0.0_f64;

    for iter in 0..max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            return ScalarMin { x, fx, iterations: iter, converged: true };
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            // parabolic fit through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(mid - x);
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = guard(f(u));
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    ScalarMin { x, fx, iterations: max_iter, converged: false }
}

/// Plain golden-section search on `[lo, hi]`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> ScalarMin
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - (1.0 - GOLDEN) * (b - a);
    let mut d = a + (1.0 - GOLDEN) * (b - a);
    let mut fc = guard(f(c));
    let mut fd = guard(f(d));
    for iter in 0..max_iter {
        if (b - a).abs() <= rel_tol * (c.abs() + d.abs()) + 1e-12 {
            let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
            return ScalarMin { x, fx, iterations: iter, converged: true };
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (1.0 - GOLDEN) * (b - a);
            fc = guard(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (1.0 - GOLDEN) * (b - a);
            fd = guard(f(d));
        }
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    ScalarMin { x, fx, iterations: max_iter, converged: false }
}

/// Bisection for a root of a function with a sign change on `[lo, hi]`.
pub fn bisect_root<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() <= x_tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

// NaN objective values become +inf so the search steers away from them.
#[inline]
fn guard(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let r = brent_minimize(|x| (x - 1.234).powi(2) + 3.0, -10.0, 10.0, None, 1e-10, 200);
        assert!(r.converged);
        assert!((r.x - 1.234).abs() < 1e-6);
        let r = brent_minimize(|x| (x - 1.234).powi(2), -10.0, 10.0, Some(1.0), 1e-10, 200);
        assert!((r.x - 1.234).abs() < 1e-8);
    }

    #[test]
    fn brent_respects_bounds() {
        let r = brent_minimize(|x| x, 2.0, 5.0, None, 1e-10, 200);
        assert!(r.x >= 2.0 && r.x < 2.0 + 1e-6);
    }

    #[test]
    fn golden_section_on_cosine() {
        let r = golden_section(f64::cos, 2.0, 4.5, 1e-10, 500);
        assert!((r.x - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn bisection_root() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect_root(|x| x * x + 1.0, 0.0, 2.0, 1e-14, 200).is_none());
    }
}
