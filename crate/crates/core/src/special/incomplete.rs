use super::gamma::ln_gamma;
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const TINY: f64 = 1e-300;

fn check_args(function: &'static str, a: f64, x: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain(function, format!("a = {a}, need finite a > 0")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(function, format!("x = {x}, need x >= 0")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_args("reg_lower_gamma", a, x)?;
    Ok(lower(a, x))
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly so the right tail keeps its relative precision.
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    check_args("reg_upper_gamma", a, x)?;
    Ok(upper(a, x))
}

pub(crate) fn lower(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else if x < a + 1.0 {
        series(a, x)
    } else {
        1.0 - continued_fraction(a, x)
    }
}

pub(crate) fn upper(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else if x < a + 1.0 {
        1.0 - series(a, x)
    } else {
        continued_fraction(a, x)
    }
}

/// log of x^a e^{-x} / Gamma(a).
fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

fn series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut total = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        total += term;
        if term.abs() < total.abs() * EPS {
            break;
        }
    }
    (total * log_prefactor(a, x).exp()).min(1.0)
}

/// Q(a, x) by the Legendre continued fraction, modified Lentz evaluation.
fn continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (log_prefactor(a, x).exp() * h).clamp(0.0, 1.0)
}

/// Rational approximation of the standard normal quantile (Abramowitz and
/// Stegun 26.2.23, |error| < 4.5e-4). Only used to seed Newton.
fn normal_quantile_rough(u: f64) -> f64 {
    let (p, sign) = if u < 0.5 { (u, -1.0) } else { (1.0 - u, 1.0) };
    let t = (-2.0 * p.ln()).sqrt();
    let num = 2.515_517 + t * (0.802_853 + t * 0.010_328);
    let den = 1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308));
    sign * (t - num / den)
}

fn initial_guess(a: f64, u: f64) -> f64 {
    if a > 1.0 {
        // Wilson-Hilferty cube-root normal approximation.
        let z = normal_quantile_rough(u);
        let k = 1.0 / (9.0 * a);
        let x = a * (1.0 - k + z * k.sqrt()).powi(3);
        if x > 0.0 {
            x
        } else {
            // Far left tail: P(a, x) ~ x^a / Gamma(a + 1).
            ((u.ln() + ln_gamma(a + 1.0)) / a).exp()
        }
    } else {
        let t = 1.0 - a * (0.253 + a * 0.12);
        if u < t {
            (u / t).powf(1.0 / a)
        } else {
            1.0 - (1.0 - (u - t) / (1.0 - t)).ln()
        }
    }
}

/// Inverse of P(a, .): the x > 0 with P(a, x) = u, for 0 < u < 1.
///
/// Wilson-Hilferty starting point polished by Newton steps that are kept
/// inside a shrinking bisection bracket.
pub fn inv_reg_lower_gamma(a: f64, u: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain("inv_reg_lower_gamma", format!("a = {a}, need finite a > 0")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain("inv_reg_lower_gamma", format!("u = {u}, need 0 < u < 1")));
    }
    Ok(invert(a, u))
}

pub(crate) fn invert(a: f64, u: f64) -> f64 {
    // Solve in the tail with the better relative precision.
    let use_upper = u > 0.5;
    let target = if use_upper { 1.0 - u } else { u };
    // residual(x) is increasing in x either way.
    let residual = |x: f64| {
        if use_upper {
            target - upper(a, x)
        } else {
            lower(a, x) - target
        }
    };
    let ln_ga = ln_gamma(a);

    let mut x = initial_guess(a, u).max(f64::MIN_POSITIVE);
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..200 {
        let r = residual(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = ((a - 1.0) * x.ln() - x - ln_ga).exp();
        let mut next = x - r / density;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * x.max(1.0)
            };
        }
        if (next - x).abs() <= 1e-15 * x {
            return next;
        }
        x = next;
        if hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * hi {
            return 0.5 * (lo + hi);
        }
    }
    x
}
