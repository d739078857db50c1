use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling-series coefficients B_{2k} / (2k (2k-1)).
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Asymptotic coefficients B_{2k} / (2k) of ln x - psi(x) - 1/(2x).
const DIGAMMA_ASYMPTOTIC: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

const STIRLING_FROM: f64 = 10.0;
const DIGAMMA_FROM: f64 = 6.0;

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(function, format!("x = {x}, need finite x > 0")))
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(ln_gamma(x))
}

/// Digamma psi(x) = d/dx ln Gamma(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(psi(x))
}

/// ln(x) - psi(x), evaluated without the cancellation that the direct
/// difference suffers for large `x`. Strictly decreasing from +inf to 0.
pub fn log_minus_digamma(x: f64) -> Result<f64> {
    check_positive("log_minus_digamma", x)?;
    Ok(ln_minus_psi(x))
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x >= STIRLING_FROM {
        return stirling(x);
    }
    // Lift into the Stirling range: ln G(x) = ln G(x+k) - ln(x (x+1) ... (x+k-1)).
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < STIRLING_FROM {
        product *= shifted;
        shifted += 1.0;
    }
    stirling(shifted) - product.ln()
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for &c in STIRLING.iter().rev() {
        series = series * inv2 + c;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series * inv
}

pub(crate) fn psi(x: f64) -> f64 {
    let mut shifted = x;
    let mut acc = 0.0;
    while shifted < DIGAMMA_FROM {
        acc -= 1.0 / shifted;
        shifted += 1.0;
    }
    acc + shifted.ln() - asymptotic_ln_minus_psi(shifted)
}

pub(crate) fn ln_minus_psi(x: f64) -> f64 {
    if x >= DIGAMMA_FROM {
        return asymptotic_ln_minus_psi(x);
    }
    let mut shifted = x;
    let mut acc = 0.0;
    while shifted < DIGAMMA_FROM {
        acc += 1.0 / shifted;
        shifted += 1.0;
    }
    (x / shifted).ln() + acc + asymptotic_ln_minus_psi(shifted)
}

fn asymptotic_ln_minus_psi(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for &c in DIGAMMA_ASYMPTOTIC.iter().rev() {
        series = series * inv2 + c;
    }
    0.5 * inv + series * inv2
}
