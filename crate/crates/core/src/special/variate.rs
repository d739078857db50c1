use crate::error::{Error, Result};
use crate::rng::RngStream;

/// One Gamma(shape, scale) variate (mean shape * scale).
///
/// Marsaglia-Tsang squeeze for shape >= 1; smaller shapes are boosted to
/// shape + 1 and multiplied by U^{1/shape}.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::domain("sample_gamma", format!("shape = {shape}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain("sample_gamma", format!("scale = {scale}")));
    }
    Ok(gamma_variate(shape, scale, rng))
}

pub(crate) fn gamma_variate(shape: f64, scale: f64, rng: &mut RngStream) -> f64 {
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        let u = rng.uniform();
        // log space: U^{1/shape} underflows quickly for small shapes
        let x = (boosted.ln() + u.ln() / shape).exp();
        return x.max(f64::MIN_POSITIVE) * scale;
    }
    marsaglia_tsang(shape, rng) * scale
}

fn marsaglia_tsang(shape: f64, rng: &mut RngStream) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}
