//! Density, distribution function, quantiles, sampling and moments of the
//! family with generator T1 and its power extension Y = X^{1/p}.

use crate::error::{Error, Result};
use crate::generator::{FamilyClass, Generator};
use crate::rng::RngStream;
use crate::special::{gamma_variate, inv_lower_unchecked, ln_gamma, lower_unchecked, upper_unchecked};
use crate::sum::{Accumulator, MeanVar};

/// Canonical parameters (mu, sigma) plus the power p (1 for the base family).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub mu: f64,
    pub sigma: f64,
    pub power: f64,
}

impl FamilyParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        Self::with_power(mu, sigma, 1.0)
    }

    pub fn with_power(mu: f64, sigma: f64, power: f64) -> Result<Self> {
        for (name, v) in [("mu", mu), ("sigma", sigma), ("power", power)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain("FamilyParams", format!("{name} = {v}, need finite > 0")));
            }
        }
        Ok(Self { mu, sigma, power })
    }

    /// Shape and scale of Z = T1(Y^p) ~ Gamma(mu, 1/(mu sigma)).
    pub fn gamma_shape_scale(&self) -> (f64, f64) {
        (self.mu, 1.0 / (self.mu * self.sigma))
    }
}

/// A sample of strictly positive observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    mean_log: f64,
    all_equal: bool,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonpositiveObservation { index, value });
        }
        let mean_log = values.iter().map(|v| v.ln()).collect::<Accumulator>().mean();
        let all_equal = values.iter().all(|v| *v == values[0]);
        Ok(Self {
            values,
            mean_log,
            all_equal,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// (1/n) sum ln Y_i.
    pub fn mean_log(&self) -> f64 {
        self.mean_log
    }

    pub fn all_equal(&self) -> bool {
        self.all_equal
    }

    /// The transformed sample {Y_i^p}.
    pub fn powered(&self, p: f64) -> Result<Sample> {
        Sample::new(self.values.iter().map(|y| y.powf(p)).collect())
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sample::new(values)
    }
}

fn check_y(y: f64) -> Result<()> {
    if y.is_finite() && y > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("density", format!("y = {y}, need finite y > 0")))
    }
}

/// ln f(y; mu, sigma, p).
pub fn log_pdf(y: f64, params: &FamilyParams, g: &Generator) -> Result<f64> {
    check_y(y)?;
    let FamilyParams { mu, sigma, power: p } = *params;
    let x = y.powf(p);
    let jet = g.jet(x);
    let t1 = jet.log_value.exp();
    if !t1.is_finite() || !jet.log_value.is_finite() || !jet.dlog.is_finite() {
        return Err(Error::Overflow("T1(y^p) in log_pdf"));
    }
    // ln|T1'(x)| - ln T1(x) = ln|L'(x)|
    let value = p.ln() + mu * (mu * sigma).ln() - ln_gamma(mu) + jet.dlog.abs().ln()
        + (p - 1.0) * y.ln()
        - mu * sigma * t1
        + mu * jet.log_value;
    if value.is_nan() {
        return Err(Error::Overflow("log_pdf"));
    }
    Ok(value)
}

pub fn pdf(y: f64, params: &FamilyParams, g: &Generator) -> Result<f64> {
    log_pdf(y, params, g).map(f64::exp)
}

/// P(Y <= y). T1(Y^p) is Gamma(mu, 1/(mu sigma)); decreasing generators
/// flip the tail.
pub fn cdf(y: f64, params: &FamilyParams, g: &Generator) -> Result<f64> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::domain("cdf", format!("y = {y}")));
    }
    let increasing = g.is_increasing();
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(1.0);
    }
    let rate_arg = params.mu * params.sigma * g.log_value(y.powf(params.power)).exp();
    let rate_arg = if rate_arg.is_nan() { f64::INFINITY } else { rate_arg };
    Ok(if increasing {
        lower_unchecked(params.mu, rate_arg)
    } else {
        upper_unchecked(params.mu, rate_arg)
    })
}

/// Quantile at level `u` in (0, 1).
pub fn quantile(u: f64, params: &FamilyParams, g: &Generator) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain("quantile", format!("u = {u}, need 0 < u < 1")));
    }
    // Z* = 1/Z reflection: Q_{Z*}(u) = 1 / Q_Z(1 - u).
    let level = if g.is_increasing() { u } else { 1.0 - u };
    let standard = inv_lower_unchecked(params.mu, level);
    let log_z = standard.ln() - (params.mu * params.sigma).ln();
    let x = g.inverse_log(log_z)?;
    Ok(x.powf(1.0 / params.power))
}

/// n independent draws Y = [T1^{-1}(Z)]^{1/p}, Z ~ Gamma(mu, 1/(mu sigma)).
pub fn sample(n: usize, params: &FamilyParams, g: &Generator, rng: &mut RngStream) -> Result<Sample> {
    Sample::new(draw_values(n, params, g, rng)?)
}

pub(crate) fn draw_values(
    n: usize,
    params: &FamilyParams,
    g: &Generator,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let (shape, scale) = params.gamma_shape_scale();
    let inv_p = 1.0 / params.power;
    (0..n)
        .map(|_| {
            let z = gamma_variate(shape, scale, rng);
            let x = g.inverse_log(z.ln())?;
            Ok(if inv_p == 1.0 { x } else { x.powf(inv_p) })
        })
        .collect()
}

/// E[Y^q] for a power-law generator T1(x) = c x^{-s}.
pub fn moment_power_law(q: f64, params: &FamilyParams, c: f64, s: f64) -> Result<f64> {
    if !(c > 0.0 && s != 0.0 && s.is_finite()) {
        return Err(Error::domain("moment_power_law", format!("c = {c}, s = {s}")));
    }
    let k = q / (params.power * s);
    let shifted = params.mu - k;
    if !(shifted > 0.0) {
        return Err(Error::MomentDoesNotExist {
            q,
            reason: format!("mu - q/(p s) = {shifted} is not positive"),
        });
    }
    Ok((k * (params.mu * params.sigma / c).ln() + ln_gamma(shifted) - ln_gamma(params.mu)).exp())
}

/// Which sufficient condition decided [`moment_exists`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentRule {
    /// q = 0
    Trivial,
    /// power law: mu - q/(p s) > 0
    PowerLaw,
    /// ln(x^s + 1): q < min(0, p s)
    LogPower,
    /// increasing T1 >= C x^s: 0 < q < p s
    Minorant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentExistence {
    Exists(MomentRule),
    DoesNotExist(MomentRule),
    Unknown,
}

impl MomentExistence {
    pub fn exists(&self) -> Option<bool> {
        match self {
            MomentExistence::Exists(_) => Some(true),
            MomentExistence::DoesNotExist(_) => Some(false),
            MomentExistence::Unknown => None,
        }
    }
}

/// Decide whether E[Y^q] exists from the structural class of `g`.
pub fn moment_exists(q: f64, g: &Generator, params: &FamilyParams) -> MomentExistence {
    let p = params.power;
    if q == 0.0 {
        return MomentExistence::Exists(MomentRule::Trivial);
    }
    match g.family_class() {
        FamilyClass::PowerLaw { s, .. } => {
            if params.mu - q / (p * s) > 0.0 {
                MomentExistence::Exists(MomentRule::PowerLaw)
            } else {
                MomentExistence::DoesNotExist(MomentRule::PowerLaw)
            }
        }
        FamilyClass::LogPower { s } => {
            if q < (p * s).min(0.0) {
                MomentExistence::Exists(MomentRule::LogPower)
            } else {
                MomentExistence::DoesNotExist(MomentRule::LogPower)
            }
        }
        FamilyClass::General => match g.minorant() {
            Some((_, s)) if g.is_increasing() && q > 0.0 && q < p * s => {
                MomentExistence::Exists(MomentRule::Minorant)
            }
            _ => MomentExistence::Unknown,
        },
    }
}

/// Monte Carlo value of the almost-sure limit of the closed-form mu
/// estimator, with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuLimit {
    pub estimate: f64,
    pub std_error: f64,
}

/// E{1 + [1 + U(Z)] ln x} / E{(sigma - 1/Z) T1'(x) x ln x} with
/// x = T1^{-1}(Z), Z ~ Gamma(mu, 1/(mu sigma)).
pub fn population_mu_limit(
    params: &FamilyParams,
    g: &Generator,
    draws: usize,
    rng: &mut RngStream,
) -> Result<MuLimit> {
    if params.power != 1.0 {
        return Err(Error::domain("population_mu_limit", "defined for power p = 1"));
    }
    if draws < 2 {
        return Err(Error::domain("population_mu_limit", format!("draws = {draws}")));
    }
    let (shape, scale) = params.gamma_shape_scale();
    let sigma = params.sigma;
    let mut num = MeanVar::new();
    let mut den = MeanVar::new();
    let mut cross = Accumulator::new();
    let mut pairs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let z = gamma_variate(shape, scale, rng);
        let x = g.inverse_log(z.ln())?;
        let jet = g.jet(x);
        let lx = x.ln();
        let a = 1.0 + (1.0 + jet.ratio * x) * lx;
        // T1'(x) = T1(x) L'(x) = z L'(x)
        let b = (sigma * z - 1.0) * jet.dlog * x * lx;
        num.add(a);
        den.add(b);
        pairs.push((a, b));
    }
    let (ma, mb) = (num.mean(), den.mean());
    for (a, b) in pairs {
        cross.add((a - ma) * (b - mb));
    }
    let cov = cross.sum() / (draws - 1) as f64;
    let se_den = den.std_error();
    if !(mb.abs() > 3.0 * se_den) {
        return Err(Error::DegenerateLimit { mean: mb, se: se_den });
    }
    let estimate = ma / mb;
    let var = (num.variance() - 2.0 * estimate * cov + estimate * estimate * den.variance())
        / (draws as f64 * mb * mb);
    Ok(MuLimit {
        estimate,
        std_error: var.max(0.0).sqrt(),
    })
}
