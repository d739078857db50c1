//! Catalog of generators T1 and their native parameterizations.
//!
//! Each catalog entry is a strictly monotone map T1: (0, inf) -> (0, inf)
//! together with the map between the distribution's own parameters and the
//! canonical pair (mu, sigma). Internally every generator is described by its
//! log-jet: L = ln T1, L' = T1'/T1 and the ratio R = L''/L'
//! (= T1''/T1' - T1'/T1). Values and derivatives are rebuilt from those, which
//! keeps exp-type generators finite far longer than direct evaluation.

use std::fmt;

use crate::error::{Error, Result};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// Structural class of T1, fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyClass {
    /// T1(x) = c * x^{-s}
    PowerLaw { c: f64, s: f64 },
    /// T1(x) = ln(x^s + 1)
    LogPower { s: f64 },
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    PowerLaw { c: f64, s: f64 },
    /// [e^x - 1]^d
    ExpM1Pow { delta: f64 },
    /// [e^{1/x} - 1]^d
    ExpInvM1Pow { delta: f64 },
    /// ln^d(x + 1)
    Log1pPow { delta: f64 },
    /// ln^d(1/x + 1)
    Log1pInvPow { delta: f64 },
    /// exp(d (x - 1/x))
    ExpPowDiff { delta: f64 },
    /// x^d [e^x - 1]^d
    XExpM1Pow { delta: f64 },
    /// e^{d x} - 1
    Gompertz { delta: f64 },
    /// ln(x^s + 1)
    LogPowPlusOne { s: f64 },
    /// exp(b x - c / x)
    FlexibleWeibull { b: f64, c: f64 },
    /// x^b [e^{c x^d} - 1]; b = 0 covers the modified Weibull extension.
    TraditionalWeibull { b: f64, c: f64, d: f64 },
}

/// How a catalog row's own parameters map onto (mu, sigma).
#[derive(Debug, Clone, Copy, PartialEq)]
enum NativeMap {
    Canonical,
    /// mu = alpha / d, sigma = d / (alpha beta^d)
    GeneralizedGamma { delta: f64 },
    /// mu = m, sigma = 1 / omega
    Nakagami,
    /// mu fixed, sigma = 1 / (k beta^2)
    InverseScaleSquared { mu: f64, k: f64 },
    /// mu = 1, sigma = beta^{-d}
    InversePower { delta: f64 },
    /// mu = 1, sigma = the single native parameter
    SigmaDirect { names: &'static [&'static str] },
    /// mu = beta / d, sigma = 1 / beta
    DeltaGamma { delta: f64 },
    /// mu = nu / 2, sigma = 1 / nu
    ChiSquared,
    /// mu = nu / 2, sigma = tau2
    ScaledInverseChiSquared,
    /// mu = lambda alpha, sigma = 1
    LambdaAlpha { alpha: f64 },
}

impl NativeMap {
    fn names(&self) -> &'static [&'static str] {
        match self {
            NativeMap::Canonical => &["mu", "sigma"],
            NativeMap::GeneralizedGamma { .. } => &["alpha", "beta"],
            NativeMap::Nakagami => &["m", "omega"],
            NativeMap::InverseScaleSquared { .. } | NativeMap::InversePower { .. } => &["beta"],
            NativeMap::SigmaDirect { names } => names,
            NativeMap::DeltaGamma { .. } => &["beta"],
            NativeMap::ChiSquared => &["nu"],
            NativeMap::ScaledInverseChiSquared => &["nu", "tau2"],
            NativeMap::LambdaAlpha { .. } => &["lambda"],
        }
    }

    fn to_family(&self, p: &[f64]) -> (f64, f64) {
        match *self {
            NativeMap::Canonical => (p[0], p[1]),
            NativeMap::GeneralizedGamma { delta } => {
                (p[0] / delta, delta / (p[0] * p[1].powf(delta)))
            }
            NativeMap::Nakagami => (p[0], 1.0 / p[1]),
            NativeMap::InverseScaleSquared { mu, k } => (mu, 1.0 / (k * p[0] * p[0])),
            NativeMap::InversePower { delta } => (1.0, p[0].powf(-delta)),
            NativeMap::SigmaDirect { .. } => (1.0, p[0]),
            NativeMap::DeltaGamma { delta } => (p[0] / delta, 1.0 / p[0]),
            NativeMap::ChiSquared => (p[0] / 2.0, 1.0 / p[0]),
            NativeMap::ScaledInverseChiSquared => (p[0] / 2.0, p[1]),
            NativeMap::LambdaAlpha { alpha } => (p[0] * alpha, 1.0),
        }
    }

    fn from_family(&self, mu: f64, sigma: f64) -> Vec<f64> {
        match *self {
            NativeMap::Canonical => vec![mu, sigma],
            NativeMap::GeneralizedGamma { delta } => {
                vec![mu * delta, (1.0 / (mu * sigma)).powf(1.0 / delta)]
            }
            NativeMap::Nakagami => vec![mu, 1.0 / sigma],
            NativeMap::InverseScaleSquared { k, .. } => vec![1.0 / (k * sigma).sqrt()],
            NativeMap::InversePower { delta } => vec![sigma.powf(-1.0 / delta)],
            NativeMap::SigmaDirect { .. } => vec![sigma],
            NativeMap::DeltaGamma { .. } => vec![1.0 / sigma],
            NativeMap::ChiSquared => vec![2.0 * mu],
            NativeMap::ScaledInverseChiSquared => vec![2.0 * mu, sigma],
            NativeMap::LambdaAlpha { alpha } => vec![mu / alpha],
        }
    }

    /// Which canonical coordinates the native parameters are read from,
    /// as (uses mu, uses sigma).
    fn uses(&self) -> (bool, bool) {
        match *self {
            NativeMap::InverseScaleSquared { .. }
            | NativeMap::InversePower { .. }
            | NativeMap::SigmaDirect { .. }
            | NativeMap::DeltaGamma { .. } => (false, true),
            NativeMap::ChiSquared | NativeMap::LambdaAlpha { .. } => (true, false),
            _ => (true, true),
        }
    }
}

/// A native parameter vector, in the order of [`Generator::native_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct NativeParams {
    pub names: &'static [&'static str],
    pub values: Vec<f64>,
}

impl NativeParams {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.names.iter().copied().zip(self.values.iter().copied())
    }
}

impl fmt::Display for NativeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        Ok(())
    }
}

/// Names of every catalog entry accepted by [`make_generator`].
pub const CATALOG: &[&str] = &[
    "gamma",
    "chi-squared",
    "nakagami",
    "maxwell-boltzmann",
    "rayleigh",
    "square",
    "power",
    "inverse-gamma",
    "scaled-inverse-chi-squared",
    "delta-gamma",
    "weibull",
    "gengamma",
    "inverse-weibull",
    "geninvgamma",
    "new-log-generalized-gamma",
    "new-log-generalized-inverse-gamma",
    "new-exponentiated-generalized-gamma",
    "new-exponentiated-generalized-inverse-gamma",
    "new-modified-log-generalized-gamma",
    "new-extended-log-generalized-gamma",
    "gompertz",
    "modified-weibull-extension",
    "traditional-weibull",
    "flexible-weibull",
    "burr-xii",
    "dagum",
];

/// An immutable T1 generator with its native parameter map.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    name: String,
    shape: Vec<(String, f64)>,
    kind: Kind,
    native: NativeMap,
    minorant: Option<(f64, f64)>,
}

/// Look up `name` in the catalog and fix its shape parameters.
///
/// Every shape parameter the row needs must be supplied and positive; extra
/// names are rejected.
pub fn make_generator(name: &str, shape_params: &[(&str, f64)]) -> Result<Generator> {
    let name = canonical_name(name);
    let required: &[&str] = match name {
        "delta-gamma" | "weibull" | "gengamma" | "inverse-weibull" | "geninvgamma"
        | "new-log-generalized-gamma" | "new-log-generalized-inverse-gamma"
        | "new-exponentiated-generalized-gamma"
        | "new-exponentiated-generalized-inverse-gamma"
        | "new-modified-log-generalized-gamma" | "new-extended-log-generalized-gamma"
        | "gompertz" => &["delta"],
        "modified-weibull-extension" => &["alpha", "beta"],
        "traditional-weibull" => &["b", "c", "d"],
        "flexible-weibull" => &["b", "c"],
        "burr-xii" | "dagum" => &["c"],
        "power" => &["c", "s"],
        n if CATALOG.contains(&n) => &[],
        other => return Err(Error::UnknownGenerator(other.to_string())),
    };

    for (key, value) in shape_params {
        if !required.contains(key) {
            return Err(Error::InvalidShapeParam {
                name: key.to_string(),
                value: *value,
            });
        }
    }
    let mut shape = Vec::with_capacity(required.len());
    for &key in required {
        let value = shape_params
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::SpecParse(format!("`{name}` needs shape parameter `{key}`")))?;
        // power(c=.., s=..) allows any nonzero s; everything else is positive
        let ok = if name == "power" && key == "s" {
            value.is_finite() && value != 0.0
        } else {
            value.is_finite() && value > 0.0
        };
        if !ok {
            return Err(Error::InvalidShapeParam {
                name: key.to_string(),
                value,
            });
        }
        shape.push((key.to_string(), value));
    }
    let get = |k: &str| shape.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap();

    use NativeMap as N;
    let (kind, native, minorant) = match name {
        "gamma" => (Kind::PowerLaw { c: 1.0, s: -1.0 }, N::GeneralizedGamma { delta: 1.0 }, None),
        "chi-squared" => (Kind::PowerLaw { c: 1.0, s: -1.0 }, N::ChiSquared, None),
        "nakagami" => (Kind::PowerLaw { c: 1.0, s: -2.0 }, N::Nakagami, None),
        "maxwell-boltzmann" => (
            Kind::PowerLaw { c: 1.0, s: -2.0 },
            N::InverseScaleSquared { mu: 1.5, k: 3.0 },
            None,
        ),
        "rayleigh" => (
            Kind::PowerLaw { c: 1.0, s: -2.0 },
            N::InverseScaleSquared { mu: 1.0, k: 2.0 },
            None,
        ),
        "square" => (Kind::PowerLaw { c: 1.0, s: -2.0 }, N::Canonical, None),
        "power" => (Kind::PowerLaw { c: get("c"), s: get("s") }, N::Canonical, None),
        "inverse-gamma" => (Kind::PowerLaw { c: 1.0, s: 1.0 }, N::GeneralizedGamma { delta: 1.0 }, None),
        "scaled-inverse-chi-squared" => (Kind::PowerLaw { c: 1.0, s: 1.0 }, N::ScaledInverseChiSquared, None),
        "delta-gamma" => {
            let delta = get("delta");
            (Kind::PowerLaw { c: 1.0, s: -delta }, N::DeltaGamma { delta }, None)
        }
        "weibull" => {
            let delta = get("delta");
            (Kind::PowerLaw { c: 1.0, s: -delta }, N::InversePower { delta }, None)
        }
        "gengamma" => {
            let delta = get("delta");
            (Kind::PowerLaw { c: 1.0, s: -delta }, N::GeneralizedGamma { delta }, None)
        }
        "inverse-weibull" => {
            let delta = get("delta");
            (Kind::PowerLaw { c: 1.0, s: delta }, N::InversePower { delta }, None)
        }
        "geninvgamma" => {
            let delta = get("delta");
            (Kind::PowerLaw { c: 1.0, s: delta }, N::GeneralizedGamma { delta }, None)
        }
        "new-log-generalized-gamma" => {
            let delta = get("delta");
            // (e^x - 1)^d >= x^d
            (Kind::ExpM1Pow { delta }, N::GeneralizedGamma { delta }, Some((1.0, delta)))
        }
        "new-log-generalized-inverse-gamma" => {
            let delta = get("delta");
            (Kind::ExpInvM1Pow { delta }, N::GeneralizedGamma { delta }, None)
        }
        "new-exponentiated-generalized-gamma" => {
            let delta = get("delta");
            (Kind::Log1pPow { delta }, N::GeneralizedGamma { delta }, None)
        }
        "new-exponentiated-generalized-inverse-gamma" => {
            let delta = get("delta");
            (Kind::Log1pInvPow { delta }, N::GeneralizedGamma { delta }, None)
        }
        "new-modified-log-generalized-gamma" => {
            let delta = get("delta");
            (Kind::ExpPowDiff { delta }, N::GeneralizedGamma { delta }, None)
        }
        "new-extended-log-generalized-gamma" => {
            let delta = get("delta");
            (Kind::XExpM1Pow { delta }, N::GeneralizedGamma { delta }, Some((1.0, 2.0 * delta)))
        }
        "gompertz" => {
            let delta = get("delta");
            (Kind::Gompertz { delta }, N::SigmaDirect { names: &["alpha"] }, Some((delta, 1.0)))
        }
        "modified-weibull-extension" => {
            let (alpha, beta) = (get("alpha"), get("beta"));
            let c = alpha.powf(-beta);
            (
                Kind::TraditionalWeibull { b: 0.0, c, d: beta },
                N::LambdaAlpha { alpha },
                Some((c, beta)),
            )
        }
        "traditional-weibull" => {
            let (b, c, d) = (get("b"), get("c"), get("d"));
            (Kind::TraditionalWeibull { b, c, d }, N::SigmaDirect { names: &["a"] }, Some((c, b + d)))
        }
        "flexible-weibull" => (
            Kind::FlexibleWeibull { b: get("b"), c: get("c") },
            N::SigmaDirect { names: &["a"] },
            None,
        ),
        "burr-xii" => (Kind::LogPowPlusOne { s: get("c") }, N::SigmaDirect { names: &["k"] }, None),
        "dagum" => (Kind::LogPowPlusOne { s: -get("c") }, N::SigmaDirect { names: &["k"] }, None),
        _ => unreachable!("catalog lookup already validated"),
    };

    Ok(Generator {
        name: name.to_string(),
        shape,
        kind,
        native,
        minorant,
    })
}

fn canonical_name(name: &str) -> &str {
    match name {
        "rayleigh-like" | "x2" => "square",
        "generalized-gamma" => "gengamma",
        "generalized-inverse-gamma" => "geninvgamma",
        "frechet" => "inverse-weibull",
        "burr12" | "singh-maddala" => "burr-xii",
        "new-log-gengamma" => "new-log-generalized-gamma",
        other => other,
    }
}

/// Parse `name` or `name(key=value, ...)`.
pub fn parse_generator_spec(spec: &str) -> Result<Generator> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        None => (spec, ""),
        Some(open) => {
            let inner = spec[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::SpecParse(format!("missing `)` in `{spec}`")))?;
            (&spec[..open], inner)
        }
    };
    let mut params = Vec::new();
    for item in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::SpecParse(format!("expected key=value, got `{item}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::SpecParse(format!("bad number `{}` for `{}`", v.trim(), k.trim())))?;
        params.push((k.trim(), v));
    }
    make_generator(name.trim(), &params)
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.shape.is_empty() {
            write!(f, "(")?;
            for (i, (k, v)) in self.shape.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{k}={v}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_generator_spec(s)
    }
}

/// ln(e^x - 1) without overflow for large x.
fn ln_expm1(x: f64) -> f64 {
    if x > 36.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// e^x / (e^x - 1), finite for all x > 0.
fn exp_ratio(x: f64) -> f64 {
    1.0 / -(-x).exp_m1()
}

/// ln(1 + e^v).
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// e^v / (1 + e^v).
fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Positive root of a x^2 - t x - c = 0 (a, c > 0), without cancellation.
fn positive_quadratic_root(a: f64, t: f64, c: f64) -> f64 {
    let disc = (t * t + 4.0 * a * c).sqrt();
    if t >= 0.0 {
        (t + disc) / (2.0 * a)
    } else {
        2.0 * c / (disc - t)
    }
}

/// L = ln T1, L' = T1'/T1, R = L''/L'.
#[derive(Debug, Clone, Copy)]
pub struct LogJet {
    pub log_value: f64,
    pub dlog: f64,
    pub ratio: f64,
}

impl Kind {
    fn jet(&self, x: f64) -> LogJet {
        match *self {
            Kind::PowerLaw { c, s } => LogJet {
                log_value: c.ln() - s * x.ln(),
                dlog: -s / x,
                ratio: -1.0 / x,
            },
            Kind::ExpM1Pow { delta } => LogJet {
                log_value: delta * ln_expm1(x),
                dlog: delta * exp_ratio(x),
                ratio: -1.0 / x.exp_m1(),
            },
            Kind::ExpInvM1Pow { delta } => {
                let w = 1.0 / x;
                LogJet {
                    log_value: delta * ln_expm1(w),
                    dlog: -delta * exp_ratio(w) * w * w,
                    ratio: w * w / w.exp_m1() - 2.0 * w,
                }
            }
            Kind::Log1pPow { delta } => {
                let l = x.ln_1p();
                LogJet {
                    log_value: delta * l.ln(),
                    dlog: delta / ((1.0 + x) * l),
                    ratio: -(l + 1.0) / ((1.0 + x) * l),
                }
            }
            Kind::Log1pInvPow { delta } => {
                let w = 1.0 / x;
                let l = w.ln_1p();
                LogJet {
                    log_value: delta * l.ln(),
                    dlog: -delta * w * w / ((1.0 + w) * l),
                    ratio: w * w * (l + 1.0) / ((1.0 + w) * l) - 2.0 * w,
                }
            }
            Kind::ExpPowDiff { delta } => LogJet {
                log_value: delta * (x - 1.0 / x),
                dlog: delta * (1.0 + 1.0 / (x * x)),
                ratio: -2.0 / (x * (x * x + 1.0)),
            },
            Kind::XExpM1Pow { delta } => {
                let q = exp_ratio(x);
                let d1 = 1.0 / x + q;
                let d2 = -(1.0 / (x * x) + q / x.exp_m1());
                LogJet {
                    log_value: delta * (x.ln() + ln_expm1(x)),
                    dlog: delta * d1,
                    ratio: d2 / d1,
                }
            }
            Kind::Gompertz { delta } => {
                let dlog = delta * exp_ratio(delta * x);
                LogJet {
                    log_value: ln_expm1(delta * x),
                    dlog,
                    ratio: delta - dlog,
                }
            }
            Kind::LogPowPlusOne { s } => {
                let v = s * x.ln();
                let l = softplus(v);
                let frac = logistic(v);
                let dlog = s * frac / (x * l);
                // T1''/T1' = (s - 1)/x - s frac / x
                let curvature = ((s - 1.0) - s * frac) / x;
                LogJet {
                    log_value: l.ln(),
                    dlog,
                    ratio: curvature - dlog,
                }
            }
            Kind::FlexibleWeibull { b, c } => {
                let dlog = b + c / (x * x);
                LogJet {
                    log_value: b * x - c / x,
                    dlog,
                    ratio: -2.0 * c / (x * x * x * dlog),
                }
            }
            Kind::TraditionalWeibull { b, c, d } => {
                let v = c * x.powf(d);
                let q = exp_ratio(v);
                let tail = d * v * q;
                let dlog = (b + tail) / x;
                let second = (-b + tail * (d - 1.0 - d * v / v.exp_m1())) / (x * x);
                LogJet {
                    log_value: b * x.ln() + ln_expm1(v),
                    dlog,
                    ratio: second / dlog,
                }
            }
        }
    }

    /// Closed-form ln-domain inverse: x with ln T1(x) = log_z.
    fn inverse_closed(&self, log_z: f64) -> Option<f64> {
        let z = log_z.exp();
        Some(match *self {
            Kind::PowerLaw { c, s } => ((log_z - c.ln()) / -s).exp(),
            Kind::ExpM1Pow { delta } => (log_z / delta).exp().ln_1p(),
            Kind::ExpInvM1Pow { delta } => 1.0 / (log_z / delta).exp().ln_1p(),
            Kind::Log1pPow { delta } => (log_z / delta).exp().exp_m1(),
            Kind::Log1pInvPow { delta } => 1.0 / (log_z / delta).exp().exp_m1(),
            Kind::ExpPowDiff { delta } => positive_quadratic_root(1.0, log_z / delta, 1.0),
            Kind::Gompertz { delta } => z.ln_1p() / delta,
            Kind::LogPowPlusOne { s } => (ln_expm1(z) / s).exp(),
            Kind::FlexibleWeibull { b, c } => positive_quadratic_root(b, log_z, c),
            Kind::TraditionalWeibull { b: 0.0, c, d } => (z.ln_1p() / c).powf(1.0 / d),
            Kind::TraditionalWeibull { .. } | Kind::XExpM1Pow { .. } => return None,
        })
    }
}

impl Generator {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape_params(&self) -> &[(String, f64)] {
        &self.shape
    }

    pub fn monotonicity(&self) -> Monotonicity {
        let decreasing = match self.kind {
            Kind::PowerLaw { s, .. } => s > 0.0,
            Kind::ExpInvM1Pow { .. } | Kind::Log1pInvPow { .. } => true,
            Kind::LogPowPlusOne { s } => s < 0.0,
            _ => false,
        };
        if decreasing {
            Monotonicity::Decreasing
        } else {
            Monotonicity::Increasing
        }
    }

    pub fn is_increasing(&self) -> bool {
        self.monotonicity() == Monotonicity::Increasing
    }

    pub fn family_class(&self) -> FamilyClass {
        match self.kind {
            Kind::PowerLaw { c, s } => FamilyClass::PowerLaw { c, s },
            Kind::LogPowPlusOne { s } => FamilyClass::LogPower { s },
            _ => FamilyClass::General,
        }
    }

    /// Declared minorant T1(x) >= C x^s (increasing generators only).
    pub fn minorant(&self) -> Option<(f64, f64)> {
        self.minorant
    }

    #[inline]
    pub fn jet(&self, x: f64) -> LogJet {
        self.kind.jet(x)
    }

    #[inline]
    pub fn log_value(&self, x: f64) -> f64 {
        self.jet(x).log_value
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            Kind::PowerLaw { c, s } => c * x.powf(-s),
            Kind::ExpM1Pow { delta: 1.0 } => x.exp_m1(),
            Kind::Gompertz { delta } => (delta * x).exp_m1(),
            _ => self.log_value(x).exp(),
        }
    }

    /// T1'(x).
    pub fn d1(&self, x: f64) -> f64 {
        let j = self.jet(x);
        self.value(x) * j.dlog
    }

    /// T1''(x).
    pub fn d2(&self, x: f64) -> f64 {
        let j = self.jet(x);
        self.value(x) * j.dlog * (j.ratio + j.dlog)
    }

    /// T1'(x) / T1(x).
    pub fn dlog(&self, x: f64) -> f64 {
        self.jet(x).dlog
    }

    /// T1''(x)/T1'(x) - T1'(x)/T1(x).
    pub fn ratio(&self, x: f64) -> f64 {
        self.jet(x).ratio
    }

    /// T1^{-1}(z): closed form where one exists, otherwise Newton on ln x
    /// inside an expanding bracket.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::OutOfRange(z));
        }
        self.inverse_log(z.ln())
    }

    /// T1^{-1}(e^{log_z}); lets callers hand in huge arguments in log form.
    pub fn inverse_log(&self, log_z: f64) -> Result<f64> {
        if log_z.is_nan() {
            return Err(Error::OutOfRange(log_z));
        }
        if let Some(x) = self.kind.inverse_closed(log_z) {
            return if x.is_finite() && x > 0.0 {
                Ok(x)
            } else {
                Err(Error::OutOfRange(log_z.exp()))
            };
        }
        self.numeric_inverse(log_z)
    }

    fn numeric_inverse(&self, log_z: f64) -> Result<f64> {
        // increasing generators only reach this path
        let f = |t: f64| {
            let x = t.exp();
            let j = self.jet(x);
            (j.log_value - log_z, j.dlog * x)
        };
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        let mut step = 1.0;
        while f(lo).0 > 0.0 {
            hi = lo;
            step *= 2.0;
            lo -= step;
            if lo < -700.0 {
                return Err(Error::OutOfRange(log_z.exp()));
            }
        }
        step = 1.0;
        while f(hi).0 < 0.0 {
            lo = hi;
            step *= 2.0;
            hi += step;
            if hi > 700.0 {
                return Err(Error::OutOfRange(log_z.exp()));
            }
        }
        let tol = 1e-14 * log_z.abs().max(1.0);
        let root = roots::newton_bisect(f, lo, hi, tol, 300)?;
        Ok(root.x.exp())
    }

    /// U(z) = [T1''/T1' - T1'/z] evaluated at x = T1^{-1}(z), times x.
    pub fn u_function(&self, z: f64) -> Result<f64> {
        let x = self.inverse(z)?;
        Ok(self.ratio(x) * x)
    }

    pub fn native_names(&self) -> &'static [&'static str] {
        self.native.names()
    }

    /// Native parameters -> (mu, sigma).
    pub fn to_family(&self, native: &[f64]) -> Result<(f64, f64)> {
        let names = self.native_names();
        if native.len() != names.len() {
            return Err(Error::InvalidConfig(format!(
                "{} expects native parameters {:?}, got {} values",
                self.name,
                names,
                native.len()
            )));
        }
        if let Some(i) = native.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidShapeParam {
                name: names[i].to_string(),
                value: native[i],
            });
        }
        Ok(self.native.to_family(native))
    }

    /// (mu, sigma) -> native parameters. One-parameter rows read the
    /// coordinate their native parameter controls and ignore the other.
    pub fn from_family(&self, mu: f64, sigma: f64) -> NativeParams {
        NativeParams {
            names: self.native_names(),
            values: self.native.from_family(mu, sigma),
        }
    }

    /// Which of (mu, sigma) [`Generator::from_family`] actually reads.
    pub fn native_uses(&self) -> (bool, bool) {
        self.native.uses()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_generators() -> Vec<Generator> {
        [
            "gamma",
            "chi-squared",
            "nakagami",
            "maxwell-boltzmann",
            "rayleigh",
            "square",
            "power(c=2.5,s=-1.5)",
            "inverse-gamma",
            "scaled-inverse-chi-squared",
            "delta-gamma(delta=2)",
            "weibull(delta=1.7)",
            "gengamma(delta=2)",
            "inverse-weibull(delta=1.3)",
            "geninvgamma(delta=0.7)",
            "new-log-generalized-gamma(delta=1)",
            "new-log-generalized-gamma(delta=2.5)",
            "new-log-generalized-inverse-gamma(delta=1.5)",
            "new-exponentiated-generalized-gamma(delta=2)",
            "new-exponentiated-generalized-inverse-gamma(delta=0.8)",
            "new-modified-log-generalized-gamma(delta=1.2)",
            "new-extended-log-generalized-gamma(delta=0.9)",
            "gompertz(delta=2)",
            "modified-weibull-extension(alpha=1.5,beta=2)",
            "traditional-weibull(b=0.5,c=1.2,d=1.5)",
            "flexible-weibull(b=0.8,c=0.6)",
            "burr-xii(c=2)",
            "dagum(c=3)",
        ]
        .iter()
        .map(|s| parse_generator_spec(s).unwrap())
        .collect()
    }

    fn log_grid() -> Vec<f64> {
        (0..=40).map(|k| 10f64.powf(-1.5 + k as f64 * 0.05)).collect()
    }

    #[test]
    fn identity_generator() {
        let g = make_generator("gamma", &[]).unwrap();
        assert_eq!(g.value(2.0), 2.0);
        assert!((g.d1(2.0) - 1.0).abs() < 1e-15);
        assert!(g.d2(2.0).abs() < 1e-15);
        assert!((g.inverse(5.0).unwrap() - 5.0).abs() < 1e-14);
        assert!((g.inverse(7.0).unwrap() - 7.0).abs() < 1e-14);
        assert_eq!(g.family_class(), FamilyClass::PowerLaw { c: 1.0, s: -1.0 });
    }

    #[test]
    fn square_generator() {
        let g = make_generator("rayleigh-like", &[]).unwrap();
        assert!((g.value(3.0) - 9.0).abs() < 1e-13);
        assert!((g.d1(3.0) - 6.0).abs() < 1e-13);
        assert!((g.d2(3.0) - 2.0).abs() < 1e-13);
        assert!((g.inverse(16.0).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn log_generalized_gamma_at_one() {
        let g = make_generator("new-log-generalized-gamma", &[("delta", 1.0)]).unwrap();
        let e = std::f64::consts::E;
        assert!((g.value(1.0) - (e - 1.0)).abs() < 1e-14);
        assert!((g.d1(1.0) - e).abs() < 1e-14);
        assert!((g.d2(1.0) - e).abs() < 1e-13);
        assert!((g.inverse(e - 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gompertz_inverse() {
        let g = make_generator("gompertz", &[("delta", 2.0)]).unwrap();
        let z = 2f64.exp() - 1.0;
        assert!((g.inverse(z).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn strictly_monotone_and_positive() {
        for g in all_generators() {
            let grid = log_grid();
            let vals: Vec<f64> = grid.iter().map(|&x| g.log_value(x)).collect();
            let sign = (vals[1] - vals[0]).signum();
            for w in vals.windows(2) {
                assert_eq!((w[1] - w[0]).signum(), sign, "{g}");
            }
            let expect = if g.is_increasing() { 1.0 } else { -1.0 };
            assert_eq!(sign, expect, "{g}");
            for &x in &grid {
                let v = g.value(x);
                assert!(v > 0.0 && v.is_finite(), "{g} at {x}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for g in all_generators() {
            for &x in &log_grid() {
                let z = g.value(x);
                let back = g.inverse(z).unwrap();
                assert!((back - x).abs() <= 1e-9 * x, "{g}: x={x} back={back}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in all_generators() {
            for &x in &log_grid() {
                let h = 1e-5 * x;
                let fd1 = (g.value(x + h) - g.value(x - h)) / (2.0 * h);
                let fd2 = (g.d1(x + h) - g.d1(x - h)) / (2.0 * h);
                let (d1, d2) = (g.d1(x), g.d2(x));
                assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1e-300) + 1e-12 * g.value(x) / x, "{g} d1 at {x}: {d1} vs {fd1}");
                assert!(
                    (fd2 - d2).abs() <= 1e-6 * d2.abs() + 1e-6 * d1.abs() / x,
                    "{g} d2 at {x}: {d2} vs {fd2}"
                );
            }
        }
    }

    #[test]
    fn power_law_class_matches_value() {
        for g in all_generators() {
            if let FamilyClass::PowerLaw { c, s } = g.family_class() {
                for &x in &log_grid() {
                    let r = g.value(x) * x.powf(s) / c;
                    assert!((r - 1.0).abs() < 1e-12, "{g}");
                }
            }
        }
    }

    #[test]
    fn power_law_u_is_minus_one() {
        for g in all_generators() {
            if matches!(g.family_class(), FamilyClass::PowerLaw { .. }) {
                for &x in &log_grid() {
                    let u = (g.d2(x) / g.d1(x) - g.d1(x) / g.value(x)) * x;
                    assert!((u + 1.0).abs() < 1e-9, "{g} at {x}: {u}");
                    let z = g.value(x);
                    assert!((g.u_function(z).unwrap() + 1.0).abs() < 1e-9);
                }
            } else {
                // U is not identically -1 away from the power-law class
                let off = log_grid().iter().any(|&x| (g.ratio(x) * x + 1.0).abs() > 1e-3);
                assert!(off, "{g}");
            }
        }
    }

    #[test]
    fn native_round_trips() {
        for g in all_generators() {
            let natives: Vec<f64> = (0..g.native_names().len()).map(|i| 0.7 + 0.9 * i as f64).collect();
            let (mu, sigma) = g.to_family(&natives).unwrap();
            let back = g.from_family(mu, sigma);
            for (a, b) in natives.iter().zip(&back.values) {
                assert!((a - b).abs() <= 1e-12 * a.abs(), "{g}: {natives:?} -> {back:?}");
            }
            let (mu2, sigma2) = g.to_family(&back.values).unwrap();
            assert!((mu - mu2).abs() <= 1e-12 * mu && (sigma - sigma2).abs() <= 1e-12 * sigma);
        }
    }

    #[test]
    fn table_mappings() {
        let naka = make_generator("nakagami", &[]).unwrap();
        assert_eq!(naka.to_family(&[2.0, 4.0]).unwrap(), (2.0, 0.25));
        let mb = make_generator("maxwell-boltzmann", &[]).unwrap();
        let (mu, sigma) = mb.to_family(&[2.0]).unwrap();
        assert_eq!(mu, 1.5);
        assert!((sigma - 1.0 / 12.0).abs() < 1e-15);
        let lgg = make_generator("new-log-generalized-gamma", &[("delta", 1.0)]).unwrap();
        let (mu, sigma) = lgg.to_family(&[2.0, 1.0]).unwrap();
        assert_eq!((mu, sigma), (2.0, 0.5));
        let gomp = make_generator("gompertz", &[("delta", 1.0)]).unwrap();
        assert_eq!(gomp.to_family(&[3.0]).unwrap(), (1.0, 3.0));
        assert_eq!(gomp.native_names(), &["alpha"]);
        let burr = make_generator("burr-xii", &[("c", 2.0)]).unwrap();
        assert_eq!(burr.family_class(), FamilyClass::LogPower { s: 2.0 });
        let dagum = make_generator("dagum", &[("c", 2.0)]).unwrap();
        assert_eq!(dagum.family_class(), FamilyClass::LogPower { s: -2.0 });
        assert_eq!(dagum.monotonicity(), Monotonicity::Decreasing);
    }

    #[test]
    fn spec_strings() {
        let g = parse_generator_spec("gengamma(delta=2)").unwrap();
        assert_eq!(g.to_string(), "gengamma(delta=2)");
        assert_eq!(parse_generator_spec(&g.to_string()).unwrap(), g);
        let tw = parse_generator_spec(" traditional-weibull( b=1, c=0.5 ,d=2 ) ").unwrap();
        assert_eq!(tw.to_string(), "traditional-weibull(b=1,c=0.5,d=2)");
        assert_eq!(parse_generator_spec("gamma").unwrap().to_string(), "gamma");
    }

    #[test]
    fn errors() {
        assert_eq!(make_generator("lognormal", &[]).unwrap_err().code(), "unknown-generator");
        assert_eq!(
            make_generator("weibull", &[("delta", -1.0)]).unwrap_err().code(),
            "invalid-shape-param"
        );
        assert_eq!(
            make_generator("weibull", &[("delta", 0.0)]).unwrap_err().code(),
            "invalid-shape-param"
        );
        assert!(make_generator("weibull", &[]).is_err());
        assert!(make_generator("gamma", &[("delta", 1.0)]).is_err());
        assert!(parse_generator_spec("gengamma(delta=two)").is_err());
        assert!(parse_generator_spec("gengamma(delta=2").is_err());
        let g = make_generator("gamma", &[]).unwrap();
        assert_eq!(g.inverse(0.0).unwrap_err().code(), "out-of-range");
        assert!(g.inverse(-3.0).is_err());
        assert!(g.to_family(&[1.0]).is_err());
        assert!(g.to_family(&[1.0, -2.0]).is_err());
    }
}
