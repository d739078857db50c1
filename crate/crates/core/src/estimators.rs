//! Closed-form and maximum-likelihood estimators.
//!
//! At p = 1 the estimator of sigma is the exact ML estimator, and the closed
//! form for mu comes from setting the p-score to zero. The exact ML estimator
//! of mu is the unique root of ln mu - psi(mu) = H(Y).

use crate::distribution::{draw_values, FamilyParams, Sample};
use crate::error::{Error, Result};
use crate::generator::{FamilyClass, Generator, NativeParams};
use crate::rng::RngStream;
use crate::roots::{self, Root};
use crate::special::{ln_gamma, ln_minus_psi, psi};
use crate::sum::{Accumulator, MeanVar};

/// Which mu estimator feeds the native-parameter mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// closed-form mu
    Closed,
    /// exact ML root for mu
    Ml,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Closed => "closed",
            EstimatorKind::Ml => "ml",
        }
    }
}

/// Diagnostics of the mu root solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlFit {
    pub mu: f64,
    pub solver: SolverDiagnostics,
}

/// Everything `fit` learns from one sample at p = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub n: usize,
    pub sigma_hat: f64,
    pub mu_hat_closed: Result<f64>,
    pub mu_hat_ml: Result<MlFit>,
    pub native_closed: Result<NativeParams>,
    pub native_ml: Result<NativeParams>,
}

/// Partial derivatives of the log-likelihood in (mu, sigma, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreVector {
    pub d_mu: f64,
    pub d_sigma: f64,
    pub d_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullFit {
    pub mu: f64,
    pub sigma: f64,
    pub p: f64,
    /// residual of the p equation at the returned p
    pub residual: f64,
    pub score: ScoreVector,
    pub log_likelihood: f64,
}

fn overflow_checked(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow(what))
    }
}

fn check_power(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("power", format!("p = {p}, need finite p > 0")))
    }
}

/// Per-observation terms of the closed-form and ML estimators at power p.
///
/// Every estimator at p is a function of index-selected sums of these, so a
/// bootstrap resample is evaluated from a list of indices without touching
/// the generator again.
#[derive(Debug, Clone)]
pub struct Terms {
    p: f64,
    values: Vec<f64>,
    log_t1: Vec<f64>,
    // ln Y + R(Y^p) Y^p ln Y
    numerator: Vec<f64>,
    // (T1'/T1)(Y^p) Y^p ln Y
    slope: Vec<f64>,
}

impl Terms {
    pub fn new(sample: &Sample, g: &Generator, p: f64) -> Result<Terms> {
        check_power(p)?;
        let n = sample.len();
        let mut terms = Terms {
            p,
            values: sample.values().to_vec(),
            log_t1: Vec::with_capacity(n),
            numerator: Vec::with_capacity(n),
            slope: Vec::with_capacity(n),
        };
        for &y in sample.values() {
            let ly = y.ln();
            let x = if p == 1.0 { y } else { y.powf(p) };
            let jet = g.jet(x);
            terms.log_t1.push(jet.log_value);
            terms.numerator.push(ly + jet.ratio * x * ly);
            terms.slope.push(jet.dlog * x * ly);
        }
        Ok(terms)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    fn all_equal(&self, idx: &[usize]) -> bool {
        let first = self.values[idx[0]];
        idx.iter().all(|&i| self.values[i] == first)
    }

    fn max_log(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.log_t1[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// sigma(p) over the selected observations.
    pub fn sigma(&self, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::EmptySample);
        }
        let shift = overflow_checked(self.max_log(idx), "T1(Y)")?;
        let scaled: Accumulator = idx.iter().map(|&i| (self.log_t1[i] - shift).exp()).collect();
        let sigma = (-shift).exp() * idx.len() as f64 / scaled.sum();
        if sigma > 0.0 && sigma.is_finite() {
            Ok(sigma)
        } else {
            Err(Error::Overflow("sigma estimate"))
        }
    }

    /// mu(p) over the selected observations.
    pub fn mu_closed(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() < 2 {
            return Err(Error::DegenerateSample("need at least two observations"));
        }
        if self.all_equal(idx) {
            return Err(Error::DegenerateSample("all observations are equal"));
        }
        let shift = overflow_checked(self.max_log(idx), "T1(Y)")?;
        let mut numerator = Accumulator::new();
        let mut plain = Accumulator::new();
        let mut weights = Accumulator::new();
        let mut weighted = Accumulator::new();
        for &i in idx {
            let w = (self.log_t1[i] - shift).exp();
            let a = self.slope[i];
            numerator.add(self.numerator[i]);
            plain.add(a);
            weights.add(w);
            weighted.add(w * a);
        }
        let num = 1.0 / self.p + numerator.mean();
        let den = weighted.sum() / weights.sum() - plain.mean();
        if !(den.is_finite() && num.is_finite()) || den <= 0.0 {
            return Err(Error::InvalidSample { denominator: den });
        }
        Ok(num / den)
    }

    /// H over the selected observations.
    pub fn rhs(&self, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::EmptySample);
        }
        if self.all_equal(idx) {
            return Ok(0.0);
        }
        let center: f64 = idx.iter().map(|&i| self.log_t1[i]).collect::<Accumulator>().mean();
        overflow_checked(center, "ln T1(Y)")?;
        let excess = idx
            .iter()
            .map(|&i| (self.log_t1[i] - center).exp_m1())
            .collect::<Accumulator>()
            .mean();
        Ok(overflow_checked(excess, "T1(Y)")?.max(0.0).ln_1p())
    }

    /// Canonical (mu, sigma) for `kind`; mu is NaN when `need_mu` is false.
    pub fn family(&self, idx: &[usize], kind: EstimatorKind, need_mu: bool) -> Result<(f64, f64)> {
        let sigma = self.sigma(idx)?;
        if !need_mu {
            return Ok((f64::NAN, sigma));
        }
        let mu = match kind {
            EstimatorKind::Closed => self.mu_closed(idx)?,
            EstimatorKind::Ml => solve_mu_equation(self.rhs(idx)?)?.mu,
        };
        Ok((mu, sigma))
    }
}

/// sigma(p) = n / sum T1(Y_i^p).
pub fn profile_sigma(sample: &Sample, g: &Generator, p: f64) -> Result<f64> {
    let terms = Terms::new(sample, g, p)?;
    terms.sigma(&terms.all_indices())
}

/// sigma-hat = 1 / mean T1(Y_i); also the exact ML estimator of sigma.
pub fn estimate_sigma(sample: &Sample, g: &Generator) -> Result<f64> {
    profile_sigma(sample, g, 1.0)
}

/// mu(p) with sigma(p) substituted, from the p-score equation:
///
/// [n/p + sum ln Y + sum R(Y^p) Y^p ln Y] /
/// [sigma(p) sum T1'(Y^p) Y^p ln Y - sum (T1'/T1)(Y^p) Y^p ln Y],
///
/// with R = T1''/T1' - T1'/T1. The T1-weighted part is evaluated as a
/// weighted mean with weights T1(Y^p) / sum T1(Y^p), shifted in log space.
pub fn profile_mu(sample: &Sample, g: &Generator, p: f64) -> Result<f64> {
    let terms = Terms::new(sample, g, p)?;
    terms.mu_closed(&terms.all_indices())
}

/// Closed-form mu-hat: `profile_mu` at p = 1.
pub fn estimate_mu_closed(sample: &Sample, g: &Generator) -> Result<f64> {
    profile_mu(sample, g, 1.0)
}

/// mu-hat for T1 = c x^{-s} through its reduced form:
/// 1/mu-hat = mean(W ln W) / mean(W) - mean(ln W), with W = Y^{-s}.
pub fn estimate_mu_power_law(sample: &Sample, s: f64) -> Result<f64> {
    if sample.len() < 2 || sample.all_equal() {
        return Err(Error::DegenerateSample("need two distinct observations"));
    }
    let logs: Vec<f64> = sample.values().iter().map(|y| -s * y.ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w_sum = Accumulator::new();
    let mut wl_sum = Accumulator::new();
    for &lw in &logs {
        // W scaled by e^{-top}; the ratio is unchanged
        let w = (lw - top).exp();
        w_sum.add(w);
        wl_sum.add(w * lw);
    }
    let mean_log: f64 = logs.iter().copied().collect::<Accumulator>().mean();
    let inverse = wl_sum.sum() / w_sum.sum() - mean_log;
    if !(inverse > 0.0 && inverse.is_finite()) {
        return Err(Error::InvalidSample { denominator: inverse });
    }
    Ok(1.0 / inverse)
}

/// H(Y) = ln[(1/n) sum T1(Y_i)] - (1/n) sum ln T1(Y_i), always >= 0.
///
/// Evaluated as ln(1 + mean(expm1(L_i - mean L))) so that neither overflow
/// of T1 nor cancellation for tightly clustered samples affects it.
pub fn ml_equation_rhs(sample: &Sample, g: &Generator) -> Result<f64> {
    let terms = Terms::new(sample, g, 1.0)?;
    terms.rhs(&terms.all_indices())
}

/// Solve ln mu - psi(mu) = h for mu > 0.
///
/// The left side decreases from +inf to 0, so a sign change always exists;
/// the bracket is grown geometrically around the two-term asymptotic
/// solution and polished by bisection-guarded Newton steps.
pub fn solve_mu_equation(h: f64) -> Result<MlFit> {
    if h.is_nan() || h.is_infinite() {
        return Err(Error::Overflow("ML equation right-hand side"));
    }
    if h <= 0.0 {
        return Err(Error::DegenerateSample("H = 0 puts the ML root at infinity"));
    }
    let guess = (3.0 + (9.0 + 12.0 * h).sqrt()) / (12.0 * h);
    let f = |mu: f64| ln_minus_psi(mu) - h;
    let (mut lo, mut hi) = (guess / 10.0, guess * 10.0);
    let mut grow = 0;
    while f(lo) < 0.0 {
        lo /= 10.0;
        grow += 1;
        if grow > 60 || lo < f64::MIN_POSITIVE {
            return Err(Error::NoRootInBracket { lo, hi });
        }
    }
    while f(hi) > 0.0 {
        hi *= 10.0;
        grow += 1;
        if grow > 60 || hi.is_infinite() {
            return Err(Error::NoRootInBracket { lo, hi });
        }
    }
    let ftol = (1e-12 * h.max(1.0)).min(1e-10);
    let Root { x, residual, iterations } = roots::newton_bisect(
        |mu| {
            // derivative 1/mu - psi'(mu) by central differences
            let step = 1e-5 * mu;
            let slope = (f(mu + step) - f(mu - step)) / (2.0 * step);
            (f(mu), slope)
        },
        lo,
        hi,
        ftol,
        200,
    )?;
    Ok(MlFit {
        mu: x,
        solver: SolverDiagnostics {
            iterations: iterations + grow,
            final_residual: residual,
            bracket: (lo, hi),
        },
    })
}

/// Exact ML estimator of mu at p = 1.
pub fn estimate_mu_ml(sample: &Sample, g: &Generator) -> Result<MlFit> {
    solve_mu_equation(ml_equation_rhs(sample, g)?)
}

/// Log-likelihood of (mu, sigma, p).
pub fn log_likelihood(sample: &Sample, g: &Generator, params: &FamilyParams) -> Result<f64> {
    let FamilyParams { mu, sigma, power: p } = *params;
    let n = sample.len() as f64;
    let mut acc = Accumulator::new();
    let mut t1_sum = Accumulator::new();
    for &y in sample.values() {
        let x = y.powf(p);
        let jet = g.jet(x);
        // ln|T1'(x)| = L + ln|L'|
        acc.add(jet.log_value + jet.dlog.abs().ln() + (p - 1.0) * y.ln() + (mu - 1.0) * jet.log_value);
        t1_sum.add(jet.log_value.exp());
    }
    let value = n * p.ln() + n * mu * mu.ln() + n * mu * sigma.ln() - n * ln_gamma(mu) + acc.sum()
        - mu * sigma * t1_sum.sum();
    overflow_checked(value, "log-likelihood")
}

/// The score vector at (mu, sigma, p).
pub fn score(sample: &Sample, g: &Generator, params: &FamilyParams) -> Result<ScoreVector> {
    let FamilyParams { mu, sigma, power: p } = *params;
    let n = sample.len() as f64;
    let mut t1 = Accumulator::new();
    let mut log_t1 = Accumulator::new();
    let mut curvature = Accumulator::new();
    let mut log_y = Accumulator::new();
    let mut slope = Accumulator::new();
    let mut dlog = Accumulator::new();
    for &y in sample.values() {
        let ly = y.ln();
        let x = y.powf(p);
        let jet = g.jet(x);
        let value = jet.log_value.exp();
        t1.add(value);
        log_t1.add(jet.log_value);
        log_y.add(ly);
        // T1''/T1' = R + L'
        curvature.add((jet.ratio + jet.dlog) * x * ly);
        slope.add(value * jet.dlog * x * ly);
        dlog.add(jet.dlog * x * ly);
    }
    let d_mu = n * mu.ln() + n * sigma.ln() + n - n * psi(mu) - sigma * t1.sum() + log_t1.sum();
    let d_sigma = mu * (n / sigma - t1.sum());
    let d_p = n / p + curvature.sum() + log_y.sum() - mu * sigma * slope.sum()
        + (mu - 1.0) * dlog.sum();
    Ok(ScoreVector {
        d_mu: overflow_checked(d_mu, "score")?,
        d_sigma: overflow_checked(d_sigma, "score")?,
        d_p: overflow_checked(d_p, "score")?,
    })
}

/// Residual of the p equation: ln mu(p) - psi(mu(p)) - H(Y^p).
pub fn full_ml_residual(sample: &Sample, g: &Generator, p: f64) -> Result<f64> {
    let terms = Terms::new(sample, g, p)?;
    let idx = terms.all_indices();
    let mu = terms.mu_closed(&idx)?;
    if mu <= 0.0 {
        return Err(Error::InfeasibleRegion { lo: p, hi: p });
    }
    Ok(ln_minus_psi(mu) - terms.rhs(&idx)?)
}

pub const DEFAULT_P_BRACKET: (f64, f64) = (0.05, 20.0);
const P_SCAN_POINTS: usize = 64;

/// Full ML over (mu, sigma, p) by a one-dimensional root search in p with
/// mu(p), sigma(p) profiled out.
///
/// The bracket is scanned on a log grid; every sign change between
/// feasible grid points is refined with Brent's method and the root with
/// the largest log-likelihood wins.
pub fn fit_full_ml(sample: &Sample, g: &Generator, p_bracket: (f64, f64)) -> Result<FullFit> {
    let (lo, hi) = p_bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::domain("fit_full_ml", format!("p bracket [{lo}, {hi}]")));
    }
    if sample.len() < 3 {
        return Err(Error::DegenerateSample("full ML needs at least three observations"));
    }
    if sample.all_equal() {
        return Err(Error::DegenerateSample("all observations are equal"));
    }
    let ratio = (hi / lo).powf(1.0 / (P_SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..P_SCAN_POINTS).map(|k| lo * ratio.powi(k as i32)).collect();
    let values: Vec<Option<f64>> = grid.iter().map(|&p| full_ml_residual(sample, g, p).ok()).collect();
    let any_infeasible = values.iter().any(Option::is_none);

    let mut best: Option<FullFit> = None;
    for k in 0..P_SCAN_POINTS - 1 {
        let (Some(a), Some(b)) = (values[k], values[k + 1]) else { continue };
        if a.signum() == b.signum() && a != 0.0 {
            continue;
        }
        let root = roots::brent(
            |p| full_ml_residual(sample, g, p).unwrap_or(f64::NAN),
            grid[k],
            grid[k + 1],
            1e-13 * grid[k + 1],
            200,
        );
        let Ok(root) = root else { continue };
        let p = root.x;
        let (Ok(mu), Ok(sigma)) = (profile_mu(sample, g, p), profile_sigma(sample, g, p)) else {
            continue;
        };
        let params = FamilyParams { mu, sigma, power: p };
        let Ok(ll) = log_likelihood(sample, g, &params) else { continue };
        let candidate = FullFit {
            mu,
            sigma,
            p,
            residual: root.residual,
            score: score(sample, g, &params)?,
            log_likelihood: ll,
        };
        if best.as_ref().is_none_or(|b| ll > b.log_likelihood) {
            best = Some(candidate);
        }
    }
    match best {
        Some(fit) => Ok(fit),
        None if any_infeasible => Err(Error::InfeasibleRegion { lo, hi }),
        None => Err(Error::NoRootInBracket { lo, hi }),
    }
}

/// (alpha-hat, beta-hat) for the log-generalized gamma row with delta = 1
/// (T1 = e^x - 1, mu = alpha, sigma = 1/(alpha beta)), in its expanded form.
pub fn fit_new_log_generalized_gamma(sample: &Sample) -> Result<(f64, f64)> {
    if sample.len() < 2 {
        return Err(Error::DegenerateSample("need at least two observations"));
    }
    if sample.all_equal() {
        return Err(Error::DegenerateSample("all observations are equal"));
    }
    let mut e_yly = Accumulator::new();
    let mut ly = Accumulator::new();
    let mut yly_over = Accumulator::new();
    let mut t1 = Accumulator::new();
    let mut e_yly_over = Accumulator::new();
    for &y in sample.values() {
        let e = y.exp();
        let em1 = y.exp_m1();
        let yl = y * y.ln();
        e_yly.add(e * yl);
        ly.add(y.ln());
        yly_over.add(yl / em1);
        t1.add(em1);
        e_yly_over.add(e * yl / em1);
    }
    let shared = 1.0 + ly.mean() - yly_over.mean();
    let beta = e_yly.mean() / shared - t1.mean() * e_yly_over.mean() / shared;
    if !(shared > 0.0 && beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidSample { denominator: shared });
    }
    let alpha = t1.mean() / beta;
    Ok((alpha, beta))
}

/// Canonical estimates (mu, sigma) for `kind`, skipping the mu estimate
/// when the native map never reads it.
pub fn estimate_family(sample: &Sample, g: &Generator, kind: EstimatorKind) -> Result<(f64, f64)> {
    let terms = Terms::new(sample, g, 1.0)?;
    terms.family(&terms.all_indices(), kind, g.native_uses().0)
}

/// Native-parameter estimates for `kind`.
pub fn estimate_native(sample: &Sample, g: &Generator, kind: EstimatorKind) -> Result<Vec<f64>> {
    let (mu, sigma) = estimate_family(sample, g, kind)?;
    native_or_invalid(g, mu, sigma)
}

pub(crate) fn native_or_invalid(g: &Generator, mu: f64, sigma: f64) -> Result<Vec<f64>> {
    if g.native_uses().0 && !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidSample { denominator: mu });
    }
    let native = g.from_family(mu, sigma).values;
    if native.iter().all(|v| v.is_finite()) {
        Ok(native)
    } else {
        Err(Error::InvalidSample { denominator: mu })
    }
}

/// Fit everything available at p = 1.
pub fn fit(sample: &Sample, g: &Generator) -> Result<EstimateReport> {
    let sigma_hat = estimate_sigma(sample, g)?;
    let mu_hat_closed = estimate_mu_closed(sample, g);
    let mu_hat_ml = estimate_mu_ml(sample, g);
    let (uses_mu, _) = g.native_uses();
    let map = |mu: &Result<f64>| -> Result<NativeParams> {
        let mu = match mu {
            Ok(m) => *m,
            Err(_) if !uses_mu => f64::NAN,
            Err(e) => return Err(e.clone()),
        };
        Ok(g.from_family(mu, sigma_hat))
    };
    let native_closed = map(&mu_hat_closed);
    let native_ml = map(&mu_hat_ml.clone().map(|f| f.mu));
    Ok(EstimateReport {
        n: sample.len(),
        sigma_hat,
        mu_hat_closed,
        mu_hat_ml,
        native_closed,
        native_ml,
    })
}

/// Monte Carlo check of the unbiased estimating equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationBias {
    /// MC mean of ln(1/sigma) - mean ln T1(Y) minus (ln mu - psi(mu))
    pub bias: f64,
    pub std_error: f64,
}

/// Estimate E[ln(1/sigma) - (1/n) sum ln T1(Y_i)] - (ln mu - psi(mu)) over
/// `reps` samples of size `n` at the true (mu, sigma).
pub fn estimating_equation_bias(
    mu: f64,
    sigma: f64,
    g: &Generator,
    reps: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<EquationBias> {
    let params = FamilyParams::new(mu, sigma)?;
    if reps < 2 {
        return Err(Error::domain("estimating_equation_bias", format!("reps = {reps}")));
    }
    let mut stats = MeanVar::new();
    for _ in 0..reps {
        let values = draw_values(n, &params, g, rng)?;
        let mean_log_t1 = values.iter().map(|&y| g.log_value(y)).collect::<Accumulator>().mean();
        stats.add(-sigma.ln() - mean_log_t1);
    }
    Ok(EquationBias {
        bias: stats.mean() - ln_minus_psi(mu),
        std_error: stats.std_error(),
    })
}

/// Whether the power-law theorem mu-hat < 2 mu-hat_ML is expected to hold.
pub fn theorem_applies(g: &Generator) -> bool {
    matches!(g.family_class(), FamilyClass::PowerLaw { .. })
}
