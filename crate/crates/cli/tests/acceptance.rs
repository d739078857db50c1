//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use expfam::distribution::{self, moment_exists, moment_power_law, population_mu_limit, FamilyParams, Sample};
use expfam::estimators::{
    estimate_mu_closed, estimate_mu_ml, estimate_mu_power_law, estimate_sigma, estimating_equation_bias,
    fit_new_log_generalized_gamma, ml_equation_rhs, score,
};
use expfam::experiment::{run_experiment, ExperimentConfig, MetricsRow};
use expfam::generator::FamilyClass;
use expfam::special::{digamma, reg_lower_gamma};
use expfam::stats::{ks_critical_value, ks_statistic};
use expfam::sum::MeanVar;
use expfam::{parse_generator_spec, Generator, RngStream};

const CATALOG_SPECS: &[&str] = &[
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
];

/// gamma, x^2, 1/x, x^delta, x^-delta
const POWER_LAW_SPECS: &[&str] = &["gamma", "square", "inverse-gamma", "weibull(delta=1.7)", "inverse-weibull(delta=1.3)"];

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Outcome {
        Outcome { pass, summary: summary.into(), details: Vec::new() }
    }
}

fn generator(spec: &str) -> Generator {
    parse_generator_spec(spec).unwrap_or_else(|e| panic!("{spec}: {e}"))
}

fn catalog() -> Vec<Generator> {
    CATALOG_SPECS.iter().map(|s| generator(s)).collect()
}

/// Canonical points reachable through the row's native map.
fn parameter_points(g: &Generator) -> Vec<FamilyParams> {
    [(0.8, 1.5), (2.0, 0.6), (5.0, 2.5)]
        .iter()
        .map(|&(mu, sigma)| {
            let native = g.from_family(mu, sigma);
            let values: Vec<f64> = native.values.iter().map(|v| if v.is_finite() { *v } else { 1.0 }).collect();
            let (m, s) = g.to_family(&values).unwrap();
            FamilyParams::new(m, s).unwrap()
        })
        .collect()
}

fn uniform_in(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn draw(g: &Generator, params: &FamilyParams, n: usize, rng: &mut RngStream) -> Sample {
    distribution::sample(n, params, g, rng).unwrap_or_else(|e| panic!("{g}: {e}"))
}

fn cell_map(rows: &[MetricsRow]) -> HashMap<(String, String, usize, String), (f64, f64)> {
    // a cell's alpha identifies the row group; beta is fixed at 1
    let mut out = HashMap::new();
    let mut alpha = f64::NAN;
    for r in rows {
        if r.param_name == "alpha" {
            alpha = r.theta_true;
        }
        out.insert((format!("{alpha}"), r.param_name.clone(), r.n, r.estimator.clone()), (r.rb, r.rmse));
    }
    out
}

fn figure_checks(rows: &[MetricsRow], estimator: &str, rb_cap: f64, details: &mut Vec<String>, label: &str) -> bool {
    let cells = cell_map(rows);
    let mut ok = true;
    for alpha in [0.5, 1.0, 2.0, 4.0, 6.0] {
        for param in ["alpha", "beta"] {
            let key = |n: usize| (format!("{alpha}"), param.to_string(), n, estimator.to_string());
            let (rb20, rmse20) = cells[&key(20)];
            let (rb600, rmse600) = cells[&key(600)];
            let good = rb600 < rb20 && rmse600 < rmse20 && rb600 <= rb_cap;
            ok &= good;
            if !good {
                details.push(format!(
                    "{label} {estimator} alpha={alpha} {param}: RB20={rb20:.5} RB600={rb600:.5} RMSE20={rmse20:.4} RMSE600={rmse600:.4}"
                ));
            }
        }
    }
    ok
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let full = run_experiment(&ExperimentConfig::paper_figure1(SEED)).unwrap();
    let full_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let smoke = run_experiment(&ExperimentConfig::smoke(SEED)).unwrap();
    let smoke_secs = start.elapsed().as_secs_f64();

    let mut details = Vec::new();
    // the plotted estimators are the bootstrap bias-reduced closed forms
    let full_ok = figure_checks(&full, "closed-boot", 0.05, &mut details, "full");
    let smoke_ok = figure_checks(&smoke, "closed-boot", 0.10, &mut details, "smoke");
    let mut informational = Vec::new();
    for est in ["closed", "ml", "ml-boot"] {
        let mut sub = Vec::new();
        let ok = figure_checks(&full, est, 0.05, &mut sub, "full");
        informational.push(format!("{est}: {}", if ok { "all cells monotone" } else { "some cells not monotone" }));
        details.extend(sub.into_iter().map(|d| format!("(informational) {d}")));
    }
    let time_ok = full_secs <= 900.0 && smoke_secs <= 60.0;
    let failures: usize = full.iter().chain(&smoke).map(|r| r.failures).sum();
    let mut out = Outcome::new(
        full_ok && smoke_ok && time_ok,
        format!(
            "closed-boot full={} smoke={}; full {full_secs:.1}s, smoke {smoke_secs:.1}s; {failures} failed replications; other estimators: {}",
            if full_ok { "ok" } else { "violations" },
            if smoke_ok { "ok" } else { "violations" },
            informational.join(", ")
        ),
    );
    out.details = details;
    out
}

fn criterion_2() -> Outcome {
    let mut rng = RngStream::new(SEED, 2);
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for g in catalog() {
        let points = parameter_points(&g);
        for k in 0..50 {
            let params = points[k % points.len()];
            let n = 5 + rng.below(300);
            let s = draw(&g, &params, n, &mut rng);
            let sigma_hat = estimate_sigma(&s, &g).unwrap();
            let mu = uniform_in(&mut rng, 0.3, 8.0);
            let sc = score(&s, &g, &FamilyParams::new(mu, sigma_hat).unwrap()).unwrap();
            let ratio = sc.d_sigma.abs() / n as f64;
            worst = worst.max(ratio);
            if ratio > 1e-9 {
                bad.push(format!("{g}: |d_sigma|/n = {ratio:e}"));
            }
        }
    }
    let mut out = Outcome::new(bad.is_empty(), format!("{} generators x 50 samples, max |d_sigma|/n = {worst:.2e}", CATALOG_SPECS.len()));
    out.details = bad;
    out
}

fn criterion_3() -> Outcome {
    let mut rng = RngStream::new(SEED, 3);
    let gens = catalog();
    let mut worst = 0.0f64;
    let mut max_iter = 0;
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let g = &gens[rng.below(gens.len())];
        let params = FamilyParams::new(uniform_in(&mut rng, 0.5, 6.0), uniform_in(&mut rng, 0.5, 4.0)).unwrap();
        let n = 2 + rng.below(200);
        let s = draw(g, &params, n, &mut rng);
        let h = ml_equation_rhs(&s, g).unwrap();
        let fit = match estimate_mu_ml(&s, g) {
            Ok(f) => f,
            Err(e) => {
                bad.push(format!("{g}: {e}"));
                continue;
            }
        };
        let residual = (fit.mu.ln() - digamma(fit.mu).unwrap() - h).abs();
        worst = worst.max(residual);
        max_iter = max_iter.max(fit.solver.iterations);
        if residual > 1e-10 || fit.solver.iterations > 200 {
            bad.push(format!("{g}: H={h} mu={} residual={residual:e} iterations={}", fit.mu, fit.solver.iterations));
        }
    }
    let mut out = Outcome::new(bad.is_empty(), format!("1000 samples, max residual {worst:.2e}, max iterations {max_iter}"));
    out.details = bad;
    out
}

fn criterion_4() -> Outcome {
    let mut rng = RngStream::new(SEED, 4);
    let mut violations = Vec::new();
    let mut checked = 0;
    for spec in POWER_LAW_SPECS {
        let g = generator(spec);
        for _ in 0..10_000 {
            let params = FamilyParams::new(uniform_in(&mut rng, 0.5, 6.0), uniform_in(&mut rng, 0.5, 4.0)).unwrap();
            let n = 2 + rng.below(99);
            let s = draw(&g, &params, n, &mut rng);
            let closed = estimate_mu_closed(&s, &g).unwrap();
            let ml = estimate_mu_ml(&s, &g).unwrap().mu;
            checked += 1;
            if !(closed < 2.0 * ml) {
                violations.push(format!("{spec}: n={n} closed={closed} ml={ml}"));
            }
        }
    }
    let mut out = Outcome::new(violations.is_empty(), format!("{checked} samples over {} generators, {} violations", POWER_LAW_SPECS.len(), violations.len()));
    out.details = violations.into_iter().take(10).collect();
    out
}

fn criterion_5() -> Outcome {
    let mut rng = RngStream::new(SEED, 5);
    let params = FamilyParams::new(4.5, 1.5).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    let mut count = 0;
    for spec in ["gamma", "square", "inverse-gamma"] {
        let g = generator(spec);
        let FamilyClass::PowerLaw { c, s } = g.family_class() else { unreachable!() };
        let ys = draw(&g, &params, 1_000_000, &mut rng);
        for q in [1.0, 2.0, -1.0] {
            if moment_exists(q, &g, &params).exists() != Some(true) {
                details.push(format!("{spec} q={q}: moment reported missing"));
                ok = false;
                continue;
            }
            let analytic = moment_power_law(q, &params, c, s).unwrap();
            let stats: MeanVar = ys.values().iter().map(|y| y.powf(q)).collect();
            let z = (stats.mean() - analytic) / stats.std_error();
            count += 1;
            if z.abs() > 4.0 {
                ok = false;
            }
            details.push(format!("{spec} q={q}: analytic {analytic:.6} mc {:.6} z={z:.2}", stats.mean()));
        }
    }
    let mut out = Outcome::new(ok, format!("{count} (generator, q) pairs at 10^6 draws each"));
    if ok {
        out.details.clear();
    } else {
        out.details = details;
    }
    out
}

fn criterion_6() -> Outcome {
    let mut rng = RngStream::new(SEED, 6);
    let n = 100_000;
    let critical = ks_critical_value(n, 0.001);
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for g in catalog() {
        for params in parameter_points(&g) {
            let s = draw(&g, &params, n, &mut rng);
            let mut z: Vec<f64> = s.values().iter().map(|&y| g.value(y)).collect();
            let (shape, rate) = (params.mu, params.mu * params.sigma);
            let d = ks_statistic(&mut z, |t| reg_lower_gamma(shape, rate * t).unwrap());
            worst = worst.max(d / critical);
            if d > critical {
                bad.push(format!("{g} mu={} sigma={}: D={d:.5} > {critical:.5}", params.mu, params.sigma));
            }
        }
    }
    let mut out = Outcome::new(
        bad.is_empty(),
        format!("{} generators x 3 points, n=10^5, max D/critical = {worst:.3}", CATALOG_SPECS.len()),
    );
    out.details = bad;
    out
}

fn criterion_7() -> Outcome {
    let mut rng = RngStream::new(SEED, 7);
    let mut ok = true;
    let mut parts = Vec::new();
    for (spec, mu, sigma) in [("gamma", 1.0, 1.0), ("square", 2.0, 3.0)] {
        let g = generator(spec);
        let b = estimating_equation_bias(mu, sigma, &g, 100_000, 10, &mut rng).unwrap();
        let z = b.bias / b.std_error;
        ok &= z.abs() <= 4.0;
        parts.push(format!("{spec}: bias {:.2e} ({z:.2} SE)", b.bias));
    }
    Outcome::new(ok, parts.join(", "))
}

fn criterion_8() -> Outcome {
    let mut rng = RngStream::new(SEED, 8);
    let n = 100_000;
    let mut bad = Vec::new();
    let mut worst_sigma = 0.0f64;
    for g in catalog() {
        let params = parameter_points(&g)[1];
        let s = draw(&g, &params, n, &mut rng);
        let rel = (estimate_sigma(&s, &g).unwrap() / params.sigma - 1.0).abs();
        worst_sigma = worst_sigma.max(rel);
        if rel > 0.01 {
            bad.push(format!("{g}: sigma-hat off by {:.3}%", 100.0 * rel));
        }
    }
    let mut worst_mu = 0.0f64;
    let mut worst_limit_z = 0.0f64;
    for spec in POWER_LAW_SPECS {
        let g = generator(spec);
        let params = FamilyParams::new(2.5, 1.2).unwrap();
        let s = draw(&g, &params, n, &mut rng);
        let rel = (estimate_mu_closed(&s, &g).unwrap() / params.mu - 1.0).abs();
        worst_mu = worst_mu.max(rel);
        if rel > 0.05 {
            bad.push(format!("{spec}: mu-hat off by {:.3}%", 100.0 * rel));
        }
        let limit = population_mu_limit(&params, &g, 1_000_000, &mut rng).unwrap();
        let z = (limit.estimate - params.mu) / limit.std_error;
        worst_limit_z = worst_limit_z.max(z.abs());
        if z.abs() > 4.0 {
            bad.push(format!("{spec}: population limit {} +- {} vs mu {}", limit.estimate, limit.std_error, params.mu));
        }
    }
    let g = generator("new-log-generalized-gamma(delta=1)");
    let params = FamilyParams::new(2.0, 50.0).unwrap();
    let limit = population_mu_limit(&params, &g, 1_000_000, &mut rng).unwrap();
    let rel = (limit.estimate / 2.0 - 1.0).abs();
    if rel > 0.05 {
        bad.push(format!("e^x-1 at sigma=50: limit {} +- {}", limit.estimate, limit.std_error));
    }
    let mut out = Outcome::new(
        bad.is_empty(),
        format!(
            "max sigma-hat error {:.3}%, max power-law mu-hat error {:.3}%, max limit |z| {worst_limit_z:.2}, e^x-1 limit {:.4} +- {:.4}",
            100.0 * worst_sigma,
            100.0 * worst_mu,
            limit.estimate,
            limit.std_error
        ),
    );
    out.details = bad;
    out
}

fn criterion_9() -> Outcome {
    let mut rng = RngStream::new(SEED, 9);
    let mut worst_power = 0.0f64;
    let mut worst_lgg = 0.0f64;
    for spec in POWER_LAW_SPECS {
        let g = generator(spec);
        let FamilyClass::PowerLaw { s, .. } = g.family_class() else { unreachable!() };
        for _ in 0..100 {
            let params = FamilyParams::new(uniform_in(&mut rng, 0.5, 6.0), uniform_in(&mut rng, 0.5, 4.0)).unwrap();
            let sample = draw(&g, &params, 2 + rng.below(300), &mut rng);
            let a = estimate_mu_closed(&sample, &g).unwrap();
            let b = estimate_mu_power_law(&sample, s).unwrap();
            worst_power = worst_power.max(((a - b) / b).abs());
        }
    }
    let g = generator("new-log-generalized-gamma(delta=1)");
    for _ in 0..100 {
        let alpha = uniform_in(&mut rng, 0.5, 6.0);
        let beta = uniform_in(&mut rng, 0.5, 2.0);
        let (mu, sigma) = g.to_family(&[alpha, beta]).unwrap();
        let sample = draw(&g, &FamilyParams::new(mu, sigma).unwrap(), 20 + rng.below(600), &mut rng);
        let Ok((a_hat, b_hat)) = fit_new_log_generalized_gamma(&sample) else { continue };
        let mu_hat = estimate_mu_closed(&sample, &g).unwrap();
        let sigma_hat = estimate_sigma(&sample, &g).unwrap();
        worst_lgg = worst_lgg.max(((a_hat - mu_hat) / mu_hat).abs()).max((a_hat * b_hat * sigma_hat - 1.0).abs());
    }
    Outcome::new(
        worst_power <= 1e-10 && worst_lgg <= 1e-10,
        format!("power-law reduction max rel diff {worst_power:.2e}; log-generalized gamma identities max diff {worst_lgg:.2e}"),
    )
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_expfam")).args(args).output().expect("run expfam");
    assert!(out.status.success(), "expfam {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_10() -> Outcome {
    let base = ["experiment", "--smoke", "--seed", "20"];
    let one = run_cli(&[&base[..], &["--workers", "1"]].concat());
    let again = run_cli(&[&base[..], &["--workers", "1"]].concat());
    let eight = run_cli(&[&base[..], &["--workers", "8"]].concat());
    let lines = one.iter().filter(|&&b| b == b'\n').count();
    Outcome::new(
        one == again && one == eight && lines > 1,
        format!(
            "smoke preset CSV ({} bytes, {lines} lines): rerun {}, 1 vs 8 workers {}",
            one.len(),
            if one == again { "identical" } else { "differs" },
            if one == eight { "identical" } else { "differs" }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("RB and RMSE shrink with n", criterion_1),
        ("exactness of sigma-hat", criterion_2),
        ("ML root quality", criterion_3),
        ("mu-hat < 2 mu-hat_ML", criterion_4),
        ("power-law moments", criterion_5),
        ("gamma converse (KS)", criterion_6),
        ("unbiased estimating equation", criterion_7),
        ("consistency", criterion_8),
        ("dual-path identities", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{}] {name}: {} ({:.1}s)", k + 1, outcome.summary, start.elapsed().as_secs_f64());
        for d in &outcome.details {
            println!("    {d}");
        }
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
