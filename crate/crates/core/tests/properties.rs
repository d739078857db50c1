use expfam::bootstrap::{bootstrap_bias_reduce, relative_bias, rmse};
use expfam::distribution::{cdf, quantile, FamilyParams, Sample};
use expfam::estimators::{
    estimate_mu_closed, estimate_mu_ml, estimate_mu_power_law, estimate_sigma, fit_new_log_generalized_gamma,
    ml_equation_rhs, profile_mu, score,
};
use expfam::generator::FamilyClass;
use expfam::special::{digamma, inv_reg_lower_gamma, log_minus_digamma, reg_lower_gamma};
use expfam::{parse_generator_spec, Generator, RngStream};
use proptest::prelude::*;

const SPECS: &[&str] = &[
    "gamma",
    "square",
    "inverse-gamma",
    "weibull(delta=1.7)",
    "inverse-weibull(delta=1.3)",
    "new-log-generalized-gamma(delta=1)",
    "new-log-generalized-inverse-gamma(delta=1.5)",
    "gompertz(delta=2)",
    "burr-xii(c=2)",
    "dagum(c=3)",
    "flexible-weibull(b=0.8,c=0.6)",
    "traditional-weibull(b=0.5,c=1.2,d=1.5)",
    "modified-weibull-extension(alpha=1.5,beta=2)",
];

const POWER_LAW: &[&str] = &["gamma", "square", "inverse-gamma", "weibull(delta=1.7)", "inverse-weibull(delta=1.3)"];

fn g(spec: &str) -> Generator {
    parse_generator_spec(spec).unwrap()
}

fn positive_sample(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..8.0, 2..max_len)
}

fn distinct(v: &[f64]) -> bool {
    v.iter().any(|&x| x != v[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rhs_is_nonnegative(values in positive_sample(40), k in 0..SPECS.len()) {
        let h = ml_equation_rhs(&Sample::new(values).unwrap(), &g(SPECS[k])).unwrap();
        prop_assert!(h >= 0.0);
    }

    #[test]
    fn rhs_vanishes_on_constant_samples(x in 0.05f64..8.0, n in 1usize..20, k in 0..SPECS.len()) {
        let h = ml_equation_rhs(&Sample::new(vec![x; n]).unwrap(), &g(SPECS[k])).unwrap();
        prop_assert_eq!(h, 0.0);
    }

    #[test]
    fn log_minus_digamma_decreases(mut xs in prop::collection::vec(1e-4f64..1e4, 2..20)) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for w in xs.windows(2) {
            prop_assert!(log_minus_digamma(w[0]).unwrap() > log_minus_digamma(w[1]).unwrap());
        }
    }

    #[test]
    fn ml_root_solves_equation(values in positive_sample(60), k in 0..SPECS.len()) {
        prop_assume!(distinct(&values));
        let s = Sample::new(values).unwrap();
        let gen = g(SPECS[k]);
        let h = ml_equation_rhs(&s, &gen).unwrap();
        prop_assume!(h > 1e-12 && h < 1e4);
        let fit = estimate_mu_ml(&s, &gen).unwrap();
        prop_assert!((fit.mu.ln() - digamma(fit.mu).unwrap() - h).abs() <= 1e-10);
        prop_assert!(fit.solver.iterations <= 200);
    }

    #[test]
    fn sigma_hat_is_the_sigma_score_root(values in positive_sample(60), mu in 0.2f64..10.0, k in 0..SPECS.len()) {
        let s = Sample::new(values).unwrap();
        let gen = g(SPECS[k]);
        let sigma = estimate_sigma(&s, &gen).unwrap();
        let sc = score(&s, &gen, &FamilyParams::new(mu, sigma).unwrap()).unwrap();
        // d_sigma = mu (n/sigma - sum T1) cancels terms of size mu n / sigma
        let scale = (mu / sigma).max(1.0);
        prop_assert!(sc.d_sigma.abs() <= 1e-9 * s.len() as f64 * scale);
    }

    #[test]
    fn closed_form_matches_power_law_reduction(values in positive_sample(60), k in 0..POWER_LAW.len()) {
        prop_assume!(distinct(&values));
        let gen = g(POWER_LAW[k]);
        let FamilyClass::PowerLaw { s, .. } = gen.family_class() else { unreachable!() };
        let sample = Sample::new(values).unwrap();
        let a = estimate_mu_closed(&sample, &gen).unwrap();
        let b = estimate_mu_power_law(&sample, s).unwrap();
        prop_assert!(((a - b) / b).abs() <= 1e-10);
    }

    #[test]
    fn closed_form_below_twice_ml_for_power_laws(values in positive_sample(60), k in 0..POWER_LAW.len()) {
        prop_assume!(distinct(&values));
        let gen = g(POWER_LAW[k]);
        let sample = Sample::new(values).unwrap();
        let closed = estimate_mu_closed(&sample, &gen).unwrap();
        let ml = estimate_mu_ml(&sample, &gen).unwrap().mu;
        prop_assert!(closed < 2.0 * ml, "closed {} ml {}", closed, ml);
    }

    #[test]
    fn power_law_closed_form_is_scale_free(values in positive_sample(40), c in 0.1f64..10.0, k in 0..POWER_LAW.len()) {
        prop_assume!(distinct(&values));
        let gen = g(POWER_LAW[k]);
        let a = estimate_mu_closed(&Sample::new(values.clone()).unwrap(), &gen).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let b = estimate_mu_closed(&Sample::new(scaled).unwrap(), &gen).unwrap();
        prop_assert!(((a - b) / a).abs() <= 1e-9);
    }

    #[test]
    fn profile_mu_equals_closed_form_on_powered_sample(values in positive_sample(30), p in 0.3f64..3.0, k in 0..SPECS.len()) {
        prop_assume!(distinct(&values));
        let gen = g(SPECS[k]);
        let s = Sample::new(values).unwrap();
        let powered = s.powered(p).unwrap();
        match (profile_mu(&s, &gen, p), estimate_mu_closed(&powered, &gen)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
            (Err(a), Err(b)) => prop_assert_eq!(a.code(), b.code()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn log_generalized_gamma_identities(values in positive_sample(60)) {
        prop_assume!(distinct(&values));
        let s = Sample::new(values).unwrap();
        let gen = g("new-log-generalized-gamma(delta=1)");
        if let Ok((alpha, beta)) = fit_new_log_generalized_gamma(&s) {
            let mu = estimate_mu_closed(&s, &gen).unwrap();
            let sigma = estimate_sigma(&s, &gen).unwrap();
            prop_assert!(((alpha - mu) / mu).abs() <= 1e-10);
            prop_assert!((alpha * beta * sigma - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn quantile_inverts_cdf(u in 0.001f64..0.999, mu in 0.3f64..8.0, sigma in 0.2f64..5.0, k in 0..SPECS.len()) {
        let gen = g(SPECS[k]);
        let params = FamilyParams::new(mu, sigma).unwrap();
        let y = quantile(u, &params, &gen).unwrap();
        prop_assert!((cdf(y, &params, &gen).unwrap() - u).abs() <= 1e-8);
    }

    #[test]
    fn lower_gamma_monotone_and_invertible(a in 0.05f64..50.0, x1 in 0.0f64..100.0, x2 in 0.0f64..100.0, u in 1e-6f64..(1.0 - 1e-6)) {
        let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        prop_assert!(reg_lower_gamma(a, lo).unwrap() <= reg_lower_gamma(a, hi).unwrap());
        let x = inv_reg_lower_gamma(a, u).unwrap();
        prop_assert!((reg_lower_gamma(a, x).unwrap() - u).abs() <= 1e-9);
    }

    #[test]
    fn bootstrap_leaves_constants_alone(values in positive_sample(30), c in -5.0f64..5.0, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let r = bootstrap_bias_reduce(&Sample::new(values).unwrap(), |_| Ok(vec![c]), 20, &mut rng).unwrap();
        prop_assert!((r.corrected[0] - c).abs() <= 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn rmse_dominates_bias(estimates in prop::collection::vec(-10.0f64..10.0, 1..50), theta in 0.1f64..5.0) {
        let rb = relative_bias(&estimates, theta).unwrap();
        let err = rmse(&estimates, theta).unwrap();
        prop_assert!(err + 1e-12 >= rb * theta);
    }

    #[test]
    fn generator_specs_round_trip(k in 0..SPECS.len()) {
        let gen = g(SPECS[k]);
        prop_assert_eq!(parse_generator_spec(&gen.to_string()).unwrap(), gen);
    }
}
