//! Browser bindings: density plots, sample-and-fit, and a small RB/RMSE
//! experiment. Each binding wraps a plain function that native tests call.

use std::fmt::Write as _;

use expfam::distribution::{self, FamilyParams};
use expfam::estimators;
use expfam::experiment::{self, EstimatorSelection, ExperimentConfig};
use expfam::svg::{self, Series};
use expfam::{parse_generator_spec, Generator, RngStream};
use wasm_bindgen::prelude::*;

fn family(spec: &str, native: &str) -> Result<(Generator, FamilyParams), String> {
    let g = parse_generator_spec(spec).map_err(|e| e.to_string())?;
    let values = parse_list(native)?;
    let (mu, sigma) = g.to_family(&values).map_err(|e| e.to_string())?;
    let params = FamilyParams::new(mu, sigma).map_err(|e| e.to_string())?;
    Ok((g, params))
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: '{s}'")))
        .collect()
}

/// SVG of the density and distribution function between the 0.5% and
/// 99.5% quantiles. `native` lists the native parameters, comma separated.
pub fn density_plot(spec: &str, native: &str) -> Result<String, String> {
    let (g, params) = family(spec, native)?;
    let lo = distribution::quantile(0.005, &params, &g).map_err(|e| e.to_string())?;
    let hi = distribution::quantile(0.995, &params, &g).map_err(|e| e.to_string())?;
    let points = 200;
    let mut pdf = Vec::with_capacity(points);
    let mut cdf = Vec::with_capacity(points);
    for k in 0..points {
        let y = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        pdf.push((y, distribution::pdf(y, &params, &g).map_err(|e| e.to_string())?));
        cdf.push((y, distribution::cdf(y, &params, &g).map_err(|e| e.to_string())?));
    }
    let density = [Series { label: "f(y)".into(), points: pdf }];
    let distribution_fn = [Series { label: "F(y)".into(), points: cdf }];
    let title = format!("{g} at mu={:.4}, sigma={:.4}", params.mu, params.sigma);
    Ok(svg::line_chart(&title, "y", &[("Density", "f(y)", &density), ("Distribution function", "F(y)", &distribution_fn)]))
}

/// Draw `n` values and fit them; returns key=value lines.
pub fn sample_and_fit(spec: &str, native: &str, n: usize, seed: u64) -> Result<String, String> {
    let (g, params) = family(spec, native)?;
    let mut rng = RngStream::new(seed, 0);
    let s = distribution::sample(n, &params, &g, &mut rng).map_err(|e| e.to_string())?;
    let report = estimators::fit(&s, &g).map_err(|e| e.to_string())?;
    let mut out = String::new();
    writeln!(out, "true mu={} sigma={}", params.mu, params.sigma).unwrap();
    writeln!(out, "sigma_hat={}", report.sigma_hat).unwrap();
    match &report.mu_hat_closed {
        Ok(mu) => writeln!(out, "mu_hat_closed={mu}").unwrap(),
        Err(e) => writeln!(out, "mu_hat_closed={}", e.code()).unwrap(),
    }
    match &report.mu_hat_ml {
        Ok(fit) => writeln!(out, "mu_hat_ml={} ({} iterations)", fit.mu, fit.solver.iterations).unwrap(),
        Err(e) => writeln!(out, "mu_hat_ml={}", e.code()).unwrap(),
    }
    for (label, native) in [("closed", &report.native_closed), ("ml", &report.native_ml)] {
        if let Ok(p) = native {
            writeln!(out, "native ({label}): {p}").unwrap();
        }
    }
    Ok(out)
}

/// RB and RMSE against n for one true parameter vector; returns the SVG.
pub fn small_experiment(
    spec: &str,
    native: &str,
    n_grid: &str,
    replications: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<String, String> {
    let g = parse_generator_spec(spec).map_err(|e| e.to_string())?;
    let theta = parse_list(native)?;
    let n_grid = n_grid
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad sample size '{s}'")))
        .collect::<Result<Vec<_>, _>>()?;
    if replications > 2000 || bootstrap > 200 {
        return Err("keep N <= 2000 and B <= 200 in the browser".into());
    }
    let config = ExperimentConfig {
        generator: g,
        theta_grid: vec![theta],
        n_grid,
        replications,
        bootstrap,
        seed,
        estimators: EstimatorSelection::Closed,
        workers: 1,
    };
    let rows = experiment::run_experiment(&config).map_err(|e| e.to_string())?;
    svg::experiment_figures(&rows)
        .into_iter()
        .next()
        .map(|(_, svg)| svg)
        .ok_or_else(|| "no rows".to_string())
}

#[wasm_bindgen(js_name = densityPlot)]
pub fn density_plot_js(spec: &str, native: &str) -> Result<String, JsValue> {
    density_plot(spec, native).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sampleAndFit)]
pub fn sample_and_fit_js(spec: &str, native: &str, n: usize, seed: u64) -> Result<String, JsValue> {
    sample_and_fit(spec, native, n, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = smallExperiment)]
pub fn small_experiment_js(
    spec: &str,
    native: &str,
    n_grid: &str,
    replications: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<String, JsValue> {
    small_experiment(spec, native, n_grid, replications, bootstrap, seed).map_err(|e| JsValue::from_str(&e))
}

/// Native parameter names of a generator spec, comma separated.
#[wasm_bindgen(js_name = nativeNames)]
pub fn native_names(spec: &str) -> Result<String, JsValue> {
    let g = parse_generator_spec(spec).map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(g.native_names().join(","))
}
