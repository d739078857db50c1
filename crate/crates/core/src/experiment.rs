//! Monte Carlo experiments: RB and RMSE of the estimators over a grid of
//! true parameters and sample sizes.
//!
//! Replication `r` of cell `c` draws from the stream `stream_key(&[c, r])`
//! under the configured seed and its bootstrap uses fixed substreams of that
//! stream, so every replication is reproducible on its own and the output
//! does not depend on how replications are scheduled.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::bootstrap::{bootstrap_indexed, relative_bias, rmse};
use crate::distribution::{draw_values, FamilyParams, Sample};
use crate::error::{Error, Result};
use crate::estimators::{native_or_invalid, EstimatorKind, Terms};
use crate::generator::{parse_generator_spec, Generator};
use crate::rng::{stream_key, RngStream};

pub const CSV_HEADER: [&str; 11] = [
    "generator",
    "param_name",
    "theta_true",
    "n",
    "estimator",
    "rb",
    "rmse",
    "failures",
    "N",
    "B",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorSelection {
    Closed,
    Ml,
    Both,
}

impl EstimatorSelection {
    pub fn kinds(&self) -> &'static [EstimatorKind] {
        match self {
            EstimatorSelection::Closed => &[EstimatorKind::Closed],
            EstimatorSelection::Ml => &[EstimatorKind::Ml],
            EstimatorSelection::Both => &[EstimatorKind::Closed, EstimatorKind::Ml],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorSelection::Closed => "closed",
            EstimatorSelection::Ml => "ml",
            EstimatorSelection::Both => "both",
        }
    }
}

impl std::str::FromStr for EstimatorSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(EstimatorSelection::Closed),
            "ml" => Ok(EstimatorSelection::Ml),
            "both" => Ok(EstimatorSelection::Both),
            other => Err(Error::InvalidConfig(format!("unknown estimator selection '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub generator: Generator,
    /// true native parameter vectors, in `generator.native_names()` order
    pub theta_grid: Vec<Vec<f64>>,
    pub n_grid: Vec<usize>,
    /// Monte Carlo replications per cell
    pub replications: usize,
    /// bootstrap replications; 0 disables the corrected rows
    pub bootstrap: usize,
    pub seed: u64,
    pub estimators: EstimatorSelection,
    /// worker threads; 0 means one per available core
    pub workers: usize,
}

impl ExperimentConfig {
    /// The simulation design of the log-generalized gamma study:
    /// alpha in {0.5, 1, 2, 4, 6}, beta = 1, N = 1000, B = 200.
    pub fn paper_figure1(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            generator: parse_generator_spec("new-log-generalized-gamma(delta=1)").expect("catalog entry"),
            theta_grid: [0.5, 1.0, 2.0, 4.0, 6.0].iter().map(|&a| vec![a, 1.0]).collect(),
            n_grid: vec![20, 50, 100, 200, 400, 600],
            replications: 1000,
            bootstrap: 200,
            seed,
            estimators: EstimatorSelection::Both,
            workers: 0,
        }
    }

    /// `paper_figure1` with N = 200 and B = 50.
    pub fn smoke(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            replications: 200,
            bootstrap: 50,
            ..ExperimentConfig::paper_figure1(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::InvalidConfig("every n must be at least 2".into()));
        }
        if self.theta_grid.is_empty() {
            return Err(Error::InvalidConfig("empty parameter grid".into()));
        }
        let names = self.generator.native_names();
        for theta in &self.theta_grid {
            if theta.len() != names.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} expects parameters {:?}",
                    self.generator,
                    names
                )));
            }
            self.generator.to_family(theta)?;
            if theta.contains(&0.0) {
                return Err(Error::InvalidConfig("relative bias needs nonzero true values".into()));
            }
        }
        Ok(())
    }

    /// Parse flat `key=value` text. Grids repeat a key or list values
    /// separated by commas; blank lines and `#` comments are ignored.
    ///
    /// Keys: `generator`, `n`, `N`, `B`, `seed`, `estimator`, `workers`,
    /// `preset` (`paper-figure1` or `smoke`), and one key per native
    /// parameter of the generator. The parameter grid is the Cartesian
    /// product of the native value lists.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim().to_string();
            let value = value.trim();
            let entry = values.entry(key.clone()).or_default();
            if key == "generator" || key == "preset" {
                entry.push(value.to_string());
            } else {
                entry.extend(value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()));
            }
        }
        let single = |values: &mut BTreeMap<String, Vec<String>>, key: &str| -> Result<Option<String>> {
            match values.remove(key) {
                None => Ok(None),
                Some(mut v) if v.len() == 1 => Ok(v.pop()),
                Some(_) => Err(Error::InvalidConfig(format!("'{key}' given more than once"))),
            }
        };
        let seed = single(&mut values, "seed")?
            .ok_or_else(|| Error::InvalidConfig("seed is required".into()))
            .and_then(|s| parse_num::<u64>("seed", &s))?;
        let mut config = match single(&mut values, "preset")?.as_deref() {
            Some("paper-figure1") => Some(ExperimentConfig::paper_figure1(seed)),
            Some("smoke") => Some(ExperimentConfig::smoke(seed)),
            Some(other) => return Err(Error::InvalidConfig(format!("unknown preset '{other}'"))),
            None => None,
        };
        let generator = match single(&mut values, "generator")? {
            Some(spec) => parse_generator_spec(&spec)?,
            None => match &config {
                Some(c) => c.generator.clone(),
                None => return Err(Error::InvalidConfig("generator is required".into())),
            },
        };
        let names = generator.native_names();
        let mut lists = Vec::with_capacity(names.len());
        for name in names {
            match values.remove(*name) {
                Some(v) => lists.push(
                    v.iter().map(|s| parse_num::<f64>(name, s)).collect::<Result<Vec<f64>>>()?,
                ),
                None => lists.push(Vec::new()),
            }
        }
        let theta_grid = if lists.iter().all(|l| l.is_empty()) {
            match &config {
                Some(c) if c.generator == generator => c.theta_grid.clone(),
                _ => return Err(Error::InvalidConfig(format!("values for {names:?} are required"))),
            }
        } else if let Some(missing) = names.iter().zip(&lists).find(|(_, l)| l.is_empty()) {
            return Err(Error::InvalidConfig(format!("no values for '{}'", missing.0)));
        } else {
            cartesian(&lists)
        };
        let n_grid = match values.remove("n") {
            Some(v) => v.iter().map(|s| parse_num::<usize>("n", s)).collect::<Result<Vec<_>>>()?,
            None => match &config {
                Some(c) => c.n_grid.clone(),
                None => return Err(Error::InvalidConfig("n is required".into())),
            },
        };
        let base = config.take();
        let replications = match single(&mut values, "N")? {
            Some(s) => parse_num("N", &s)?,
            None => base.as_ref().map_or(1000, |c| c.replications),
        };
        let bootstrap = match single(&mut values, "B")? {
            Some(s) => parse_num("B", &s)?,
            None => base.as_ref().map_or(200, |c| c.bootstrap),
        };
        let estimators = match single(&mut values, "estimator")? {
            Some(s) => s.parse()?,
            None => EstimatorSelection::Both,
        };
        let workers = match single(&mut values, "workers")? {
            Some(s) => parse_num("workers", &s)?,
            None => 0,
        };
        if let Some(key) = values.keys().next() {
            return Err(Error::InvalidConfig(format!("unknown key '{key}'")));
        }
        let config = ExperimentConfig {
            generator,
            theta_grid,
            n_grid,
            replications,
            bootstrap,
            seed,
            estimators,
            workers,
        };
        config.validate()?;
        Ok(config)
    }

    /// Text that `parse` reads back to an equal configuration.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "generator={}", self.generator).unwrap();
        for (j, name) in self.generator.native_names().iter().enumerate() {
            let mut seen: Vec<f64> = Vec::new();
            for theta in &self.theta_grid {
                if !seen.contains(&theta[j]) {
                    seen.push(theta[j]);
                }
            }
            for v in seen {
                writeln!(out, "{name}={v}").unwrap();
            }
        }
        for n in &self.n_grid {
            writeln!(out, "n={n}").unwrap();
        }
        writeln!(out, "N={}", self.replications).unwrap();
        writeln!(out, "B={}", self.bootstrap).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "estimator={}", self.estimators.as_str()).unwrap();
        writeln!(out, "workers={}", self.workers).unwrap();
        out
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidConfig(format!("'{key}': cannot parse '{s}'")))
}

fn cartesian(lists: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for list in lists {
        out = out
            .iter()
            .flat_map(|prefix| {
                list.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub generator: String,
    pub param_name: String,
    pub theta_true: f64,
    pub n: usize,
    /// `closed`, `closed-boot`, `ml` or `ml-boot`
    pub estimator: String,
    pub rb: f64,
    pub rmse: f64,
    pub failures: usize,
    pub replications: usize,
    pub bootstrap: usize,
    pub seed: u64,
    /// summed replication time for the cell, not written to CSV
    pub elapsed: f64,
    /// bootstrap replicates dropped after the retry cap, not written to CSV
    pub bootstrap_excluded: usize,
}

struct KindOutcome {
    plain: Option<Vec<f64>>,
    corrected: Option<Vec<f64>>,
    excluded: usize,
}

struct Replication {
    kinds: Vec<KindOutcome>,
    elapsed: f64,
}

// Instant is unavailable on wasm32-unknown-unknown
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> f64 {
    || 0.0
}

fn replicate(config: &ExperimentConfig, params: &FamilyParams, cell: usize, rep: usize, n: usize) -> Replication {
    let elapsed = stopwatch();
    let g = &config.generator;
    let need_mu = g.native_uses().0;
    let mut rng = RngStream::new(config.seed, stream_key(&[cell as u64, rep as u64]));
    let terms = draw_values(n, params, g, &mut rng)
        .and_then(Sample::new)
        .and_then(|s| Terms::new(&s, g, 1.0));
    let kinds = config
        .estimators
        .kinds()
        .iter()
        .map(|&kind| {
            let Ok(terms) = &terms else {
                return KindOutcome { plain: None, corrected: None, excluded: 0 };
            };
            let fit = |idx: &[usize]| {
                let (mu, sigma) = terms.family(idx, kind, need_mu)?;
                native_or_invalid(g, mu, sigma)
            };
            let plain = fit(&terms.all_indices()).ok();
            if plain.is_none() || config.bootstrap == 0 {
                return KindOutcome { plain, corrected: None, excluded: 0 };
            }
            let offset = match kind {
                EstimatorKind::Closed => 1,
                EstimatorKind::Ml => 2,
            };
            let mut boot_rng = rng.substream(offset);
            match bootstrap_indexed(terms.len(), fit, config.bootstrap, &mut boot_rng) {
                Ok(r) => KindOutcome { plain, corrected: Some(r.corrected), excluded: r.excluded },
                Err(_) => KindOutcome { plain, corrected: None, excluded: config.bootstrap },
            }
        })
        .collect();
    Replication {
        kinds,
        elapsed: elapsed(),
    }
}

/// Run every (theta, n) cell and summarize it, one row per
/// (cell, native parameter, estimator label) in grid order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let g = &config.generator;
    let mut cells = Vec::new();
    for theta in &config.theta_grid {
        let (mu, sigma) = g.to_family(theta)?;
        let params = FamilyParams::new(mu, sigma)?;
        for &n in &config.n_grid {
            cells.push((theta, params, n));
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();
    let run = |&(c, r): &(usize, usize)| replicate(config, &cells[c].1, c, r, cells[c].2);
    let results = execute(config.workers, &tasks, run)?;

    let names = g.native_names();
    let spec = g.to_string();
    let mut rows = Vec::new();
    for (c, (theta, _, n)) in cells.iter().enumerate() {
        let reps = &results[c * config.replications..(c + 1) * config.replications];
        let elapsed: f64 = reps.iter().map(|r| r.elapsed).sum();
        for (j, name) in names.iter().enumerate() {
            for (k, kind) in config.estimators.kinds().iter().enumerate() {
                let mut labels = vec![(kind.as_str().to_string(), false)];
                if config.bootstrap > 0 {
                    labels.push((format!("{}-boot", kind.as_str()), true));
                }
                for (label, boot) in labels {
                    let estimates: Vec<f64> = reps
                        .iter()
                        .filter_map(|r| {
                            let o = &r.kinds[k];
                            if boot { o.corrected.as_ref() } else { o.plain.as_ref() }.map(|v| v[j])
                        })
                        .collect();
                    let excluded = if boot { reps.iter().map(|r| r.kinds[k].excluded).sum() } else { 0 };
                    let truth = theta[j];
                    let (rb, err) = if estimates.is_empty() {
                        (f64::NAN, f64::NAN)
                    } else {
                        (relative_bias(&estimates, truth)?, rmse(&estimates, truth)?)
                    };
                    rows.push(MetricsRow {
                        generator: spec.clone(),
                        param_name: name.to_string(),
                        theta_true: truth,
                        n: *n,
                        estimator: label,
                        rb,
                        rmse: err,
                        failures: config.replications - estimates.len(),
                        replications: config.replications,
                        bootstrap: config.bootstrap,
                        seed: config.seed,
                        elapsed,
                        bootstrap_excluded: excluded,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(feature = "parallel")]
fn execute<T, R, F>(workers: usize, tasks: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    use rayon::prelude::*;
    if workers == 1 {
        return Ok(tasks.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    // indexed collect keeps task order
    Ok(pool.install(|| tasks.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute<T, R, F>(_workers: usize, tasks: &[T], f: F) -> Result<Vec<R>>
where
    F: Fn(&T) -> R,
{
    Ok(tasks.iter().map(f).collect())
}

fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write rows under `CSV_HEADER`: LF line endings, floats with 17
/// significant digits.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.generator.clone(),
            r.param_name.clone(),
            format_float(r.theta_true),
            r.n.to_string(),
            r.estimator.clone(),
            format_float(r.rb),
            format_float(r.rmse),
            r.failures.to_string(),
            r.replications.to_string(),
            r.bootstrap.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[MetricsRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Read rows written by `write_csv`; timing columns come back as zero.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Io(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::Io(format!("column {}: bad number '{}'", CSV_HEADER[i], field(i))))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse()
                .map_err(|_| Error::Io(format!("column {}: bad integer '{}'", CSV_HEADER[i], field(i))))
        };
        rows.push(MetricsRow {
            generator: field(0).to_string(),
            param_name: field(1).to_string(),
            theta_true: num(2)?,
            n: int(3)? as usize,
            estimator: field(4).to_string(),
            rb: num(5)?,
            rmse: num(6)?,
            failures: int(7)? as usize,
            replications: int(8)? as usize,
            bootstrap: int(9)? as usize,
            seed: int(10)?,
            elapsed: 0.0,
            bootstrap_excluded: 0,
        });
    }
    Ok(rows)
}
