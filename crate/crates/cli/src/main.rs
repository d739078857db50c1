use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expfam::distribution::{self, FamilyParams, Sample};
use expfam::estimators::{self, EstimateReport, DEFAULT_P_BRACKET};
use expfam::experiment::{self, ExperimentConfig};
use expfam::{parse_generator_spec, svg, Error, Generator, RngStream};
use serde_json::{json, Map, Value};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "expfam", version, about = "Estimators and Monte Carlo studies for generator-indexed exponential families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a data file (one positive value per line)
    Fit(FitArgs),
    /// Draw a sample and write one value per line
    Sample(SampleArgs),
    /// Run a Monte Carlo RB/RMSE experiment and write CSV
    Experiment(ExperimentArgs),
    /// Render SVG figures from an experiment CSV
    Plot(PlotArgs),
}

#[derive(Args)]
struct FitArgs {
    /// data file, one decimal literal per line
    data: PathBuf,
    /// generator spec, e.g. gamma or new-log-generalized-gamma(delta=1)
    #[arg(long)]
    generator: String,
    /// print one JSON object instead of key=value lines
    #[arg(long)]
    json: bool,
    /// also fit the power p by full maximum likelihood
    #[arg(long)]
    full_ml: bool,
    /// lower end of the p bracket for --full-ml
    #[arg(long, default_value_t = DEFAULT_P_BRACKET.0)]
    p_lo: f64,
    /// upper end of the p bracket for --full-ml
    #[arg(long, default_value_t = DEFAULT_P_BRACKET.1)]
    p_hi: f64,
}

/// Native parameter flags; grids take comma-separated lists.
#[derive(Args, Default)]
struct NativeArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    m: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    nu: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tau2: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    k: Vec<f64>,
}

impl NativeArgs {
    fn named(&self) -> Vec<(&'static str, &Vec<f64>)> {
        [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("m", &self.m),
            ("omega", &self.omega),
            ("nu", &self.nu),
            ("tau2", &self.tau2),
            ("lambda", &self.lambda),
            ("a", &self.a),
            ("k", &self.k),
        ]
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .collect()
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    generator: String,
    /// canonical mu (with --sigma) instead of native flags
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[command(flatten)]
    native: NativeArgs,
    /// power p of Y = X^(1/p)
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// key=value config file; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// the log-generalized gamma design: alpha in {0.5,1,2,4,6}, beta=1, N=1000, B=200
    #[arg(long, conflicts_with = "smoke")]
    paper_figure1: bool,
    /// the same design with N=200, B=50
    #[arg(long)]
    smoke: bool,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sigma: Vec<f64>,
    #[command(flatten)]
    native: NativeArgs,
    /// sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Monte Carlo replications
    #[arg(long = "N")]
    replications: Option<usize>,
    /// bootstrap replications
    #[arg(long = "B")]
    bootstrap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// closed, ml or both
    #[arg(long)]
    estimator: Option<String>,
    /// worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// directory for one SVG per true-parameter cell
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// experiment CSV
    input: PathBuf,
    /// output directory
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: String,
    message: String,
    exit: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = exit_class(&e);
        Failure {
            code: e.code().to_string(),
            message: e.to_string(),
            exit,
        }
    }
}

fn exit_class(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::UnknownGenerator(_)
        | Error::SpecParse(_)
        | Error::InvalidShapeParam { .. }
        | Error::Domain { .. } => EXIT_USAGE,
        Error::NonpositiveObservation { .. }
        | Error::EmptySample
        | Error::DegenerateSample(_)
        | Error::InvalidSample { .. }
        | Error::Io(_) => EXIT_DATA,
        _ => EXIT_NUMERIC,
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: "usage".into(),
        message: message.into(),
        exit: EXIT_USAGE,
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: "io-error".into(),
        message: format!("{}: {e}", path.display()),
        exit: EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Sample(args) => cmd_sample(&args),
        Command::Experiment(args) => cmd_experiment(&args),
        Command::Plot(args) => cmd_plot(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error={}", f.code);
            eprintln!("message={}", f.message);
            ExitCode::from(f.exit)
        }
    }
}

fn read_data(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Failure {
            code: "invalid-data".into(),
            message: format!("{}:{}: not a number: '{line}'", path.display(), lineno + 1),
            exit: EXIT_DATA,
        })?;
        values.push(v);
    }
    Ok(values)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn result_entry<T>(out: &mut Vec<(String, String)>, json: &mut Map<String, Value>, key: &str, r: &expfam::Result<T>, value: impl Fn(&T) -> f64) {
    match r {
        Ok(v) => {
            out.push((key.into(), fmt_f64(value(v))));
            json.insert(key.into(), json!(value(v)));
        }
        Err(e) => {
            out.push((key.into(), e.code().into()));
            json.insert(key.into(), json!({ "error": e.code(), "message": e.to_string() }));
        }
    }
}

fn report_lines(g: &Generator, report: &EstimateReport) -> (Vec<(String, String)>, Map<String, Value>) {
    let mut out = Vec::new();
    let mut json = Map::new();
    out.push(("generator".into(), g.to_string()));
    json.insert("generator".into(), json!(g.to_string()));
    out.push(("n".into(), report.n.to_string()));
    json.insert("n".into(), json!(report.n));
    out.push(("sigma_hat".into(), fmt_f64(report.sigma_hat)));
    json.insert("sigma_hat".into(), json!(report.sigma_hat));
    result_entry(&mut out, &mut json, "mu_hat_closed", &report.mu_hat_closed, |m| *m);
    result_entry(&mut out, &mut json, "mu_hat_ml", &report.mu_hat_ml, |f| f.mu);
    if let Ok(fit) = &report.mu_hat_ml {
        let s = fit.solver;
        for (k, v) in [
            ("solver_iterations", s.iterations as f64),
            ("solver_final_residual", s.final_residual),
            ("solver_bracket_lo", s.bracket.0),
            ("solver_bracket_hi", s.bracket.1),
        ] {
            out.push((k.into(), if k == "solver_iterations" { s.iterations.to_string() } else { fmt_f64(v) }));
        }
        json.insert(
            "solver".into(),
            json!({ "iterations": s.iterations, "final_residual": s.final_residual, "bracket": [s.bracket.0, s.bracket.1] }),
        );
    }
    for (label, native) in [("native_closed", &report.native_closed), ("native_ml", &report.native_ml)] {
        match native {
            Ok(p) => {
                let mut obj = Map::new();
                for (name, v) in p.iter() {
                    out.push((format!("{label}.{name}"), fmt_f64(v)));
                    obj.insert(name.into(), json!(v));
                }
                json.insert(label.into(), Value::Object(obj));
            }
            Err(e) => {
                out.push((label.into(), e.code().into()));
                json.insert(label.into(), json!({ "error": e.code() }));
            }
        }
    }
    (out, json)
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let g = parse_generator_spec(&args.generator)?;
    let sample = Sample::new(read_data(&args.data)?)?;
    let report = estimators::fit(&sample, &g)?;
    let (mut lines, mut json) = report_lines(&g, &report);
    if args.full_ml {
        match estimators::fit_full_ml(&sample, &g, (args.p_lo, args.p_hi)) {
            Ok(full) => {
                for (k, v) in [
                    ("full_ml.mu", full.mu),
                    ("full_ml.sigma", full.sigma),
                    ("full_ml.p", full.p),
                    ("full_ml.residual", full.residual),
                    ("full_ml.log_likelihood", full.log_likelihood),
                ] {
                    lines.push((k.into(), fmt_f64(v)));
                }
                json.insert(
                    "full_ml".into(),
                    json!({
                        "mu": full.mu, "sigma": full.sigma, "p": full.p,
                        "residual": full.residual, "log_likelihood": full.log_likelihood,
                        "score": [full.score.d_mu, full.score.d_sigma, full.score.d_p],
                    }),
                );
            }
            Err(e) => {
                lines.push(("full_ml".into(), e.code().into()));
                json.insert("full_ml".into(), json!({ "error": e.code(), "message": e.to_string() }));
            }
        }
    }
    let stdout = io::stdout();
    let mut w = stdout.lock();
    let written = if args.json {
        writeln!(w, "{}", Value::Object(json))
    } else {
        lines.iter().try_for_each(|(k, v)| writeln!(w, "{k}={v}"))
    };
    written.map_err(|e| io_failure(Path::new("<stdout>"), e))
}

fn cmd_sample(args: &SampleArgs) -> Result<(), Failure> {
    let g = parse_generator_spec(&args.generator)?;
    let native = args.native.named();
    let (mu, sigma) = match (args.mu, args.sigma) {
        (Some(mu), Some(sigma)) => {
            if !native.is_empty() {
                return Err(usage("give either --mu/--sigma or native parameters, not both"));
            }
            (mu, sigma)
        }
        (None, None) => {
            let mut values = Vec::new();
            for name in g.native_names() {
                let Some((_, v)) = native.iter().find(|(n, _)| n == name) else {
                    return Err(usage(format!("{} needs --{name}", g)));
                };
                if v.len() != 1 {
                    return Err(usage(format!("--{name} takes one value here")));
                }
                values.push(v[0]);
            }
            if let Some((extra, _)) = native.iter().find(|(n, _)| !g.native_names().contains(n)) {
                return Err(usage(format!("{} has no parameter '{extra}'", g)));
            }
            g.to_family(&values)?
        }
        _ => return Err(usage("--mu and --sigma go together")),
    };
    let params = FamilyParams::with_power(mu, sigma, args.p)?;
    if args.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let mut rng = RngStream::new(args.seed, 0);
    let sample = distribution::sample(args.n, &params, &g, &mut rng)?;
    let mut text = String::with_capacity(args.n * 24);
    for v in sample.values() {
        text.push_str(&fmt_f64(*v));
        text.push('\n');
    }
    write_output(args.out.as_deref(), text.as_bytes())
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn config_text(args: &ExperimentArgs) -> Result<String, Failure> {
    let mut entries: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{}: expected key=value, got '{line}'", path.display())))?;
            entries.push((k.trim().into(), v.trim().into()));
        }
    }
    let mut set = |key: &str, values: Vec<String>| {
        if values.is_empty() {
            return;
        }
        entries.retain(|(k, _)| k != key);
        entries.extend(values.into_iter().map(|v| (key.to_string(), v)));
    };
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    if args.paper_figure1 {
        set("preset", vec!["paper-figure1".into()]);
    }
    if args.smoke {
        set("preset", vec!["smoke".into()]);
    }
    set("generator", args.generator.iter().cloned().collect());
    set("mu", list(&args.mu));
    set("sigma", list(&args.sigma));
    for (name, values) in args.native.named() {
        set(name, list(values));
    }
    set("n", args.n.iter().map(|n| n.to_string()).collect());
    set("N", args.replications.iter().map(|v| v.to_string()).collect());
    set("B", args.bootstrap.iter().map(|v| v.to_string()).collect());
    set("seed", args.seed.iter().map(|v| v.to_string()).collect());
    set("estimator", args.estimator.iter().cloned().collect());
    set("workers", args.workers.iter().map(|v| v.to_string()).collect());
    Ok(entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let text = config_text(args)?;
    let config = ExperimentConfig::parse(&text).map_err(|e| Failure {
        exit: EXIT_USAGE,
        ..Failure::from(e)
    })?;
    let rows = experiment::run_experiment(&config)?;
    let csv = experiment::csv_string(&rows)?;
    write_output(args.out.as_deref(), csv.as_bytes())?;
    if let Some(dir) = &args.plot {
        write_figures(dir, &rows)?;
    }
    let failures: usize = rows.iter().map(|r| r.failures).sum();
    eprintln!("rows={} failures={}", rows.len(), failures);
    Ok(())
}

fn write_figures(dir: &Path, rows: &[experiment::MetricsRow]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    for (stem, svg) in svg::experiment_figures(rows) {
        let path = dir.join(format!("{stem}.svg"));
        fs::write(&path, svg).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<(), Failure> {
    let file = fs::File::open(&args.input).map_err(|e| io_failure(&args.input, e))?;
    let rows = experiment::read_csv(file)?;
    write_figures(&args.out, &rows)
}
