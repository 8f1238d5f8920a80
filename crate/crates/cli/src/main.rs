mod config;
mod manifest;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use rml_core::kernels::{make_kernel, verify_order, KernelName, OrderTolerance};
use rml_core::moment_params::{
    applicable_hypotheses, regression_feasible, thm1_exponents, validate_params, DependenceKind, DependenceSpec,
    Exponents, Setting,
};
use rml_core::montecarlo::{censored_check, clt_check, run_experiment, summary_json, table_csv};
use rml_core::numeric_oracle::{bias_sweep, halving_grid, QuadratureSpec};
use rml_core::ratio_core::{audit_csv, lemma2_random_audit, pisier_random_audit, SLACK_TOLERANCE};
use rml_core::Error;

use config::{Config, ConfigError};
use manifest::{digest, now, OutputDir, RunManifest};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

const EXIT_CODES: &str = "Exit codes: 0 success, 1 check failed, 2 invalid input, 3 degenerate experiment.";

#[derive(Parser)]
#[command(name = "rml", version, about = "Ratio-of-sums estimators and their L^p rates", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment exponents, derived (r, s), bandwidth feasibility and dependence thresholds.
    Params(ParamsArgs),
    /// Replicate an experiment over its n grid and fit the rate.
    #[command(after_long_help = config_help())]
    Run(ConfigArgs),
    /// Randomised audits of the deterministic inequalities, or kernel order checks.
    Audit {
        #[command(subcommand)]
        kind: AuditKind,
    },
    /// Kernel bias against h by quadrature, fitted on a log-log scale.
    #[command(after_long_help = config_help())]
    Bias(ConfigArgs),
    /// Censored covariance estimate against the true autocovariance.
    #[command(after_long_help = config_help())]
    Censored(ConfigArgs),
    /// sqrt(n) times the p'-norm of the error against its normal limit.
    #[command(after_long_help = config_help())]
    Clt(ConfigArgs),
}

#[derive(clap::Args)]
struct ParamsArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, requires = "s")]
    r: Option<f64>,
    #[arg(long, requires = "r")]
    s: Option<f64>,
    /// Regressor dimension; with --rho enables the bandwidth feasibility check.
    #[arg(long, requires = "rho")]
    d: Option<u32>,
    #[arg(long, requires = "d")]
    rho: Option<f64>,
    /// iid | strong_mixing | absolute_regularity | causal_gamma | lambda_weak
    #[arg(long, requires = "decay")]
    dep: Option<String>,
    /// Decay exponent of the dependence coefficients.
    #[arg(long)]
    decay: Option<f64>,
    /// Auxiliary moment exponent r' used by some λ-weak cases.
    #[arg(long)]
    aux: Option<f64>,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment file of `key = value` lines.
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AuditKind {
    /// |R̂ − N/D| bound on random instances.
    Lemma2 {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-trial CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// max |V| against the p-norm bound on random instances.
    Pisier {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Normalisation and vanishing moments of a kernel.
    Kernel {
        #[arg(long, default_value = "epanechnikov")]
        name: String,
        #[arg(long, default_value_t = 1)]
        d: u32,
        /// Order to confirm (1 or 2).
        #[arg(long, default_value_t = 2)]
        order: u32,
    },
}

fn config_help() -> String {
    format!(
        "Config keys (`key = value`, `#` comments, `[section]` prefixes):\n{}\n\
         RML_THREADS caps worker threads (0 = automatic) and overrides `threads`.\n{EXIT_CODES}",
        config::key_reference()
    )
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_)
            | Error::InvalidSpec(_)
            | Error::UnsupportedKernel(_)
            | Error::UnsupportedCombination { .. } => EXIT_INVALID,
            Error::Invariant(_) => EXIT_CHECK_FAILED,
            _ => EXIT_DEGENERATE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::invalid(format!("config error: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(format!("i/o error: {e}"))
    }
}

type Outcome = Result<u8, Failure>;

fn verdict(pass: bool) -> u8 {
    if pass {
        0
    } else {
        EXIT_CHECK_FAILED
    }
}

fn thread_override() -> Result<Option<usize>, Failure> {
    match std::env::var("RML_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::invalid(format!("RML_THREADS must be a nonnegative integer (got `{v}`)"))),
        Err(_) => Ok(None),
    }
}

/// A loaded config file, its digest and its output directory.
struct Loaded {
    path: PathBuf,
    config: Config,
    digest: String,
    out: PathBuf,
    started: f64,
}

impl Loaded {
    fn open(args: &ConfigArgs) -> Result<Self, Failure> {
        let started = now();
        let bytes = std::fs::read(&args.config)
            .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", args.config.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::invalid("config is not UTF-8"))?;
        let config = Config::parse(&text)?;
        let out = args.out.clone().unwrap_or_else(|| PathBuf::from(config.output_dir()));
        Ok(Self {
            path: args.config.clone(),
            digest: digest(&bytes),
            config,
            out,
            started,
        })
    }

    fn manifest(&self, command: &str, seed: u64, threads: usize, exit_code: u8) -> RunManifest {
        RunManifest {
            command: command.into(),
            config_path: self.path.display().to_string(),
            config_digest: self.digest.clone(),
            master_seed: seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            threads,
            started: self.started,
            finished: 0.0,
            exit_code,
            outputs: Vec::new(),
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serialises") + "\n"
}

fn cmd_params(a: &ParamsArgs) -> Outcome {
    let (r, s, derived) = match (a.r, a.s) {
        (Some(r), Some(s)) => (r, s, false),
        _ => {
            let (r, s) = thm1_exponents(a.p, a.q)?;
            (r, s, true)
        }
    };
    let exps = Exponents::new(a.p, a.q, r, s);
    println!("p = {}\nq = {}", a.p, a.q);
    println!("r = {r}{}", if derived { " (derived)" } else { "" });
    println!("s = {s}{}", if derived { " (derived)" } else { "" });
    println!("alpha = {}\nbeta = {}", exps.alpha(), exps.beta());
    let regression = a.d.zip(a.rho);
    match validate_params(a.p, a.q, r, s) {
        Ok(_) => println!("moment conditions = satisfied"),
        // the feasibility condition only needs the raw exponents
        Err(e) if regression.is_some() => println!("moment conditions = violated ({e})"),
        Err(e) => return Err(e.into()),
    }
    if let Some((d, rho)) = regression {
        match regression_feasible(&exps, d, rho) {
            Ok(f) => println!(
                "bandwidth feasibility = {} ({})",
                if f.feasible { "satisfied" } else { "violated" },
                f.diagnostic(rho)
            ),
            Err(Error::InvalidParams(msg)) => println!("bandwidth feasibility = undefined ({msg})"),
            Err(e) => return Err(e.into()),
        }
    }
    if let (Some(kind), Some(decay)) = (&a.dep, a.decay) {
        let kind = DependenceKind::parse(kind).ok_or_else(|| Failure::invalid(format!("unknown dependence `{kind}`")))?;
        let mut dep = DependenceSpec::new(kind, decay)?;
        if let Some(aux) = a.aux {
            dep = dep.with_aux(aux);
        }
        let (d, rho) = regression.unwrap_or((1, 2.0));
        for setting in [Setting::WeightedSum, Setting::Pointwise, Setting::Uniform] {
            match applicable_hypotheses(&dep, &exps, setting, d, rho) {
                Ok(reports) => {
                    for rep in reports {
                        let case = serde_json::to_value(rep.case).expect("enum serialises");
                        println!(
                            "{} {} = {} (decay {} vs threshold {}){}",
                            setting.name(),
                            case.as_str().unwrap_or("?"),
                            if rep.satisfied { "satisfied" } else { "violated" },
                            rep.supplied,
                            rep.threshold,
                            rep.warnings.iter().map(|w| format!("; {w}")).collect::<String>()
                        );
                    }
                }
                Err(Error::UnsupportedCombination { .. }) => println!("{} = not covered", setting.name()),
                Err(Error::InvalidParams(msg)) => println!("{} = undefined ({msg})", setting.name()),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(0)
}

fn cmd_run(args: &ConfigArgs) -> Outcome {
    let loaded = Loaded::open(args)?;
    let mut cfg = loaded.config.experiment()?;
    if let Some(t) = thread_override()? {
        cfg.threads = t;
    }
    let report = run_experiment(&cfg)?;
    let code = verdict(report.fit.pass);
    let mut out = OutputDir::create(&loaded.out)?;
    out.write("table.csv", &table_csv(&report.table))?;
    out.write("fit.json", &(summary_json(&report.fit) + "\n"))?;
    out.write("points.json", &json(&report.fit.points))?;
    let manifest = out.finish(loaded.manifest("run", cfg.master_seed, cfg.threads, code))?;
    println!(
        "slope = {:.4} ± {:.4} (expected {:.4} ± {}) {}",
        report.fit.slope,
        report.fit.slope_stderr,
        -report.fit.theoretical,
        report.fit.tolerance,
        if report.fit.pass { "pass" } else { "FAIL" }
    );
    println!("manifest = {}", manifest.display());
    Ok(code)
}

fn cmd_audit(kind: &AuditKind) -> Outcome {
    match kind {
        AuditKind::Lemma2 { trials, seed, csv } => {
            let (summary, rows) = lemma2_random_audit(*trials, *seed);
            if let Some(path) = csv {
                std::fs::write(path, audit_csv(&rows))?;
            }
            println!(
                "trials = {}\nexcluded = {}\nmin relative slack = {:e}\nviolations = {}",
                summary.trials,
                summary.excluded,
                summary.min_relative_slack,
                summary.violations.len()
            );
            for v in &summary.violations {
                println!("violation at trial seed {v} (master seed {seed})");
            }
            Ok(verdict(summary.violations.is_empty() && summary.min_relative_slack >= -SLACK_TOLERANCE))
        }
        AuditKind::Pisier { trials, seed } => {
            let summary = pisier_random_audit(*trials, *seed);
            println!(
                "trials = {}\nmin relative slack = {:e}\nviolations = {}",
                summary.trials,
                summary.min_relative_slack,
                summary.violations.len()
            );
            for v in &summary.violations {
                println!("violation at trial seed {v} (master seed {seed})");
            }
            Ok(verdict(summary.violations.is_empty()))
        }
        AuditKind::Kernel { name, d, order } => {
            let kernel = make_kernel(KernelName::parse(name)?, *d)?;
            let rep = verify_order(&kernel, *order, OrderTolerance::default())?;
            println!("kernel = {name}\nd = {d}\nintegral = {}", rep.integral);
            for m in &rep.moments {
                println!("moment {:?} = {:e}", m.multi_index, m.value);
            }
            println!("verified order = {}", rep.verified_order);
            println!("order {order} {}", if rep.passed { "confirmed" } else { "NOT confirmed" });
            Ok(verdict(rep.passed))
        }
    }
}

#[derive(Serialize)]
struct BiasSummary {
    kernel: String,
    x: Vec<f64>,
    rho: f64,
    kernel_order: u32,
    expected_slope: f64,
    slope: Option<f64>,
    slope_stderr: Option<f64>,
    exact_zero: bool,
    tolerance: f64,
    pass: bool,
}

fn cmd_bias(args: &ConfigArgs) -> Outcome {
    let loaded = Loaded::open(args)?;
    let c = &loaded.config;
    let model = c.bias_model()?;
    let name = c.kernel()?;
    let kernel = make_kernel(name, model.d)?;
    let x = c.f64_list("bias.x")?.unwrap_or_else(|| vec![0.45; model.d as usize]);
    if x.len() != model.d as usize {
        return Err(Failure::invalid(format!("config error: key `bias.x` needs {} coordinates", model.d)));
    }
    let hs = halving_grid(c.f64_or("bias.h0", 0.4)?, c.usize_or("bias.levels", 6)?);
    let tolerance = c.f64_or("bias.tolerance", 0.2)?;
    let order = if model.d <= 3 {
        verify_order(&kernel, 1, OrderTolerance::default())?.verified_order
    } else {
        2
    };
    // the bias decays like h^min(rho, kernel order)
    let expected = model.rho.min(order as f64);
    let sweep = bias_sweep(&model, &kernel, &x, &hs, &QuadratureSpec::default())?;
    let exact_zero = sweep.all_zero();
    let pass = exact_zero || sweep.slope.is_some_and(|s| (s - expected).abs() <= tolerance);
    let mut csv = String::from("h,bias\n");
    for (h, b) in sweep.h.iter().zip(&sweep.bias) {
        let _ = writeln!(csv, "{h},{b}");
    }
    let summary = BiasSummary {
        kernel: name.as_str().into(),
        x,
        rho: model.rho,
        kernel_order: order,
        expected_slope: expected,
        slope: sweep.slope,
        slope_stderr: sweep.slope_stderr,
        exact_zero,
        tolerance,
        pass,
    };
    let code = verdict(pass);
    let mut out = OutputDir::create(&loaded.out)?;
    out.write("bias.csv", &csv)?;
    out.write("bias.json", &json(&summary))?;
    let manifest = out.finish(loaded.manifest("bias", c.seed()?, 1, code))?;
    match sweep.slope {
        Some(s) => println!("slope = {s:.4} (expected {expected} ± {tolerance}) {}", if pass { "pass" } else { "FAIL" }),
        None => println!("bias = 0 at every h (exact)"),
    }
    println!("manifest = {}", manifest.display());
    Ok(code)
}

fn cmd_censored(args: &ConfigArgs) -> Outcome {
    let loaded = Loaded::open(args)?;
    let c = &loaded.config;
    let spec = c.process()?;
    let threads = thread_override()?.unwrap_or(c.usize_or("threads", 0)?);
    let seed = c.seed()?;
    let rep = censored_check(
        &spec,
        c.usize_or("censored.n", 1_000_000)?,
        c.usize_or("censored.lags", 5)?,
        c.usize_or("censored.paths", 33)?,
        seed,
        threads,
        3.0,
    )?;
    let mut csv = String::from("lag,estimate,stderr,truth,z,uncensored\n");
    for l in &rep.lags {
        let _ = writeln!(csv, "{},{},{},{},{},{}", l.lag, l.estimate, l.stderr, l.truth, l.z, l.uncensored);
    }
    let code = verdict(rep.pass);
    let mut out = OutputDir::create(&loaded.out)?;
    out.write("censored.csv", &csv)?;
    out.write("censored.json", &json(&rep))?;
    let manifest = out.finish(loaded.manifest("censored", seed, threads, code))?;
    for l in &rep.lags {
        println!("lag {} = {:.6} (truth {:.6}, {:.2} SE)", l.lag, l.estimate, l.truth, l.z);
    }
    println!("worst = {:.2} SE {}", rep.max_z, if rep.pass { "pass" } else { "FAIL" });
    println!("manifest = {}", manifest.display());
    Ok(code)
}

#[derive(Serialize)]
struct CltSummary {
    #[serde(flatten)]
    report: rml_core::montecarlo::CltReport,
    tolerance: f64,
    pass: bool,
}

fn cmd_clt(args: &ConfigArgs) -> Outcome {
    let loaded = Loaded::open(args)?;
    let c = &loaded.config;
    let mut cfg = c.experiment()?;
    if let Some(t) = thread_override()? {
        cfg.threads = t;
    }
    let tolerance = c.f64_or("clt.tolerance", 0.05)?;
    let report = clt_check(&cfg, c.f64_or("clt.p_prime", 1.0)?)?;
    let pass = report.relative_gap <= tolerance;
    let code = verdict(pass);
    let mut out = OutputDir::create(&loaded.out)?;
    out.write("clt.json", &json(&CltSummary { report, tolerance, pass }))?;
    let manifest = out.finish(loaded.manifest("clt", cfg.master_seed, cfg.threads, code))?;
    println!(
        "sqrt(n) norm = {:.5}, limit = {:.5}, gap = {:.2}% {}",
        report.lhs,
        report.limit,
        100.0 * report.relative_gap,
        if pass { "pass" } else { "FAIL" }
    );
    println!("manifest = {}", manifest.display());
    Ok(code)
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Params(a) => cmd_params(a),
        Command::Run(a) => cmd_run(a),
        Command::Audit { kind } => cmd_audit(kind),
        Command::Bias(a) => cmd_bias(a),
        Command::Censored(a) => cmd_censored(a),
        Command::Clt(a) => cmd_clt(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("rml: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
