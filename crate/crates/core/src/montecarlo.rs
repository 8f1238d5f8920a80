//! Replication engine: empirical `L^p` norms of estimation errors over a
//! grid of sample sizes, and log-log rate fits.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kernels::{make_kernel, Kernel, KernelName};
use crate::moment_params::{bandwidth_pointwise, bandwidth_uniform, theoretical_exponent, Exponents, Setting};
use crate::numeric_oracle::{delta_method_variance, expected_ratio, normal_abs_norm, QuadratureSpec};
use crate::nw_regression::{censored_cov_estimate, nw_estimate, sup_deviation_to, EvalGrid, ModelSpec, NwIndex};
use crate::processes::{simulate, PathData, ProcessKind, ProcessSpec, SeedSpec};
use crate::ratio_core::{deviation, ratio_estimate};
use crate::stats::{autocovariance, ols, sample_variance, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    WeightedSum,
    NwPointwise,
    NwSup,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::WeightedSum => "weighted_sum",
            Estimator::NwPointwise => "nw_pointwise",
            Estimator::NwSup => "nw_sup",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "weighted_sum" => Estimator::WeightedSum,
            "nw_pointwise" => Estimator::NwPointwise,
            "nw_sup" => Estimator::NwSup,
            _ => return None,
        })
    }

    pub fn setting(self) -> Setting {
        match self {
            Estimator::WeightedSum => Setting::WeightedSum,
            Estimator::NwPointwise => Setting::Pointwise,
            Estimator::NwSup => Setting::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `C n^{-1/(2ρ+d)}`
    Pointwise,
    /// `C (log n / n)^{1/(2ρ+d)}`
    Uniform,
    /// `h = C` at every `n`.
    Fixed,
}

impl BandwidthRule {
    pub fn as_str(self) -> &'static str {
        match self {
            BandwidthRule::Pointwise => "pointwise",
            BandwidthRule::Uniform => "uniform",
            BandwidthRule::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pointwise" => BandwidthRule::Pointwise,
            "uniform" => BandwidthRule::Uniform,
            "fixed" => BandwidthRule::Fixed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub rule: BandwidthRule,
    pub c: f64,
}

impl Bandwidth {
    pub fn at(&self, n: usize, model: &ModelSpec) -> Result<f64> {
        match self.rule {
            BandwidthRule::Pointwise => bandwidth_pointwise(n as u64, model.rho, model.d, self.c),
            BandwidthRule::Uniform => bandwidth_uniform(n as u64, model.rho, model.d, self.c),
            BandwidthRule::Fixed if self.c > 0.0 => Ok(self.c),
            BandwidthRule::Fixed => Err(Error::InvalidParams("fixed bandwidth must be positive".into())),
        }
    }
}

/// What a regression estimate is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    /// `E ĝ(x) / E f̂(x)` by quadrature.
    Centered,
    /// `r(x)`
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    N,
    NOverLogN,
}

impl Abscissa {
    pub fn as_str(self) -> &'static str {
        match self {
            Abscissa::N => "n",
            Abscissa::NOverLogN => "n_over_log_n",
        }
    }

    pub fn value(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Abscissa::N => n,
            Abscissa::NOverLogN => n / n.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    pub estimator: Estimator,
    /// Moment exponents reported alongside the results.
    pub params: Option<Exponents>,
    /// Norm orders; the first one is fitted.
    pub norm_orders: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    /// Evaluation point of the pointwise estimator.
    pub x: Vec<f64>,
    pub kernel: KernelName,
    pub bandwidth: Bandwidth,
    pub target: RegressionTarget,
    /// Overrides the theoretical exponent implied by the estimator.
    pub theoretical: Option<f64>,
    /// Accepted `|slope + theoretical|`.
    pub tolerance: f64,
    pub max_excluded_fraction: f64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub quadrature: QuadratureSpec,
}

/// Slope tolerances by setting.
pub fn default_tolerance(estimator: Estimator, dependent: bool) -> f64 {
    match estimator {
        Estimator::WeightedSum if dependent => 0.10,
        Estimator::WeightedSum | Estimator::NwPointwise => 0.08,
        Estimator::NwSup => 0.12,
    }
}

impl ExperimentConfig {
    /// Defaults for the given process and estimator: `p = 2`, 200
    /// replications, Epanechnikov kernel, centred target.
    pub fn new(process: ProcessSpec, estimator: Estimator, n_grid: Vec<usize>) -> Self {
        let dependent = process.dependence().kind != crate::moment_params::DependenceKind::Iid;
        let (rule, c) = match estimator {
            Estimator::NwSup => (BandwidthRule::Uniform, 0.4),
            _ => (BandwidthRule::Pointwise, 1.0),
        };
        let x = match &process {
            ProcessSpec::Regression { model, .. } => vec![0.5; model.d as usize],
            _ => Vec::new(),
        };
        Self {
            process,
            estimator,
            params: None,
            norm_orders: vec![2.0],
            n_grid,
            replications: 200,
            master_seed: 0,
            x,
            kernel: KernelName::Epanechnikov,
            bandwidth: Bandwidth { rule, c },
            target: RegressionTarget::Centered,
            theoretical: None,
            tolerance: default_tolerance(estimator, dependent),
            max_excluded_fraction: 0.01,
            threads: 0,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn model(&self) -> Option<&ModelSpec> {
        match &self.process {
            ProcessSpec::Regression { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if self.n_grid.len() < 3 {
            return Err(Error::InvalidSpec("n_grid needs at least 3 sizes".into()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("n_grid must be positive and strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidSpec("at least one replication required".into()));
        }
        if self.norm_orders.is_empty() || self.norm_orders.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidSpec("norm orders must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidSpec("tolerance must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.max_excluded_fraction) {
            return Err(Error::InvalidSpec("max_excluded_fraction must lie in [0, 1)".into()));
        }
        self.quadrature.validate()?;
        let kind = self.process.kind();
        match self.estimator {
            Estimator::WeightedSum if !kind.is_pairs() => Err(Error::InvalidSpec(format!(
                "weighted_sum needs a pair process, not {}",
                kind.as_str()
            ))),
            Estimator::NwPointwise | Estimator::NwSup if !kind.is_regression() => Err(Error::InvalidSpec(format!(
                "{} needs a regression process, not {}",
                self.estimator.as_str(),
                kind.as_str()
            ))),
            Estimator::NwPointwise => {
                let model = self.model().expect("regression");
                if self.x.len() != model.d as usize {
                    return Err(Error::InvalidSpec(format!("x must have {} coordinates", model.d)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn abscissa(&self) -> Abscissa {
        match self.estimator {
            Estimator::NwSup => Abscissa::NOverLogN,
            _ => Abscissa::N,
        }
    }

    /// Predicted decay exponent of the norm.
    pub fn theoretical_exponent(&self) -> f64 {
        if let Some(t) = self.theoretical {
            return t;
        }
        match self.model() {
            Some(m) => theoretical_exponent(self.estimator.setting(), m.rho, m.d),
            None => theoretical_exponent(Setting::WeightedSum, 2.0, 1),
        }
    }

    fn kernel_for(&self, model: &ModelSpec) -> Result<Kernel> {
        make_kernel(self.kernel, model.d)
    }
}

/// `((1/M) Σ |x_j|^p)^{1/p}`
pub fn empirical_lp(samples: &[f64], p: f64) -> Result<f64> {
    Ok(empirical_moment(samples, p)?.0.powf(1.0 / p))
}

/// Mean of `|x_j|^p` and its standard error.
pub fn empirical_moment(samples: &[f64], p: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParams(format!("p must be positive (got {p})")));
    }
    let m = samples.len() as f64;
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(p)).collect();
    let mean = powered.iter().copied().collect::<KahanSum>().total() / m;
    let se = if samples.len() > 1 {
        let ss: KahanSum = powered.iter().map(|y| (y - mean) * (y - mean)).collect();
        (ss.total() / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// Deviations of one sample size, in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviations {
    pub n: usize,
    pub h_used: Option<f64>,
    /// One entry per included replication.
    pub values: Vec<f64>,
    pub excluded: usize,
    /// Grid points without kernel mass, summed over replications.
    pub excluded_points: usize,
}

enum Outcome {
    Value(f64, usize),
    Excluded(usize),
}

fn map_replications<T: Send>(threads: usize, m: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads != 1 {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if threads > 0 {
                builder = builder.num_threads(threads);
            }
            if let Ok(pool) = builder.build() {
                return pool.install(|| (0..m as u64).into_par_iter().map(&f).collect());
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    (0..m as u64).map(f).collect()
}

/// Simulates `replications` paths of length `n` and returns the per-path
/// errors. Degenerate estimates are excluded and counted.
pub fn deviations_at(config: &ExperimentConfig, n: usize) -> Result<Deviations> {
    let m = config.replications;
    let seed = |j: u64| SeedSpec::new(config.master_seed, j);
    let (outcomes, h_used): (Vec<Result<Outcome>>, Option<f64>) = match config.estimator {
        Estimator::WeightedSum => {
            let target = config
                .process
                .truth()
                .ratio()
                .ok_or_else(|| Error::InvalidSpec("process has no ratio target".into()))?;
            let out = map_replications(config.threads, m, |j| {
                let path = simulate(&config.process, n, seed(j))?;
                let (u, v) = path.pairs().expect("pair process");
                let stats = ratio_estimate(u, v)?;
                Ok(match deviation(&stats, target) {
                    Ok(d) => Outcome::Value(d, 0),
                    Err(_) => Outcome::Excluded(0),
                })
            });
            (out, None)
        }
        Estimator::NwPointwise => {
            let model = config.model().ok_or_else(|| Error::InvalidSpec("regression process required".into()))?;
            let kernel = config.kernel_for(model)?;
            let h = config.bandwidth.at(n, model)?;
            let target = match config.target {
                RegressionTarget::Centered => expected_ratio(model, &kernel, &config.x, h, &config.quadrature)?,
                RegressionTarget::Truth => model.r(&config.x),
            };
            let out = map_replications(config.threads, m, |j| {
                let path = simulate(&config.process, n, seed(j))?;
                let e = nw_estimate(&config.x, &path, &kernel, h)?;
                Ok(match e.r_hat {
                    Some(r) => Outcome::Value(r - target, 0),
                    None => Outcome::Excluded(0),
                })
            });
            (out, Some(h))
        }
        Estimator::NwSup => {
            let model = config.model().ok_or_else(|| Error::InvalidSpec("regression process required".into()))?;
            let kernel = config.kernel_for(model)?;
            let h = config.bandwidth.at(n, model)?;
            let grid = EvalGrid::for_bandwidth(model, n, h)?;
            let targets: Vec<f64> = match config.target {
                RegressionTarget::Centered => grid
                    .iter()
                    .map(|x| expected_ratio(model, &kernel, x, h, &config.quadrature))
                    .collect::<Result<_>>()?,
                RegressionTarget::Truth => grid.iter().map(|x| model.r(x)).collect(),
            };
            let out = map_replications(config.threads, m, |j| {
                let path = simulate(&config.process, n, seed(j))?;
                let index = NwIndex::new(&path)?;
                match sup_deviation_to(&grid, &index, &kernel, h, |k, _| targets[k]) {
                    Ok(s) => Ok(Outcome::Value(s.sup_err, s.n_excluded)),
                    Err(Error::AllExcluded) => Ok(Outcome::Excluded(grid.len())),
                    Err(e) => Err(e),
                }
            });
            (out, Some(h))
        }
    };
    let mut dev = Deviations {
        n,
        h_used,
        values: Vec::with_capacity(m),
        excluded: 0,
        excluded_points: 0,
    };
    for o in outcomes {
        match o? {
            Outcome::Value(v, pts) => {
                dev.values.push(v);
                dev.excluded_points += pts;
            }
            Outcome::Excluded(pts) => {
                dev.excluded += 1;
                dev.excluded_points += pts;
            }
        }
    }
    if dev.excluded as f64 > config.max_excluded_fraction * m as f64 || dev.values.is_empty() {
        return Err(Error::TooManyExclusions {
            n,
            excluded: dev.excluded,
            total: m,
        });
    }
    Ok(dev)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEntry {
    pub p: f64,
    pub norm: f64,
    /// Delta-method standard error of the norm.
    pub stderr: f64,
    /// `E|Δ|^p` estimate and its standard error.
    pub moment: f64,
    pub moment_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRow {
    pub n: usize,
    pub h_used: Option<f64>,
    pub included: usize,
    pub excluded: usize,
    pub excluded_points: usize,
    pub norms: Vec<NormEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormTable {
    pub rows: Vec<NormRow>,
}

fn norm_entries(values: &[f64], orders: &[f64]) -> Result<Vec<NormEntry>> {
    let entries = orders
        .iter()
        .map(|&p| {
            let (moment, moment_stderr) = empirical_moment(values, p)?;
            let norm = moment.powf(1.0 / p);
            let stderr = if moment > 0.0 {
                moment.powf(1.0 / p - 1.0) * moment_stderr / p
            } else {
                0.0
            };
            Ok(NormEntry {
                p,
                norm,
                stderr,
                moment,
                moment_stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // power-mean inequality across the requested orders
    let mut sorted = entries.clone();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    for w in sorted.windows(2) {
        if w[0].norm > w[1].norm * (1.0 + 1e-12) {
            return Err(Error::Invariant(format!(
                "L^{} norm {} exceeds L^{} norm {}",
                w[0].p, w[0].norm, w[1].p, w[1].norm
            )));
        }
    }
    Ok(entries)
}

/// Runs every sample size of the grid, in order.
pub fn replicate(config: &ExperimentConfig) -> Result<NormTable> {
    config.validate()?;
    let rows = config
        .n_grid
        .iter()
        .map(|&n| {
            let dev = deviations_at(config, n)?;
            debug_assert_eq!(dev.values.len() + dev.excluded, config.replications);
            Ok(NormRow {
                n,
                h_used: dev.h_used,
                included: dev.values.len(),
                excluded: dev.excluded,
                excluded_points: dev.excluded_points,
                norms: norm_entries(&dev.values, &config.norm_orders)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub norm: f64,
    pub excluded: usize,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub abscissa: Abscissa,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub rss: f64,
    /// Predicted decay exponent; the predicted slope is its negative.
    pub theoretical: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// OLS of `log norm` on `log abscissa`, using the first norm order.
pub fn fit_rate(table: &NormTable, abscissa: Abscissa, theoretical: f64, tolerance: f64) -> Result<RateFit> {
    if table.rows.len() < 3 {
        return Err(Error::DegenerateFit("need at least 3 sample sizes".into()));
    }
    let points: Vec<RatePoint> = table
        .rows
        .iter()
        .map(|r| RatePoint {
            n: r.n,
            norm: r.norms[0].norm,
            excluded: r.excluded,
            stderr: r.norms[0].stderr,
        })
        .collect();
    if let Some(p) = points.iter().find(|p| !(p.norm > 0.0)) {
        return Err(Error::DegenerateFit(format!("norm at n = {} is {}", p.n, p.norm)));
    }
    let lx: Vec<f64> = points.iter().map(|p| abscissa.value(p.n).ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.norm.ln()).collect();
    let fit = ols(&lx, &ly).ok_or_else(|| Error::DegenerateFit("abscissae coincide".into()))?;
    Ok(RateFit {
        abscissa,
        points,
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        intercept: fit.intercept,
        rss: fit.rss,
        theoretical,
        tolerance,
        pass: (fit.slope + theoretical).abs() <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub table: NormTable,
    pub fit: RateFit,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let table = replicate(config)?;
    let fit = fit_rate(&table, config.abscissa(), config.theoretical_exponent(), config.tolerance)?;
    Ok(ExperimentReport { table, fit })
}

/// CSV with columns `n,p,norm,stderr,excluded,h_used`.
pub fn table_csv(table: &NormTable) -> String {
    let mut out = String::from("n,p,norm,stderr,excluded,h_used\n");
    for row in &table.rows {
        for e in &row.norms {
            let h = row.h_used.map(|h| h.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", row.n, e.p, e.norm, e.stderr, row.excluded, h);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub slope_stderr: f64,
    pub theoretical: f64,
    pub tolerance: f64,
    pub abscissa: Abscissa,
    pub pass: bool,
}

pub fn summary_json(fit: &RateFit) -> String {
    let s = FitSummary {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        theoretical: fit.theoretical,
        tolerance: fit.tolerance,
        abscissa: fit.abscissa,
        pass: fit.pass,
    };
    serde_json::to_string_pretty(&s).expect("plain data serialises")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub p_prime: f64,
    /// `√n ‖Δ_n‖_{p'}`
    pub lhs: f64,
    /// `‖Z‖_{p'}` for `Z ~ N(0, σ²)`
    pub limit: f64,
    pub sigma: f64,
    pub relative_gap: f64,
    pub excluded: usize,
}

/// Compares `√n ‖Δ_n‖_{p'}` at the largest grid size with the normal limit.
pub fn clt_check(config: &ExperimentConfig, p_prime: f64) -> Result<CltReport> {
    if config.process.kind() != ProcessKind::IidPairs || config.estimator != Estimator::WeightedSum {
        return Err(Error::InvalidSpec("the normal limit check covers i.i.d. weighted sums only".into()));
    }
    if !(p_prime > 0.0 && p_prime < config.norm_orders[0]) {
        return Err(Error::InvalidParams(format!(
            "p' must lie in (0, p) (p' = {p_prime}, p = {})",
            config.norm_orders[0]
        )));
    }
    config.validate()?;
    let n = *config.n_grid.last().expect("validated");
    let dev = deviations_at(config, n)?;
    let lhs = (n as f64).sqrt() * empirical_lp(&dev.values, p_prime)?;
    let sigma = delta_method_variance(&config.process)?.sqrt();
    let limit = normal_abs_norm(sigma, p_prime);
    Ok(CltReport {
        n,
        p_prime,
        lhs,
        limit,
        sigma,
        relative_gap: (lhs - limit).abs() / limit,
        excluded: dev.excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagCheck {
    pub lag: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub truth: f64,
    /// `|estimate − truth| / stderr`
    pub z: f64,
    /// Sample autocovariance of the uncensored series on the same path.
    pub uncensored: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensoredReport {
    pub n: usize,
    pub paths: usize,
    pub lags: Vec<LagCheck>,
    pub max_z: f64,
    pub pass: bool,
}

/// Censored covariance estimate on path 0 against `γ_X`, with the standard
/// error taken from the spread over paths `1..paths`. Passes when every lag
/// lies within `z_max` standard errors.
pub fn censored_check(
    spec: &ProcessSpec,
    n: usize,
    ell_max: usize,
    paths: usize,
    master_seed: u64,
    threads: usize,
    z_max: f64,
) -> Result<CensoredReport> {
    if spec.kind() != ProcessKind::Censored {
        return Err(Error::InvalidSpec(format!("a censored process is required, not {}", spec.kind().as_str())));
    }
    if paths < 3 {
        return Err(Error::InvalidSpec("at least 3 paths required".into()));
    }
    spec.validate()?;
    let runs = map_replications(threads, paths, |j| -> Result<(Vec<f64>, Vec<f64>)> {
        let path = simulate(spec, n, SeedSpec::new(master_seed, j))?;
        let est = censored_cov_estimate(&path, ell_max)?;
        let raw = match &path.data {
            PathData::Censored { latent, .. } if j == 0 => {
                (1..=ell_max).map(|l| autocovariance(latent, l).unwrap_or(f64::NAN)).collect()
            }
            _ => Vec::new(),
        };
        Ok((est, raw))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let truth = spec.truth();
    let mut lags = Vec::with_capacity(ell_max);
    for l in 0..ell_max {
        let spread: Vec<f64> = runs[1..].iter().map(|r| r.0[l]).collect();
        let stderr = sample_variance(&spread).expect("at least two spread paths").sqrt();
        let target = truth
            .covariance(l + 1)
            .ok_or_else(|| Error::InvalidSpec("process has no covariance target".into()))?;
        let estimate = runs[0].0[l];
        let z = if stderr > 0.0 {
            (estimate - target).abs() / stderr
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        lags.push(LagCheck {
            lag: l + 1,
            estimate,
            stderr,
            truth: target,
            z,
            uncensored: runs[0].1[l],
        });
    }
    let max_z = lags.iter().map(|l| l.z).fold(0.0, f64::max);
    Ok(CensoredReport {
        n,
        paths,
        pass: max_z <= z_max,
        lags,
        max_z,
    })
}
