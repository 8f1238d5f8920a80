//! Reproducible simulators for stationary sequences.
//!
//! Every simulator is a pure function of `(spec, n, seed)`. Autoregressive
//! components start from their stationary Gaussian law, and moving averages
//! are built from innovations indexed before the first observation, so each
//! path is exactly stationary from its first element.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::moment_params::{DependenceKind, DependenceSpec};
use crate::nw_regression::{Density, ModelSpec};
pub use crate::rng::SeedSpec;
use crate::rng::streams;

/// Law of the nonnegative weights `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

/// Law of the additive part `W` of `V = slope · U + W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    Constant(f64),
    Normal { mean: f64, sd: f64 },
    /// `mean + scale · T_df`
    StudentT { df: f64, scale: f64, mean: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

fn check_discrete(values: &[f64], probs: &[f64]) -> Result<()> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(Error::InvalidSpec(
            "discrete law needs matching, nonempty values and probabilities".into(),
        ));
    }
    if probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidSpec("probabilities must be nonnegative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn sample_discrete(values: &[f64], probs: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (v, p) in values.iter().zip(probs) {
        acc += p;
        if u < acc {
            return *v;
        }
    }
    *values.last().expect("nonempty")
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Constant(c) if *c >= 0.0 && c.is_finite() => Ok(()),
            WeightLaw::Uniform { lo, hi } if *lo >= 0.0 && hi > lo && hi.is_finite() => Ok(()),
            WeightLaw::Exponential { rate } if *rate > 0.0 && rate.is_finite() => Ok(()),
            WeightLaw::Discrete { values, probs } => {
                check_discrete(values, probs)?;
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidSpec("weights U must be nonnegative".into()));
                }
                Ok(())
            }
            other => Err(Error::InvalidSpec(format!("invalid weight law {other:?}"))),
        }
    }

    /// `E U^k`
    pub fn raw_moment(&self, k: u32) -> f64 {
        match self {
            WeightLaw::Constant(c) => c.powi(k as i32),
            WeightLaw::Uniform { lo, hi } => {
                let e = k as i32 + 1;
                (hi.powi(e) - lo.powi(e)) / ((k as f64 + 1.0) * (hi - lo))
            }
            WeightLaw::Exponential { rate } => factorial(k) / rate.powi(k as i32),
            WeightLaw::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(v, p)| p * v.powi(k as i32))
                .sum(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            WeightLaw::Constant(c) => *c,
            WeightLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            WeightLaw::Exponential { rate } => Exp::new(*rate).expect("validated").sample(rng),
            WeightLaw::Discrete { values, probs } => sample_discrete(values, probs, rng),
        }
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            WeightLaw::Constant(c) => Some(vec![(*c, 1.0)]),
            WeightLaw::Discrete { values, probs } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
            _ => None,
        }
    }
}

impl NoiseLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseLaw::Constant(c) if c.is_finite() => Ok(()),
            NoiseLaw::Normal { sd, mean } if *sd >= 0.0 && mean.is_finite() => Ok(()),
            NoiseLaw::StudentT { df, scale, mean } if *df > 0.0 && *scale >= 0.0 && mean.is_finite() => {
                Ok(())
            }
            NoiseLaw::Discrete { values, probs } => check_discrete(values, probs),
            other => Err(Error::InvalidSpec(format!("invalid noise law {other:?}"))),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            NoiseLaw::Constant(c) => *c,
            NoiseLaw::Normal { mean, .. } | NoiseLaw::StudentT { mean, .. } => *mean,
            NoiseLaw::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    /// Infinite when the law has no second moment.
    pub fn variance(&self) -> f64 {
        match self {
            NoiseLaw::Constant(_) => 0.0,
            NoiseLaw::Normal { sd, .. } => sd * sd,
            NoiseLaw::StudentT { df, scale, .. } => {
                if *df > 2.0 {
                    scale * scale * df / (df - 2.0)
                } else {
                    f64::INFINITY
                }
            }
            NoiseLaw::Discrete { values, probs } => {
                let m = self.mean();
                values.iter().zip(probs).map(|(v, p)| p * (v - m) * (v - m)).sum()
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseLaw::Constant(c) => *c,
            NoiseLaw::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            NoiseLaw::StudentT { df, scale, mean } => {
                mean + scale * StudentT::new(*df).expect("validated").sample(rng)
            }
            NoiseLaw::Discrete { values, probs } => sample_discrete(values, probs, rng),
        }
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            NoiseLaw::Constant(c) => Some(vec![(*c, 1.0)]),
            NoiseLaw::Discrete { values, probs } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
            _ => None,
        }
    }
}

/// i.i.d. pair law `V = slope · U + W` with `W` independent of `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLaw {
    pub weight: WeightLaw,
    pub slope: f64,
    pub noise: NoiseLaw,
}

impl PairLaw {
    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        self.noise.validate()?;
        if !self.slope.is_finite() {
            return Err(Error::InvalidSpec("slope must be finite".into()));
        }
        if !(self.weight.raw_moment(1) > 0.0) {
            return Err(Error::InvalidSpec("E U must be positive".into()));
        }
        Ok(())
    }

    /// `(E U V, E U)`
    pub fn numerator_denominator(&self) -> (f64, f64) {
        let eu = self.weight.raw_moment(1);
        let eu2 = self.weight.raw_moment(2);
        (self.slope * eu2 + self.noise.mean() * eu, eu)
    }

    /// Joint probability mass function when both components are finitely
    /// supported.
    pub fn joint_pmf(&self) -> Option<Vec<(f64, f64, f64)>> {
        let us = self.weight.support()?;
        let ws = self.noise.support()?;
        let mut out = Vec::with_capacity(us.len() * ws.len());
        for &(u, pu) in &us {
            for &(w, pw) in &ws {
                out.push((u, self.slope * u + w, pu * pw));
            }
        }
        Some(out)
    }
}

/// Known population quantities of a process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Truth {
    Ratio {
        numerator: f64,
        denominator: f64,
        ratio: f64,
    },
    Regression(ModelSpec),
    /// `γ_X(ℓ) = scale · a^ℓ`.
    Covariance { scale: f64, a: f64 },
}

impl Truth {
    pub fn ratio(&self) -> Option<f64> {
        match self {
            Truth::Ratio { ratio, .. } => Some(*ratio),
            _ => None,
        }
    }

    pub fn covariance(&self, lag: usize) -> Option<f64> {
        match self {
            Truth::Covariance { scale, a } => Some(scale * a.powi(lag as i32)),
            _ => None,
        }
    }
}

/// Design of the regressors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Iid,
    /// Each coordinate is a stationary Gaussian AR(1) with coefficient `a`,
    /// mapped through its marginal CDF when the model density is uniform.
    Ar1 { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    IidPairs,
    Ar1Pairs,
    MaPairs,
    IidRegression,
    Ar1Regression,
    Censored,
}

impl ProcessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessKind::IidPairs => "iid_pairs",
            ProcessKind::Ar1Pairs => "ar1_pairs",
            ProcessKind::MaPairs => "ma_pairs",
            ProcessKind::IidRegression => "iid_regression",
            ProcessKind::Ar1Regression => "ar1_regression",
            ProcessKind::Censored => "censored",
        }
    }

    pub fn is_pairs(self) -> bool {
        matches!(self, ProcessKind::IidPairs | ProcessKind::Ar1Pairs | ProcessKind::MaPairs)
    }

    pub fn is_regression(self) -> bool {
        matches!(self, ProcessKind::IidRegression | ProcessKind::Ar1Regression)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    IidPairs(PairLaw),
    /// `U = |Z|`, `V = slope · U + mean + W`, with `Z` and `W` independent
    /// stationary Gaussian AR(1) sequences of coefficient `a` and unit
    /// marginal variance.
    Ar1Pairs { a: f64, slope: f64, mean: f64 },
    /// `U = 1 + tanh(Z)`, `V = mean + W`, with `Z`, `W` independent two-sided
    /// moving averages with coefficients `∝ (1 + |j|)^{-decay}`, `|j| <= taps`,
    /// normalised to unit variance.
    MaPairs { decay: f64, taps: usize, mean: f64 },
    Regression {
        model: ModelSpec,
        noise_sd: f64,
        design: Design,
    },
    /// Observed `(C_i, C_i X_i)` with `C_i` i.i.d. Bernoulli(`pi`) and `X` a
    /// centred Gaussian AR(1) with coefficient `a` and innovation s.d.
    /// `innovation_sd`.
    Censored { a: f64, innovation_sd: f64, pi: f64 },
}

impl ProcessSpec {
    pub fn kind(&self) -> ProcessKind {
        match self {
            ProcessSpec::IidPairs(_) => ProcessKind::IidPairs,
            ProcessSpec::Ar1Pairs { .. } => ProcessKind::Ar1Pairs,
            ProcessSpec::MaPairs { .. } => ProcessKind::MaPairs,
            ProcessSpec::Regression { design: Design::Iid, .. } => ProcessKind::IidRegression,
            ProcessSpec::Regression { .. } => ProcessKind::Ar1Regression,
            ProcessSpec::Censored { .. } => ProcessKind::Censored,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ar = |a: f64| {
            if a.abs() < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("AR coefficient must satisfy |a| < 1 (got {a})")))
            }
        };
        match self {
            ProcessSpec::IidPairs(law) => law.validate(),
            ProcessSpec::Ar1Pairs { a, slope, mean } => {
                ar(*a)?;
                if !(slope.is_finite() && mean.is_finite()) {
                    return Err(Error::InvalidSpec("slope and mean must be finite".into()));
                }
                Ok(())
            }
            ProcessSpec::MaPairs { decay, mean, .. } => {
                if !(*decay > 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "moving-average decay must exceed 1 (got {decay})"
                    )));
                }
                if !mean.is_finite() {
                    return Err(Error::InvalidSpec("mean must be finite".into()));
                }
                Ok(())
            }
            ProcessSpec::Regression {
                model,
                noise_sd,
                design,
            } => {
                model.validate()?;
                if !(*noise_sd >= 0.0) {
                    return Err(Error::InvalidSpec("noise s.d. must be nonnegative".into()));
                }
                if let Design::Ar1 { a } = design {
                    ar(*a)?;
                }
                Ok(())
            }
            ProcessSpec::Censored {
                a,
                innovation_sd,
                pi,
            } => {
                ar(*a)?;
                if !(*innovation_sd > 0.0) {
                    return Err(Error::InvalidSpec("innovation s.d. must be positive".into()));
                }
                if !(*pi > 0.0 && *pi <= 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "censoring probability must lie in (0, 1] (got {pi})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Declared dependence. AR(1) decays geometrically, represented by an
    /// infinite polynomial exponent. For the moving average the declared
    /// λ-exponent is `decay - 1`, the tail-sum order of the coefficients.
    pub fn dependence(&self) -> DependenceSpec {
        match self {
            ProcessSpec::IidPairs(_)
            | ProcessSpec::Regression {
                design: Design::Iid,
                ..
            } => DependenceSpec::iid(),
            ProcessSpec::Censored { a, .. } if *a == 0.0 => DependenceSpec::iid(),
            ProcessSpec::Ar1Pairs { .. }
            | ProcessSpec::Regression { .. }
            | ProcessSpec::Censored { .. } => DependenceSpec {
                kind: DependenceKind::StrongMixing,
                decay_exponent: f64::INFINITY,
                aux_exponent: None,
            },
            ProcessSpec::MaPairs { decay, .. } => DependenceSpec {
                kind: DependenceKind::LambdaWeak,
                decay_exponent: decay - 1.0,
                aux_exponent: None,
            },
        }
    }

    pub fn truth(&self) -> Truth {
        match self {
            ProcessSpec::IidPairs(law) => {
                let (numerator, denominator) = law.numerator_denominator();
                Truth::Ratio {
                    numerator,
                    denominator,
                    ratio: numerator / denominator,
                }
            }
            ProcessSpec::Ar1Pairs { slope, mean, .. } => {
                // E|Z| = sqrt(2/π), E Z² = 1
                let denominator = (2.0 / std::f64::consts::PI).sqrt();
                let numerator = slope + mean * denominator;
                Truth::Ratio {
                    numerator,
                    denominator,
                    ratio: numerator / denominator,
                }
            }
            ProcessSpec::MaPairs { mean, .. } => Truth::Ratio {
                numerator: *mean,
                denominator: 1.0,
                ratio: *mean,
            },
            ProcessSpec::Regression { model, .. } => Truth::Regression(model.clone()),
            ProcessSpec::Censored {
                a, innovation_sd, ..
            } => Truth::Covariance {
                scale: innovation_sd * innovation_sd / (1.0 - a * a),
                a: *a,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathData {
    Pairs { u: Vec<f64>, v: Vec<f64> },
    /// `x` is row-major `n × d`.
    Regression { d: usize, x: Vec<f64>, y: Vec<f64> },
    /// `latent` is the uncensored `X`, kept for oracle checks only.
    Censored { c: Vec<f64>, y: Vec<f64>, latent: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub n: usize,
    pub data: PathData,
    pub spec: ProcessSpec,
    pub seed: SeedSpec,
}

impl SamplePath {
    pub fn pairs(&self) -> Option<(&[f64], &[f64])> {
        match &self.data {
            PathData::Pairs { u, v } => Some((u, v)),
            _ => None,
        }
    }

    pub fn regression(&self) -> Option<(usize, &[f64], &[f64])> {
        match &self.data {
            PathData::Regression { d, x, y } => Some((*d, x, y)),
            _ => None,
        }
    }

    pub fn censored(&self) -> Option<(&[f64], &[f64])> {
        match &self.data {
            PathData::Censored { c, y, .. } => Some((c, y)),
            _ => None,
        }
    }

    /// Builds a regression path from given observations (for fixed designs
    /// and tests).
    pub fn from_regression(model: ModelSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let d = model.d as usize;
        if x.len() != y.len() * d {
            return Err(Error::InvalidSpec("x must hold n × d coordinates".into()));
        }
        Ok(Self {
            n: y.len(),
            data: PathData::Regression { d, x, y },
            spec: ProcessSpec::Regression {
                model,
                noise_sd: 0.0,
                design: Design::Iid,
            },
            seed: SeedSpec::new(0, 0),
        })
    }

    /// CSV with a header: `index,U,V`, `index,X[,X2..],Y` or `index,C,Y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.data {
            PathData::Pairs { u, v } => {
                out.push_str("index,U,V\n");
                for (i, (a, b)) in u.iter().zip(v).enumerate() {
                    let _ = writeln!(out, "{i},{a},{b}");
                }
            }
            PathData::Regression { d, x, y } => {
                out.push_str("index");
                for j in 0..*d {
                    if *d == 1 {
                        out.push_str(",X");
                    } else {
                        let _ = write!(out, ",X{}", j + 1);
                    }
                }
                out.push_str(",Y\n");
                for (i, yi) in y.iter().enumerate() {
                    let _ = write!(out, "{i}");
                    for xj in &x[i * d..(i + 1) * d] {
                        let _ = write!(out, ",{xj}");
                    }
                    let _ = writeln!(out, ",{yi}");
                }
            }
            PathData::Censored { c, y, .. } => {
                out.push_str("index,C,Y\n");
                for (i, (a, b)) in c.iter().zip(y).enumerate() {
                    let _ = writeln!(out, "{i},{a},{b}");
                }
            }
        }
        out
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Stationary Gaussian AR(1) with unit marginal variance.
fn unit_ar1(n: usize, a: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let innov_sd = (1.0 - a * a).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut z = normal(rng);
    for _ in 0..n {
        out.push(z);
        z = a * z + innov_sd * normal(rng);
    }
    out
}

/// Two-sided moving average with coefficients `∝ (1 + |j|)^{-decay}`,
/// scaled to unit variance.
fn unit_moving_average(n: usize, decay: f64, taps: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let coefs: Vec<f64> = (0..=2 * taps)
        .map(|k| (1.0 + (k as f64 - taps as f64).abs()).powf(-decay))
        .collect();
    let norm = coefs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let coefs: Vec<f64> = coefs.iter().map(|c| c / norm).collect();
    let eps: Vec<f64> = (0..n + 2 * taps).map(|_| normal(rng)).collect();
    (0..n)
        .map(|t| {
            coefs
                .iter()
                .zip(&eps[t..t + 2 * taps + 1])
                .map(|(c, e)| c * e)
                .sum()
        })
        .collect()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn simulate_pairs(spec: &ProcessSpec, n: usize, seed: SeedSpec) -> Result<SamplePath> {
    if !spec.kind().is_pairs() {
        return Err(Error::InvalidSpec(format!(
            "{} is not a pair process",
            spec.kind().as_str()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidSpec("n >= 1 required".into()));
    }
    spec.validate()?;
    let (u, v) = match spec {
        ProcessSpec::IidPairs(law) => {
            let mut ru = seed.stream(streams::U);
            let mut rv = seed.stream(streams::V);
            let u: Vec<f64> = (0..n).map(|_| law.weight.sample(&mut ru)).collect();
            let v = u
                .iter()
                .map(|ui| law.slope * ui + law.noise.sample(&mut rv))
                .collect();
            (u, v)
        }
        ProcessSpec::Ar1Pairs { a, slope, mean } => {
            let z = unit_ar1(n, *a, &mut seed.stream(streams::U));
            let w = unit_ar1(n, *a, &mut seed.stream(streams::V));
            let u: Vec<f64> = z.iter().map(|z| z.abs()).collect();
            let v = u.iter().zip(&w).map(|(ui, wi)| slope * ui + mean + wi).collect();
            (u, v)
        }
        ProcessSpec::MaPairs { decay, taps, mean } => {
            let z = unit_moving_average(n, *decay, *taps, &mut seed.stream(streams::U));
            let w = unit_moving_average(n, *decay, *taps, &mut seed.stream(streams::V));
            let u = z.iter().map(|z| 1.0 + z.tanh()).collect();
            let v = w.iter().map(|w| mean + w).collect();
            (u, v)
        }
        _ => unreachable!(),
    };
    Ok(SamplePath {
        n,
        data: PathData::Pairs { u, v },
        spec: spec.clone(),
        seed,
    })
}

pub fn simulate_regression(spec: &ProcessSpec, n: usize, seed: SeedSpec) -> Result<SamplePath> {
    let ProcessSpec::Regression {
        model,
        noise_sd,
        design,
    } = spec
    else {
        return Err(Error::InvalidSpec(format!(
            "{} is not a regression process",
            spec.kind().as_str()
        )));
    };
    if n == 0 {
        return Err(Error::InvalidSpec("n >= 1 required".into()));
    }
    spec.validate()?;
    let d = model.d as usize;
    let mut rx = seed.stream(streams::REGRESSOR);
    let x: Vec<f64> = match design {
        Design::Iid => (0..n * d)
            .map(|_| match model.density {
                Density::StandardNormal => normal(&mut rx),
                dens => dens.quantile(rx.random::<f64>()),
            })
            .collect(),
        Design::Ar1 { a } => {
            let cols: Vec<Vec<f64>> = (0..d).map(|_| unit_ar1(n, *a, &mut rx)).collect();
            let mut x = vec![0.0; n * d];
            for (j, col) in cols.iter().enumerate() {
                for (i, z) in col.iter().enumerate() {
                    x[i * d + j] = match model.density {
                        Density::StandardNormal => *z,
                        dens => dens.quantile(normal_cdf(*z)),
                    };
                }
            }
            x
        }
    };
    let mut rn = seed.stream(streams::NOISE);
    let y = x
        .chunks_exact(d)
        .map(|xi| {
            let r = model.r(xi);
            if *noise_sd > 0.0 {
                r + noise_sd * normal(&mut rn)
            } else {
                r
            }
        })
        .collect();
    Ok(SamplePath {
        n,
        data: PathData::Regression { d, x, y },
        spec: spec.clone(),
        seed,
    })
}

pub fn simulate_censored(spec: &ProcessSpec, n: usize, seed: SeedSpec) -> Result<SamplePath> {
    let ProcessSpec::Censored {
        a,
        innovation_sd,
        pi,
    } = spec
    else {
        return Err(Error::InvalidSpec(format!(
            "{} is not a censored process",
            spec.kind().as_str()
        )));
    };
    if n == 0 {
        return Err(Error::InvalidSpec("n >= 1 required".into()));
    }
    spec.validate()?;
    let marginal_sd = innovation_sd / (1.0 - a * a).sqrt();
    let latent: Vec<f64> = unit_ar1(n, *a, &mut seed.stream(streams::LATENT))
        .into_iter()
        .map(|z| marginal_sd * z)
        .collect();
    let mut rc = seed.stream(streams::CENSORING);
    let c: Vec<f64> = (0..n)
        .map(|_| if *pi >= 1.0 || rc.random::<f64>() < *pi { 1.0 } else { 0.0 })
        .collect();
    let y = c.iter().zip(&latent).map(|(ci, xi)| ci * xi).collect();
    Ok(SamplePath {
        n,
        data: PathData::Censored { c, y, latent },
        spec: spec.clone(),
        seed,
    })
}

/// Dispatches on the kind of `spec`.
pub fn simulate(spec: &ProcessSpec, n: usize, seed: SeedSpec) -> Result<SamplePath> {
    match spec.kind() {
        k if k.is_pairs() => simulate_pairs(spec, n, seed),
        k if k.is_regression() => simulate_regression(spec, n, seed),
        _ => simulate_censored(spec, n, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{autocovariance, mean, sample_variance};

    fn exp_pairs() -> ProcessSpec {
        ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Exponential { rate: 1.0 },
            slope: 0.5,
            noise: NoiseLaw::Normal { mean: 1.0, sd: 1.0 },
        })
    }

    #[test]
    fn constant_weights_make_ratio_a_mean() {
        let spec = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Constant(1.0),
            slope: 0.0,
            noise: NoiseLaw::Normal { mean: 2.0, sd: 1.0 },
        });
        let p = simulate_pairs(&spec, 50, SeedSpec::new(1, 0)).unwrap();
        let (u, v) = p.pairs().unwrap();
        assert!(u.iter().all(|&x| x == 1.0));
        let r = crate::ratio_core::ratio_estimate(u, v).unwrap();
        assert!((r.r_hat.unwrap() - mean(v).unwrap()).abs() < 1e-14);
        assert_eq!(spec.truth().ratio(), Some(2.0));
    }

    #[test]
    fn paths_are_deterministic() {
        for spec in [
            exp_pairs(),
            ProcessSpec::Ar1Pairs { a: 0.5, slope: 1.0, mean: 0.0 },
            ProcessSpec::MaPairs { decay: 3.0, taps: 20, mean: 1.0 },
            ProcessSpec::Regression {
                model: ModelSpec::sine(1),
                noise_sd: 0.3,
                design: Design::Ar1 { a: 0.4 },
            },
            ProcessSpec::Censored { a: 0.5, innovation_sd: 1.0, pi: 0.6 },
        ] {
            let s = SeedSpec::new(99, 3);
            assert_eq!(simulate(&spec, 100, s).unwrap(), simulate(&spec, 100, s).unwrap());
            assert_ne!(
                simulate(&spec, 100, s).unwrap().data,
                simulate(&spec, 100, SeedSpec::new(99, 4)).unwrap().data
            );
        }
    }

    #[test]
    fn pair_weights_are_nonnegative() {
        for spec in [
            exp_pairs(),
            ProcessSpec::Ar1Pairs { a: -0.7, slope: 1.0, mean: 0.0 },
            ProcessSpec::MaPairs { decay: 2.0, taps: 30, mean: 0.0 },
        ] {
            let p = simulate_pairs(&spec, 2000, SeedSpec::new(5, 0)).unwrap();
            assert!(p.pairs().unwrap().0.iter().all(|&u| u >= 0.0));
        }
    }

    #[test]
    fn ar1_with_zero_coefficient_is_uncorrelated() {
        let n = 10_000;
        let spec = ProcessSpec::Ar1Pairs { a: 0.0, slope: 0.0, mean: 0.0 };
        let p = simulate_pairs(&spec, n, SeedSpec::new(11, 0)).unwrap();
        let (u, _) = p.pairs().unwrap();
        let rho1 = autocovariance(u, 1).unwrap() / autocovariance(u, 0).unwrap();
        assert!(rho1.abs() < 3.0 / (n as f64).sqrt(), "{rho1}");
    }

    #[test]
    fn ar1_marginal_variance() {
        let n = 100_000;
        let spec = ProcessSpec::Censored { a: 0.5, innovation_sd: 1.0, pi: 1.0 };
        let p = simulate_censored(&spec, n, SeedSpec::new(3, 0)).unwrap();
        let (_, y) = p.censored().unwrap();
        let target = 1.0 / (1.0 - 0.25);
        // variance of the sample variance of an AR(1): 2σ⁴(1 + a²)/((1 - a²) n)
        let se = (2.0 * target * target * (1.0 + 0.25) / (0.75 * n as f64)).sqrt();
        let got = sample_variance(y).unwrap();
        assert!((got - target).abs() < 3.0 * se, "{got} vs {target} (se {se})");
    }

    #[test]
    fn noiseless_constant_regression() {
        let spec = ProcessSpec::Regression {
            model: ModelSpec::constant(1, 2.5),
            noise_sd: 0.0,
            design: Design::Iid,
        };
        let p = simulate_regression(&spec, 100, SeedSpec::new(0, 0)).unwrap();
        assert!(p.regression().unwrap().2.iter().all(|&y| y == 2.5));
    }

    #[test]
    fn sine_model_response_mean() {
        let n = 10_000;
        let spec = ProcessSpec::Regression {
            model: ModelSpec::sine(1),
            noise_sd: 0.3,
            design: Design::Iid,
        };
        let p = simulate_regression(&spec, n, SeedSpec::new(8, 0)).unwrap();
        let (_, _, y) = p.regression().unwrap();
        // Var Y = E sin²(2πX) + 0.09 = 0.59
        let sd = 0.59f64.sqrt();
        assert!(mean(y).unwrap().abs() < 3.0 * sd / (n as f64).sqrt());
    }

    fn ks_uniform(xs: &[f64]) -> f64 {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).max((i as f64 + 1.0) / n - x))
            .fold(0.0, f64::max)
    }

    #[test]
    fn ar1_design_has_uniform_marginal() {
        let n = 10_000;
        let spec = ProcessSpec::Regression {
            model: ModelSpec::sine(1),
            noise_sd: 0.3,
            design: Design::Ar1 { a: 0.5 },
        };
        let p = simulate_regression(&spec, n, SeedSpec::new(21, 0)).unwrap();
        let (_, x, _) = p.regression().unwrap();
        // 1% i.i.d. critical value 1.63/sqrt(n), doubled for serial dependence
        assert!(ks_uniform(x) < 2.0 * 1.63 / (n as f64).sqrt());
    }

    #[test]
    fn censoring_behaviour() {
        let uncensored = ProcessSpec::Censored { a: 0.3, innovation_sd: 1.0, pi: 1.0 };
        let p = simulate_censored(&uncensored, 500, SeedSpec::new(2, 0)).unwrap();
        let PathData::Censored { c, y, latent } = &p.data else { panic!() };
        assert!(c.iter().all(|&c| c == 1.0));
        assert_eq!(y, latent);

        let n = 20_000;
        let spec = ProcessSpec::Censored { a: 0.0, innovation_sd: 1.0, pi: 0.6 };
        let p = simulate_censored(&spec, n, SeedSpec::new(2, 0)).unwrap();
        let (c, _) = p.censored().unwrap();
        assert!((mean(c).unwrap() - 0.6).abs() < 3.0 * (0.24 / n as f64).sqrt());
    }

    #[test]
    fn stationarity_halves_agree() {
        let n = 10_000;
        let spec = ProcessSpec::Ar1Pairs { a: 0.5, slope: 0.0, mean: 0.0 };
        for rep in 0..50 {
            let p = simulate_pairs(&spec, n, SeedSpec::new(77, rep)).unwrap();
            let (_, v) = p.pairs().unwrap();
            let (a, b) = v.split_at(n / 2);
            // long-run s.d. of an AR(1) mean: sqrt((1 + a)/(1 - a))
            let sd = 3f64.sqrt();
            let gap = (mean(a).unwrap() - mean(b).unwrap()).abs();
            assert!(gap <= 6.0 * sd / ((n / 2) as f64).sqrt(), "rep {rep}: {gap}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = ProcessSpec::Ar1Pairs { a: 1.0, slope: 0.0, mean: 0.0 };
        assert!(simulate_pairs(&bad, 10, SeedSpec::new(0, 0)).is_err());
        let bad = ProcessSpec::Censored { a: 0.0, innovation_sd: 1.0, pi: 0.0 };
        assert!(simulate_censored(&bad, 10, SeedSpec::new(0, 0)).is_err());
        assert!(simulate_regression(&exp_pairs(), 10, SeedSpec::new(0, 0)).is_err());
        let bad = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Discrete { values: vec![-1.0, 1.0], probs: vec![0.5, 0.5] },
            slope: 0.0,
            noise: NoiseLaw::Constant(0.0),
        });
        assert!(simulate_pairs(&bad, 10, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn truth_of_linear_law() {
        // U ~ Exp(1): E U = 1, E U² = 2; V = 0.5 U + N(1, 1)
        match exp_pairs().truth() {
            Truth::Ratio { numerator, denominator, ratio } => {
                assert_eq!(denominator, 1.0);
                assert_eq!(numerator, 2.0);
                assert_eq!(ratio, 2.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_export_header() {
        let p = simulate_pairs(&exp_pairs(), 3, SeedSpec::new(0, 0)).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("index,U,V\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
