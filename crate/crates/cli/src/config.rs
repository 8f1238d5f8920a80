//! Flat `key = value` experiment files.
//!
//! `#` starts a comment, values may be quoted, and a `[section]` line
//! prefixes the keys below it with `section.`. Every key is listed in
//! [`KEYS`]; anything else is rejected with its line number.

use std::collections::BTreeMap;
use std::fmt;

use rml_core::kernels::KernelName;
use rml_core::moment_params::{thm1_exponents, Exponents};
use rml_core::montecarlo::{Bandwidth, BandwidthRule, Estimator, ExperimentConfig, RegressionTarget};
use rml_core::nw_regression::{Density, ModelSpec};
use rml_core::processes::{Design, NoiseLaw, PairLaw, ProcessSpec, WeightLaw};

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("process", "iid_pairs | ar1_pairs | ma_pairs | regression | censored"),
    ("process.weight", "iid_pairs weight law: constant | uniform | exponential | discrete"),
    ("process.weight.value", "constant weight"),
    ("process.weight.lo", "uniform weight, lower end"),
    ("process.weight.hi", "uniform weight, upper end"),
    ("process.weight.rate", "exponential weight rate"),
    ("process.weight.values", "discrete weight support, comma separated"),
    ("process.weight.probs", "discrete weight probabilities"),
    ("process.slope", "V = slope * U + W (iid_pairs, ar1_pairs)"),
    ("process.noise", "iid_pairs law of W: constant | normal | student_t | discrete"),
    ("process.noise.value", "constant W"),
    ("process.noise.mean", "mean of W (normal, student_t)"),
    ("process.noise.sd", "standard deviation of W (normal)"),
    ("process.noise.df", "degrees of freedom (student_t)"),
    ("process.noise.scale", "scale of the t variable (student_t)"),
    ("process.noise.values", "discrete W support"),
    ("process.noise.probs", "discrete W probabilities"),
    ("process.a", "AR(1) coefficient (ar1_pairs, censored, regression with design = ar1)"),
    ("process.mean", "additive mean of V (ar1_pairs, ma_pairs)"),
    ("process.decay", "ma_pairs coefficient decay exponent"),
    ("process.taps", "ma_pairs number of taps on each side"),
    ("process.model", "regression function: sine | constant"),
    ("process.model.c", "value of the constant regression function"),
    ("process.density", "regressor density: uniform01 | standard_normal | linear"),
    ("process.density.slope", "slope of the linear density on [0, 1]"),
    ("process.rho", "regularity of the model (default 2)"),
    ("process.noise_sd", "regression noise standard deviation"),
    ("process.design", "regressor sequence: iid | ar1"),
    ("process.innovation_sd", "censored: innovation standard deviation"),
    ("process.pi", "censored: observation probability"),
    ("dim", "regressor dimension (default 1)"),
    ("kernel", "epanechnikov | triangle | quartic | shifted_epanechnikov"),
    ("estimator", "weighted_sum | nw_pointwise | nw_sup"),
    ("p", "norm order, also the first moment exponent (default 2)"),
    ("q", "moment exponent q > p; reported with the results"),
    ("r", "moment exponent r (derived from p, q when omitted)"),
    ("s", "moment exponent s (derived from p, q when omitted)"),
    ("norms", "further norm orders reported next to p"),
    ("n_grid", "sample sizes: a list such as 256, 512, 2^10 or a range 2^8..2^14"),
    ("M", "replications per sample size"),
    ("seed", "master seed; every random draw derives from it"),
    ("threads", "worker threads, 0 = automatic (RML_THREADS overrides)"),
    ("x", "evaluation point of nw_pointwise, one coordinate per dimension"),
    ("target", "regression target: centered (E g / E f) | truth (r(x))"),
    ("bandwidth.rule", "pointwise | uniform | fixed"),
    ("bandwidth.C", "bandwidth constant, or the bandwidth itself when fixed"),
    ("grid.lo", "nw_sup evaluation box, lower end per axis"),
    ("grid.hi", "nw_sup evaluation box, upper end per axis"),
    ("tolerance", "accepted distance between fitted slope and minus the theoretical exponent"),
    ("theoretical", "override of the theoretical exponent"),
    ("max_excluded_fraction", "largest tolerated share of degenerate replications (default 0.01)"),
    ("bias.x", "bias: evaluation point"),
    ("bias.h0", "bias: largest bandwidth (default 0.4)"),
    ("bias.levels", "bias: number of halvings of h0 (default 6)"),
    ("bias.tolerance", "bias: accepted distance between slope and expected order (default 0.2)"),
    ("censored.n", "censored: path length (default 1000000)"),
    ("censored.lags", "censored: largest lag (default 5)"),
    ("censored.paths", "censored: paths; path 0 is checked, the rest give the standard error (default 33)"),
    ("clt.p_prime", "clt: norm order p' < p (default 1)"),
    ("clt.tolerance", "clt: accepted relative gap (default 0.05)"),
    ("output.dir", "directory for CSV, JSON and the manifest (default rml_out)"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |key: Option<&str>, message: String| ConfigError {
                line: Some(lineno),
                key: key.map(str::to_string),
                message,
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(None, "unterminated section header".into()))?
                    .trim();
                if !(name.is_empty() || valid_key(name)) {
                    return Err(err(None, format!("bad section name `{name}`")));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(None, format!("expected `key = value`, found `{line}`")))?;
            let k = k.trim();
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if !valid_key(k) {
                return Err(err(Some(&key), "keys are dotted words of letters, digits and `_`".into()));
            }
            if !KEYS.iter().any(|(name, _)| *name == key) {
                return Err(err(Some(&key), "unknown key".into()));
            }
            let mut v = v.trim();
            if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
                v = &v[1..v.len() - 1];
            }
            if v.is_empty() {
                return Err(err(Some(&key), "empty value".into()));
            }
            if let Some((first, _)) = entries.insert(key.clone(), (lineno, v.to_string())) {
                return Err(err(Some(&key), format!("already set on line {first}")));
            }
        }
        Ok(Self { entries })
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.entries.get(key).map(|e| e.0),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| self.err(key, "missing"))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.err(key, format!("`{v}` is not a finite number")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        self.require(key)?;
        Ok(self.f64(key)?.expect("present"))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.replace('_', "")
                    .parse::<u64>()
                    .map_err(|_| self.err(key, format!("`{v}` is not a nonnegative integer")))
            })
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64(key)?.map(|v| v as usize).unwrap_or(default))
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|t| {
                        let t = t.trim();
                        t.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| self.err(key, format!("`{t}` is not a finite number")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn n_grid(&self) -> Result<Vec<usize>> {
        let key = "n_grid";
        let v = self.require(key)?;
        let size = |t: &str| -> Result<usize> {
            let t = t.trim();
            let parsed = match t.strip_prefix("2^") {
                Some(e) => e.parse::<u32>().ok().filter(|e| *e < 63).map(|e| 1usize << e),
                None => t.replace('_', "").parse::<usize>().ok(),
            };
            parsed.ok_or_else(|| self.err(key, format!("`{t}` is not a sample size")))
        };
        if let Some((lo, hi)) = v.split_once("..") {
            let (lo, hi) = (size(lo)?, size(hi)?);
            if !(lo.is_power_of_two() && hi.is_power_of_two() && lo < hi) {
                return Err(self.err(key, "a range runs between increasing powers of two"));
            }
            let mut out = Vec::new();
            let mut n = lo;
            while n <= hi {
                out.push(n);
                n *= 2;
            }
            return Ok(out);
        }
        v.split(',').map(size).collect()
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.u64("seed")?.unwrap_or(0))
    }

    pub fn output_dir(&self) -> String {
        self.get("output.dir").unwrap_or("rml_out").to_string()
    }

    fn choice<T>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>>
    where
        T: Copy,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => options.iter().find(|(name, _)| *name == v).map(|(_, t)| Some(*t)).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(key, format!("`{v}` is not one of {}", names.join(", ")))
            }),
        }
    }

    fn weight_law(&self) -> Result<WeightLaw> {
        let key = "process.weight";
        Ok(match self.require(key)? {
            "constant" => WeightLaw::Constant(self.f64_or("process.weight.value", 1.0)?),
            "uniform" => WeightLaw::Uniform {
                lo: self.f64_req("process.weight.lo")?,
                hi: self.f64_req("process.weight.hi")?,
            },
            "exponential" => WeightLaw::Exponential {
                rate: self.f64_or("process.weight.rate", 1.0)?,
            },
            "discrete" => WeightLaw::Discrete {
                values: self.list_req("process.weight.values")?,
                probs: self.list_req("process.weight.probs")?,
            },
            other => return Err(self.err(key, format!("unknown weight law `{other}`"))),
        })
    }

    fn noise_law(&self) -> Result<NoiseLaw> {
        let key = "process.noise";
        Ok(match self.require(key)? {
            "constant" => NoiseLaw::Constant(self.f64_or("process.noise.value", 0.0)?),
            "normal" => NoiseLaw::Normal {
                mean: self.f64_or("process.noise.mean", 0.0)?,
                sd: self.f64_or("process.noise.sd", 1.0)?,
            },
            "student_t" => NoiseLaw::StudentT {
                df: self.f64_req("process.noise.df")?,
                scale: self.f64_or("process.noise.scale", 1.0)?,
                mean: self.f64_or("process.noise.mean", 0.0)?,
            },
            "discrete" => NoiseLaw::Discrete {
                values: self.list_req("process.noise.values")?,
                probs: self.list_req("process.noise.probs")?,
            },
            other => return Err(self.err(key, format!("unknown noise law `{other}`"))),
        })
    }

    fn list_req(&self, key: &str) -> Result<Vec<f64>> {
        self.require(key)?;
        Ok(self.f64_list(key)?.expect("present"))
    }

    fn model(&self) -> Result<ModelSpec> {
        let d = self.u64("dim")?.unwrap_or(1);
        if !(1..=8).contains(&d) {
            return Err(self.err("dim", "dimension must lie in 1..=8"));
        }
        let d = d as u32;
        let mut model = match self.get("process.model").unwrap_or("sine") {
            "sine" => ModelSpec::sine(d),
            "constant" => ModelSpec::constant(d, self.f64_or("process.model.c", 1.0)?),
            other => return Err(self.err("process.model", format!("unknown regression function `{other}`"))),
        };
        model.density = match self.get("process.density").unwrap_or("uniform01") {
            "uniform01" => Density::Uniform01,
            "standard_normal" => Density::StandardNormal,
            "linear" => Density::Linear {
                slope: self.f64_req("process.density.slope")?,
            },
            other => return Err(self.err("process.density", format!("unknown density `{other}`"))),
        };
        model.rho = self.f64_or("process.rho", model.rho)?;
        model.region = (self.f64_or("grid.lo", model.region.0)?, self.f64_or("grid.hi", model.region.1)?);
        Ok(model)
    }

    pub fn process(&self) -> Result<ProcessSpec> {
        let key = "process";
        let spec = match self.require(key)? {
            "iid_pairs" => ProcessSpec::IidPairs(PairLaw {
                weight: self.weight_law()?,
                slope: self.f64_or("process.slope", 0.0)?,
                noise: self.noise_law()?,
            }),
            "ar1_pairs" => ProcessSpec::Ar1Pairs {
                a: self.f64_req("process.a")?,
                slope: self.f64_or("process.slope", 0.0)?,
                mean: self.f64_or("process.mean", 0.0)?,
            },
            "ma_pairs" => ProcessSpec::MaPairs {
                decay: self.f64_req("process.decay")?,
                taps: self.usize_or("process.taps", 200)?,
                mean: self.f64_or("process.mean", 0.0)?,
            },
            "regression" => ProcessSpec::Regression {
                model: self.model()?,
                noise_sd: self.f64_or("process.noise_sd", 0.3)?,
                design: match self.get("process.design").unwrap_or("iid") {
                    "iid" => Design::Iid,
                    "ar1" => Design::Ar1 {
                        a: self.f64_req("process.a")?,
                    },
                    other => return Err(self.err("process.design", format!("unknown design `{other}`"))),
                },
            },
            "censored" => ProcessSpec::Censored {
                a: self.f64_req("process.a")?,
                innovation_sd: self.f64_or("process.innovation_sd", 1.0)?,
                pi: self.f64_req("process.pi")?,
            },
            other => return Err(self.err(key, format!("unknown process `{other}`"))),
        };
        spec.validate().map_err(|e| self.err(key, e.to_string()))?;
        Ok(spec)
    }

    fn exponents(&self, p: f64) -> Result<Option<Exponents>> {
        let Some(q) = self.f64("q")? else {
            if self.get("r").is_some() || self.get("s").is_some() {
                return Err(self.err("q", "r and s need q"));
            }
            return Ok(None);
        };
        let (r, s) = match (self.f64("r")?, self.f64("s")?) {
            (Some(r), Some(s)) => (r, s),
            (None, None) => thm1_exponents(p, q).map_err(|e| self.err("q", e.to_string()))?,
            _ => return Err(self.err("r", "give both r and s, or neither")),
        };
        Ok(Some(Exponents::new(p, q, r, s)))
    }

    /// Experiment of the `run` and `clt` commands.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let process = self.process()?;
        let estimator = self
            .choice(
                "estimator",
                &[
                    ("weighted_sum", Estimator::WeightedSum),
                    ("nw_pointwise", Estimator::NwPointwise),
                    ("nw_sup", Estimator::NwSup),
                ],
            )?
            .ok_or_else(|| self.err("estimator", "missing"))?;
        let mut cfg = ExperimentConfig::new(process, estimator, self.n_grid()?);
        let p = self.f64_or("p", 2.0)?;
        cfg.params = self.exponents(p)?;
        cfg.norm_orders = vec![p];
        if let Some(more) = self.f64_list("norms")? {
            cfg.norm_orders.extend(more);
        }
        cfg.replications = self.usize_or("M", cfg.replications)?;
        cfg.master_seed = self.seed()?;
        cfg.threads = self.usize_or("threads", 0)?;
        if let Some(x) = self.f64_list("x")? {
            cfg.x = x;
        }
        if let Some(k) = self.get("kernel") {
            cfg.kernel = KernelName::parse(k).map_err(|e| self.err("kernel", e.to_string()))?;
        }
        if let Some(rule) = self.choice(
            "bandwidth.rule",
            &[
                ("pointwise", BandwidthRule::Pointwise),
                ("uniform", BandwidthRule::Uniform),
                ("fixed", BandwidthRule::Fixed),
            ],
        )? {
            cfg.bandwidth = Bandwidth { rule, c: cfg.bandwidth.c };
        }
        cfg.bandwidth.c = self.f64_or("bandwidth.C", cfg.bandwidth.c)?;
        if let Some(t) = self.choice(
            "target",
            &[("centered", RegressionTarget::Centered), ("truth", RegressionTarget::Truth)],
        )? {
            cfg.target = t;
        }
        cfg.tolerance = self.f64_or("tolerance", cfg.tolerance)?;
        cfg.theoretical = self.f64("theoretical")?;
        cfg.max_excluded_fraction = self.f64_or("max_excluded_fraction", cfg.max_excluded_fraction)?;
        cfg.validate().map_err(|e| ConfigError {
            line: None,
            key: None,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Regression model and kernel of the `bias` command.
    pub fn bias_model(&self) -> Result<ModelSpec> {
        match self.process()? {
            ProcessSpec::Regression { model, .. } => Ok(model),
            _ => Err(self.err("process", "bias needs process = regression")),
        }
    }

    pub fn kernel(&self) -> Result<KernelName> {
        match self.get("kernel") {
            None => Ok(KernelName::Epanechnikov),
            Some(k) => KernelName::parse(k).map_err(|e| self.err("kernel", e.to_string())),
        }
    }
}

/// One line per key, for `--help`.
pub fn key_reference() -> String {
    let mut out = String::new();
    for (key, doc) in KEYS {
        out.push_str(&format!("  {key:<24} {doc}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_quotes() {
        let c = Config::parse("# top\nprocess = \"ar1_pairs\" # trailing\n[process]\na = 0.5\n\n[]\nseed = 7\n").unwrap();
        assert_eq!(c.get("process"), Some("ar1_pairs"));
        assert_eq!(c.get("process.a"), Some("0.5"));
        assert_eq!(c.seed().unwrap(), 7);
    }

    #[test]
    fn errors_carry_line_and_key() {
        let e = Config::parse("seed = 1\nfoo = 2\n").unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(2), Some("foo")));
        let e = Config::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(e.message.contains("line 1"));
        let e = Config::parse("seed\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let c = Config::parse("\n\nM = many\n").unwrap();
        let e = c.usize_or("M", 1).unwrap_err();
        assert_eq!(e.to_string(), "line 3, key `M`: `many` is not a nonnegative integer");
    }

    #[test]
    fn grids() {
        let c = Config::parse("n_grid = 2^8..2^11").unwrap();
        assert_eq!(c.n_grid().unwrap(), vec![256, 512, 1024, 2048]);
        let c = Config::parse("n_grid = 100, 2^9, 1_000").unwrap();
        assert_eq!(c.n_grid().unwrap(), vec![100, 512, 1000]);
        assert!(Config::parse("n_grid = 2^9..2^8").unwrap().n_grid().is_err());
    }

    #[test]
    fn pair_process_and_derived_exponents() {
        let text = "process = iid_pairs\nprocess.weight = exponential\nprocess.noise = normal\n\
                    process.noise.mean = 1\nprocess.slope = 0.5\nestimator = weighted_sum\n\
                    n_grid = 2^8..2^10\nq = 4\n";
        let cfg = Config::parse(text).unwrap().experiment().unwrap();
        assert_eq!(cfg.params, Some(Exponents::new(2.0, 4.0, 4.0, 6.0)));
        assert_eq!(cfg.process.truth().ratio(), Some(2.0));
    }

    #[test]
    fn invalid_process_is_reported_on_its_key() {
        let c = Config::parse("process = ar1_pairs\nprocess.a = 1.5\n").unwrap();
        let e = c.process().unwrap_err();
        assert_eq!(e.key.as_deref(), Some("process"));
        assert!(e.message.contains("|a| < 1"));
    }
}
