//! Exponent algebra for the ratio moment bound.
//!
//! A ratio `N̂/D̂` inherits an `L^p` rate from an `L^p` rate on the numerator
//! and an `L^q` rate (`q > p`) on the denominator, provided the summands have
//! `r`-th and `s`-th moments. This module validates `(p, q, r, s)`, derives
//! the interpolation exponents `alpha` and `beta`, evaluates the explicit
//! bound, and checks the dependence-decay thresholds under which the
//! required rates are known to hold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MARGIN: f64 = 1e-12;

/// Raw exponent quadruple. No validity is implied; see [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl Exponents {
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Self {
        Self { p, q, r, s }
    }

    /// `q (1/p - 1/s - 1/q)`
    pub fn alpha(&self) -> f64 {
        self.q * (1.0 / self.p - 1.0 / self.s - 1.0 / self.q)
    }

    /// `p r / (q (r - p))`
    pub fn beta(&self) -> f64 {
        self.p * self.r / (self.q * (self.r - self.p))
    }
}

/// A validated exponent quadruple with its derived `alpha`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentParams {
    exponents: Exponents,
    alpha: f64,
    beta: f64,
}

impl MomentParams {
    pub fn exponents(&self) -> Exponents {
        self.exponents
    }
    pub fn p(&self) -> f64 {
        self.exponents.p
    }
    pub fn q(&self) -> f64 {
        self.exponents.q
    }
    pub fn r(&self) -> f64 {
        self.exponents.r
    }
    pub fn s(&self) -> f64 {
        self.exponents.s
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite (got {v})")))
    }
}

/// Checks the hypotheses `q > p`, `q/p - q/r >= 1`, `1/p > 1/q + 1/s` and
/// that the derived exponents land in `(0, 1]`.
pub fn validate_params(p: f64, q: f64, r: f64, s: f64) -> Result<MomentParams> {
    for (name, v) in [("p", p), ("q", q), ("r", r), ("s", s)] {
        positive_finite(name, v)?;
    }
    if q <= p {
        return Err(invalid("q > p required"));
    }
    if q / p - q / r < 1.0 - MARGIN {
        return Err(invalid(format!(
            "q/p - q/r >= 1 required (got {})",
            q / p - q / r
        )));
    }
    if 1.0 / p - 1.0 / q - 1.0 / s <= MARGIN / p {
        return Err(invalid("1/p > 1/q + 1/s required"));
    }
    let exponents = Exponents { p, q, r, s };
    let alpha = exponents.alpha();
    let beta = exponents.beta();
    if !(alpha > 0.0 && alpha <= 1.0 + MARGIN) {
        return Err(invalid(format!("alpha in (0, 1] required (got {alpha})")));
    }
    if !(beta > 0.0 && beta <= 1.0 + MARGIN) {
        return Err(invalid(format!("beta in (0, 1] required (got {beta})")));
    }
    Ok(MomentParams {
        exponents,
        alpha,
        beta,
    })
}

/// Moment orders `(r, s)` that make `beta = 1` and `alpha = 2/s`, which is
/// what gives weighted sums the parametric `n^{-1/2}` rate.
pub fn thm1_exponents(p: f64, q: f64) -> Result<(f64, f64)> {
    positive_finite("p", p)?;
    positive_finite("q", q)?;
    if q <= p {
        return Err(invalid("q > p required"));
    }
    let r = p * q / (q - p);
    let s = p * (q + 2.0) / (q - p);
    Ok((r, s))
}

/// Inputs of the explicit bound: expected numerator and denominator, the
/// common rate `v_n` of both centred terms, bounds on `‖U V‖_r` and `‖V‖_s`,
/// and the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub numerator_mean: f64,
    pub denominator_mean: f64,
    pub rate: f64,
    pub cross_moment_bound: f64,
    pub value_moment_bound: f64,
    pub n: u64,
}

/// Upper bound on `‖R̂_n - N_n/D_n‖_p`.
pub fn lemma1_bound(params: &MomentParams, inputs: &BoundInputs) -> Result<f64> {
    let BoundInputs {
        numerator_mean,
        denominator_mean,
        rate,
        cross_moment_bound,
        value_moment_bound,
        n,
    } = *inputs;
    if !(denominator_mean > 0.0) {
        return Err(Error::DegenerateDenominator(format!(
            "D_n must be positive (got {denominator_mean})"
        )));
    }
    for (name, v) in [
        ("v_n", rate),
        ("C_n", cross_moment_bound),
        ("c_n", value_moment_bound),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(format!("{name} must be nonnegative (got {v})")));
        }
    }
    if n == 0 {
        return Err(invalid("n >= 1 required"));
    }
    if !numerator_mean.is_finite() {
        return Err(invalid("N_n must be finite"));
    }
    let (alpha, beta, s) = (params.alpha, params.beta, params.s());
    let d = denominator_mean;
    let abs_n = numerator_mean.abs();
    let v_rest = rate.powf(1.0 - beta);
    let bracket = 1.0
        + abs_n / d
        + abs_n.powf(beta) * v_rest / d
        + cross_moment_bound.powf(beta) * v_rest / d
        + rate.powf(alpha) * value_moment_bound * (n as f64).powf(1.0 / s) / d.powf(alpha);
    Ok(bracket * rate / d)
}

/// Outcome of the bandwidth feasibility condition for regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `max` of both branches; `rho` must be at least this.
    pub threshold: f64,
    pub branches: [f64; 2],
}

impl Feasibility {
    pub fn diagnostic(&self, rho: f64) -> String {
        if self.feasible {
            format!("rho = {rho} >= threshold {}", self.threshold)
        } else {
            format!(
                "rho = {rho} below threshold {} (branches {} and {})",
                self.threshold, self.branches[0], self.branches[1]
            )
        }
    }
}

/// `rho >= pd(r-1)/(qr-pq-pr)  ∨  pd/(qs-pq-ps-2p)`, both denominators
/// positive. Non-positive denominators are an error rather than `false`.
pub fn regression_feasible(exps: &Exponents, d: u32, rho: f64) -> Result<Feasibility> {
    let Exponents { p, q, r, s } = *exps;
    for (name, v) in [("p", p), ("q", q), ("r", r), ("s", s)] {
        positive_finite(name, v)?;
    }
    if d == 0 {
        return Err(invalid("d >= 1 required"));
    }
    if !(rho > 0.0) {
        return Err(invalid("rho > 0 required"));
    }
    let d = d as f64;
    let den1 = q * r - p * q - p * r;
    let den2 = q * s - p * q - p * s - 2.0 * p;
    if den1 <= 0.0 {
        return Err(invalid(format!("qr - pq - pr must be positive (got {den1})")));
    }
    if den2 <= 0.0 {
        return Err(invalid(format!(
            "qs - pq - ps - 2p must be positive (got {den2})"
        )));
    }
    let b1 = p * d * (r - 1.0) / den1;
    let b2 = p * d / den2;
    let threshold = b1.max(b2);
    Ok(Feasibility {
        feasible: threshold <= rho,
        threshold,
        branches: [b1, b2],
    })
}

fn check_bandwidth_args(n: u64, rho: f64, d: u32, c: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n >= 1 required"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("rho > 0 required"));
    }
    if d == 0 {
        return Err(invalid("d >= 1 required"));
    }
    positive_finite("C", c)
}

/// `C n^{-1/(2 rho + d)}`
pub fn bandwidth_pointwise(n: u64, rho: f64, d: u32, c: f64) -> Result<f64> {
    check_bandwidth_args(n, rho, d, c)?;
    Ok(c * (n as f64).powf(-1.0 / (2.0 * rho + d as f64)))
}

/// `C (log n / n)^{1/(2 rho + d)}`, for `n >= 3`.
pub fn bandwidth_uniform(n: u64, rho: f64, d: u32, c: f64) -> Result<f64> {
    check_bandwidth_args(n, rho, d, c)?;
    if n < 3 {
        return Err(invalid("n >= 3 required so that log n > 1"));
    }
    let n = n as f64;
    Ok(c * (n.ln() / n).powf(1.0 / (2.0 * rho + d as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    WeightedSum,
    Pointwise,
    Uniform,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::WeightedSum => "weighted_sum",
            Setting::Pointwise => "pointwise",
            Setting::Uniform => "uniform",
        }
    }
}

/// Rate exponent `e` such that the deviation norm decays like `n^{-e}`
/// (or `(n / log n)^{-e}` in the uniform setting).
pub fn theoretical_exponent(setting: Setting, rho: f64, d: u32) -> f64 {
    match setting {
        Setting::WeightedSum => 0.5,
        Setting::Pointwise | Setting::Uniform => rho / (2.0 * rho + d as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceKind {
    Iid,
    StrongMixing,
    AbsoluteRegularity,
    CausalGamma,
    LambdaWeak,
}

impl DependenceKind {
    pub fn name(self) -> &'static str {
        match self {
            DependenceKind::Iid => "iid",
            DependenceKind::StrongMixing => "strong_mixing",
            DependenceKind::AbsoluteRegularity => "absolute_regularity",
            DependenceKind::CausalGamma => "causal_gamma",
            DependenceKind::LambdaWeak => "lambda_weak",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "iid" => DependenceKind::Iid,
            "strong_mixing" => DependenceKind::StrongMixing,
            "absolute_regularity" => DependenceKind::AbsoluteRegularity,
            "causal_gamma" => DependenceKind::CausalGamma,
            "lambda_weak" => DependenceKind::LambdaWeak,
            _ => return None,
        })
    }
}

/// Declared dependence of a sequence.
///
/// `decay_exponent` is the polynomial decay exponent of the relevant
/// coefficients (`i^{-e}`); `f64::INFINITY` stands for geometric decay. For
/// stretched-exponential weak dependence (`e^{-λ i^b}`) it carries `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceSpec {
    pub kind: DependenceKind,
    pub decay_exponent: f64,
    pub aux_exponent: Option<f64>,
}

impl DependenceSpec {
    pub fn iid() -> Self {
        Self {
            kind: DependenceKind::Iid,
            decay_exponent: f64::INFINITY,
            aux_exponent: None,
        }
    }

    pub fn new(kind: DependenceKind, decay_exponent: f64) -> Result<Self> {
        if kind != DependenceKind::Iid && !(decay_exponent > 0.0) {
            return Err(invalid("decay exponent must be positive"));
        }
        Ok(Self {
            kind,
            decay_exponent,
            aux_exponent: None,
        })
    }

    pub fn with_aux(mut self, aux: f64) -> Self {
        self.aux_exponent = Some(aux);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCase {
    /// Independent weighted sums: no decay condition.
    IidWeightedSum,
    /// Strong mixing, weighted sums.
    MixingSum,
    /// Causal γ-dependence with independent `U`, `V`.
    CausalGammaSum,
    /// λ-weak dependence, independent `U`, `V` and bounded `U`.
    LambdaSumBoundedWeights,
    /// λ-weak dependence with `‖U_0‖_{r'}` bounded.
    LambdaSumMoment,
    /// Independent regression, pointwise.
    IidPointwise,
    /// λ-weak dependence, pointwise regression.
    LambdaPointwise,
    /// Strong mixing, pointwise regression, general moments.
    MixingPointwise,
    /// Strong mixing, pointwise regression, even integer moments.
    MixingPointwiseEven,
    /// Independent regression, uniform.
    IidUniform,
    /// Absolute regularity, uniform.
    BetaMixingUniform,
    /// Strong mixing, uniform.
    MixingUniform,
    /// Stretched-exponential λ-weak dependence, uniform.
    LambdaStretchedUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub case: RateCase,
    pub threshold: f64,
    pub supplied: f64,
    pub satisfied: bool,
    pub warnings: Vec<String>,
    /// Largest admissible `a·d` for a window `h ~ n^{-a}` (first set of the
    /// strong-mixing pointwise result only). Not folded into `satisfied`.
    pub window_constraint: Option<f64>,
}

/// Minimum decay exponent `λ` with `λ > 4 + 2/q'` used for non-integer
/// moment orders `q ∈ (2, 3)` under λ-weak dependence, where `q' = q + δ`.
pub fn fractional_moment_lambda_threshold(q_prime: f64) -> f64 {
    4.0 + 2.0 / q_prime
}

fn is_even_integer(x: f64) -> bool {
    x.fract() == 0.0 && (x as i64) % 2 == 0
}

fn report(
    case: RateCase,
    threshold: f64,
    supplied: f64,
    mut warnings: Vec<String>,
) -> HypothesisReport {
    if threshold.is_finite()
        && supplied.is_finite()
        && (supplied - threshold).abs() <= MARGIN * threshold.abs().max(1.0)
    {
        warnings.push(format!(
            "decay exponent {supplied} sits on the threshold {threshold}"
        ));
    }
    HypothesisReport {
        case,
        threshold,
        supplied,
        satisfied: supplied > threshold,
        warnings,
        window_constraint: None,
    }
}

fn need_aux(dep: &DependenceSpec, what: &str) -> Result<f64> {
    dep.aux_exponent
        .ok_or_else(|| invalid(format!("{what} requires the auxiliary exponent r'")))
}

fn uniform_rho_warning(e: &Exponents, d: f64, rho: f64, warnings: &mut Vec<String>) {
    let Exponents { p, s, .. } = *e;
    if s <= 2.0 * p {
        warnings.push(format!("s > 2p required (s = {s}, p = {p})"));
    } else if rho <= d * p / (s - 2.0 * p) {
        warnings.push(format!(
            "rho > dp/(s - 2p) = {} required (rho = {rho})",
            d * p / (s - 2.0 * p)
        ));
    }
}

fn mixing_pointwise_general(e: &Exponents, supplied: f64) -> HypothesisReport {
    let Exponents { p, q, r, s } = *e;
    let mut warnings = Vec::new();
    if r <= q {
        warnings.push(format!("r > q required (r = {r}, q = {q})"));
    }
    if s <= 4.0 {
        warnings.push(format!("threshold needs s > 4 (s = {s})"));
    }
    let a = (q - 1.0) * r / (r - q);
    let b = (4.0 * s * r - 2.0 * s - 4.0 * r) / ((r - 2.0) * (s - 4.0));
    let mut rep = report(RateCase::MixingPointwise, a.max(b), supplied, warnings);
    rep.window_constraint = Some((1.0 - 2.0 / p) / (3.0 - 2.0 / r));
    rep
}

fn mixing_pointwise_even(e: &Exponents, supplied: f64) -> HypothesisReport {
    let Exponents { p, q, r, s } = *e;
    let mut warnings = Vec::new();
    if !(is_even_integer(p) && is_even_integer(q)) {
        warnings.push(format!("p and q must be even integers (p = {p}, q = {q})"));
    }
    let t = r / 2.0 * (s - 2.0 * p) / (s - p) * (1.0 - 1.0 / p);
    report(RateCase::MixingPointwiseEven, t, supplied, warnings)
}

/// Every case that covers `(dep.kind, setting)`, evaluated.
pub fn applicable_hypotheses(
    dep: &DependenceSpec,
    exps: &Exponents,
    setting: Setting,
    d: u32,
    rho: f64,
) -> Result<Vec<HypothesisReport>> {
    use DependenceKind::*;
    let Exponents { p, q, r, s } = *exps;
    let df = d as f64;
    let e = dep.decay_exponent;
    let unsupported = || Error::UnsupportedCombination {
        kind: dep.kind.name().into(),
        setting: setting.name().into(),
    };
    let out = match (dep.kind, setting) {
        (Iid, Setting::WeightedSum) => {
            vec![report(RateCase::IidWeightedSum, 0.0, f64::INFINITY, vec![])]
        }
        (Iid, Setting::Pointwise) => vec![report(RateCase::IidPointwise, 0.0, f64::INFINITY, vec![])],
        (Iid, Setting::Uniform) => {
            let mut w = Vec::new();
            uniform_rho_warning(exps, df, rho, &mut w);
            vec![report(RateCase::IidUniform, 0.0, f64::INFINITY, w)]
        }
        (StrongMixing, Setting::WeightedSum) => {
            let rp = need_aux(dep, "the strong-mixing weighted-sum threshold")?;
            let mut w = Vec::new();
            if !(s >= rp && rp > q) {
                w.push(format!("s >= r' > q required (s = {s}, r' = {rp}, q = {q})"));
            }
            let t = (p / 2.0 * r / (r - p)).max(q / 2.0 * rp / (rp - q));
            vec![report(RateCase::MixingSum, t, e, w)]
        }
        (CausalGamma, Setting::WeightedSum) => {
            let t = (p / 2.0 * (s - 1.0) / (s - p)).max(q / 2.0);
            vec![report(RateCase::CausalGammaSum, t, e, vec![])]
        }
        (LambdaWeak, Setting::WeightedSum) => {
            let mut w = Vec::new();
            if !(is_even_integer(p) && is_even_integer(q) && q >= 2.0) {
                w.push(format!(
                    "p and q >= 2 must be even integers (p = {p}, q = {q})"
                ));
            }
            match dep.aux_exponent {
                None => vec![report(RateCase::LambdaSumBoundedWeights, q / 2.0, e, w)],
                Some(rp) => {
                    if rp > s {
                        w.push(format!("r' <= s required (r' = {rp}, s = {s})"));
                    }
                    let t = rp / (rp - 2.0) * q / 2.0;
                    vec![report(RateCase::LambdaSumMoment, t, e, w)]
                }
            }
        }
        (LambdaWeak, Setting::Pointwise) => {
            let mut w = Vec::new();
            if s <= 2.0 * p {
                w.push(format!("s > 2p required (s = {s}, p = {p})"));
            }
            let a = r * (2.0 * r * (s - p) + 2.0 * p - s) / ((r - p) * (s - 2.0 * p) * (r - 1.0))
                * (p - 1.0);
            let b = 2.0 * (df - 1.0) / df * (q - 1.0);
            vec![report(RateCase::LambdaPointwise, a.max(b), e, w)]
        }
        (StrongMixing, Setting::Pointwise) => {
            let first = mixing_pointwise_general(exps, e);
            let second = mixing_pointwise_even(exps, e);
            if is_even_integer(p) && is_even_integer(q) {
                vec![second, first]
            } else {
                vec![first, second]
            }
        }
        (AbsoluteRegularity, Setting::Uniform) => {
            let mut w = Vec::new();
            uniform_rho_warning(exps, df, rho, &mut w);
            let a = (s * rho + (2.0 * s - p) * df) / (rho * (s - 2.0 * p) - p * df);
            let b = 1.0 + 2.0 * df / rho;
            vec![report(RateCase::BetaMixingUniform, a.max(b), e, w)]
        }
        (StrongMixing, Setting::Uniform) => {
            let mut w = Vec::new();
            uniform_rho_warning(exps, df, rho, &mut w);
            let num = 3.0 * rho * s + 2.0 * df * s + df * rho * s
                - 4.0 * rho * p
                - 3.0 * df * p
                - df * rho * p;
            let den = df * p - rho * (s - 2.0 * p);
            let hypothesis = s > 2.0 * p && rho > df * p / (s - 2.0 * p);
            if hypothesis && den < 0.0 {
                w.push(format!(
                    "threshold denominator dp - rho(s - 2p) = {den} is negative while \
                     rho > dp/(s - 2p) holds; printed threshold applied literally"
                ));
            } else if den > 0.0 {
                w.push(format!(
                    "threshold denominator dp - rho(s - 2p) = {den} is positive, which \
                     contradicts rho > dp/(s - 2p)"
                ));
            }
            let t = (num / den).max(2.0 * (s - 1.0) / (s - 2.0));
            vec![report(RateCase::MixingUniform, t, e, w)]
        }
        (LambdaWeak, Setting::Uniform) => {
            let mut w = Vec::new();
            uniform_rho_warning(exps, df, rho, &mut w);
            w.push("decay exponent read as the stretch exponent b of exp(-λ i^b)".into());
            vec![report(RateCase::LambdaStretchedUniform, 0.0, e, w)]
        }
        (AbsoluteRegularity, _) | (CausalGamma, _) => return Err(unsupported()),
    };
    Ok(out)
}

/// Threshold check for the case selected by `(dep.kind, setting)`.
///
/// Strong mixing in the pointwise setting has two alternative sets of
/// conditions; the even-integer set is selected when `p` and `q` are even
/// integers, the general set otherwise. [`applicable_hypotheses`] returns
/// both.
pub fn check_dependence(
    dep: &DependenceSpec,
    exps: &Exponents,
    setting: Setting,
    d: u32,
    rho: f64,
) -> Result<HypothesisReport> {
    Ok(applicable_hypotheses(dep, exps, setting, d, rho)?.remove(0))
}
