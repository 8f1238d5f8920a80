//! The ratio estimator `R̂ = N̂/D̂` with nonnegative weights, and audits of
//! the deterministic inequalities it satisfies.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, StudentT};
use serde::Serialize;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::stats::KahanSum;

/// Empirical numerator and denominator of a weighted mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioStats {
    /// `(1/n) Σ U_i`
    pub d_hat: f64,
    /// `(1/n) Σ U_i V_i`
    pub n_hat: f64,
    /// `None` when `Σ U_i = 0`.
    pub r_hat: Option<f64>,
    pub n: usize,
}

impl RatioStats {
    pub fn is_degenerate(&self) -> bool {
        self.r_hat.is_none()
    }
}

fn check_inputs(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::InvalidParams(format!(
            "U and V lengths differ ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    if u.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = u.iter().position(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidParams(format!("U[{i}] = {} is negative", u[i])));
    }
    Ok(())
}

/// Computes `D̂`, `N̂` and, when `Σ U > 0`, `R̂ = Σ U_i V_i / Σ U_i`.
///
/// Sums are compensated and run in index order. The quotient is clamped to
/// `[min V, max V]` over the indices with positive weight, which it can only
/// leave through rounding.
pub fn ratio_estimate(u: &[f64], v: &[f64]) -> Result<RatioStats> {
    check_inputs(u, v)?;
    let mut su = KahanSum::new();
    let mut suv = KahanSum::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&ui, &vi) in u.iter().zip(v) {
        if ui > 0.0 {
            su.add(ui);
            suv.add(ui * vi);
            lo = lo.min(vi);
            hi = hi.max(vi);
        }
    }
    let n = u.len();
    let (su, suv) = (su.total(), suv.total());
    let r_hat = (su > 0.0).then(|| (suv / su).clamp(lo, hi));
    Ok(RatioStats {
        d_hat: su / n as f64,
        n_hat: suv / n as f64,
        r_hat,
        n,
    })
}

/// Convex weights `w_i = U_i / Σ U_j`, or `None` when the sum vanishes.
pub fn convex_weights(u: &[f64]) -> Option<Vec<f64>> {
    let total = crate::stats::sum(u);
    (total > 0.0).then(|| u.iter().map(|x| x / total).collect())
}

/// `Δ_n = R̂_n − R_n`.
pub fn deviation(stats: &RatioStats, r_n: f64) -> Result<f64> {
    stats
        .r_hat
        .map(|r| r - r_n)
        .ok_or_else(|| Error::DegenerateDenominator("sum of weights is zero".into()))
}

/// `R̂ − N/D` through the expansion `N̂/D · 1/(1 − z) − N/D`,
/// `z = (D − D̂)/D`.
pub fn deviation_by_expansion(stats: &RatioStats, numerator: f64, denominator: f64) -> Result<f64> {
    if stats.d_hat == 0.0 {
        return Err(Error::DegenerateDenominator("D̂ = 0".into()));
    }
    let z = (denominator - stats.d_hat) / denominator;
    Ok(stats.n_hat / denominator / (1.0 - z) - numerator / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationAudit {
    /// `D |R̂ − N/D|`
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub alpha_used: f64,
}

impl DeviationAudit {
    /// Slack relative to `max(1, rhs)`.
    pub fn relative_slack(&self) -> f64 {
        self.slack / self.rhs.max(1.0)
    }
}

pub const DEFAULT_AUDIT_ALPHA: f64 = 0.5;

/// Evaluates both sides of
/// `D|R̂ − N/D| ≤ |N̂ − N| + |N̂|/D · |D̂ − D| + max|V| · |D̂ − D|^{1+α} / D^α`.
pub fn lemma2_audit(u: &[f64], v: &[f64], numerator: f64, denominator: f64, alpha: f64) -> Result<DeviationAudit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1) (got {alpha})")));
    }
    if !(denominator > 0.0) || !numerator.is_finite() {
        return Err(Error::InvalidParams("D must be positive and N finite".into()));
    }
    let stats = ratio_estimate(u, v)?;
    let r_hat = stats
        .r_hat
        .ok_or_else(|| Error::DegenerateDenominator("D̂ = 0; audit skipped".into()))?;
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dd = (stats.d_hat - denominator).abs();
    let lhs = denominator * (r_hat - numerator / denominator).abs();
    let rhs = (stats.n_hat - numerator).abs()
        + stats.n_hat.abs() / denominator * dd
        + vmax * dd.powf(1.0 + alpha) / denominator.powf(alpha);
    Ok(DeviationAudit {
        lhs,
        rhs,
        slack: rhs - lhs,
        alpha_used: alpha,
    })
}

/// `(max |V_i|^e, Σ |V_i|^e)`.
pub fn pisier_check(v: &[f64], e: f64) -> (f64, f64) {
    let mut lhs = 0.0f64;
    let mut rhs = KahanSum::new();
    for x in v {
        let t = x.abs().powf(e);
        lhs = lhs.max(t);
        rhs.add(t);
    }
    // the compensated total can only fall short of the max through rounding
    (lhs, rhs.total().max(lhs))
}

/// One row of an audit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub seed: u64,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub alpha: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub trials: usize,
    pub excluded: usize,
    /// Minimum of `slack / max(1, rhs)` over non-excluded trials.
    pub min_relative_slack: f64,
    /// Trial indices that violated the inequality.
    pub violations: Vec<u64>,
}

pub const AUDIT_ALPHAS: [f64; 3] = [0.1, 0.5, 0.9];

/// Tolerance on the relative slack.
pub const SLACK_TOLERANCE: f64 = 1e-12;

/// Random instance for trial `trial`: `n ∈ 1..=50`, weights exponential with
/// an atom at zero, `V` Gaussian or Student-t(1.5), and targets `(N, D)`
/// drawn near the empirical values so every term of the bound matters.
fn deviation_instance(master_seed: u64, trial: u64) -> (Vec<f64>, Vec<f64>, f64, f64, f64) {
    let mut rng = SeedSpec::new(master_seed, trial).stream(0);
    let n = rng.random_range(1..=50usize);
    let alpha = AUDIT_ALPHAS[rng.random_range(0..AUDIT_ALPHAS.len())];
    let zero_prob = [0.0, 0.3, 0.8][rng.random_range(0..3usize)];
    let exp = Exp::new(1.0).expect("rate 1");
    let u: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { exp.sample(&mut rng) })
        .collect();
    let heavy = rng.random::<bool>();
    let t = StudentT::new(1.5).expect("df 1.5");
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let v: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = if heavy { t.sample(&mut rng) } else { StandardNormal.sample(&mut rng) };
            scale * z
        })
        .collect();
    let spread: f64 = rng.random_range(0.05..3.0);
    let denominator = exp.sample(&mut rng) * spread + 1e-3;
    let nz: f64 = StandardNormal.sample(&mut rng);
    let numerator = scale * nz * denominator;
    (u, v, numerator, denominator, alpha)
}

/// Runs `trials` random instances of the deviation audit. Instances with
/// `D̂ = 0` are excluded and counted.
pub fn lemma2_random_audit(trials: usize, master_seed: u64) -> (AuditSummary, Vec<AuditRow>) {
    let mut rows = Vec::with_capacity(trials);
    let mut summary = AuditSummary {
        trials,
        excluded: 0,
        min_relative_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    for trial in 0..trials as u64 {
        let (u, v, num, den, alpha) = deviation_instance(master_seed, trial);
        match lemma2_audit(&u, &v, num, den, alpha) {
            Ok(a) => {
                let rel = a.relative_slack();
                summary.min_relative_slack = summary.min_relative_slack.min(rel);
                if rel < -SLACK_TOLERANCE {
                    summary.violations.push(trial);
                }
                rows.push(AuditRow {
                    seed: trial,
                    n: u.len(),
                    lhs: a.lhs,
                    rhs: a.rhs,
                    slack: a.slack,
                    alpha,
                    excluded: false,
                });
            }
            Err(_) => {
                summary.excluded += 1;
                rows.push(AuditRow {
                    seed: trial,
                    n: u.len(),
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    slack: f64::NAN,
                    alpha,
                    excluded: true,
                });
            }
        }
    }
    (summary, rows)
}

/// Random audit of `max |V|^e ≤ Σ |V|^e` with vectors of length 100.
pub fn pisier_random_audit(trials: usize, master_seed: u64) -> AuditSummary {
    let mut summary = AuditSummary {
        trials,
        excluded: 0,
        min_relative_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    let t = StudentT::new(1.5).expect("df 1.5");
    for trial in 0..trials as u64 {
        let mut rng = SeedSpec::new(master_seed, trial).stream(1);
        let e: f64 = rng.random_range(0.1..8.0);
        let v: Vec<f64> = (0..100).map(|_| t.sample(&mut rng)).collect();
        let (lhs, rhs) = pisier_check(&v, e);
        let rel = (rhs - lhs) / rhs.max(1.0);
        summary.min_relative_slack = summary.min_relative_slack.min(rel);
        if lhs > rhs {
            summary.violations.push(trial);
        }
    }
    summary
}

/// CSV with columns `seed,n,lhs,rhs,slack,alpha,excluded`.
pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut out = String::from("seed,n,lhs,rhs,slack,alpha,excluded\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.seed, r.n, r.lhs, r.rhs, r.slack, r.alpha, r.excluded as u8
        );
    }
    out
}
