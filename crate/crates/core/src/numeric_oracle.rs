//! Reference values computed without the estimators: quadrature for kernel
//! expectations and bias, the delta-method variance, and exact enumeration
//! for small discrete problems.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::nw_regression::{ModelSpec, RegressionFn};
use crate::processes::ProcessSpec;
pub use crate::quadrature::QuadratureSpec;
use crate::quadrature::integrate_checked;
use crate::stats::{ols, KahanSum};

/// Per-axis pieces of `{u in supp K : x + h u in supp f}`, split at kernel
/// kinks so every piece carries a smooth integrand.
fn axis_pieces(model: &ModelSpec, kernel: &Kernel, xj: f64, h: f64) -> Vec<(f64, f64)> {
    let (klo, khi) = kernel.support_box();
    let (slo, shi) = model.density.support1();
    let a = klo[0].max((slo - xj) / h);
    let b = khi[0].min((shi - xj) / h);
    if !(a < b) {
        return Vec::new();
    }
    let mut cuts = vec![a];
    cuts.extend(kernel.kinks().iter().copied().filter(|&k| a < k && k < b));
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `∫ integrand(x + h u) K(u) du` over the support intersection.
fn convolve(
    model: &ModelSpec,
    kernel: &Kernel,
    x: &[f64],
    h: f64,
    spec: &QuadratureSpec,
    integrand: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let d = model.d as usize;
    if kernel.d as usize != d || x.len() != d {
        return Err(Error::InvalidParams("dimension mismatch".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(format!("bandwidth must be positive (got {h})")));
    }
    let pieces: Vec<Vec<(f64, f64)>> = x.iter().map(|&xj| axis_pieces(model, kernel, xj, h)).collect();
    if pieces.iter().any(Vec::is_empty) {
        return Ok(0.0);
    }
    let zero = vec![0.0; d];
    let mut total = KahanSum::new();
    let mut idx = vec![0usize; d];
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    loop {
        for j in 0..d {
            (lo[j], hi[j]) = pieces[j][idx[j]];
        }
        let v = integrate_checked(&lo, &hi, spec, |u| {
            let point: Vec<f64> = x.iter().zip(u).map(|(xj, uj)| xj + h * uj).collect();
            integrand(&point) * kernel.weight(&zero, u, 1.0)
        })?;
        total.add(v);
        let mut j = 0;
        loop {
            if j == d {
                return Ok(total.total());
            }
            idx[j] += 1;
            if idx[j] < pieces[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// `E f̂(x) = ∫ f(x + h u) K(u) du`.
pub fn expected_fhat(model: &ModelSpec, kernel: &Kernel, x: &[f64], h: f64, spec: &QuadratureSpec) -> Result<f64> {
    convolve(model, kernel, x, h, spec, |y| model.f(y))
}

/// `E ĝ(x) = ∫ r(x + h u) f(x + h u) K(u) du`.
pub fn expected_ghat(model: &ModelSpec, kernel: &Kernel, x: &[f64], h: f64, spec: &QuadratureSpec) -> Result<f64> {
    convolve(model, kernel, x, h, spec, |y| model.r(y) * model.f(y))
}

/// Deterministic centring `E ĝ(x) / E f̂(x)`.
pub fn expected_ratio(model: &ModelSpec, kernel: &Kernel, x: &[f64], h: f64, spec: &QuadratureSpec) -> Result<f64> {
    let f = expected_fhat(model, kernel, x, h, spec)?;
    if !(f > 0.0) {
        return Err(Error::DegenerateDenominator(format!("E f̂ = {f} at x = {x:?}")));
    }
    if let RegressionFn::Constant(c) = model.regression {
        return Ok(c);
    }
    Ok(expected_ghat(model, kernel, x, h, spec)? / f)
}

/// `|r(x) − E ĝ(x)/E f̂(x)|`.
pub fn bias_at(model: &ModelSpec, kernel: &Kernel, x: &[f64], h: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok((model.r(x) - expected_ratio(model, kernel, x, h, spec)?).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasSweep {
    pub h: Vec<f64>,
    pub bias: Vec<f64>,
    /// Log-log slope of bias against `h`; `None` when every bias is zero.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// Biases below this are treated as exactly zero.
    pub zero_threshold: f64,
}

impl BiasSweep {
    pub fn all_zero(&self) -> bool {
        self.bias.iter().all(|b| *b <= self.zero_threshold)
    }
}

/// Bandwidths `h0 · 2^{-j}`, `j = 0..levels`.
pub fn halving_grid(h0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|j| h0 * 0.5f64.powi(j as i32)).collect()
}

pub fn bias_sweep(model: &ModelSpec, kernel: &Kernel, x: &[f64], hs: &[f64], spec: &QuadratureSpec) -> Result<BiasSweep> {
    let bias = hs
        .iter()
        .map(|&h| bias_at(model, kernel, x, h, spec))
        .collect::<Result<Vec<f64>>>()?;
    let zero_threshold = 10.0 * spec.tolerance;
    let mut sweep = BiasSweep {
        h: hs.to_vec(),
        bias,
        slope: None,
        slope_stderr: None,
        zero_threshold,
    };
    if sweep.all_zero() {
        return Ok(sweep);
    }
    if sweep.bias.iter().any(|b| *b <= zero_threshold) {
        return Err(Error::DegenerateFit(
            "some but not all biases vanish; slope undefined".into(),
        ));
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = sweep.bias.iter().map(|b| b.ln()).collect();
    let fit = ols(&lx, &ly).ok_or_else(|| Error::DegenerateFit("need two distinct bandwidths".into()))?;
    sweep.slope = Some(fit.slope);
    sweep.slope_stderr = Some(fit.slope_stderr);
    Ok(sweep)
}

/// Asymptotic variance of `√n (R̂ − R)` for an i.i.d. pair law:
/// `Var(U V − R U) / (E U)²`.
pub fn delta_method_variance(spec: &ProcessSpec) -> Result<f64> {
    let ProcessSpec::IidPairs(law) = spec else {
        return Err(Error::InvalidSpec(format!(
            "delta-method oracle covers i.i.d. pairs only (got {})",
            spec.kind().as_str()
        )));
    };
    law.validate()?;
    let var_w = law.noise.variance();
    if !var_w.is_finite() {
        return Err(Error::InvalidSpec("V needs a finite second moment".into()));
    }
    let w = &law.weight;
    let (m1, m2, m3, m4) = (w.raw_moment(1), w.raw_moment(2), w.raw_moment(3), w.raw_moment(4));
    let b = law.slope;
    let r = (b * m2 + law.noise.mean() * m1) / m1;
    // U(V − R) = b U² + U (W − R) with W independent of U
    let c = law.noise.mean() - r;
    let second = b * b * m4 + 2.0 * b * c * m3 + m2 * (var_w + c * c);
    Ok(second / (m1 * m1))
}

/// `E|Z|^p` for `Z ~ N(0, σ²)`, raised to `1/p`.
pub fn normal_abs_norm(sigma: f64, p: f64) -> f64 {
    // E|Z|^p = σ^p 2^{p/2} Γ((p+1)/2) / √π
    let m = sigma.powf(p) * 2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    m.powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMoment {
    /// `E[|Δ_n|^p | Σ U > 0]`
    pub moment: f64,
    /// `P(Σ U = 0)`
    pub excluded_probability: f64,
    pub outcomes: u128,
}

pub const MAX_ENUMERATION: u128 = 20_000_000;

/// Exact `E|R̂_n − R|^p` by enumerating every outcome of `n` i.i.d. draws of
/// a finitely supported pair law.
pub fn brute_force_moment(spec: &ProcessSpec, n: usize, p: f64) -> Result<ExactMoment> {
    let ProcessSpec::IidPairs(law) = spec else {
        return Err(Error::InvalidSpec("enumeration needs an i.i.d. pair law".into()));
    };
    law.validate()?;
    if n == 0 || n > 12 {
        return Err(Error::InvalidParams(format!("n must lie in 1..=12 (got {n})")));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParams("p must be positive".into()));
    }
    let atoms = law
        .joint_pmf()
        .ok_or_else(|| Error::InvalidSpec("enumeration needs finitely supported U and W".into()))?;
    let atoms: Vec<(f64, f64, f64)> = atoms.into_iter().filter(|a| a.2 > 0.0).collect();
    let k = atoms.len() as u128;
    let outcomes = k.checked_pow(n as u32).unwrap_or(u128::MAX);
    if outcomes > MAX_ENUMERATION {
        return Err(Error::StateSpaceTooLarge(outcomes));
    }
    let (num, den) = law.numerator_denominator();
    let target = num / den;
    let mut idx = vec![0usize; n];
    let mut acc = KahanSum::new();
    let mut excluded = KahanSum::new();
    loop {
        let mut prob = 1.0;
        let mut su = 0.0;
        let mut suv = 0.0;
        for &i in &idx {
            let (u, v, pr) = atoms[i];
            prob *= pr;
            su += u;
            suv += u * v;
        }
        if su > 0.0 {
            acc.add(prob * (suv / su - target).abs().powf(p));
        } else {
            excluded.add(prob);
        }
        let mut j = 0;
        loop {
            if j == n {
                let excluded = excluded.total();
                return Ok(ExactMoment {
                    moment: acc.total() / (1.0 - excluded),
                    excluded_probability: excluded,
                    outcomes,
                });
            }
            idx[j] += 1;
            if idx[j] < atoms.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelName};
    use crate::nw_regression::Density;
    use crate::processes::{NoiseLaw, PairLaw, WeightLaw};

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn flat_density_gives_one() {
        let m = ModelSpec::sine(1);
        for name in KernelName::ALL {
            let k = make_kernel(name, 1).unwrap();
            let v = expected_fhat(&m, &k, &[0.5], 0.5 / k.support_radius, &q()).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{name:?}: {v}");
        }
        let m2 = ModelSpec::sine(2);
        let v = expected_fhat(&m2, &Kernel::epanechnikov(2), &[0.5, 0.4], 0.3, &q()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_density_symmetric_kernel() {
        let m = ModelSpec {
            density: Density::Linear { slope: 1.2 },
            ..ModelSpec::sine(1)
        };
        for name in [KernelName::Epanechnikov, KernelName::Triangle, KernelName::Quartic] {
            let k = make_kernel(name, 1).unwrap();
            let v = expected_fhat(&m, &k, &[0.4], 0.2, &q()).unwrap();
            assert!((v - m.f(&[0.4])).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_density_matches_closed_form() {
        // ∫ φ(u/2) · 3/4 (1 − u²) du over [−1, 1]
        let m = ModelSpec {
            density: Density::StandardNormal,
            region: (-1.0, 1.0),
            ..ModelSpec::sine(1)
        };
        let k = Kernel::epanechnikov(1);
        let coarse = expected_fhat(&m, &k, &[0.0], 0.5, &QuadratureSpec::new(64, 1e-8).unwrap()).unwrap();
        let fine = expected_fhat(&m, &k, &[0.0], 0.5, &q()).unwrap();
        assert!((coarse - fine).abs() < 1e-8);
        assert!((fine - 0.3892298091196789).abs() < 1e-12);
    }

    #[test]
    fn ghat_factorises_for_constant_r() {
        let m = ModelSpec::constant(1, 2.5);
        let k = Kernel::epanechnikov(1);
        let f = expected_fhat(&m, &k, &[0.1], 0.3, &q()).unwrap();
        let g = expected_ghat(&m, &k, &[0.1], 0.3, &q()).unwrap();
        assert!((g - 2.5 * f).abs() < 1e-13);
        assert!(f < 1.0 && f > 0.0);
        assert_eq!(bias_at(&m, &k, &[0.1], 0.3, &q()).unwrap(), 0.0);
    }

    #[test]
    fn small_bandwidth_limit() {
        let m = ModelSpec::sine(1);
        let k = Kernel::epanechnikov(1);
        for x in [0.25, 0.45, 0.7] {
            let g = expected_ghat(&m, &k, &[x], 1e-3, &q()).unwrap();
            assert!((g - m.r(&[x]) * m.f(&[x])).abs() < 1e-4);
        }
        let g = expected_ghat(&m, &k, &[0.5], 0.2, &q()).unwrap();
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn sine_bias_closed_form() {
        // bias = |sin 2πx| (1 − φ(2πh)), φ(t) = 3 (sin t − t cos t) / t³
        let m = ModelSpec::sine(1);
        let k = Kernel::epanechnikov(1);
        let x = 0.45;
        for h in halving_grid(0.4, 6) {
            let t = 2.0 * std::f64::consts::PI * h;
            let phi = 3.0 * (t.sin() - t * t.cos()) / t.powi(3);
            let exact = (2.0 * std::f64::consts::PI * x).sin().abs() * (1.0 - phi);
            let got = bias_at(&m, &k, &[x], h, &q()).unwrap();
            assert!((got - exact).abs() < 1e-10, "h = {h}: {got} vs {exact}");
        }
    }

    #[test]
    fn bias_slopes() {
        let m = ModelSpec::sine(1);
        let hs = halving_grid(0.4, 6);
        let s = bias_sweep(&m, &Kernel::epanechnikov(1), &[0.45], &hs, &q()).unwrap();
        let slope = s.slope.unwrap();
        assert!((slope - 2.0).abs() <= 0.2, "{slope}");
        assert!(s.bias.windows(2).all(|w| w[1] < w[0]));

        let shifted = make_kernel(KernelName::ShiftedEpanechnikov, 1).unwrap();
        let s = bias_sweep(&m, &shifted, &[0.5], &halving_grid(0.2, 6), &q()).unwrap();
        assert!((s.slope.unwrap() - 1.0).abs() <= 0.2, "{:?}", s.slope);

        let c = bias_sweep(&ModelSpec::constant(1, 1.0), &Kernel::epanechnikov(1), &[0.45], &hs, &q()).unwrap();
        assert!(c.all_zero() && c.slope.is_none());
    }

    #[test]
    fn delta_method_cases() {
        let unit = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Constant(1.0),
            slope: 0.0,
            noise: NoiseLaw::Normal { mean: 3.0, sd: 2.0 },
        });
        assert!((delta_method_variance(&unit).unwrap() - 4.0).abs() < 1e-14);

        // U ⊥ V: σ² = E U² Var V / (E U)²
        let indep = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Exponential { rate: 2.0 },
            slope: 0.0,
            noise: NoiseLaw::Normal { mean: 1.0, sd: 1.5 },
        });
        let expected = 0.5 * 2.25 / 0.25;
        assert!((delta_method_variance(&indep).unwrap() - expected).abs() < 1e-12);

        let dep = ProcessSpec::Ar1Pairs { a: 0.5, slope: 1.0, mean: 0.0 };
        assert!(matches!(delta_method_variance(&dep), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn delta_method_matches_enumerated_variance() {
        // σ² = E[(U(V − R))²] / (E U)², enumerated over the joint pmf
        let law = PairLaw {
            weight: WeightLaw::Discrete { values: vec![0.5, 1.0, 3.0], probs: vec![0.2, 0.5, 0.3] },
            slope: 0.7,
            noise: NoiseLaw::Discrete { values: vec![-1.0, 0.0, 2.0], probs: vec![0.3, 0.3, 0.4] },
        };
        let atoms = law.joint_pmf().unwrap();
        let eu: f64 = atoms.iter().map(|a| a.2 * a.0).sum();
        let euv: f64 = atoms.iter().map(|a| a.2 * a.0 * a.1).sum();
        let r = euv / eu;
        let m2: f64 = atoms.iter().map(|a| a.2 * (a.0 * (a.1 - r)).powi(2)).sum();
        let got = delta_method_variance(&ProcessSpec::IidPairs(law)).unwrap();
        assert!((got - m2 / (eu * eu)).abs() < 1e-12);
    }

    #[test]
    fn normal_norms() {
        assert!((normal_abs_norm(2.0, 1.0) - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!((normal_abs_norm(2.0, 2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn enumeration_examples() {
        let two_point = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Constant(1.0),
            slope: 0.0,
            noise: NoiseLaw::Discrete { values: vec![0.0, 2.0], probs: vec![0.5, 0.5] },
        });
        let e = brute_force_moment(&two_point, 1, 2.0).unwrap();
        assert!((e.moment - 1.0).abs() < 1e-15);
        assert_eq!(e.excluded_probability, 0.0);

        let const_v = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Discrete { values: vec![0.0, 1.0], probs: vec![0.5, 0.5] },
            slope: 0.0,
            noise: NoiseLaw::Constant(4.0),
        });
        let e = brute_force_moment(&const_v, 2, 1.0).unwrap();
        assert_eq!(e.moment, 0.0);
        assert!((e.excluded_probability - 0.25).abs() < 1e-15);
    }

    #[test]
    fn enumeration_limits() {
        let big = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Discrete { values: vec![0.0, 1.0, 2.0], probs: vec![0.2, 0.4, 0.4] },
            slope: 0.0,
            noise: NoiseLaw::Discrete { values: vec![-1.0, 0.0, 1.0], probs: vec![0.3, 0.4, 0.3] },
        });
        assert!(matches!(brute_force_moment(&big, 12, 2.0), Err(Error::StateSpaceTooLarge(_))));
        assert!(brute_force_moment(&big, 13, 2.0).is_err());
        let cont = ProcessSpec::IidPairs(PairLaw {
            weight: WeightLaw::Exponential { rate: 1.0 },
            slope: 0.0,
            noise: NoiseLaw::Constant(0.0),
        });
        assert!(brute_force_moment(&cont, 2, 2.0).is_err());
    }
}
