//! Composite Gauss–Legendre rules on intervals and boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes per panel of the composite rule.
pub const PANEL_ORDER: usize = 8;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}

/// A one-dimensional composite rule on `[a, b]`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// `nodes / PANEL_ORDER` equal panels of an 8-point Gauss rule.
    pub fn new(a: f64, b: f64, nodes: usize) -> Self {
        let panels = (nodes / PANEL_ORDER).max(1);
        let base = GaussLegendre::new(PANEL_ORDER);
        let width = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * PANEL_ORDER);
        let mut ws = Vec::with_capacity(panels * PANEL_ORDER);
        for k in 0..panels {
            let left = a + width * k as f64;
            let mid = left + 0.5 * width;
            for (t, w) in base.nodes.iter().zip(&base.weights) {
                xs.push(mid + 0.5 * width * t);
                ws.push(0.5 * width * w);
            }
        }
        Self {
            nodes: xs,
            weights: ws,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Resolution and agreement tolerance of an oracle integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_axis: usize,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_axis: 256,
            tolerance: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(nodes_per_axis: usize, tolerance: f64) -> Result<Self> {
        let spec = Self {
            nodes_per_axis,
            tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 64 {
            return Err(Error::InvalidParams(format!(
                "quadrature needs at least 64 nodes per axis (got {})",
                self.nodes_per_axis
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Tensor-product composite rule over the box `[lo, hi]`.
pub fn integrate_box(lo: &[f64], hi: &[f64], nodes_per_axis: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    assert_eq!(lo.len(), hi.len());
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| b <= a) {
        return 0.0;
    }
    let rules: Vec<CompositeRule> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| CompositeRule::new(a, b, nodes_per_axis))
        .collect();
    let m = rules[0].nodes.len();
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for j in 0..d {
            point[j] = rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
        }
        total += w * f(&point);
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == d {
                return total;
            }
        }
    }
}

/// Integrates at `N` and `2N` nodes per axis and insists they agree.
pub fn integrate_checked(
    lo: &[f64],
    hi: &[f64],
    spec: &QuadratureSpec,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    spec.validate()?;
    let coarse = integrate_box(lo, hi, spec.nodes_per_axis, &f);
    let fine = integrate_box(lo, hi, 2 * spec.nodes_per_axis, &f);
    if (coarse - fine).abs() > spec.tolerance {
        return Err(Error::QuadratureFailure(format!(
            "resolutions {} and {} disagree: {coarse} vs {fine}",
            spec.nodes_per_axis,
            2 * spec.nodes_per_axis
        )));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16] {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn eight_point_rule_is_exact_to_degree_15() {
        let g = GaussLegendre::new(8);
        for k in 0..=15u32 {
            let got: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn composite_integrates_smooth_functions() {
        let r = CompositeRule::new(0.0, std::f64::consts::PI, 64);
        assert!((r.integrate(f64::sin) - 2.0).abs() < 1e-14);
        let v = integrate_box(&[0.0, 0.0], &[1.0, 2.0], 64, |u| u[0] * u[1] * u[1]);
        assert!((v - 0.5 * 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn spec_rejects_coarse_rules() {
        assert!(QuadratureSpec::new(32, 1e-8).is_err());
        assert!(QuadratureSpec::new(64, 0.0).is_err());
        assert!(QuadratureSpec::new(64, 1e-8).is_ok());
    }

    #[test]
    fn checked_integration_flags_disagreement() {
        // a jump inside a panel is resolved differently at N and 2N nodes
        let spec = QuadratureSpec::new(64, 1e-14).unwrap();
        let step = |u: &[f64]| if u[0] < 0.3 + 1e-3 { 1.0 } else { 0.0 };
        assert!(matches!(
            integrate_checked(&[0.0], &[1.0], &spec, step),
            Err(Error::QuadratureFailure(_))
        ));
    }
}
