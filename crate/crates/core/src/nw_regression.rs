//! Nadaraya–Watson regression, grid suprema and the censored covariance
//! estimator.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::processes::SamplePath;
use crate::quadrature::{integrate_checked, QuadratureSpec};
use crate::ratio_core::ratio_estimate;
use crate::stats::{autocovariance, mean};

/// Product density of the regressors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Uniform01,
    StandardNormal,
    /// `1 + slope · (x − 1/2)` on `[0, 1]`, `|slope| ≤ 2`.
    Linear { slope: f64 },
}

impl Density {
    fn eval1(self, x: f64) -> f64 {
        match self {
            Density::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Density::StandardNormal => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Density::Linear { slope } => {
                if (0.0..=1.0).contains(&x) {
                    1.0 + slope * (x - 0.5)
                } else {
                    0.0
                }
            }
        }
    }

    fn sup1(self) -> f64 {
        match self {
            Density::Uniform01 => 1.0,
            Density::StandardNormal => 1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            Density::Linear { slope } => 1.0 + 0.5 * slope.abs(),
        }
    }

    /// Interval carrying the mass, truncated at ±12 for the normal.
    pub fn support1(self) -> (f64, f64) {
        match self {
            Density::StandardNormal => (-12.0, 12.0),
            _ => (0.0, 1.0),
        }
    }

    /// Quantile function for the bounded densities.
    pub fn quantile(self, u: f64) -> f64 {
        match self {
            Density::Uniform01 => u,
            Density::Linear { slope } if slope != 0.0 => {
                let b = 1.0 - 0.5 * slope;
                (2.0 * u) / (b + (b * b + 2.0 * slope * u).sqrt())
            }
            Density::Linear { .. } => u,
            Density::StandardNormal => unreachable!("sampled directly"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionFn {
    Constant(f64),
    /// `sin(2π x₁)`
    Sine,
}

/// Regression model: density `f`, regression function `r`, regularity `rho`
/// and evaluation box `B = [lo, hi]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: u32,
    pub density: Density,
    pub regression: RegressionFn,
    pub rho: f64,
    pub region: (f64, f64),
}

impl ModelSpec {
    /// Uniform regressors, `r(x) = sin(2π x₁)`, `ρ = 2`, `B = [0.2, 0.8]^d`.
    pub fn sine(d: u32) -> Self {
        Self {
            d,
            density: Density::Uniform01,
            regression: RegressionFn::Sine,
            rho: 2.0,
            region: (0.2, 0.8),
        }
    }

    pub fn constant(d: u32, c: f64) -> Self {
        Self {
            d,
            density: Density::Uniform01,
            regression: RegressionFn::Constant(c),
            rho: 2.0,
            region: (0.2, 0.8),
        }
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.density.eval1(xi)).product()
    }

    pub fn r(&self, x: &[f64]) -> f64 {
        match self.regression {
            RegressionFn::Constant(c) => c,
            RegressionFn::Sine => (2.0 * std::f64::consts::PI * x[0]).sin(),
        }
    }

    pub fn sup_f(&self) -> f64 {
        self.density.sup1().powi(self.d as i32)
    }

    pub fn sup_abs_r(&self) -> f64 {
        match self.regression {
            RegressionFn::Constant(c) => c.abs(),
            RegressionFn::Sine => 1.0,
        }
    }

    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.density.support1();
        (vec![lo; self.d as usize], vec![hi; self.d as usize])
    }

    /// Checks `∫ f = 1` by quadrature and `inf_B f > 0`.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 3 {
            return Err(Error::InvalidSpec(format!("dimension must be 1..=3 (got {})", self.d)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::InvalidSpec("rho must be positive".into()));
        }
        let (lo, hi) = self.region;
        if !(lo < hi) {
            return Err(Error::InvalidSpec("evaluation box must have lo < hi".into()));
        }
        if let Density::Linear { slope } = self.density {
            if slope.abs() > 2.0 {
                return Err(Error::InvalidSpec("linear density needs |slope| <= 2".into()));
            }
        }
        let (slo, shi) = self.density.support1();
        if lo < slo || hi > shi {
            return Err(Error::InvalidSpec("evaluation box leaves the density support".into()));
        }
        let inf_b = self.density.eval1(lo).min(self.density.eval1(hi)).powi(self.d as i32);
        if !(inf_b > 0.0) {
            return Err(Error::InvalidSpec("density must be bounded below on the box".into()));
        }
        // product density: one axis suffices
        let (a, b) = self.density.support1();
        let mass = integrate_checked(&[a], &[b], &QuadratureSpec::default(), |x| self.density.eval1(x[0]))?;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("density integrates to {mass}")));
        }
        Ok(())
    }
}

/// Finite set of evaluation points in `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub d: usize,
    /// Row-major, one point per `d` entries.
    pub points: Vec<f64>,
    pub mesh: f64,
}

impl EvalGrid {
    pub fn from_points(d: usize, points: Vec<f64>) -> Result<Self> {
        if d == 0 || points.is_empty() || !points.len().is_multiple_of(d) {
            return Err(Error::InvalidParams("points must form a nonempty n × d array".into()));
        }
        Ok(Self {
            d,
            points,
            mesh: f64::NAN,
        })
    }

    pub fn single(x: &[f64]) -> Self {
        Self {
            d: x.len(),
            points: x.to_vec(),
            mesh: f64::INFINITY,
        }
    }

    /// Regular tensor grid on `[lo, hi]^d` with spacing at most `mesh`.
    pub fn regular(d: usize, lo: f64, hi: f64, mesh: f64) -> Result<Self> {
        if !(mesh > 0.0) || !(lo <= hi) || d == 0 {
            return Err(Error::InvalidParams("grid needs mesh > 0 and lo <= hi".into()));
        }
        let per_axis = ((hi - lo) / mesh * (1.0 - 1e-12)).ceil() as usize + 1;
        let total = per_axis
            .checked_pow(d as u32)
            .filter(|t| *t <= 10_000_000)
            .ok_or_else(|| Error::InvalidParams("grid too large".into()))?;
        let step = if per_axis > 1 { (hi - lo) / (per_axis - 1) as f64 } else { 0.0 };
        let mut points = Vec::with_capacity(total * d);
        for k in 0..total {
            let mut rem = k;
            for _ in 0..d {
                points.push(lo + step * (rem % per_axis) as f64);
                rem /= per_axis;
            }
        }
        Ok(Self {
            d,
            points,
            mesh: if per_axis > 1 { step } else { hi - lo },
        })
    }

    /// Grid on the model's box with mesh `h / √(n h^d)`.
    pub fn for_bandwidth(model: &ModelSpec, n: usize, h: f64) -> Result<Self> {
        let d = model.d as i32;
        let mesh = h / (n as f64 * h.powi(d)).sqrt();
        Self::regular(model.d as usize, model.region.0, model.region.1, mesh)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NwEstimate {
    pub r_hat: Option<f64>,
    pub f_hat: f64,
    pub g_hat: f64,
}

fn regression_data(path: &SamplePath) -> Result<(usize, &[f64], &[f64])> {
    path.regression()
        .ok_or_else(|| Error::InvalidSpec("a regression path is required".into()))
}

fn check_eval(kernel: &Kernel, d: usize, x: &[f64], h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(format!("bandwidth must be positive (got {h})")));
    }
    if kernel.d as usize != d || x.len() != d {
        return Err(Error::InvalidParams(format!(
            "dimension mismatch: kernel {}, data {d}, point {}",
            kernel.d,
            x.len()
        )));
    }
    Ok(())
}

/// Nadaraya–Watson estimate at `x`, summing over every observation.
pub fn nw_estimate(x: &[f64], path: &SamplePath, kernel: &Kernel, h: f64) -> Result<NwEstimate> {
    let (d, xs, ys) = regression_data(path)?;
    check_eval(kernel, d, x, h)?;
    let u: Vec<f64> = xs.chunks_exact(d).map(|xi| kernel.weight(x, xi, h)).collect();
    let s = ratio_estimate(&u, ys)?;
    Ok(NwEstimate {
        r_hat: s.r_hat,
        f_hat: s.d_hat,
        g_hat: s.n_hat,
    })
}

/// Observations sorted by their first coordinate so each evaluation only
/// visits the kernel window.
pub struct NwIndex<'a> {
    d: usize,
    n: usize,
    xs: &'a [f64],
    ys: &'a [f64],
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl<'a> NwIndex<'a> {
    pub fn new(path: &'a SamplePath) -> Result<Self> {
        let (d, xs, ys) = regression_data(path)?;
        let n = ys.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| xs[a * d].total_cmp(&xs[b * d]).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| xs[i * d]).collect();
        Ok(Self { d, n, xs, ys, order, keys })
    }

    pub fn estimate(&self, x: &[f64], kernel: &Kernel, h: f64) -> Result<NwEstimate> {
        check_eval(kernel, self.d, x, h)?;
        let (lo, hi) = kernel.support_box();
        let a = x[0] + h * lo[0];
        let b = x[0] + h * hi[0];
        let start = self.keys.partition_point(|&k| k < a);
        let end = self.keys.partition_point(|&k| k <= b);
        if start >= end {
            return Ok(NwEstimate {
                r_hat: None,
                f_hat: 0.0,
                g_hat: 0.0,
            });
        }
        let window = &self.order[start..end];
        let d = self.d;
        let u: Vec<f64> = window
            .iter()
            .map(|&i| kernel.weight(x, &self.xs[i * d..(i + 1) * d], h))
            .collect();
        let v: Vec<f64> = window.iter().map(|&i| self.ys[i]).collect();
        let s = ratio_estimate(&u, &v)?;
        let scale = window.len() as f64 / self.n as f64;
        Ok(NwEstimate {
            r_hat: s.r_hat,
            f_hat: s.d_hat * scale,
            g_hat: s.n_hat * scale,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupDeviation {
    pub sup_err: f64,
    pub n_excluded: usize,
}

/// `max |r̂(x) − target(x)|` over grid points where `f̂ > 0`.
pub fn sup_deviation_to(
    grid: &EvalGrid,
    index: &NwIndex<'_>,
    kernel: &Kernel,
    h: f64,
    target: impl Fn(usize, &[f64]) -> f64,
) -> Result<SupDeviation> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty grid".into()));
    }
    let mut sup_err = 0.0f64;
    let mut n_excluded = 0;
    for (k, x) in grid.iter().enumerate() {
        match index.estimate(x, kernel, h)?.r_hat {
            Some(r) => sup_err = sup_err.max((r - target(k, x)).abs()),
            None => n_excluded += 1,
        }
    }
    if n_excluded == grid.len() {
        return Err(Error::AllExcluded);
    }
    Ok(SupDeviation { sup_err, n_excluded })
}

/// Supremum deviation from the true regression function.
pub fn sup_deviation(
    grid: &EvalGrid,
    path: &SamplePath,
    kernel: &Kernel,
    h: f64,
    model: &ModelSpec,
) -> Result<SupDeviation> {
    let index = NwIndex::new(path)?;
    sup_deviation_to(grid, &index, kernel, h, |_, x| model.r(x))
}

/// CSV of grid estimates: `x[,x2..],r_hat,f_hat,g_hat,excluded`.
pub fn grid_csv(grid: &EvalGrid, path: &SamplePath, kernel: &Kernel, h: f64) -> Result<String> {
    let index = NwIndex::new(path)?;
    let mut out = String::new();
    if grid.d == 1 {
        out.push('x');
    } else {
        for j in 1..=grid.d {
            let _ = write!(out, "{}x{j}", if j > 1 { "," } else { "" });
        }
    }
    out.push_str(",r_hat,f_hat,g_hat,excluded\n");
    for x in grid.iter() {
        let e = index.estimate(x, kernel, h)?;
        for (j, xj) in x.iter().enumerate() {
            let _ = write!(out, "{}{xj}", if j > 0 { "," } else { "" });
        }
        match e.r_hat {
            Some(r) => {
                let _ = writeln!(out, ",{r},{},{},0", e.f_hat, e.g_hat);
            }
            None => {
                let _ = writeln!(out, ",,{},{},1", e.f_hat, e.g_hat);
            }
        }
    }
    Ok(out)
}

/// `γ̂_X(ℓ) = γ̂_Y(ℓ) / (γ̂_C(ℓ) + C̄²)` for `ℓ = 1..=ell_max`, with biased
/// empirical autocovariances of the observed `(C, Y)`.
pub fn censored_cov_estimate(path: &SamplePath, ell_max: usize) -> Result<Vec<f64>> {
    let (c, y) = path
        .censored()
        .ok_or_else(|| Error::InvalidSpec("a censored path is required".into()))?;
    censored_cov_from(c, y, ell_max)
}

pub fn censored_cov_from(c: &[f64], y: &[f64], ell_max: usize) -> Result<Vec<f64>> {
    let n = y.len();
    if c.len() != n {
        return Err(Error::InvalidParams("C and Y lengths differ".into()));
    }
    if ell_max == 0 || 4 * ell_max >= n {
        return Err(Error::InvalidParams(format!(
            "need 1 <= ell_max < n/4 (ell_max = {ell_max}, n = {n})"
        )));
    }
    let c_bar = mean(c).ok_or(Error::EmptySample)?;
    (1..=ell_max)
        .map(|ell| {
            let gy = autocovariance(y, ell).expect("lag < n");
            let gc = autocovariance(c, ell).expect("lag < n");
            let denom = gc + c_bar * c_bar;
            if denom <= 1e-10 {
                return Err(Error::DegenerateDenominator(format!(
                    "censoring denominator {denom:e} at lag {ell}"
                )));
            }
            Ok(gy / denom)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelName};
    use crate::processes::{simulate, simulate_censored, Design, ProcessSpec, SeedSpec};

    fn path_from(x: Vec<f64>, y: Vec<f64>) -> SamplePath {
        SamplePath::from_regression(ModelSpec::sine(1), x, y).unwrap()
    }

    fn sine_path(n: usize, seed: u64) -> SamplePath {
        let spec = ProcessSpec::Regression {
            model: ModelSpec::sine(1),
            noise_sd: 0.3,
            design: Design::Iid,
        };
        simulate(&spec, n, SeedSpec::new(seed, 0)).unwrap()
    }

    #[test]
    fn two_point_example() {
        let p = path_from(vec![0.0, 0.5], vec![2.0, 6.0]);
        let k = Kernel::epanechnikov(1);
        let e = nw_estimate(&[0.0], &p, &k, 1.0).unwrap();
        let expected = (0.75 * 2.0 + 0.5625 * 6.0) / 1.3125;
        assert!((e.r_hat.unwrap() - expected).abs() < 1e-15);
        assert!((e.f_hat - 1.3125 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_and_constant_response() {
        let k = Kernel::epanechnikov(1);
        let p = path_from(vec![0.3], vec![5.0]);
        for h in [0.01, 0.5, 3.0] {
            assert_eq!(nw_estimate(&[0.3], &p, &k, h).unwrap().r_hat, Some(5.0));
        }
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let p = path_from(x, vec![1.7; 50]);
        let e = nw_estimate(&[0.41], &p, &k, 0.1).unwrap();
        assert_eq!(e.r_hat, Some(1.7));
    }

    #[test]
    fn degenerate_when_no_mass() {
        let p = path_from(vec![0.0], vec![1.0]);
        let e = nw_estimate(&[0.9], &p, &Kernel::epanechnikov(1), 0.1).unwrap();
        assert!(e.r_hat.is_none());
        assert_eq!(e.f_hat, 0.0);
    }

    #[test]
    fn windowed_matches_full_sum() {
        let p = sine_path(3000, 4);
        let idx = NwIndex::new(&p).unwrap();
        for name in KernelName::ALL {
            let k = make_kernel(name, 1).unwrap();
            for x in [0.2, 0.37, 0.5, 0.8] {
                let a = nw_estimate(&[x], &p, &k, 0.07).unwrap();
                let b = idx.estimate(&[x], &k, 0.07).unwrap();
                assert!((a.r_hat.unwrap() - b.r_hat.unwrap()).abs() < 1e-12);
                assert!((a.f_hat - b.f_hat).abs() < 1e-12);
                assert!((a.g_hat - b.g_hat).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn windowed_matches_full_sum_in_two_dimensions() {
        let spec = ProcessSpec::Regression {
            model: ModelSpec::sine(2),
            noise_sd: 0.3,
            design: Design::Iid,
        };
        let p = simulate(&spec, 2000, SeedSpec::new(6, 0)).unwrap();
        let idx = NwIndex::new(&p).unwrap();
        let k = Kernel::epanechnikov(2);
        let a = nw_estimate(&[0.4, 0.6], &p, &k, 0.2).unwrap();
        let b = idx.estimate(&[0.4, 0.6], &k, 0.2).unwrap();
        assert!((a.r_hat.unwrap() - b.r_hat.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn locality_and_kernel_scale() {
        let p = sine_path(500, 9);
        let k = Kernel::epanechnikov(1);
        let (_, xs, ys) = p.regression().unwrap();
        let near: Vec<usize> = (0..500).filter(|&i| (xs[i] - 0.5).abs() <= 0.05).collect();
        let sub = path_from(
            near.iter().map(|&i| xs[i]).collect(),
            near.iter().map(|&i| ys[i]).collect(),
        );
        let full = nw_estimate(&[0.5], &p, &k, 0.05).unwrap();
        let local = nw_estimate(&[0.5], &sub, &k, 0.05).unwrap();
        assert!((full.r_hat.unwrap() - local.r_hat.unwrap()).abs() < 1e-12);
        let scaled = full.g_hat * 4.0 / (full.f_hat * 4.0);
        assert!((scaled - full.r_hat.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn convex_hull_of_responses() {
        let p = sine_path(400, 2);
        let (_, _, ys) = p.regression().unwrap();
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let k = Kernel::epanechnikov(1);
        for i in 0..=20 {
            if let Some(r) = nw_estimate(&[i as f64 / 20.0], &p, &k, 0.05).unwrap().r_hat {
                assert!(lo <= r && r <= hi);
            }
        }
    }

    #[test]
    fn noiseless_constant_has_zero_sup() {
        let model = ModelSpec::constant(1, 3.0);
        let spec = ProcessSpec::Regression {
            model: model.clone(),
            noise_sd: 0.0,
            design: Design::Iid,
        };
        let p = simulate(&spec, 1000, SeedSpec::new(1, 0)).unwrap();
        let grid = EvalGrid::for_bandwidth(&model, 1000, 0.1).unwrap();
        let s = sup_deviation(&grid, &p, &Kernel::epanechnikov(1), 0.1, &model).unwrap();
        assert_eq!(s.sup_err, 0.0);
        assert_eq!(s.n_excluded, 0);
    }

    #[test]
    fn sup_reductions() {
        let model = ModelSpec::sine(1);
        let p = sine_path(4096, 12);
        let k = Kernel::epanechnikov(1);
        let h = crate::moment_params::bandwidth_uniform(4096, 2.0, 1, 0.4).unwrap();
        let one = sup_deviation(&EvalGrid::single(&[0.5]), &p, &k, h, &model).unwrap();
        let e = nw_estimate(&[0.5], &p, &k, h).unwrap();
        assert!((one.sup_err - (e.r_hat.unwrap() - model.r(&[0.5])).abs()).abs() < 1e-12);

        let grid = EvalGrid::for_bandwidth(&model, 4096, h).unwrap();
        let s = sup_deviation(&grid, &p, &k, h, &model).unwrap();
        let mut errs: Vec<f64> = grid
            .iter()
            .map(|x| (nw_estimate(x, &p, &k, h).unwrap().r_hat.unwrap() - model.r(x)).abs())
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(s.sup_err > errs[errs.len() / 2]);

        // refinement only adds points
        let coarse = EvalGrid::regular(1, 0.2, 0.8, 0.1).unwrap();
        let mut pts = coarse.points.clone();
        pts.extend((0..6).map(|k| 0.25 + 0.1 * k as f64));
        let fine = EvalGrid::from_points(1, pts).unwrap();
        let a = sup_deviation(&coarse, &p, &k, h, &model).unwrap().sup_err;
        let b = sup_deviation(&fine, &p, &k, h, &model).unwrap().sup_err;
        assert!(b >= a);
    }

    #[test]
    fn all_excluded_is_an_error() {
        let p = path_from(vec![0.0], vec![1.0]);
        let grid = EvalGrid::regular(1, 0.5, 0.6, 0.05).unwrap();
        assert!(matches!(
            sup_deviation(&grid, &p, &Kernel::epanechnikov(1), 0.01, &ModelSpec::sine(1)),
            Err(Error::AllExcluded)
        ));
    }

    #[test]
    fn grid_geometry() {
        let g = EvalGrid::regular(1, 0.2, 0.8, 0.1).unwrap();
        assert_eq!(g.len(), 7);
        assert!(g.iter().all(|x| (0.2..=0.8 + 1e-15).contains(&x[0])));
        let g = EvalGrid::regular(2, 0.2, 0.8, 0.3).unwrap();
        assert_eq!(g.len(), 9);
        let model = ModelSpec::sine(1);
        let g = EvalGrid::for_bandwidth(&model, 1000, 0.1).unwrap();
        assert!(g.mesh <= 0.1 / (100.0f64).sqrt() + 1e-15);
    }

    #[test]
    fn grid_csv_layout() {
        let p = path_from(vec![0.0, 0.5], vec![2.0, 6.0]);
        let g = EvalGrid::regular(1, 0.0, 1.0, 0.5).unwrap();
        let csv = grid_csv(&g, &p, &Kernel::epanechnikov(1), 0.3).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,r_hat,f_hat,g_hat,excluded");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",1"));
    }

    #[test]
    fn models_validate() {
        ModelSpec::sine(1).validate().unwrap();
        ModelSpec::sine(2).validate().unwrap();
        let normal = ModelSpec {
            density: Density::StandardNormal,
            region: (-1.0, 1.0),
            ..ModelSpec::sine(1)
        };
        normal.validate().unwrap();
        let lin = ModelSpec {
            density: Density::Linear { slope: 1.5 },
            ..ModelSpec::sine(1)
        };
        lin.validate().unwrap();
        let bad = ModelSpec {
            region: (0.5, 1.5),
            ..ModelSpec::sine(1)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn linear_quantile_inverts_cdf() {
        let dens = Density::Linear { slope: -1.2 };
        for u in [0.0, 0.1, 0.5, 0.93, 1.0] {
            let x = dens.quantile(u);
            let cdf = x - 0.6 * (x * x - x);
            assert!((cdf - u).abs() < 1e-14, "{u}: {cdf}");
        }
    }

    #[test]
    fn censored_without_censoring_is_plain_autocovariance() {
        let spec = ProcessSpec::Censored { a: 0.5, innovation_sd: 1.0, pi: 1.0 };
        let p = simulate_censored(&spec, 1000, SeedSpec::new(5, 0)).unwrap();
        let (_, y) = p.censored().unwrap();
        let g = censored_cov_estimate(&p, 5).unwrap();
        for (ell, v) in g.iter().enumerate() {
            assert_eq!(*v, autocovariance(y, ell + 1).unwrap());
        }
    }

    #[test]
    fn censored_argument_checks() {
        let spec = ProcessSpec::Censored { a: 0.5, innovation_sd: 1.0, pi: 0.5 };
        let p = simulate_censored(&spec, 40, SeedSpec::new(5, 0)).unwrap();
        assert!(censored_cov_estimate(&p, 10).is_err());
        assert!(censored_cov_estimate(&p, 0).is_err());
        assert!(matches!(
            censored_cov_from(&[0.0; 40], &[0.0; 40], 3),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn censored_ratio_example() {
        // γ_Y(1) = 0.18 with E C₀C₁ = 0.36 gives γ_X(1) = 0.5
        assert!((0.18f64 / (0.6 * 0.6) - 0.5).abs() < 1e-15);
        let spec = ProcessSpec::Censored { a: 0.5, innovation_sd: 1.0, pi: 0.6 };
        let p = simulate_censored(&spec, 200_000, SeedSpec::new(8, 0)).unwrap();
        let g = censored_cov_estimate(&p, 1).unwrap();
        let truth = spec.truth().covariance(1).unwrap();
        assert!((g[0] - truth).abs() < 0.05, "{} vs {truth}", g[0]);
    }
}
