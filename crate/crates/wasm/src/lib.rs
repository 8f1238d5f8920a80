//! Browser bindings. Each export takes plain numbers and strings and
//! returns a JSON document; errors come back as a JS exception carrying the
//! message.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use rml_core::kernels::{make_kernel, KernelName};
use rml_core::montecarlo::{run_experiment, Estimator, ExperimentConfig};
use rml_core::numeric_oracle::{bias_sweep, halving_grid, QuadratureSpec};
use rml_core::nw_regression::{ModelSpec, NwIndex};
use rml_core::processes::{simulate_regression, Design, NoiseLaw, PairLaw, ProcessSpec, SeedSpec, WeightLaw};

/// Points of the data cloud sent back for plotting.
const MAX_SCATTER: usize = 1500;
const CURVE_POINTS: usize = 201;

fn kernel_name(name: &str) -> Result<KernelName, String> {
    KernelName::parse(name).map_err(|e| e.to_string())
}

fn sine_process(noise_sd: f64) -> ProcessSpec {
    ProcessSpec::Regression {
        model: ModelSpec::sine(1),
        noise_sd,
        design: Design::Iid,
    }
}

/// One sample of `Y = sin(2πX) + ε` and the estimate `r̂` on `[0, 1]`.
pub fn nw_curve_json(n: usize, noise_sd: f64, h: f64, kernel: &str, seed: u32) -> Result<Value, String> {
    if !(10..=200_000).contains(&n) {
        return Err("n must lie between 10 and 200000".into());
    }
    let err = |e: rml_core::Error| e.to_string();
    let kernel = make_kernel(kernel_name(kernel)?, 1).map_err(err)?;
    let path = simulate_regression(&sine_process(noise_sd), n, SeedSpec::new(seed as u64, 0)).map_err(err)?;
    let index = NwIndex::new(&path).map_err(err)?;
    let (mut gx, mut r_hat, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..CURVE_POINTS {
        let x = i as f64 / (CURVE_POINTS - 1) as f64;
        let est = index.estimate(&[x], &kernel, h).map_err(err)?;
        gx.push(x);
        // null where no observation falls inside the window
        r_hat.push(est.r_hat.map_or(Value::Null, Value::from));
        truth.push((2.0 * std::f64::consts::PI * x).sin());
    }
    let (_, xs, ys) = path.regression().expect("regression path");
    let step = n.div_ceil(MAX_SCATTER);
    Ok(json!({
        "n": n,
        "h": h,
        "grid": gx,
        "r_hat": r_hat,
        "truth": truth,
        "sample_x": xs.iter().step_by(step).collect::<Vec<_>>(),
        "sample_y": ys.iter().step_by(step).collect::<Vec<_>>(),
    }))
}

/// Bias of the estimator at `x` for `h = h0 · 2^{-j}` by quadrature.
pub fn bias_json(kernel: &str, x: f64, h0: f64, levels: usize) -> Result<Value, String> {
    if !(2..=12).contains(&levels) {
        return Err("levels must lie between 2 and 12".into());
    }
    let kernel = make_kernel(kernel_name(kernel)?, 1).map_err(|e| e.to_string())?;
    let hs = halving_grid(h0, levels);
    let sweep = bias_sweep(&ModelSpec::sine(1), &kernel, &[x], &hs, &QuadratureSpec::default()).map_err(|e| e.to_string())?;
    Ok(json!({
        "h": sweep.h,
        "bias": sweep.bias,
        "slope": sweep.slope,
        "exact_zero": sweep.all_zero(),
    }))
}

/// Rate experiment on `n = 2^6 .. 2^max_pow` with `m` replications.
/// `setting` is `weighted_sum` (i.i.d. exponential weights) or
/// `nw_pointwise` (sine model at `x = 0.5`).
pub fn rate_json(setting: &str, max_pow: u32, m: usize, seed: u32) -> Result<Value, String> {
    if !(9..=15).contains(&max_pow) {
        return Err("largest n must be 2^9 .. 2^15".into());
    }
    if !(50..=5000).contains(&m) {
        return Err("replications must lie between 50 and 5000".into());
    }
    let grid: Vec<usize> = (6..=max_pow).map(|k| 1usize << k).collect();
    let mut cfg = match setting {
        "weighted_sum" => ExperimentConfig::new(
            ProcessSpec::IidPairs(PairLaw {
                weight: WeightLaw::Exponential { rate: 1.0 },
                slope: 0.5,
                noise: NoiseLaw::Normal { mean: 1.0, sd: 1.0 },
            }),
            Estimator::WeightedSum,
            grid,
        ),
        "nw_pointwise" => ExperimentConfig::new(sine_process(1.0), Estimator::NwPointwise, grid),
        other => return Err(format!("unknown setting `{other}`")),
    };
    cfg.replications = m;
    cfg.master_seed = seed as u64;
    cfg.threads = 1;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let fit = &report.fit;
    Ok(json!({
        "n": fit.points.iter().map(|p| p.n).collect::<Vec<_>>(),
        "norm": fit.points.iter().map(|p| p.norm).collect::<Vec<_>>(),
        "stderr": fit.points.iter().map(|p| p.stderr).collect::<Vec<_>>(),
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "theoretical": -fit.theoretical,
        "tolerance": fit.tolerance,
        "pass": fit.pass,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn nw_curve(n: usize, noise_sd: f64, h: f64, kernel: &str, seed: u32) -> Result<String, JsError> {
    to_js(nw_curve_json(n, noise_sd, h, kernel, seed))
}

#[wasm_bindgen]
pub fn bias_curve(kernel: &str, x: f64, h0: f64, levels: usize) -> Result<String, JsError> {
    to_js(bias_json(kernel, x, h0, levels))
}

#[wasm_bindgen]
pub fn rate_experiment(setting: &str, max_pow: u32, m: usize, seed: u32) -> Result<String, JsError> {
    to_js(rate_json(setting, max_pow, m, seed))
}
