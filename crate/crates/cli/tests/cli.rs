use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn rml(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rml"));
    cmd.args(args).env_remove("RML_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_config(cmd: &str, cfg: &Path, out: &Path, envs: &[(&str, &str)]) -> Output {
    rml(&[cmd, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], envs)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_WSUM: &str = "\
process = iid_pairs
process.weight = uniform
process.weight.lo = 0.5
process.weight.hi = 1.5
process.noise = student_t
process.noise.df = 5
estimator = weighted_sum
n_grid = 2^6..2^9
M = 300
seed = 5
";

#[test]
fn params_examples() {
    let o = rml(&["params", "--p", "2", "--q", "4"], &[]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("r = 4 (derived)") && text.contains("s = 6 (derived)"), "{text}");
    assert!(text.contains("alpha = 0.33333") && text.contains("beta = 1\n"), "{text}");

    let o = rml(&["params", "--p", "2", "--q", "8", "--r", "4", "--s", "24", "--d", "1", "--rho", "2"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("bandwidth feasibility = satisfied"));

    let o = rml(&["params", "--p", "4", "--q", "2"], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("q > p"));
}

#[test]
fn params_dependence_verdicts() {
    let o = rml(&["params", "--p", "2", "--q", "4", "--dep", "lambda_weak", "--decay", "10", "--aux", "6"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("weighted_sum lambda_sum_moment = satisfied"), "{}", stdout(&o));
    let o = rml(&["params", "--p", "2", "--q", "4", "--dep", "sometimes", "--decay", "3"], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_config_names_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "process = ar1_pairs\n\nprocess.a = half\n");
    let o = run_config("run", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3, key `process.a`"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "typo.cfg", "[bandwidth]\nrul = pointwise\n");
    let o = run_config("run", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2, key `bandwidth.rul`: unknown key"), "{}", stderr(&o));

    let o = rml(&["run", "/nonexistent/x.cfg"], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn shipped_weighted_sum_config_passes_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("wsum_iid.cfg");
    let o = run_config("run", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let fit = json(&dir.path().join("fit.json"));
    let slope = fit["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() <= 0.08, "{slope}");

    let manifest = json(&dir.path().join("manifest.json"));
    let expected = format!("sha256:{:x}", Sha256::digest(std::fs::read(&cfg).unwrap()));
    assert_eq!(manifest["config_digest"], expected.as_str());
    assert_eq!(manifest["master_seed"], 20260101);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 3);
    for p in outputs {
        assert!(Path::new(p.as_str().unwrap()).is_file(), "{p}");
    }
    assert!(manifest["finished"].as_f64().unwrap() >= manifest["started"].as_f64().unwrap());
}

#[test]
fn shipped_pointwise_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("run", &shipped("nw_pointwise.cfg"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let slope = json(&dir.path().join("fit.json"))["slope"].as_f64().unwrap();
    assert!((slope + 0.4).abs() <= 0.08, "{slope}");
}

#[test]
fn outputs_are_byte_identical_across_threads_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL_WSUM);
    let mut runs = Vec::new();
    for (i, threads) in ["1", "4", "0"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = run_config("run", &cfg, &out, &[("RML_THREADS", threads)]);
        assert!(code(&o) <= 1, "{}", stderr(&o));
        let bytes: Vec<Vec<u8>> = ["table.csv", "fit.json", "points.json"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        runs.push(bytes);
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn bad_thread_variable_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL_WSUM);
    let o = run_config("run", &cfg, dir.path(), &[("RML_THREADS", "many")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn failed_rate_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_WSUM}theoretical = 0.1\ntolerance = 0.01\n");
    let cfg = write_config(dir.path(), "wrong.cfg", &text);
    let o = run_config("run", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
    assert_eq!(json(&dir.path().join("manifest.json"))["exit_code"], 1);
}

#[test]
fn too_many_degenerate_replications_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
process = iid_pairs
process.weight = discrete
process.weight.values = 0, 1
process.weight.probs = 0.9, 0.1
process.noise = normal
estimator = weighted_sum
n_grid = 1, 2, 3
M = 200
";
    let cfg = write_config(dir.path(), "sparse.cfg", text);
    let o = run_config("run", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("too many degenerate"));
}

#[test]
fn audits() {
    let o = rml(&["audit", "lemma2", "--trials", "100000", "--seed", "3"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("violations = 0"));

    let o = rml(&["audit", "pisier", "--trials", "1000"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("violations = 0"));

    let o = rml(&["audit", "kernel", "--name", "epanechnikov", "--d", "2"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("order 2 confirmed"));

    let o = rml(&["audit", "kernel", "--name", "shifted_epanechnikov"], &[]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("verified order = 1"));

    let o = rml(&["audit", "kernel", "--name", "gaussian"], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn audit_csv_has_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("audit.csv");
    let o = rml(&["audit", "lemma2", "--trials", "500", "--csv", csv.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 501);
}

#[test]
fn bias_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("bias", &shipped("bias_sine.cfg"), &dir.path().join("sine"), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let slope = json(&dir.path().join("sine/bias.json"))["slope"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&slope), "{slope}");

    let o = run_config("bias", &shipped("bias_shifted.cfg"), &dir.path().join("shifted"), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let slope = json(&dir.path().join("shifted/bias.json"))["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() <= 0.2, "{slope}");

    let cfg = write_config(dir.path(), "flat.cfg", "process = regression\nprocess.model = constant\nprocess.model.c = 3\n");
    let o = run_config("bias", &cfg, &dir.path().join("flat"), &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("exact"));
    assert_eq!(json(&dir.path().join("flat/bias.json"))["exact_zero"], true);

    let cfg = write_config(dir.path(), "pairs.cfg", "process = ar1_pairs\nprocess.a = 0.2\n");
    assert_eq!(code(&run_config("bias", &cfg, dir.path(), &[])), 2);
}

#[test]
fn censored_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("censored", &shipped("censored.cfg"), &dir.path().join("main"), &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));

    let full = "process = censored\nprocess.a = 0.5\nprocess.pi = 1\ncensored.n = 20000\ncensored.paths = 5\n";
    let cfg = write_config(dir.path(), "full.cfg", full);
    let o = run_config("censored", &cfg, &dir.path().join("full"), &[]);
    assert!(code(&o) <= 1, "{}", stderr(&o));
    let rep = json(&dir.path().join("full/censored.json"));
    for lag in rep["lags"].as_array().unwrap() {
        assert_eq!(lag["estimate"], lag["uncensored"]);
    }

    let none = "process = censored\nprocess.a = 0.5\nprocess.pi = 1e-12\ncensored.n = 20000\ncensored.paths = 3\n";
    let cfg = write_config(dir.path(), "none.cfg", none);
    let o = run_config("censored", &cfg, &dir.path().join("none"), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("degenerate denominator"));
}

#[test]
fn clt_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("clt", &shipped("clt_iid.cfg"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let rep = json(&dir.path().join("clt.json"));
    assert!(rep["relative_gap"].as_f64().unwrap() <= 0.05);

    let cfg = write_config(dir.path(), "ar.cfg", "process = ar1_pairs\nprocess.a = 0.5\nestimator = weighted_sum\nn_grid = 2^6..2^8\n");
    assert_eq!(code(&run_config("clt", &cfg, dir.path(), &[])), 2);
}

#[test]
fn every_key_is_documented_in_help_and_reference() {
    let help = stdout(&rml(&["run", "--help"], &[]));
    let reference = std::fs::read_to_string(shipped("reference.cfg")).unwrap();
    let keys: Vec<&str> = reference
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = ").map(|(k, _)| k))
        .filter(|k| !k.contains(' '))
        .collect();
    assert!(keys.len() > 50);
    for key in &keys {
        assert!(help.contains(&format!("  {key} ")), "{key} missing from --help");
    }
    let documented = help.lines().filter(|l| l.starts_with("  ") && !l.starts_with("   ")).count();
    assert!(documented >= keys.len());
}

#[test]
fn shipped_configs_parse_to_the_last_line() {
    // an unknown key appended at the end is only reached if every earlier line parses
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(shipped("")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let probe = write_config(dir.path(), "probe.cfg", &format!("{text}\nunknown_probe = 1\n"));
        let o = run_config("run", &probe, dir.path(), &[]);
        assert_eq!(code(&o), 2, "{}", path.display());
        assert!(stderr(&o).contains("key `unknown_probe`: unknown key"), "{}: {}", path.display(), stderr(&o));
    }
}
