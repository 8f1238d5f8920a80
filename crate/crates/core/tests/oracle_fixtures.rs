use rml_core::kernels::{make_kernel, KernelName};
use rml_core::moment_params::{lemma1_bound, validate_params, BoundInputs};
use rml_core::numeric_oracle::{expected_fhat, expected_ghat};
use rml_core::nw_regression::{Density, ModelSpec, RegressionFn};
use rml_core::quadrature::QuadratureSpec;

const FIXTURES: &str = include_str!("fixtures/oracle_fixtures.csv");

struct Row {
    quantity: String,
    model: String,
    kernel: String,
    x: f64,
    h: f64,
    value: f64,
}

fn rows() -> Vec<Row> {
    FIXTURES
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 6, "bad fixture line {l}");
            let num = |s: &str| if s.is_empty() { f64::NAN } else { s.parse().unwrap() };
            Row {
                quantity: f[0].into(),
                model: f[1].into(),
                kernel: f[2].into(),
                x: num(f[3]),
                h: num(f[4]),
                value: f[5].parse().unwrap(),
            }
        })
        .collect()
}

fn model(name: &str) -> ModelSpec {
    let mut m = ModelSpec::sine(1);
    match name {
        "standard_normal" => m.density = Density::StandardNormal,
        "uniform01" => m.regression = RegressionFn::Constant(1.0),
        "uniform01_sine" => {}
        other => panic!("unknown fixture model {other}"),
    }
    m
}

#[test]
fn fixture_file_covers_every_quantity() {
    let r = rows();
    for q in ["lemma1_bound", "expected_fhat", "expected_ghat"] {
        assert!(r.iter().any(|row| row.quantity == q), "no {q} rows");
    }
}

#[test]
fn quadrature_matches_high_precision_values() {
    let spec = QuadratureSpec::default();
    for row in rows().iter().filter(|r| r.quantity.starts_with("expected_")) {
        let kernel = make_kernel(KernelName::parse(&row.kernel).unwrap(), 1).unwrap();
        let m = model(&row.model);
        let got = match row.quantity.as_str() {
            "expected_fhat" => expected_fhat(&m, &kernel, &[row.x], row.h, &spec),
            _ => expected_ghat(&m, &kernel, &[row.x], row.h, &spec),
        }
        .unwrap();
        let err = (got - row.value).abs() / row.value.abs().max(1.0);
        assert!(err <= 1e-10, "{} {} {} x={} h={}: {got} vs {}", row.quantity, row.model, row.kernel, row.x, row.h, row.value);
    }
}

#[test]
fn deviation_bound_matches_fixture() {
    let row = rows().into_iter().find(|r| r.quantity == "lemma1_bound").unwrap();
    let params = validate_params(2.0, 4.0, 4.0, 6.0).unwrap();
    let got = lemma1_bound(
        &params,
        &BoundInputs {
            numerator_mean: 1.0,
            denominator_mean: 2.0,
            rate: 0.1,
            cross_moment_bound: 1.0,
            value_moment_bound: 1.0,
            n: 100,
        },
    )
    .unwrap();
    assert!((got - row.value).abs() <= 1e-12 * row.value, "{got} vs {}", row.value);
}
