//! A fixed roster of models and test functions shared by the test suites and
//! the command line tool.

use crate::distribution::ContinuousDistribution;
use crate::function::MeasurableFunction;
use crate::model::TruncationModel;

fn build(f: ContinuousDistribution<f64>, g: ContinuousDistribution<f64>) -> TruncationModel<f64> {
    TruncationModel::new(f, g).expect("catalog models are valid")
}

fn unif(lo: f64, hi: f64) -> ContinuousDistribution<f64> {
    ContinuousDistribution::uniform(lo, hi).expect("valid")
}

/// Named built-in models, `(name, model)`.
pub fn models() -> Vec<(&'static str, TruncationModel<f64>)> {
    vec![
        ("uniform-shifted", build(unif(0.0, 1.0), unif(-0.5, 0.5))),
        ("uniform-uniform", build(unif(0.0, 1.0), unif(0.0, 1.0))),
        ("no-truncation", build(unif(0.0, 1.0), unif(-2.0, -1.0))),
        (
            "exponential-uniform",
            build(ContinuousDistribution::shifted_exponential(1.0, 0.5).expect("valid"), unif(0.0, 1.0)),
        ),
        (
            "weibull-exponential",
            build(ContinuousDistribution::weibull(2.0, 1.0).expect("valid"), ContinuousDistribution::exponential(2.0).expect("valid")),
        ),
        (
            "piecewise-uniform",
            build(
                ContinuousDistribution::piecewise_linear(vec![0.0, 0.3, 1.0], vec![0.0, 0.6, 1.0]).expect("valid"),
                unif(-0.2, 0.6),
            ),
        ),
    ]
}

pub fn model(name: &str) -> Option<TruncationModel<f64>> {
    models().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
}

/// Bounded test functions centered on the bulk of each catalog model.
pub fn functions() -> Vec<MeasurableFunction<f64>> {
    vec![
        MeasurableFunction::indicator(0.5),
        MeasurableFunction::indicator(0.8),
        MeasurableFunction::ramp(2.0, 0.6),
        MeasurableFunction::new("sin(3x)", |x: f64| (3.0 * x).sin()),
    ]
}
