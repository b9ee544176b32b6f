use lbtrunc::catalog;
use lbtrunc::classes::FunctionClass;
use lbtrunc::experiments::{ks_statistic, run_lln, LlnConfig, Statistics};
use lbtrunc::lynden_bell::fit;
use lbtrunc::process::{exact_sup_indicator, integrate_against_fit, integrate_against_model, w_n};
use lbtrunc::quadrature::integrate;
use lbtrunc::sampler::draw_fixed_n;
use lbtrunc::{Function, Model};
use proptest::prelude::*;

fn shifted() -> Model {
    catalog::model("uniform-shifted").unwrap()
}

#[test]
fn exact_sup_matches_ks_without_truncation() {
    let model = catalog::model("no-truncation").unwrap();
    for seed in 0..50 {
        let sample = draw_fixed_n(&model, 10 + 20 * seed as usize, seed).unwrap();
        let ys: Vec<f64> = sample.ys().copied().collect();
        let ks = ks_statistic(&ys, |y| model.f().cdf(y)).unwrap();
        let sup = exact_sup_indicator(&fit(&sample).unwrap(), &Function::constant(1.0), &model).unwrap().sup;
        assert_eq!(sup.to_bits(), ks.to_bits(), "seed {seed}: {sup} vs {ks}");
    }
}

#[test]
fn unit_mass_without_ties() {
    for (name, model) in catalog::models() {
        for seed in 0..20 {
            let f = fit(&draw_fixed_n(&model, 150, seed).unwrap()).unwrap();
            assert_eq!(integrate_against_fit(&f, &Function::constant(1.0)), 1.0, "{name}, seed {seed}");
        }
    }
}

#[test]
fn zero_function_is_centered() {
    let model = shifted();
    let f = fit(&draw_fixed_n(&model, 100, 1).unwrap()).unwrap();
    assert_eq!(w_n(&f, &Function::zero(), &model).unwrap(), 0.0);
    assert!(w_n(&f, &Function::constant(3.5), &model).unwrap().abs() < 1e-12);
    assert_eq!(exact_sup_indicator(&f, &Function::zero(), &model).unwrap().sup, 0.0);
}

/// Median of the Kolmogorov limit law `P(√n D_n <= x) -> 1 - 2 Σ (-1)^{k-1} e^{-2k²x²}`.
fn kolmogorov_median() -> f64 {
    let cdf = |x: f64| 1.0 - 2.0 * (1..200).map(|k| (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * x * x).exp()).sum::<f64>();
    let (mut lo, mut hi) = (0.3, 2.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid
        } else {
            hi = mid
        }
    }
    lo
}

#[test]
fn no_truncation_medians_follow_dkw_scale() {
    let model = catalog::model("no-truncation").unwrap();
    let class = FunctionClass::indicator(Function::constant(1.0));
    let report = run_lln(&LlnConfig::new(model, class, vec![200, 2000], 200, 31)).unwrap();
    let Statistics::Lln(stats) = report.statistics else { panic!() };
    let c = kolmogorov_median();
    assert!((c - 0.8276).abs() < 1e-3, "{c}");
    for row in &stats.rows {
        let scale = c / (row.n as f64).sqrt();
        let ratio = row.median / scale;
        assert!((0.5..=2.0).contains(&ratio), "n = {}: median {} vs {scale}", row.n, row.median);
    }
}

fn grid_sup(fit: &lbtrunc::Fit, phi0: &Function, model: &Model) -> f64 {
    // Population part by cumulative quadrature between consecutive grid points.
    let (lo, hi) = (-0.05, 1.05);
    let m = 10_000;
    let mut pop = 0.0;
    let mut prev = lo;
    let mut emp_j = 0;
    let jumps: Vec<(f64, f64)> = fit.jumps().map(|(&y, d)| (y, d)).collect();
    let mut emp = 0.0;
    let mut best: f64 = 0.0;
    let f = model.f();
    for k in 0..=m {
        let t = lo + (hi - lo) * k as f64 / m as f64;
        pop += integrate(|x: f64| phi0.eval(x) * f.pdf(x), prev, t, 1e-13).unwrap();
        prev = t;
        while emp_j < jumps.len() && jumps[emp_j].0 <= t {
            emp += phi0.eval(jumps[emp_j].0) * jumps[emp_j].1;
            emp_j += 1;
        }
        best = best.max((emp - pop).abs());
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn w_n_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, s in 0.05f64..0.95) {
        let model = shifted();
        let f = fit(&draw_fixed_n(&model, 80, seed).unwrap()).unwrap();
        let (p1, p2) = (Function::indicator(s), Function::ramp(2.0, s));
        let combo = Function::linear_combination(a, &p1, b, &p2);
        let lhs = w_n(&f, &combo, &model).unwrap();
        let rhs = a * w_n(&f, &p1, &model).unwrap() + b * w_n(&f, &p2, &model).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn exact_sup_agrees_with_a_fine_grid(seed in any::<u64>(), n in 5usize..120, which in 0usize..4, nt in any::<bool>()) {
        let model = if nt { catalog::model("no-truncation").unwrap() } else { shifted() };
        let f = fit(&draw_fixed_n(&model, n, seed).unwrap()).unwrap();
        let phi0 = [Function::constant(1.0), Function::ramp(2.0, 0.5), Function::new("cos(4x)", |x: f64| (4.0 * x).cos()), Function::indicator(0.6)]
            [which].clone();
        let exact = exact_sup_indicator(&f, &phi0, &model).unwrap().sup;
        let grid = grid_sup(&f, &phi0, &model);
        prop_assert!(grid <= exact + 1e-9, "grid {} above exact {}", grid, exact);
        prop_assert!(exact <= grid + 1.0 / n as f64 + 1e-9, "exact {} vs grid {}", exact, grid);
    }
}

#[test]
fn model_integral_examples() {
    let model = shifted();
    let v = integrate_against_model(&model, &Function::identity()).unwrap();
    assert!((v - 0.5).abs() < 1e-12);
}
