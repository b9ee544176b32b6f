use lbtrunc::catalog;
use lbtrunc::quadrature::integrate;
use lbtrunc::sampler::{draw_fixed_n, draw_fixed_population};
use lbtrunc::{Distribution, Model};

fn unif(lo: f64, hi: f64) -> Distribution {
    Distribution::uniform(lo, hi).unwrap()
}

#[test]
fn alpha_agrees_with_acceptance_rate() {
    for (name, model) in catalog::models() {
        let alpha = model.alpha().unwrap();
        let s = draw_fixed_population(&model, 200_000, 17);
        let rate = s.len() as f64 / 200_000.0;
        let se = (alpha * (1.0 - alpha) / 200_000.0).sqrt();
        assert!((rate - alpha).abs() <= 4.0 * se + 1e-12, "{name}: α = {alpha}, rate {rate}");
    }
}

#[test]
fn marginals_are_monotone() {
    for (name, model) in catalog::models() {
        let lo = model.g().quantile(0.001).min(model.f().quantile(0.001)) - 0.1;
        let hi = model.f().quantile(0.999).max(model.g().quantile(0.999)) + 0.1;
        let grid: Vec<f64> = (0..100).map(|k| lo + (hi - lo) * k as f64 / 99.0).collect();
        let tol = 1e-9;
        let mut prev = (0.0, 0.0, 0.0, 0.0);
        for &x in &grid {
            let cur = (
                model.f_star(x).unwrap(),
                model.g_star(x).unwrap(),
                model.h_star(x, 0.5).unwrap(),
                model.h_star(0.5, x).unwrap(),
            );
            assert!(cur.0 >= prev.0 - tol && cur.1 >= prev.1 - tol, "{name} at {x}");
            assert!(cur.2 >= prev.2 - tol && cur.3 >= prev.3 - tol, "{name} at {x}");
            prev = cur;
        }
    }
}

#[test]
fn joint_law_marginalizes() {
    for (name, model) in catalog::models() {
        for x in [0.2, 0.5, 0.9] {
            let a = model.h_star(x, f64::INFINITY).unwrap();
            let b = model.f_star(x).unwrap();
            assert!((a - b).abs() < 1e-9, "{name}: {a} vs {b}");
            let c = model.h_star(f64::INFINITY, x).unwrap();
            let d = model.g_star(x).unwrap();
            assert!((c - d).abs() < 1e-9, "{name}: {c} vs {d}");
        }
    }
}

#[test]
fn assumption_flags_follow_supports() {
    let both = Model::new(unif(0.0, 1.0), unif(-0.5, 0.5)).unwrap().check_assumptions();
    assert!(both.a_holds && both.b_holds);
    let only_a = Model::new(unif(0.0, 1.0), unif(0.0, 1.0)).unwrap().check_assumptions();
    assert!(only_a.a_holds && !only_a.b_holds);
    if let Ok(m) = Model::new(unif(0.0, 1.0), unif(2.0, 3.0)) {
        assert!(!m.check_assumptions().a_holds);
    }
}

#[test]
fn integrability_of_inverse_g() {
    let diverges = Model::new(unif(0.0, 1.0), unif(0.0, 1.0)).unwrap().inverse_g_integrability(|_| 1.0);
    assert!(!diverges.convergent);
    let converges = Model::new(unif(0.0, 1.0), unif(-0.5, 0.5)).unwrap().inverse_g_integrability(|_| 1.0);
    assert!(converges.convergent);
    // ∫₀¹ du / (u + 0.5) over [0, 0.5] plus 0.5
    assert!((converges.estimate - (2f64.ln() + 0.5)).abs() < 1e-6, "{}", converges.estimate);
}

#[test]
fn quadrature_examples() {
    assert!((integrate(|_| 1.0, 0.0f64, 1.0, 1e-10).unwrap() - 1.0).abs() < 1e-12);
    assert!((integrate(|x| x, 0.0f64, 1.0, 1e-10).unwrap() - 0.5).abs() < 1e-12);
    assert!((integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-6).unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn population_acceptance_concentrates() {
    let model = catalog::model("uniform-uniform").unwrap();
    let inside = (0..1000)
        .filter(|&seed| {
            let s = draw_fixed_population(&model, 10_000, seed);
            (s.len() as f64 / 10_000.0 - 0.5).abs() <= 0.015
        })
        .count();
    assert!(inside >= 990, "{inside} of 1000");
}

#[test]
fn waiting_time_concentrates() {
    let model = catalog::model("uniform-shifted").unwrap();
    let inside = (0..100)
        .filter(|&seed| {
            let s = draw_fixed_n(&model, 1000, seed).unwrap();
            (1.05..=1.25).contains(&(s.attempted() as f64 / 1000.0))
        })
        .count();
    assert!(inside >= 95, "{inside} of 100");
}

#[test]
fn no_rejection_when_truncation_is_void() {
    let model = catalog::model("no-truncation").unwrap();
    let s = draw_fixed_population(&model, 5000, 3);
    assert_eq!(s.len(), 5000);
    assert!(draw_fixed_n(&model, 0, 1).unwrap().is_empty());
}
