use lbtrunc::classes::FunctionClass;
use lbtrunc::experiments::{probe_continuity, remainder_trend, run_clt, run_lln, CltConfig, LlnConfig, Statistics};
use lbtrunc::{Distribution, Function, Model};

fn unif(lo: f64, hi: f64) -> Distribution {
    Distribution::uniform(lo, hi).unwrap()
}

fn shifted() -> Model {
    Model::new(unif(0.0, 1.0), unif(-0.5, 0.5)).unwrap()
}

#[test]
fn lln_indicator_halves() {
    let model = Model::new(unif(0.0, 1.0), unif(0.0, 1.0)).unwrap();
    let class = FunctionClass::indicator(Function::constant(1.0));
    let report = run_lln(&LlnConfig::new(model, class, vec![200, 2000], 200, 11)).unwrap();
    assert!(report.verdict.pass, "{:?}", report.verdict);
}

#[test]
fn lln_zero_class_passes() {
    let class = FunctionClass::finite(vec![Function::zero()]).unwrap();
    let report = run_lln(&LlnConfig::new(shifted(), class, vec![50, 100], 10, 3)).unwrap();
    let Statistics::Lln(stats) = &report.statistics else { panic!() };
    assert!(stats.rows.iter().all(|r| r.values.iter().all(|&v| v == 0.0)));
    assert!(report.verdict.pass);
}

#[test]
fn lln_rejects_disjoint_supports() {
    let model = Model::new(unif(0.0, 1.0), unif(2.0, 3.0));
    if let Ok(model) = model {
        let class = FunctionClass::indicator(Function::constant(1.0));
        assert!(run_lln(&LlnConfig::new(model, class, vec![10], 2, 0)).is_err());
    }
}

#[test]
fn clt_single_indicator() {
    let config = CltConfig::new(shifted(), vec![Function::indicator(0.5)], 1000, 1000, 5);
    let report = run_clt(&config).unwrap();
    assert!(report.verdict.pass, "{:?}", report.verdict);
}

#[test]
fn clt_covariance_pair() {
    let phis = vec![Function::indicator(0.25), Function::indicator(0.75)];
    let report = run_clt(&CltConfig::new(shifted(), phis, 1000, 1000, 6)).unwrap();
    let Statistics::Clt(stats) = &report.statistics else { panic!() };
    assert!(stats.max_covariance_error < 0.1, "{}", stats.max_covariance_error);
}

#[test]
fn clt_rejects_constant_and_assumption_b() {
    assert!(run_clt(&CltConfig::new(shifted(), vec![Function::constant(1.0)], 100, 10, 0)).is_err());
    let no_b = Model::new(unif(0.0, 1.0), unif(0.0, 1.0)).unwrap();
    assert!(run_clt(&CltConfig::new(no_b, vec![Function::indicator(0.5)], 100, 10, 0)).is_err());
}

#[test]
fn remainder_shrinks() {
    let trend = remainder_trend(&shifted(), &Function::indicator(0.5), 100, 1600, 100, 9).unwrap();
    assert!(trend.pass, "{trend:?}");
}

#[test]
fn continuity_frequencies_nonincreasing() {
    let phis = [0.5, 0.505, 0.53, 0.6, 0.8].into_iter().map(Function::indicator).collect();
    let mut config = CltConfig::new(shifted(), phis, 1000, 500, 21);
    config.delta_grid = vec![0.4, 0.2, 0.1];
    let report = probe_continuity(&config).unwrap();
    assert!(report.verdict.pass, "{:?}", report.verdict);
}

#[test]
fn continuity_identical_pair_has_zero_increment() {
    let phis = vec![Function::indicator(0.4), Function::indicator(0.4)];
    let report = probe_continuity(&CltConfig::new(shifted(), phis, 100, 20, 2)).unwrap();
    let Statistics::Continuity(table) = &report.statistics else { panic!() };
    assert!(table.rows.iter().all(|r| r.increments.iter().all(|&v| v == 0.0)));
}

#[test]
fn continuity_needs_a_close_pair() {
    let phis = vec![Function::indicator(0.1), Function::indicator(0.9)];
    let mut config = CltConfig::new(shifted(), phis, 100, 20, 2);
    config.delta_grid = vec![0.5, 0.01];
    assert!(probe_continuity(&config).is_err());
}

#[test]
fn rerun_is_identical() {
    let class = FunctionClass::indicator(Function::constant(1.0));
    let config = LlnConfig::new(shifted(), class, vec![50, 200], 20, 77);
    let a = serde_json::to_string(&run_lln(&config).unwrap().reproducible_part()).unwrap();
    let b = serde_json::to_string(&run_lln(&config).unwrap().reproducible_part()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn replications_do_not_depend_on_the_replication_count() {
    let class = || FunctionClass::indicator(Function::ramp(2.0, 0.5));
    let small = run_lln(&LlnConfig::new(shifted(), class(), vec![60], 5, 123)).unwrap();
    let large = run_lln(&LlnConfig::new(shifted(), class(), vec![60], 12, 123)).unwrap();
    let (Statistics::Lln(a), Statistics::Lln(b)) = (&small.statistics, &large.statistics) else { panic!() };
    assert_eq!(a.rows[0].values[..], b.rows[0].values[..5]);
    assert_eq!(a.rows[0].seeds[..], b.rows[0].seeds[..5]);
    let other = run_lln(&LlnConfig::new(shifted(), class(), vec![60], 5, 124)).unwrap();
    let Statistics::Lln(c) = &other.statistics else { panic!() };
    assert_ne!(a.rows[0].values, c.rows[0].values);
}
