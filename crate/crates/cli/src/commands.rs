use lbtrunc::classes::{entropy_integral, CoverBudget};
use lbtrunc::experiments::{probe_continuity, run_clt, run_lln, CltConfig, ExperimentReport, LlnConfig, Statistics};
use lbtrunc::influence::check_weak_conditions;
use lbtrunc::lynden_bell::fit;
use lbtrunc::sampler::draw_fixed_n;
use lbtrunc::{Evaluator, Model};
use serde::Serialize;
use serde_json::json;

use crate::config::{section, CltSection, Config};
use crate::dataset::{read_dataset, write_dataset};
use crate::error::CliError;
use crate::phi::PhiSpec;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub lenient: bool,
    pub tol: Option<f64>,
}

impl Globals {
    fn seed(&self, config: &Config) -> u64 {
        self.seed.or(config.seed).unwrap_or(0)
    }

    fn tolerance(&self, config: &Config) -> Result<f64, CliError> {
        let tol = self.tol.or(config.tolerance).unwrap_or(1e-9);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::config(format!("tolerance must be positive, got {tol}")));
        }
        Ok(tol)
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// PASS/FAIL for experiments, `None` for plain commands.
    pub verdict: Option<bool>,
    /// One-line summary for stderr.
    pub summary: String,
    /// Printed when no output directory is given.
    pub stdout: String,
    /// `(file name, contents)` written into the output directory.
    pub files: Vec<(String, String)>,
}

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Report file contents: the configuration as run plus the library report.
fn report_json(config: &Config, seed: u64, report: &ExperimentReport) -> String {
    pretty(&json!({ "config": config, "seed": seed, "report": report }))
}

pub fn estimate(path: &std::path::Path, g: &Globals) -> Result<Outcome, CliError> {
    let data = read_dataset(path, !g.lenient)?;
    let fit = fit(&data.sample)?;
    let table = fit.f_n.table();
    let csv = to_csv(table.iter().map(|&(y, f)| StepRow { y, f_n: f }))?;
    let mut summary = format!("fitted {} observations, {} distinct values", fit.n, table.len());
    if fit.has_degeneracy() {
        summary.push_str(&format!(
            "; warning: F_n reaches 1 early at {:?} (risk set equals ties)",
            fit.degenerate_points
        ));
    }
    if !data.skipped.is_empty() {
        summary.push_str(&format!("; skipped {} malformed rows", data.skipped.len()));
    }
    let json = pretty(&json!({
        "n": fit.n,
        "f_n": table,
        "degenerate_points": fit.degenerate_points,
        "has_ties": fit.has_ties,
        "risk": fit.risk,
        "skipped": data.skipped,
    }));
    Ok(Outcome {
        verdict: None,
        summary,
        stdout: csv.clone(),
        files: vec![("estimate.csv".into(), csv), ("estimate.json".into(), json)],
    })
}

#[derive(Serialize)]
struct StepRow {
    y: f64,
    f_n: f64,
}

pub fn simulate(config: &Config, n: Option<usize>, g: &Globals) -> Result<Outcome, CliError> {
    let model = config.model()?;
    let n = match (n, &config.simulate) {
        (Some(n), _) => n,
        (None, Some(s)) => s.n,
        (None, None) => return Err(CliError::config("sample size needed: --n or [simulate] n")),
    };
    let seed = g.seed(config);
    let sample = draw_fixed_n(&model, n, seed)?;
    let text = write_dataset(&sample);
    Ok(Outcome {
        verdict: None,
        summary: format!("drew {n} pairs in {} attempts (seed {seed})", sample.attempted()),
        stdout: text.clone(),
        files: vec![("sample.csv".into(), text)],
    })
}

fn finish(config: &Config, seed: u64, report: ExperimentReport, files: Vec<(String, String)>) -> Outcome {
    let json = report_json(config, seed, &report);
    let mut all = vec![("report.json".to_string(), json.clone())];
    all.extend(files);
    Outcome {
        verdict: Some(report.verdict.pass),
        summary: format!(
            "{}: {}",
            if report.verdict.pass { "PASS" } else { "FAIL" },
            report.verdict.details.join("; ")
        ),
        stdout: json,
        files: all,
    }
}

pub fn lln(config: &Config, g: &Globals) -> Result<Outcome, CliError> {
    let s = section(&config.lln, "lln")?;
    let seed = g.seed(config);
    let mut lc = LlnConfig::new(config.model()?, s.class.build()?, s.n_grid.clone(), g.reps.unwrap_or(s.replications), seed);
    if let Some(rule) = s.epsilon_rule {
        lc.epsilon_rule = rule;
    }
    let report = run_lln(&lc)?;
    let Statistics::Lln(stats) = &report.statistics else { unreachable!("lln report") };
    let csv = to_csv(stats.rows.iter().map(|r| LlnCsv {
        n: r.n,
        epsilon: r.epsilon,
        median: r.median,
        p90: r.p90,
    }))?;
    Ok(finish(config, seed, report, vec![("lln.csv".into(), csv)]))
}

#[derive(Serialize)]
struct LlnCsv {
    n: usize,
    epsilon: f64,
    median: f64,
    p90: f64,
}

fn clt_config(config: &Config, s: &CltSection, g: &Globals) -> Result<CltConfig, CliError> {
    let phis = s.phis.iter().map(PhiSpec::build).collect();
    let mut c = CltConfig::new(config.model()?, phis, s.n, g.reps.unwrap_or(s.replications), g.seed(config));
    if let Some(d) = &s.delta_grid {
        c.delta_grid = d.clone();
    }
    if let Some(e) = s.epsilon0 {
        c.epsilon0 = e;
    }
    if let Some(r) = s.remainder_replications {
        c.remainder_replications = r;
    }
    c.tolerance = g.tolerance(config)?;
    Ok(c)
}

pub fn clt(config: &Config, g: &Globals) -> Result<Outcome, CliError> {
    let s = section(&config.clt, "clt")?;
    let cc = clt_config(config, s, g)?;
    let report = run_clt(&cc)?;
    let Statistics::Clt(stats) = &report.statistics else { unreachable!("clt report") };
    let per_phi = to_csv((0..s.phis.len()).map(|k| CltCsv {
        phi: s.phis[k].to_string(),
        sigma2: stats.sigma2[k].value,
        sigma2_path: format!("{:?}", stats.sigma2[k].path).to_lowercase(),
        sample_variance: stats.sample_variance[k],
        ks: stats.ks[k],
        ks_critical: stats.ks_critical,
        remainder_median_abs: stats.remainder_median_abs[k],
    }))?;
    let k = s.phis.len();
    let cov = to_csv((0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| CovCsv {
        i,
        j,
        theoretical: stats.theoretical_covariance[i][j],
        empirical: stats.empirical_covariance[i][j],
    }))?;
    Ok(finish(
        config,
        cc.master_seed,
        report,
        vec![("clt.csv".into(), per_phi), ("covariance.csv".into(), cov)],
    ))
}

#[derive(Serialize)]
struct CltCsv {
    phi: String,
    sigma2: f64,
    sigma2_path: String,
    sample_variance: f64,
    ks: f64,
    ks_critical: f64,
    remainder_median_abs: Option<f64>,
}

#[derive(Serialize)]
struct CovCsv {
    i: usize,
    j: usize,
    theoretical: f64,
    empirical: f64,
}

pub fn continuity(config: &Config, g: &Globals) -> Result<Outcome, CliError> {
    let s = config
        .continuity
        .as_ref()
        .or(config.clt.as_ref())
        .ok_or_else(|| CliError::config("missing [continuity] (or [clt]) section"))?;
    let cc = clt_config(config, s, g)?;
    let report = probe_continuity(&cc)?;
    let Statistics::Continuity(table) = &report.statistics else { unreachable!("continuity report") };
    let csv = to_csv(table.rows.iter().map(|r| ContinuityCsv {
        delta: r.delta,
        pairs: r.pairs.len(),
        exceedances: r.exceedances,
        frequency: r.frequency,
        standard_error: r.standard_error,
    }))?;
    Ok(finish(config, cc.master_seed, report, vec![("continuity.csv".into(), csv)]))
}

#[derive(Serialize)]
struct ContinuityCsv {
    delta: f64,
    pairs: usize,
    exceedances: usize,
    frequency: f64,
    standard_error: f64,
}

pub fn sigma2(config: &Config, phi: Option<&str>, g: &Globals) -> Result<Outcome, CliError> {
    let model: Model = config.model()?;
    let spec: PhiSpec = match phi {
        Some(p) => p.parse().map_err(CliError::Config)?,
        None => section(&config.sigma2, "sigma2")?.phi,
    };
    let phi = spec.build();
    let weak = check_weak_conditions(&phi, &model);
    let ev = Evaluator::new(phi, &model)?.with_tolerance(g.tolerance(config)?);
    let est = ev.sigma2()?;
    let json = pretty(&json!({
        "phi": spec.to_string(),
        "model": model.label(),
        "assumptions": model.check_assumptions(),
        "weak_conditions": weak,
        "tolerance": g.tolerance(config)?,
        "sigma2": est,
        "library_version": env!("CARGO_PKG_VERSION"),
    }));
    Ok(Outcome {
        verdict: None,
        summary: format!("sigma2({spec}) = {} via {:?}", est.value, est.path),
        stdout: json.clone(),
        files: vec![("sigma2.json".into(), json)],
    })
}

pub fn brackets(config: &Config, _g: &Globals) -> Result<Outcome, CliError> {
    let s = section(&config.brackets, "brackets")?;
    let model = config.model()?;
    let class = s.class.build()?;
    let budget = CoverBudget::default();
    let base = model.f();
    let cover = class.bracket_cover(s.epsilon, s.p, base, &budget)?;
    let entropy = entropy_integral(&class, s.delta, s.p, base, &budget)?;
    let rows: Vec<BracketCsv> = cover
        .brackets
        .iter()
        .zip(&cover.gap_norms)
        .enumerate()
        .map(|(index, (b, &gap))| BracketCsv {
            index,
            lower: b.lower.label().to_string(),
            upper: b.upper.label().to_string(),
            gap_norm: gap,
        })
        .collect();
    let json = pretty(&json!({
        "class": class.label(),
        "base": base.label(),
        "epsilon": s.epsilon,
        "p": s.p,
        "size": cover.len(),
        "brackets": rows,
        "entropy_integral": { "delta": s.delta, "value": entropy.value, "epsilon_min": entropy.epsilon_min, "grid": entropy.grid },
    }));
    let entropy_csv = to_csv(entropy.grid.iter().map(|&(epsilon, log_n)| EntropyCsv { epsilon, log_n }))?;
    Ok(Outcome {
        verdict: None,
        summary: format!("{} brackets at ε = {}; J({}) = {}", cover.len(), s.epsilon, s.delta, entropy.value),
        stdout: json.clone(),
        files: vec![
            ("brackets.json".into(), json),
            ("brackets.csv".into(), to_csv(rows)?),
            ("entropy.csv".into(), entropy_csv),
        ],
    })
}

#[derive(Serialize)]
struct BracketCsv {
    index: usize,
    lower: String,
    upper: String,
    gap_norm: f64,
}

#[derive(Serialize)]
struct EntropyCsv {
    epsilon: f64,
    log_n: f64,
}
