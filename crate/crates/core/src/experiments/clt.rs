use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    ks_critical_1pct, ks_standard_normal, library_version, median, stream_seed, ConfigEcho, ExperimentReport, ModelEcho, Statistics, Verdict,
};
use crate::error::{Assumption, Error, Result};
use crate::function::MeasurableFunction;
use crate::influence::{check_weak_conditions, covariance_matrix, zeta_values, InfluenceEvaluator, MomentEstimate};
use crate::lynden_bell::fit;
use crate::model::TruncationModel;
use crate::process::w_n;
use crate::sampler::{draw_fixed_n, TruncatedSample, GENERATOR};

#[derive(Debug, Clone)]
pub struct CltConfig {
    pub model: TruncationModel<f64>,
    pub phis: Vec<MeasurableFunction<f64>>,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    /// Decreasing `δ` values for the continuity probe.
    pub delta_grid: Vec<f64>,
    /// Exceedance level of the continuity probe.
    pub epsilon0: f64,
    /// Replications (from the first) that also compute the linearization
    /// remainder `G_n(φ) - n^{-1/2} Σ ζ_i(φ)`.
    pub remainder_replications: usize,
    /// Absolute tolerance of the variance quadratures.
    pub tolerance: f64,
}

impl CltConfig {
    pub fn new(model: TruncationModel<f64>, phis: Vec<MeasurableFunction<f64>>, n: usize, replications: usize, master_seed: u64) -> Self {
        CltConfig {
            model,
            phis,
            n,
            replications,
            master_seed,
            delta_grid: vec![0.4, 0.2, 0.1],
            epsilon0: 0.25,
            remainder_replications: 100,
            tolerance: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.require(Assumption::B)?;
        if self.phis.is_empty() {
            return Err(Error::InvalidArgument("at least one φ is required".into()));
        }
        if self.n == 0 || self.replications < 2 {
            return Err(Error::InvalidArgument("need n >= 1 and at least two replications".into()));
        }
        for phi in &self.phis {
            if phi.as_constant().is_some() {
                return Err(Error::DegenerateCoordinate(phi.label().to_string()));
            }
            let weak = check_weak_conditions(phi, &self.model);
            if !weak.holds {
                return Err(Error::AssumptionViolated {
                    assumption: Assumption::Weak,
                    detail: format!(
                        "{}: ∫ dF/G {}, ∫ φ²/G dF {}",
                        phi.label(),
                        weak.inverse_g.note,
                        weak.phi_squared.note
                    ),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn seed(&self, r: usize) -> u64 {
        stream_seed(self.master_seed, self.n as u64, r)
    }

    /// `G_n(φ_k)` for every `k` on the sample of replication `r`.
    pub(crate) fn g_values(&self, sample: &TruncatedSample<f64>) -> Result<Vec<f64>> {
        let fit = fit(sample)?;
        let root_n = (self.n as f64).sqrt();
        self.phis
            .iter()
            .map(|phi| Ok(root_n * w_n(&fit, phi, &self.model)?))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltStatistics {
    pub n: usize,
    pub sigma2: Vec<MomentEstimate<f64>>,
    pub theoretical_covariance: Vec<Vec<f64>>,
    pub empirical_covariance: Vec<Vec<f64>>,
    pub max_covariance_error: f64,
    /// Sample variance of `G_n(φ_k)` over replications.
    pub sample_variance: Vec<f64>,
    pub ks: Vec<f64>,
    pub ks_critical: f64,
    /// `G_n(φ_k) / σ_k` per coordinate, in replication order.
    pub standardized: Vec<Vec<f64>>,
    /// Median `|G_n(φ_k) - n^{-1/2} Σ ζ_i(φ_k)|` per coordinate.
    pub remainder_median_abs: Vec<Option<f64>>,
    pub remainder_replications: usize,
    pub remainder_failures: usize,
    pub seeds: Vec<u64>,
}

struct Replicate {
    g: Vec<f64>,
    remainder: Option<Vec<f64>>,
}

fn remainders(evs: &[InfluenceEvaluator<f64>], sample: &TruncatedSample<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let scale = 1.0 / (sample.len() as f64).sqrt();
    evs.iter()
        .zip(g)
        .map(|(ev, &gk)| {
            let z = zeta_values(ev.zeta_function(), sample).ok()?;
            Some(gk - scale * z.iter().sum::<f64>())
        })
        .collect()
}

/// Finite-dimensional CLT check.
///
/// PASS when every coordinate's K-S distance to `N(0, 1)` is below
/// `1.63 / √R` and every covariance entry is within 0.1 of its quadrature
/// value.
pub fn run_clt(config: &CltConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let evs: Vec<InfluenceEvaluator<f64>> = config
        .phis
        .iter()
        .map(|phi| Ok(InfluenceEvaluator::new(phi.clone(), &config.model)?.with_tolerance(config.tolerance)))
        .collect::<Result<_>>()?;
    let theory_full = covariance_matrix(&evs)?;
    let k = evs.len();
    let theory: Vec<Vec<f64>> = theory_full.iter().map(|row| row.iter().map(|c| c.value).collect()).collect();
    let sigma2: Vec<MomentEstimate<f64>> = (0..k).map(|i| theory_full[i][i].clone()).collect();
    for (i, s) in sigma2.iter().enumerate() {
        if !(s.value > 1e-12) {
            return Err(Error::DegenerateCoordinate(config.phis[i].label().to_string()));
        }
    }

    let seeds: Vec<u64> = (0..config.replications).map(|r| config.seed(r)).collect();
    let reps: Vec<Replicate> = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            let run = || {
                let sample = draw_fixed_n(&config.model, config.n, seed)?;
                let g = config.g_values(&sample)?;
                let remainder = if r < config.remainder_replications {
                    remainders(&evs, &sample, &g)
                } else {
                    None
                };
                Ok(Replicate { g, remainder })
            };
            run().map_err(|e| Error::in_replication(r, e))
        })
        .collect::<Result<_>>()?;

    let rr = reps.len() as f64;
    let means: Vec<f64> = (0..k).map(|i| reps.iter().map(|x| x.g[i]).sum::<f64>() / rr).collect();
    let mut empirical = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            empirical[i][j] = reps.iter().map(|x| (x.g[i] - means[i]) * (x.g[j] - means[j])).sum::<f64>() / (rr - 1.0);
        }
    }
    let max_covariance_error = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (empirical[i][j] - theory[i][j]).abs())
        .fold(0.0, f64::max);
    let standardized: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let sd = sigma2[i].value.sqrt();
            reps.iter().map(|x| x.g[i] / sd).collect()
        })
        .collect();
    let ks: Vec<f64> = standardized.iter().map(|z| ks_standard_normal(z)).collect::<Result<_>>()?;
    let ks_critical = ks_critical_1pct(config.replications);

    let attempted = config.remainder_replications.min(config.replications);
    let with_remainder: Vec<&Vec<f64>> = reps.iter().filter_map(|x| x.remainder.as_ref()).collect();
    let remainder_failures = attempted - with_remainder.len();
    let remainder_median_abs: Vec<Option<f64>> = (0..k)
        .map(|i| {
            if with_remainder.is_empty() {
                None
            } else {
                Some(median(&with_remainder.iter().map(|v| v[i].abs()).collect::<Vec<_>>()))
            }
        })
        .collect();

    let ks_ok = ks.iter().all(|&d| d < ks_critical);
    let cov_ok = max_covariance_error < 0.1;
    let mut details: Vec<String> = ks
        .iter()
        .zip(&config.phis)
        .map(|(d, phi)| format!("K-S {}: {d} (critical {ks_critical})", phi.label()))
        .collect();
    details.push(format!("max covariance error: {max_covariance_error}"));
    let verdict = Verdict {
        pass: ks_ok && cov_ok,
        rule: "every standardized coordinate passes K-S against N(0,1) at 1% (statistic < 1.63/√R) and every \
               empirical covariance entry is within 0.1 of the quadrature covariance"
            .into(),
        details,
    };
    let sample_variance = (0..k).map(|i| empirical[i][i]).collect();
    Ok(ExperimentReport {
        config: echo(config, vec![("ks_critical".into(), ks_critical), ("covariance_tolerance".into(), 0.1)]),
        statistics: Statistics::Clt(CltStatistics {
            n: config.n,
            sigma2,
            theoretical_covariance: theory,
            empirical_covariance: empirical,
            max_covariance_error,
            sample_variance,
            ks,
            ks_critical,
            standardized,
            remainder_median_abs,
            remainder_replications: attempted,
            remainder_failures,
            seeds,
        }),
        verdict,
        library_version: library_version(),
        generator: GENERATOR.into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

pub(crate) fn echo(config: &CltConfig, thresholds: Vec<(String, f64)>) -> ConfigEcho {
    ConfigEcho {
        model: ModelEcho::of(&config.model),
        class: None,
        phis: config.phis.iter().map(|p| p.label().to_string()).collect(),
        n_grid: vec![config.n],
        replications: config.replications,
        master_seed: config.master_seed,
        epsilon_rule: None,
        delta_grid: config.delta_grid.clone(),
        thresholds,
    }
}

/// Decay of the linearization remainder between two sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderTrend {
    pub n_small: usize,
    pub n_large: usize,
    pub median_small: f64,
    pub median_large: f64,
    pub failures: usize,
    /// `median_large < median_small / 2`.
    pub pass: bool,
}

/// Median `|G_n(φ) - n^{-1/2} Σ ζ_i(φ)|` at two sample sizes.
pub fn remainder_trend(
    model: &TruncationModel<f64>,
    phi: &MeasurableFunction<f64>,
    n_small: usize,
    n_large: usize,
    replications: usize,
    master_seed: u64,
) -> Result<RemainderTrend> {
    let ev = InfluenceEvaluator::new(phi.clone(), model)?;
    let mut medians = Vec::with_capacity(2);
    let mut failures = 0;
    for n in [n_small, n_large] {
        let config = CltConfig::new(model.clone(), vec![phi.clone()], n, replications.max(2), master_seed);
        let values: Vec<Option<f64>> = (0..replications)
            .into_par_iter()
            .map(|r| {
                let sample = draw_fixed_n(model, n, config.seed(r)).map_err(|e| Error::in_replication(r, e))?;
                let g = config.g_values(&sample)?;
                Ok(remainders(std::slice::from_ref(&ev), &sample, &g).map(|v| v[0].abs()))
            })
            .collect::<Result<_>>()?;
        failures += values.iter().filter(|v| v.is_none()).count();
        let ok: Vec<f64> = values.into_iter().flatten().collect();
        if ok.is_empty() {
            return Err(Error::numerical("linearization remainder", f64::NAN));
        }
        medians.push(median(&ok));
    }
    Ok(RemainderTrend {
        n_small,
        n_large,
        median_small: medians[0],
        median_large: medians[1],
        failures,
        pass: medians[1] < 0.5 * medians[0],
    })
}
