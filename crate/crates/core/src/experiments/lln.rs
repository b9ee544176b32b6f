use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{library_version, median_p90, stream_seed, ConfigEcho, EpsilonRule, ExperimentReport, ModelEcho, Statistics, Verdict};
use crate::classes::{CoverBudget, FunctionClass};
use crate::error::{Assumption, Error, Result};
use crate::lynden_bell::fit;
use crate::model::TruncationModel;
use crate::process::{exact_sup_indicator, sup_over_class, w_n};
use crate::sampler::{draw_fixed_n, GENERATOR};

#[derive(Debug, Clone)]
pub struct LlnConfig {
    pub model: TruncationModel<f64>,
    pub class: FunctionClass<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub epsilon_rule: EpsilonRule,
    pub master_seed: u64,
    pub budget: CoverBudget,
}

impl LlnConfig {
    pub fn new(model: TruncationModel<f64>, class: FunctionClass<f64>, n_grid: Vec<usize>, replications: usize, master_seed: u64) -> Self {
        LlnConfig {
            model,
            class,
            n_grid,
            replications,
            epsilon_rule: EpsilonRule::default(),
            master_seed,
            budget: CoverBudget::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.require(Assumption::A)?;
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(Error::InvalidArgument("n_grid must be a nonempty increasing list of positive counts".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be positive".into()));
        }
        Ok(())
    }
}

/// What a per-replication number measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LlnStatistic {
    /// `sup_t |∫_{(-∞,t]} φ₀ d(F_n - F)|` for an indicator class.
    ExactIndicatorSup,
    /// `max_i |W_n(φ_i)|` over a finite class.
    ExactFiniteMax,
    /// Certified bracket bound at `ε(n)`.
    BracketBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnRow {
    pub n: usize,
    pub epsilon: f64,
    pub median: f64,
    pub p90: f64,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnStatistics {
    pub statistic: LlnStatistic,
    pub rows: Vec<LlnRow>,
}

fn replication(config: &LlnConfig, n: usize, epsilon: f64, seed: u64) -> Result<f64> {
    let sample = draw_fixed_n(&config.model, n, seed)?;
    let fit = fit(&sample)?;
    match &config.class {
        FunctionClass::Indicator(c) => Ok(exact_sup_indicator(&fit, &c.phi0, &config.model)?.sup),
        FunctionClass::Finite(c) => c
            .members
            .iter()
            .try_fold(0.0f64, |acc, m| Ok(acc.max(w_n(&fit, m, &config.model)?.abs()))),
        class => Ok(sup_over_class(&fit, class, &config.model, epsilon, &config.budget)?.upper_bound),
    }
}

/// Sup errors over `n_grid`.
///
/// PASS when the median at the largest `n` is below half the median at the
/// smallest `n` (or both are zero) and below `2 ε(n_max) + 3 / √n_max`.
pub fn run_lln(config: &LlnConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let statistic = match config.class {
        FunctionClass::Indicator(_) => LlnStatistic::ExactIndicatorSup,
        FunctionClass::Finite(_) => LlnStatistic::ExactFiniteMax,
        FunctionClass::Lipschitz(_) => LlnStatistic::BracketBound,
    };
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let epsilon = config.epsilon_rule.epsilon(n);
        let seeds: Vec<u64> = (0..config.replications)
            .map(|r| stream_seed(config.master_seed, n as u64, r))
            .collect();
        let values: Vec<f64> = seeds
            .par_iter()
            .enumerate()
            .map(|(r, &seed)| replication(config, n, epsilon, seed).map_err(|e| Error::in_replication(r, e)))
            .collect::<Result<_>>()?;
        let (median, p90) = median_p90(&values);
        rows.push(LlnRow {
            n,
            epsilon,
            median,
            p90,
            values,
            seeds,
        });
    }
    let first = &rows[0];
    let last = rows.last().expect("nonempty grid");
    let ceiling = 2.0 * last.epsilon + 3.0 / (last.n as f64).sqrt();
    let halved = last.median < 0.5 * first.median || (last.median == 0.0 && first.median == 0.0);
    let below = last.median < ceiling;
    let verdict = Verdict {
        pass: halved && below,
        rule: "median sup at the largest n below half the median at the smallest n (an operational decay \
               criterion; no rate is implied) and below 2ε(n_max) + 3/√n_max"
            .into(),
        details: vec![
            format!("median at n = {}: {}", first.n, first.median),
            format!("median at n = {}: {}", last.n, last.median),
            format!("halving: {halved}"),
            format!("ceiling {ceiling}: {below}"),
        ],
    };
    Ok(ExperimentReport {
        config: ConfigEcho {
            model: ModelEcho::of(&config.model),
            class: Some(config.class.label()),
            phis: Vec::new(),
            n_grid: config.n_grid.clone(),
            replications: config.replications,
            master_seed: config.master_seed,
            epsilon_rule: Some(config.epsilon_rule),
            delta_grid: Vec::new(),
            thresholds: vec![("halving_ratio".into(), 0.5), ("ceiling".into(), ceiling)],
        },
        statistics: Statistics::Lln(LlnStatistics { statistic, rows }),
        verdict,
        library_version: library_version(),
        generator: GENERATOR.into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}
