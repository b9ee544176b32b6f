//! Monte Carlo checks of the uniform law of large numbers and the uniform
//! central limit theorem for `φ ↦ √n ∫ φ d(F_n - F)`.
//!
//! Replications run in parallel. Replication `r` draws its sample from
//! [`replication_seed`](crate::sampler::replication_seed)`(stream, r)`, so its
//! statistics depend only on the configuration, the master seed and `r`, and
//! results are collected in replication order.

mod clt;
mod continuity;
mod ks;
mod lln;

use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::distribution::ContinuousDistribution;
use crate::model::TruncationModel;
use crate::sampler::{mix64, replication_seed};

pub use clt::{remainder_trend, run_clt, CltConfig, CltStatistics, RemainderTrend};
pub use continuity::{probe_continuity, ContinuityRow, ContinuityTable};
pub use ks::{ks_critical_1pct, ks_standard_normal, ks_statistic};
pub use lln::{run_lln, LlnConfig, LlnRow, LlnStatistic, LlnStatistics};

/// Bracket resolution as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonRule {
    /// `ε = scale · n^(-exponent)`.
    Power { scale: f64, exponent: f64 },
    Fixed { epsilon: f64 },
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::Power {
            scale: 1.0,
            exponent: 0.25,
        }
    }
}

impl EpsilonRule {
    pub fn epsilon(&self, n: usize) -> f64 {
        match *self {
            EpsilonRule::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
            EpsilonRule::Fixed { epsilon } => epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEcho {
    pub f: ContinuousDistribution<f64>,
    pub g: ContinuousDistribution<f64>,
    pub label: String,
}

impl ModelEcho {
    pub fn of(model: &TruncationModel<f64>) -> Self {
        ModelEcho {
            f: model.f().clone(),
            g: model.g().clone(),
            label: model.label(),
        }
    }
}

/// The configuration as run, thresholds included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub model: ModelEcho,
    pub class: Option<String>,
    pub phis: Vec<String>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub epsilon_rule: Option<EpsilonRule>,
    pub delta_grid: Vec<f64>,
    pub thresholds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub rule: String,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Statistics {
    Lln(LlnStatistics),
    Clt(CltStatistics),
    Continuity(ContinuityTable),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub statistics: Statistics,
    pub verdict: Verdict,
    pub library_version: String,
    pub generator: String,
    /// Excluded from reproducibility comparisons.
    pub wall_time_seconds: f64,
}

impl ExperimentReport {
    /// Everything but the wall time.
    pub fn reproducible_part(&self) -> (&ConfigEcho, &Statistics, &Verdict) {
        (&self.config, &self.statistics, &self.verdict)
    }
}

pub(crate) fn library_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Seed of replication `r` within stream `stream` (e.g. one per sample size).
pub fn stream_seed(master: u64, stream: u64, r: usize) -> u64 {
    replication_seed(master ^ mix64(stream.wrapping_add(0xA5A5_A5A5)), r as u64)
}

/// `(median, 90th percentile)`.
pub(crate) fn median_p90(values: &[f64]) -> (f64, f64) {
    let mut d = Data::new(values.to_vec());
    (d.median(), d.percentile(90))
}

pub(crate) fn median(values: &[f64]) -> f64 {
    Data::new(values.to_vec()).median()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_rule_default() {
        assert!((EpsilonRule::default().epsilon(10_000) - 0.1).abs() < 1e-15);
        assert_eq!(EpsilonRule::Fixed { epsilon: 0.2 }.epsilon(5), 0.2);
    }

    #[test]
    fn stream_seeds_differ() {
        assert_ne!(stream_seed(1, 200, 0), stream_seed(1, 2000, 0));
        assert_ne!(stream_seed(1, 200, 0), stream_seed(1, 200, 1));
        assert_eq!(stream_seed(7, 3, 9), stream_seed(7, 3, 9));
    }
}
