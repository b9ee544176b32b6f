use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::clt::echo;
use super::{library_version, CltConfig, ExperimentReport, Statistics, Verdict};
use crate::classes::d_metric;
use crate::error::{Error, Result};
use crate::sampler::{draw_fixed_n, GENERATOR};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub delta: f64,
    /// Index pairs `(i, j)`, `i < j`, with `d(φ_i, φ_j) < δ`.
    pub pairs: Vec<(usize, usize)>,
    pub exceedances: usize,
    pub frequency: f64,
    pub standard_error: f64,
    /// Per replication `max |G_n(φ_i) - G_n(φ_j)|` over the pairs.
    pub increments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityTable {
    pub n: usize,
    pub epsilon0: f64,
    /// `d(φ_i, φ_j)` under `F`.
    pub distances: Vec<Vec<f64>>,
    pub rows: Vec<ContinuityRow>,
    /// Frequencies never rise by more than two combined standard errors as
    /// `δ` decreases along the grid.
    pub monotone: bool,
    pub seeds: Vec<u64>,
}

/// Exceedance frequency of `max |G_n(φ_i) - G_n(φ_j)| > ε₀` over pairs with
/// `d(φ_i, φ_j) < δ`, for each `δ` of the (decreasing) grid.
pub fn probe_continuity(config: &CltConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let k = config.phis.len();
    if k < 2 {
        return Err(Error::InvalidArgument("the continuity probe needs at least two functions".into()));
    }
    if config.delta_grid.is_empty() || config.delta_grid.windows(2).any(|w| w[0] <= w[1]) || config.delta_grid.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("delta_grid must be a nonempty decreasing list of positive reals".into()));
    }
    let start = Instant::now();
    let base = config.model.f();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = d_metric(&config.phis[i], &config.phis[j], base)?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let pairs_under = |delta: f64| -> Vec<(usize, usize)> {
        (0..k)
            .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
            .filter(|&(i, j)| distances[i][j] < delta)
            .collect()
    };
    let smallest = *config.delta_grid.last().expect("nonempty");
    if pairs_under(smallest).is_empty() {
        return Err(Error::InvalidArgument(format!("no pair of functions lies within d < {smallest}")));
    }

    let seeds: Vec<u64> = (0..config.replications).map(|r| config.seed(r)).collect();
    let g: Vec<Vec<f64>> = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            draw_fixed_n(&config.model, config.n, seed)
                .and_then(|s| config.g_values(&s))
                .map_err(|e| Error::in_replication(r, e))
        })
        .collect::<Result<_>>()?;

    let rr = config.replications as f64;
    let rows: Vec<ContinuityRow> = config
        .delta_grid
        .iter()
        .map(|&delta| {
            let pairs = pairs_under(delta);
            let increments: Vec<f64> = g
                .iter()
                .map(|gr| pairs.iter().map(|&(i, j)| (gr[i] - gr[j]).abs()).fold(0.0, f64::max))
                .collect();
            let exceedances = increments.iter().filter(|&&v| v > config.epsilon0).count();
            let frequency = exceedances as f64 / rr;
            ContinuityRow {
                delta,
                pairs,
                exceedances,
                frequency,
                standard_error: (frequency * (1.0 - frequency) / rr).sqrt(),
                increments,
            }
        })
        .collect();
    let monotone = rows.windows(2).all(|w| {
        let slack = 2.0 * (w[0].standard_error.powi(2) + w[1].standard_error.powi(2)).sqrt();
        w[1].frequency <= w[0].frequency + slack
    });
    let details = rows
        .iter()
        .map(|r| format!("δ = {}: {} pairs, frequency {} ± {}", r.delta, r.pairs.len(), r.frequency, r.standard_error))
        .collect();
    let verdict = Verdict {
        pass: monotone,
        rule: format!(
            "exceedance frequency of max |G_n(φ_i) - G_n(φ_j)| > {} nonincreasing as δ decreases, within 2 Monte Carlo standard errors",
            config.epsilon0
        ),
        details,
    };
    Ok(ExperimentReport {
        config: echo(config, vec![("epsilon0".into(), config.epsilon0)]),
        statistics: Statistics::Continuity(ContinuityTable {
            n: config.n,
            epsilon0: config.epsilon0,
            distances,
            rows,
            monotone,
            seeds,
        }),
        verdict,
        library_version: library_version(),
        generator: GENERATOR.into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}
