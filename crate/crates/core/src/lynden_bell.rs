//! Empirical marginals, the risk-set function `C_n` and the product-limit
//! estimator of the interest distribution under left truncation.
//!
//! With `n C_n(y) = #{i : T_i <= y <= Y_i}` the estimator is
//!
//! ```text
//! F_n(y) = 1 - ∏_{distinct Y_(j) <= y} (n C_n(Y_(j)) - d_j) / (n C_n(Y_(j)))
//! ```
//!
//! where `d_j` counts the observations tied at `Y_(j)` (`d_j = 1` without
//! ties). Every risk count is an integer, so the product is accumulated exactly
//! in big-integer arithmetic and each value of `F_n` is rounded once.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::TruncatedSample;
use crate::scalar::Scalar;
use crate::step::StepFunction;

/// Risk-set summary at one distinct observed `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPoint<S> {
    pub y: S,
    /// `n C_n(y)`.
    pub at_risk: usize,
    /// Number of observations with `Y_i == y`.
    pub ties: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyndenBellFit<S> {
    pub f_n: StepFunction<S>,
    pub c_n: StepFunction<S>,
    pub f_star_n: StepFunction<S>,
    pub g_star_n: StepFunction<S>,
    pub n: usize,
    /// Non-maximal `Y` values whose factor vanished (`n C_n = d`), after which
    /// `F_n` is stuck at 1.
    pub degenerate_points: Vec<S>,
    pub has_ties: bool,
    pub risk: Vec<RiskPoint<S>>,
}

impl<S: Scalar> LyndenBellFit<S> {
    /// True when some interior factor of the product vanished.
    pub fn has_degeneracy(&self) -> bool {
        !self.degenerate_points.is_empty()
    }

    /// `(y_j, F_n(y_j) - F_n(y_j-))` over the distinct observed `y`.
    pub fn jumps(&self) -> impl Iterator<Item = (&S, S)> {
        self.f_n.jumps()
    }
}

fn sorted<S: Scalar>(it: impl Iterator<Item = S>) -> Vec<S> {
    let mut v: Vec<S> = it.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("validated sample"));
    v
}

fn distinct_with_counts<S: Scalar>(sorted: &[S]) -> Vec<(S, usize)> {
    let mut out: Vec<(S, usize)> = Vec::new();
    for x in sorted {
        match out.last_mut() {
            Some((v, c)) if v == x => *c += 1,
            _ => out.push((x.clone(), 1)),
        }
    }
    out
}

/// `(F*_n, G*_n)`: empirical distribution functions of the observed `Y` and `T`.
pub fn empirical_marginals<S: Scalar>(sample: &TruncatedSample<S>) -> Result<(StepFunction<S>, StepFunction<S>)> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok((StepFunction::ecdf(sample.ys())?, StepFunction::ecdf(sample.ts())?))
}

/// `C_n(y) = n⁻¹ #{i : T_i <= y <= Y_i}`.
///
/// The count rises at each `T_i` and falls just after each `Y_i`, so at a
/// breakpoint coinciding with some `Y_i` the value differs from the value on
/// the following gap; both are stored.
pub fn c_n<S: Scalar>(sample: &TruncatedSample<S>) -> Result<StepFunction<S>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let ts = sorted(sample.ts().cloned());
    let ys = sorted(sample.ys().cloned());
    let mut all: Vec<S> = ts.iter().chain(ys.iter()).cloned().collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("validated sample"));
    all.dedup();
    let n = S::from_count(sample.len());
    let mut values = Vec::with_capacity(all.len());
    let mut point_values = Vec::with_capacity(all.len());
    for b in &all {
        let t_le = ts.partition_point(|t| t <= b);
        let y_lt = ys.partition_point(|y| y < b);
        let y_le = ys.partition_point(|y| y <= b);
        point_values.push(S::from_count(t_le - y_lt) / n.clone());
        values.push(S::from_count(t_le - y_le) / n.clone());
    }
    StepFunction::with_point_values(all, values, point_values, S::zero())
}

/// Product-limit fit of the interest distribution.
pub fn fit<S: Scalar>(sample: &TruncatedSample<S>) -> Result<LyndenBellFit<S>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sample.len();
    let ts = sorted(sample.ts().cloned());
    let ys = sorted(sample.ys().cloned());
    let distinct = distinct_with_counts(&ys);
    let has_ties = distinct.len() < n;

    let mut survival_num = BigUint::one();
    let mut survival_den = BigUint::one();
    let mut breakpoints = Vec::with_capacity(distinct.len());
    let mut values = Vec::with_capacity(distinct.len());
    let mut risk = Vec::with_capacity(distinct.len());
    let mut degenerate_points = Vec::new();
    let last = distinct.len() - 1;
    for (j, (y, ties)) in distinct.into_iter().enumerate() {
        // T_i <= Y_i, so {Y_i < y} ⊆ {T_i <= y}
        let at_risk = ts.partition_point(|t| *t <= y) - ys.partition_point(|v| *v < y);
        debug_assert!(at_risk >= ties);
        // ∏_{k<d} (r-1-k)/(r-k) telescopes to (r-d)/r
        let keep = at_risk - ties;
        if keep == 0 && j != last {
            degenerate_points.push(y.clone());
        }
        if !survival_num.is_zero() {
            if keep == 0 {
                survival_num = BigUint::zero();
            } else if keep != at_risk {
                survival_num *= keep;
                survival_den *= at_risk;
            }
        }
        let value = if survival_num.is_zero() {
            S::one()
        } else {
            S::from_ratio(&(&survival_den - &survival_num), &survival_den)
        };
        breakpoints.push(y.clone());
        values.push(value);
        risk.push(RiskPoint { y, at_risk, ties });
    }
    let f_n = StepFunction::new(breakpoints, values, S::zero())?;
    let (f_star_n, g_star_n) = empirical_marginals(sample)?;
    Ok(LyndenBellFit {
        f_n,
        c_n: c_n(sample)?,
        f_star_n,
        g_star_n,
        n,
        degenerate_points,
        has_ties,
        risk,
    })
}
