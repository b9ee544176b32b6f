//! The centered process `W_n(φ) = ∫ φ d(F_n - F)` and `G_n = √n W_n`.

use serde::Serialize;

use crate::classes::{CoverBudget, FunctionClass, LipschitzGrid};
use crate::error::Result;
use crate::function::MeasurableFunction;
use crate::lynden_bell::LyndenBellFit;
use crate::model::TruncationModel;
use crate::quadrature::{integrate_finite, QuadConfig};
use crate::scalar::Real;

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessEvaluation<S> {
    pub phi_label: String,
    pub w_n: S,
    pub g_n: S,
    pub n: usize,
}

/// `∫ φ dF_n = Σ_j φ(y_j) ΔF_n(y_j)`.
pub fn integrate_against_fit<S: Real>(fit: &LyndenBellFit<S>, phi: &MeasurableFunction<S>) -> S {
    if let Some(c) = phi.as_constant() {
        let total = fit.f_n.values().last().copied().unwrap_or_else(S::zero);
        return c * total;
    }
    fit.jumps().fold(S::zero(), |acc, (&y, dj)| acc + phi.eval(y) * dj)
}

/// `∫ φ dF` under the model's interest law.
pub fn integrate_against_model<S: Real>(model: &TruncationModel<S>, phi: &MeasurableFunction<S>) -> Result<S> {
    phi.integral(model.f(), &quad_cfg())
}

/// `W_n(φ)`.
pub fn w_n<S: Real>(fit: &LyndenBellFit<S>, phi: &MeasurableFunction<S>, model: &TruncationModel<S>) -> Result<S> {
    Ok(integrate_against_fit(fit, phi) - integrate_against_model(model, phi)?)
}

pub fn evaluate<S: Real>(fit: &LyndenBellFit<S>, phi: &MeasurableFunction<S>, model: &TruncationModel<S>) -> Result<ProcessEvaluation<S>> {
    let w = w_n(fit, phi, model)?;
    Ok(ProcessEvaluation {
        phi_label: phi.label().to_string(),
        w_n: w,
        g_n: S::from_usize(fit.n).expect("sample size").sqrt() * w,
        n: fit.n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endpoint {
    Lower,
    Upper,
}

/// Identifies a bracket in a cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BracketRef {
    /// Position in the materialized cover.
    Index(usize),
    /// Level sequence of a Lipschitz-grid bracket.
    Levels(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupBound<S> {
    /// `max_i max(|∫ u_i d(F_n-F)|, |∫ l_i d(F_n-F)|) + ε`.
    pub upper_bound: S,
    pub epsilon: S,
    pub witness: BracketRef,
    pub endpoint: Endpoint,
    /// `|∫ e d(F_n-F)|` at the witnessing endpoint `e`.
    pub endpoint_value: S,
}

/// Certified upper bound on `sup_{φ ∈ class} |W_n(φ)|` from an `L¹(F)`
/// cover at `ε`.
///
/// For `φ` in `[l, u]`, `∫ l d(F_n-F) - ε <= W_n(φ) <= ∫ u d(F_n-F) + ε`.
pub fn sup_over_class<S: Real>(
    fit: &LyndenBellFit<S>,
    class: &FunctionClass<S>,
    model: &TruncationModel<S>,
    epsilon: S,
    budget: &CoverBudget,
) -> Result<SupBound<S>> {
    if let FunctionClass::Lipschitz(c) = class {
        return lipschitz_sup(fit, &c.grid(epsilon)?, model, epsilon);
    }
    let cover = class.bracket_cover(epsilon, 1, model.f(), budget)?;
    let mut best: Option<(S, usize, Endpoint)> = None;
    for (i, b) in cover.brackets.iter().enumerate() {
        for (e, f) in [(Endpoint::Lower, &b.lower), (Endpoint::Upper, &b.upper)] {
            let v = w_n(fit, f, model)?.abs();
            if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                best = Some((v, i, e));
            }
        }
    }
    let (v, i, e) = best.expect("covers are nonempty");
    Ok(SupBound {
        upper_bound: v + epsilon,
        epsilon,
        witness: BracketRef::Index(i),
        endpoint: e,
        endpoint_value: v,
    })
}

/// Signed `(F_n - F)`-mass of every grid cell.
pub fn cell_masses<S: Real>(fit: &LyndenBellFit<S>, grid: &LipschitzGrid<S>, model: &TruncationModel<S>) -> Vec<S> {
    let m = grid.cells();
    (0..m)
        .map(|k| {
            let lo = if k == 0 { S::neg_infinity() } else { grid.nodes[k] };
            let hi = if k + 1 == m { S::infinity() } else { grid.nodes[k + 1] };
            let emp = fit.f_n.left_limit(&hi) - fit.f_n.left_limit(&lo);
            let pop = model.f().cdf(hi) - model.f().cdf(lo);
            emp - pop
        })
        .collect()
}

/// Optimum of `Σ_k value(j_k) ν_k` over admissible level sequences.
fn viterbi<S: Real>(grid: &LipschitzGrid<S>, nu: &[S], upper: bool, maximize: bool) -> (S, Vec<usize>) {
    let levels = grid.levels;
    let value = |j: usize| if upper { grid.upper(j) } else { grid.lower(j) };
    let better = |a: S, b: S| if maximize { a > b } else { a < b };
    let mut score: Vec<S> = (0..levels).map(|j| value(j) * nu[0]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(nu.len());
    for &nk in &nu[1..] {
        let mut next = Vec::with_capacity(levels);
        let mut from = Vec::with_capacity(levels);
        for j in 0..levels {
            let a = j.saturating_sub(grid.max_step);
            let b = (j + grid.max_step + 1).min(levels);
            let mut arg = a;
            for i in a + 1..b {
                if better(score[i], score[arg]) {
                    arg = i;
                }
            }
            next.push(score[arg] + value(j) * nk);
            from.push(arg);
        }
        score = next;
        back.push(from);
    }
    let mut arg = 0;
    for j in 1..levels {
        if better(score[j], score[arg]) {
            arg = j;
        }
    }
    let best = score[arg];
    let mut path = vec![arg];
    for from in back.iter().rev() {
        arg = from[arg];
        path.push(arg);
    }
    path.reverse();
    (best, path)
}

fn lipschitz_sup<S: Real>(fit: &LyndenBellFit<S>, grid: &LipschitzGrid<S>, model: &TruncationModel<S>, epsilon: S) -> Result<SupBound<S>> {
    let nu = cell_masses(fit, grid, model);
    let mut best: Option<(S, Vec<usize>, Endpoint)> = None;
    for (endpoint, upper) in [(Endpoint::Lower, false), (Endpoint::Upper, true)] {
        for maximize in [true, false] {
            let (v, path) = viterbi(grid, &nu, upper, maximize);
            let v = v.abs();
            if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                best = Some((v, path, endpoint));
            }
        }
    }
    let (v, path, endpoint) = best.expect("four candidates");
    Ok(SupBound {
        upper_bound: v + epsilon,
        epsilon,
        witness: BracketRef::Levels(path),
        endpoint,
        endpoint_value: v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorSup<S> {
    /// `sup_t |∫_{(-∞,t]} φ₀ d(F_n - F)|`.
    pub sup: S,
    /// Where the supremum is attained.
    pub at: S,
    /// True when it is attained as `t ↑ at` rather than at `at` itself.
    pub from_left: bool,
}

const SIGN_GRID: usize = 2048;

/// Points where `φ₀` changes sign on the support of `F`.
fn sign_changes<S: Real>(phi0: &MeasurableFunction<S>, model: &TruncationModel<S>) -> Vec<S> {
    let f = model.f();
    let m = S::from_usize(SIGN_GRID).expect("small");
    let xs: Vec<S> = (0..SIGN_GRID)
        .map(|k| f.quantile((S::from_usize(k).expect("small") + S::lit(0.5)) / m))
        .collect();
    let sign = |v: S| {
        if v > S::zero() {
            1
        } else if v < S::zero() {
            -1
        } else {
            0
        }
    };
    let mut out = Vec::new();
    for w in xs.windows(2) {
        let (sa, sb) = (sign(phi0.eval(w[0])), sign(phi0.eval(w[1])));
        if sa == 0 {
            out.push(w[0]);
        }
        if sa != 0 && sb != 0 && sa != sb {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..200 {
                let mid = (lo + hi) / S::lit(2.0);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sign(phi0.eval(mid)) == sa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(lo);
            out.push(hi);
        }
    }
    out
}

/// `sup_t |∫_{(-∞,t]} φ₀ d(F_n - F)|`, exactly up to quadrature error.
///
/// Between jumps of `F_n` the empirical part is constant and the population
/// part `A(t) = ∫_{(-∞,t]} φ₀ dF` is monotone except where `φ₀` changes sign,
/// so the candidates are both sides of every jump, the sign changes and
/// breakpoints of `φ₀`, and `t = ±∞`.
pub fn exact_sup_indicator<S: Real>(fit: &LyndenBellFit<S>, phi0: &MeasurableFunction<S>, model: &TruncationModel<S>) -> Result<IndicatorSup<S>> {
    let f = model.f();
    let jumps: Vec<(S, S)> = fit.jumps().map(|(&y, d)| (y, d)).collect();
    let mut cands: Vec<S> = jumps.iter().map(|(y, _)| *y).collect();
    if phi0.as_constant().is_none() {
        cands.extend(phi0.breakpoints().iter().copied());
        cands.extend(sign_changes(phi0, model));
    }
    cands.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
    cands.dedup();

    // A at every candidate
    let pop: Vec<S> = if let Some(c) = phi0.as_constant() {
        cands.iter().map(|&t| c * f.cdf(t)).collect()
    } else {
        let mut pbreaks: Vec<S> = phi0.breakpoints().iter().map(|&b| f.cdf(b)).collect();
        pbreaks.extend(f.knot_probabilities());
        let h = |p: S| phi0.eval(f.quantile(p));
        let mut acc = S::zero();
        let mut prev = S::zero();
        let mut out = Vec::with_capacity(cands.len());
        for &t in &cands {
            let p = f.cdf(t);
            if p > prev {
                acc = acc + integrate_finite(h, prev, p, &pbreaks, &quad_cfg())?.value;
                prev = p;
            }
            out.push(acc);
        }
        out
    };
    let total_pop = match phi0.as_constant() {
        Some(c) => c,
        None => integrate_against_model(model, phi0)?,
    };

    let mut best = IndicatorSup {
        sup: S::zero(),
        at: S::neg_infinity(),
        from_left: false,
    };
    let mut consider = |v: S, at: S, from_left: bool| {
        if v.abs() > best.sup {
            best = IndicatorSup {
                sup: v.abs(),
                at,
                from_left,
            };
        }
    };
    let constant = phi0.as_constant();
    let mut emp = S::zero();
    let mut j = 0;
    for (&t, &a) in cands.iter().zip(&pop) {
        consider(emp - a, t, true);
        if j < jumps.len() && jumps[j].0 == t {
            emp = match constant {
                Some(c) => c * fit.f_n.values()[j],
                None => emp + phi0.eval(t) * jumps[j].1,
            };
            j += 1;
        }
        consider(emp - a, t, false);
    }
    consider(emp - total_pop, S::infinity(), false);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::ContinuousDistribution;
    use crate::lynden_bell::fit;
    use crate::sampler::TruncatedSample;

    fn model() -> TruncationModel<f64> {
        TruncationModel::new(
            ContinuousDistribution::uniform(0.0, 1.0).unwrap(),
            ContinuousDistribution::uniform(-0.5, 0.5).unwrap(),
        )
        .unwrap()
    }

    fn hand_fit() -> LyndenBellFit<f64> {
        fit(&TruncatedSample::from_pairs(vec![(0.1, 0.5), (0.2, 0.3), (0.4, 0.9)]).unwrap()).unwrap()
    }

    #[test]
    fn hand_sample_integrals() {
        let fit = hand_fit();
        let ind = MeasurableFunction::indicator(0.4);
        assert_eq!(integrate_against_fit(&fit, &ind), 0.5);
        assert_eq!(integrate_against_fit(&fit, &MeasurableFunction::constant(1.0)), 1.0);
        assert_eq!(integrate_against_fit(&fit, &MeasurableFunction::zero()), 0.0);
        let w = w_n(&fit, &ind, &model()).unwrap();
        assert!((w - 0.1).abs() < 1e-12);
        assert!(w_n(&fit, &MeasurableFunction::constant(2.5), &model()).unwrap().abs() < 1e-12);
        let e = evaluate(&fit, &ind, &model()).unwrap();
        assert_eq!(e.g_n, 3f64.sqrt() * e.w_n);
    }

    #[test]
    fn hand_sample_exact_sup() {
        // the supremum is approached as t ↑ 0.3, where F_n = 0 and F = 0.3
        let s = exact_sup_indicator(&hand_fit(), &MeasurableFunction::constant(1.0), &model()).unwrap();
        assert!((s.sup - 0.3).abs() < 1e-15);
        assert_eq!(s.at, 0.3);
        assert!(s.from_left);
        let zero = exact_sup_indicator(&hand_fit(), &MeasurableFunction::zero(), &model()).unwrap();
        assert_eq!(zero.sup, 0.0);
    }

    #[test]
    fn finite_class_bound_is_exact_plus_epsilon() {
        let fit = hand_fit();
        let members = vec![MeasurableFunction::indicator(0.4), MeasurableFunction::indicator(0.6)];
        let class = FunctionClass::finite(members.clone()).unwrap();
        let b = sup_over_class(&fit, &class, &model(), 0.01, &CoverBudget::default()).unwrap();
        let exact = members
            .iter()
            .map(|m| w_n(&fit, m, &model()).unwrap().abs())
            .fold(0.0, f64::max);
        assert!((b.upper_bound - (exact + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn indicator_bound_dominates_exact_sup() {
        let fit = hand_fit();
        let class = FunctionClass::indicator(MeasurableFunction::constant(1.0));
        let b = sup_over_class(&fit, &class, &model(), 0.05, &CoverBudget::default()).unwrap();
        let s = exact_sup_indicator(&fit, &MeasurableFunction::constant(1.0), &model()).unwrap();
        assert!(b.upper_bound >= s.sup);
    }

    #[test]
    fn lipschitz_dp_matches_enumeration() {
        let fit = hand_fit();
        let class = FunctionClass::lipschitz(0.0, 1.0, 1.0, 1.0).unwrap();
        let m = model();
        let dp = sup_over_class(&fit, &class, &m, 0.5, &CoverBudget::default()).unwrap();
        let cover = class.bracket_cover(0.5, 1, m.f(), &CoverBudget::default()).unwrap();
        let mut brute: f64 = 0.0;
        for b in &cover.brackets {
            brute = brute.max(w_n(&fit, &b.lower, &m).unwrap().abs());
            brute = brute.max(w_n(&fit, &b.upper, &m).unwrap().abs());
        }
        assert!((dp.endpoint_value - brute).abs() < 1e-9, "{} vs {brute}", dp.endpoint_value);
    }
}
