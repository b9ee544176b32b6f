//! Function classes with explicit bracket covers and the bracketing entropy
//! integral.
//!
//! Three families are built in:
//!
//! * indicator classes `{φ₀ 1(-∞, t] : t ∈ ℝ}` for an integrable `φ₀`;
//! * bounded Lipschitz functions on a compact interval, extended as constants
//!   outside it;
//! * finite explicit lists.
//!
//! Covers are constructive, so their size is an upper bound on the bracketing
//! number, not the minimum.

use rand::Rng;
use serde::Serialize;

use crate::distribution::ContinuousDistribution;
use crate::error::{Error, Result};
use crate::function::MeasurableFunction;
use crate::quadrature::QuadConfig;
use crate::scalar::Real;

/// Number of base-measure quantiles used for pointwise spot checks.
pub const CHECK_POINTS: usize = 1000;

/// Slack allowed between a bracket's gap norm and the requested `ε`.
pub const GAP_TOLERANCE: f64 = 1e-8;

/// Smallest `ε` visited by [`entropy_integral`].
pub const EPSILON_MIN: f64 = 1e-3;

/// Limits on cover construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverBudget {
    /// Most brackets a cover may materialize.
    pub max_brackets: usize,
    /// Largest `log N` the counting routines will report.
    pub max_log_size: f64,
}

impl Default for CoverBudget {
    fn default() -> Self {
        CoverBudget {
            max_brackets: 100_000,
            max_log_size: 1e7,
        }
    }
}

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_intervals: 4000,
    }
}

/// Quantiles of `base` at `(k + 1/2) / m` plus the finite `extra` points.
pub fn check_grid<S: Real>(base: &ContinuousDistribution<S>, extra: &[S]) -> Vec<S> {
    let m = S::from_usize(CHECK_POINTS).expect("small");
    let mut pts: Vec<S> = (0..CHECK_POINTS)
        .map(|k| base.quantile((S::from_usize(k).expect("small") + S::lit(0.5)) / m))
        .collect();
    pts.extend(extra.iter().copied().filter(|x| x.is_finite()));
    pts
}

/// `[l, u]`: every `φ` with `l <= φ <= u` pointwise.
#[derive(Debug, Clone)]
pub struct Bracket<S> {
    pub lower: MeasurableFunction<S>,
    pub upper: MeasurableFunction<S>,
}

impl<S: Real> Bracket<S> {
    /// Builds a bracket after checking `lower <= upper` on the quantile grid
    /// of `base` and at both functions' breakpoints.
    pub fn new(lower: MeasurableFunction<S>, upper: MeasurableFunction<S>, base: &ContinuousDistribution<S>) -> Result<Self> {
        let mut extra = lower.breakpoints().to_vec();
        extra.extend_from_slice(upper.breakpoints());
        for x in check_grid(base, &extra) {
            let (l, u) = (lower.eval(x), upper.eval(x));
            if !(l <= u) {
                return Err(Error::InvalidArgument(format!(
                    "bracket [{}, {}] is not ordered at x = {x}: {l} > {u}",
                    lower.label(),
                    upper.label()
                )));
            }
        }
        Ok(Bracket { lower, upper })
    }

    /// Builds a bracket whose ordering holds by construction.
    pub fn new_unchecked(lower: MeasurableFunction<S>, upper: MeasurableFunction<S>) -> Self {
        Bracket { lower, upper }
    }

    /// `[φ, φ]`.
    pub fn degenerate(phi: MeasurableFunction<S>) -> Self {
        Bracket {
            lower: phi.clone(),
            upper: phi,
        }
    }

    /// `‖u - l‖_p` under `base`.
    pub fn gap_norm(&self, p: u32, base: &ContinuousDistribution<S>) -> Result<S> {
        self.upper.sub(&self.lower).lp_norm(p, base, &quad_cfg())
    }

    /// True when `l(x) - tol <= φ(x) <= u(x) + tol` at every point.
    pub fn contains(&self, phi: &MeasurableFunction<S>, points: &[S], tol: S) -> bool {
        points.iter().all(|&x| {
            let v = phi.eval(x);
            self.lower.eval(x) - tol <= v && v <= self.upper.eval(x) + tol
        })
    }
}

/// A finite set of `ε`-brackets in `L^p(base)`.
#[derive(Debug, Clone)]
pub struct BracketCover<S> {
    pub epsilon: S,
    pub p: u32,
    pub brackets: Vec<Bracket<S>>,
    pub base: ContinuousDistribution<S>,
    /// `‖u_i - l_i‖_p` per bracket.
    pub gap_norms: Vec<S>,
}

impl<S: Real> BracketCover<S> {
    /// Computes every gap norm and rejects the cover if one exceeds `ε`.
    pub fn new(epsilon: S, p: u32, brackets: Vec<Bracket<S>>, base: ContinuousDistribution<S>) -> Result<Self> {
        validate_norm_order(p)?;
        let mut gap_norms = Vec::with_capacity(brackets.len());
        for (i, b) in brackets.iter().enumerate() {
            let g = b.gap_norm(p, &base)?;
            if g > epsilon + S::lit(GAP_TOLERANCE) {
                return Err(Error::InvalidArgument(format!(
                    "bracket {i} has L{p} gap {g} > ε = {epsilon}"
                )));
            }
            gap_norms.push(g);
        }
        Ok(BracketCover {
            epsilon,
            p,
            brackets,
            base,
            gap_norms,
        })
    }

    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    /// Index of the first bracket containing `phi` on the check grid.
    pub fn locate(&self, phi: &MeasurableFunction<S>) -> Option<usize> {
        let tol = S::lit(1e-12);
        let mut extra = phi.breakpoints().to_vec();
        for b in &self.brackets {
            extra.extend_from_slice(b.lower.breakpoints());
            extra.extend_from_slice(b.upper.breakpoints());
        }
        extra.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        extra.dedup();
        let points = check_grid(&self.base, &extra);
        self.brackets.iter().position(|b| b.contains(phi, &points, tol))
    }
}

fn validate_norm_order(p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("norm order must be 1 or 2, got {p}")))
    }
}

fn validate_epsilon<S: Real>(epsilon: S) -> Result<()> {
    if epsilon > S::zero() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("ε must be positive, got {epsilon}")))
    }
}

fn budget_error(what: &str, limit: f64) -> Error {
    Error::Budget {
        what: what.to_string(),
        limit,
        partial: None,
    }
}

/// `{φ₀ 1(-∞, t] : t ∈ [-∞, ∞]}`.
#[derive(Debug, Clone)]
pub struct IndicatorClass<S> {
    pub phi0: MeasurableFunction<S>,
}

impl<S: Real> IndicatorClass<S> {
    pub fn new(phi0: MeasurableFunction<S>) -> Self {
        IndicatorClass { phi0 }
    }

    pub fn member(&self, t: S) -> MeasurableFunction<S> {
        if t == S::infinity() {
            return self.phi0.clone();
        }
        if t == S::neg_infinity() {
            return MeasurableFunction::zero();
        }
        MeasurableFunction::truncated_at(&self.phi0, t)
    }

    /// `∫ |φ₀|^p dF`.
    pub fn mass(&self, p: u32, base: &ContinuousDistribution<S>) -> Result<S> {
        Ok(self.phi0.lp_norm(p, base, &quad_cfg())?.powi(p as i32))
    }

    fn piece_count(&self, epsilon: S, p: u32, base: &ContinuousDistribution<S>) -> Result<(S, f64)> {
        let mass = self.mass(p, base)?;
        let target = epsilon.powi(p as i32);
        let raw = (mass / target).to_f64_lossy();
        // Constant weights cut at exact quantiles. Otherwise cuts come from root
        // finding, so the per-piece mass is shrunk slightly to keep every gap
        // within ε despite quadrature error.
        let k = if self.phi0.as_constant().is_some() {
            (raw * (1.0 - 1e-12)).ceil()
        } else {
            (raw * (1.0 + 1e-6)).ceil()
        };
        let k = k.max(1.0);
        Ok((mass, k))
    }

    /// Interior cut points `t_1 < … < t_{k-1}` splitting `∫ |φ₀|^p dF` into
    /// `k` equal pieces.
    pub fn cut_points(&self, epsilon: S, p: u32, base: &ContinuousDistribution<S>, budget: &CoverBudget) -> Result<Vec<S>> {
        validate_epsilon(epsilon)?;
        validate_norm_order(p)?;
        let (mass, k) = self.piece_count(epsilon, p, base)?;
        if k > budget.max_brackets as f64 {
            return Err(budget_error("indicator cover brackets", budget.max_brackets as f64));
        }
        let k = k as usize;
        if mass == S::zero() || k == 1 {
            return Ok(Vec::new());
        }
        let kk = S::from_usize(k).expect("bounded by budget");
        if self.phi0.as_constant().is_some() {
            return Ok((1..k)
                .map(|j| base.quantile(S::from_usize(j).expect("small") / kk))
                .collect());
        }
        let cum = CumulativeWeight::new(&self.phi0, p, base)?;
        (1..k)
            .map(|j| {
                let target = mass * S::from_usize(j).expect("small") / kk;
                Ok(base.quantile(cum.inverse(target)?))
            })
            .collect()
    }

    /// Bracket between `φ₀ 1(-∞, a]` and `φ₀ 1(-∞, b]` for `a <= b`.
    pub fn bracket_between(&self, a: S, b: S) -> Bracket<S> {
        let pos = self.phi0.positive_part();
        let neg = self.phi0.negative_part();
        let member = |f: &MeasurableFunction<S>, t: S| IndicatorClass::new(f.clone()).member(t);
        let lower = member(&pos, a).sub(&member(&neg, b));
        let upper = member(&pos, b).sub(&member(&neg, a));
        Bracket::new_unchecked(
            lower.relabel(format!("lower[{}; {a}, {b}]", self.phi0.label())),
            upper.relabel(format!("upper[{}; {a}, {b}]", self.phi0.label())),
        )
    }

    /// Brackets over consecutive cells of `-∞ < t_1 < … < t_{k-1} < ∞`.
    pub fn brackets_from_cuts(&self, cuts: &[S]) -> Vec<Bracket<S>> {
        let mut ends = Vec::with_capacity(cuts.len() + 2);
        ends.push(S::neg_infinity());
        ends.extend_from_slice(cuts);
        ends.push(S::infinity());
        ends.windows(2).map(|w| self.bracket_between(w[0], w[1])).collect()
    }
}

/// `p ↦ ∫_0^p |φ₀(Q(r))|^q dr`, tabulated on equal probability cells.
struct CumulativeWeight<'a, S: Real> {
    weight: Box<dyn Fn(S) -> S + 'a>,
    pbreaks: Vec<S>,
    cells: Vec<S>,
    table: Vec<S>,
}

impl<'a, S: Real> CumulativeWeight<'a, S> {
    const CELLS: usize = 512;

    fn new(phi0: &'a MeasurableFunction<S>, q: u32, base: &'a ContinuousDistribution<S>) -> Result<Self> {
        let weight: Box<dyn Fn(S) -> S + 'a> = Box::new(move |p: S| phi0.eval(base.quantile(p)).abs().powi(q as i32));
        let mut pbreaks: Vec<S> = phi0.breakpoints().iter().map(|&b| base.cdf(b)).collect();
        pbreaks.extend(base.knot_probabilities());
        let n = S::from_usize(Self::CELLS).expect("small");
        let cells: Vec<S> = (0..=Self::CELLS).map(|i| S::from_usize(i).expect("small") / n).collect();
        let mut table = vec![S::zero()];
        let mut acc = S::zero();
        for w in cells.windows(2) {
            acc = acc + crate::quadrature::integrate_finite(&weight, w[0], w[1], &pbreaks, &quad_cfg())?.value;
            table.push(acc);
        }
        Ok(CumulativeWeight {
            weight,
            pbreaks,
            cells,
            table,
        })
    }

    fn partial(&self, cell: usize, p: S) -> Result<S> {
        Ok(self.table[cell]
            + crate::quadrature::integrate_finite(&self.weight, self.cells[cell], p, &self.pbreaks, &quad_cfg())?.value)
    }

    /// Smallest `p` with cumulative weight `>= target`, by bisection.
    fn inverse(&self, target: S) -> Result<S> {
        let cell = self.table.partition_point(|&v| v < target).clamp(1, Self::CELLS) - 1;
        let (mut lo, mut hi) = (self.cells[cell], self.cells[cell + 1]);
        for _ in 0..200 {
            let mid = (lo + hi) / S::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.partial(cell, mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// `L`-Lipschitz functions on `[lo, hi]` bounded by `bound`, constant outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzClass<S> {
    pub lo: S,
    pub hi: S,
    pub bound: S,
    pub lipschitz: S,
}

/// Grid underlying a Lipschitz cover at one `ε`.
///
/// Cell 0 is `(-∞, x_1)`, cell `k` is `[x_k, x_{k+1})` and the last cell is
/// `[x_m, ∞)`. A bracket is a sequence of levels `j_0, …, j_m` with
/// consecutive levels at most `max_step` apart; on cell `k` it spans
/// `[lower(j_k), upper(j_k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzGrid<S> {
    pub nodes: Vec<S>,
    pub eta: S,
    pub h: S,
    pub levels: usize,
    pub max_step: usize,
    bound: S,
    lipschitz: S,
}

impl<S: Real> LipschitzGrid<S> {
    pub fn cells(&self) -> usize {
        self.nodes.len()
    }

    pub fn lower(&self, j: usize) -> S {
        let b = self.bound;
        (-b + S::from_usize(j).expect("small") * self.eta - self.lipschitz * self.h).max(-b)
    }

    pub fn upper(&self, j: usize) -> S {
        let b = self.bound;
        (-b + S::from_usize(j + 1).expect("small") * self.eta + self.lipschitz * self.h).min(b)
    }

    /// Level of a function value.
    pub fn level(&self, v: S) -> usize {
        let j = ((v + self.bound) / self.eta).floor();
        j.max(S::zero()).to_usize().unwrap_or(0).min(self.levels - 1)
    }

    /// Cell containing `x`.
    pub fn cell_of(&self, x: S) -> usize {
        self.nodes.partition_point(|&n| n <= x).max(1) - 1
    }

    /// Level sequence of a class member.
    pub fn levels_of(&self, phi: &MeasurableFunction<S>) -> Vec<usize> {
        self.nodes.iter().map(|&x| self.level(phi.eval(x))).collect()
    }

    /// `log` of the number of admissible level sequences.
    pub fn log_count(&self) -> f64 {
        let mut counts = vec![1.0f64; self.levels];
        let mut log_scale = 0.0;
        for _ in 1..self.nodes.len() {
            let mut prefix = vec![0.0; self.levels + 1];
            for j in 0..self.levels {
                prefix[j + 1] = prefix[j] + counts[j];
            }
            let mut next = vec![0.0; self.levels];
            for (j, slot) in next.iter_mut().enumerate() {
                let a = j.saturating_sub(self.max_step);
                let b = (j + self.max_step + 1).min(self.levels);
                *slot = prefix[b] - prefix[a];
            }
            let top = next.iter().cloned().fold(0.0, f64::max);
            log_scale += top.ln();
            counts = next.into_iter().map(|c| c / top).collect();
        }
        log_scale + counts.iter().sum::<f64>().ln()
    }

    /// Step function equal to `value(j_k)` on cell `k`.
    pub fn step(&self, levels: &[usize], upper: bool, label: String) -> MeasurableFunction<S> {
        let values: Vec<S> = levels
            .iter()
            .map(|&j| if upper { self.upper(j) } else { self.lower(j) })
            .collect();
        let nodes = self.nodes.clone();
        let breaks = nodes[1..].to_vec();
        MeasurableFunction::new(label, move |x| {
            let k = nodes.partition_point(|&n| n <= x).max(1) - 1;
            values[k]
        })
        .with_breakpoints(breaks)
    }

    pub fn bracket(&self, levels: &[usize]) -> Bracket<S> {
        let tag = levels.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",");
        Bracket::new_unchecked(
            self.step(levels, false, format!("lipschitz-lower[{tag}]")),
            self.step(levels, true, format!("lipschitz-upper[{tag}]")),
        )
    }

    /// Every admissible level sequence, in lexicographic order.
    pub fn enumerate(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.nodes.len());
        self.extend(&mut current, &mut out);
        out
    }

    fn extend(&self, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == self.nodes.len() {
            out.push(current.clone());
            return;
        }
        let (a, b) = match current.last() {
            None => (0, self.levels),
            Some(&j) => (j.saturating_sub(self.max_step), (j + self.max_step + 1).min(self.levels)),
        };
        for j in a..b {
            current.push(j);
            self.extend(current, out);
            current.pop();
        }
    }
}

impl<S: Real> LipschitzClass<S> {
    pub fn new(lo: S, hi: S, bound: S, lipschitz: S) -> Result<Self> {
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("Lipschitz class needs a finite interval, got [{lo}, {hi}]")));
        }
        if !(bound > S::zero() && bound.is_finite() && lipschitz >= S::zero() && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz class needs bound > 0 and constant >= 0, got {bound}, {lipschitz}"
            )));
        }
        Ok(LipschitzClass {
            lo,
            hi,
            bound,
            lipschitz,
        })
    }

    /// Grid for an `ε`-cover in sup norm (hence in every `L^p`).
    pub fn grid(&self, epsilon: S) -> Result<LipschitzGrid<S>> {
        validate_epsilon(epsilon)?;
        let eta = epsilon / S::lit(2.0);
        let width = self.hi - self.lo;
        let m = if self.lipschitz == S::zero() || width == S::zero() {
            1
        } else {
            (width * S::lit(4.0) * self.lipschitz / epsilon).ceil().to_usize().ok_or_else(|| budget_error("Lipschitz grid nodes", f64::MAX))?.max(1)
        };
        let mm = S::from_usize(m).expect("grid size");
        let h = width / mm;
        let nodes: Vec<S> = (0..=m)
            .map(|k| if k == m { self.hi } else { self.lo + width * S::from_usize(k).expect("grid size") / mm })
            .collect();
        let levels = ((S::lit(2.0) * self.bound / eta).floor().to_usize().unwrap_or(usize::MAX - 1)) + 1;
        let max_step = (self.lipschitz * h / eta).floor().to_usize().unwrap_or(0) + 1;
        Ok(LipschitzGrid {
            nodes,
            eta,
            h,
            levels,
            max_step,
            bound: self.bound,
            lipschitz: self.lipschitz,
        })
    }

    /// Piecewise-linear member through `(x_i, v_i)` on an equispaced grid of
    /// `[lo, hi]`.
    pub fn piecewise_linear(&self, values: Vec<S>) -> Result<MeasurableFunction<S>> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument("need at least two knot values".into()));
        }
        let k = values.len() - 1;
        let step = (self.hi - self.lo) / S::from_usize(k).expect("small");
        let tol = S::lit(1e-12);
        for w in values.windows(2) {
            if (w[1] - w[0]).abs() > self.lipschitz * step + tol {
                return Err(Error::InvalidArgument("knot values violate the Lipschitz bound".into()));
            }
        }
        if values.iter().any(|v| v.abs() > self.bound) {
            return Err(Error::InvalidArgument("knot values exceed the bound".into()));
        }
        let (lo, hi) = (self.lo, self.hi);
        let knots: Vec<S> = (0..=k).map(|i| lo + step * S::from_usize(i).expect("small")).collect();
        let label = format!("piecewise-linear[{}]", values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        let breaks = knots.clone();
        Ok(MeasurableFunction::new(label, move |x| {
            if x <= lo || step == S::zero() {
                return values[0];
            }
            if x >= hi {
                return values[k];
            }
            let i = ((x - lo) / step).floor().to_usize().unwrap_or(0).min(k - 1);
            let frac = (x - knots[i]) / step;
            values[i] + (values[i + 1] - values[i]) * frac
        })
        .with_breakpoints(breaks))
    }

    /// Random piecewise-linear member with 20 pieces.
    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R) -> MeasurableFunction<S> {
        let pieces = 20;
        let step = (self.hi - self.lo) / S::from_usize(pieces).expect("small");
        let max_jump = (self.lipschitz * step).to_f64_lossy();
        let b = self.bound.to_f64_lossy();
        let mut v = rng.random_range(-b..=b);
        let mut values = vec![S::lit(v)];
        for _ in 0..pieces {
            let d = if max_jump > 0.0 { rng.random_range(-max_jump..=max_jump) } else { 0.0 };
            let proposed = (v + d).clamp(-b, b);
            // clamping keeps the step within the Lipschitz bound
            let next = S::lit(proposed);
            let prev = *values.last().expect("nonempty");
            let limit = self.lipschitz * step;
            let next = next.max(prev - limit).min(prev + limit).max(-self.bound).min(self.bound);
            v = next.to_f64_lossy();
            values.push(next);
        }
        self.piecewise_linear(values).expect("constructed within bounds")
    }
}

/// A finite list of functions.
#[derive(Debug, Clone)]
pub struct FiniteClass<S> {
    pub members: Vec<MeasurableFunction<S>>,
}

#[derive(Debug, Clone)]
pub enum FunctionClass<S> {
    Indicator(IndicatorClass<S>),
    Lipschitz(LipschitzClass<S>),
    Finite(FiniteClass<S>),
}

impl<S: Real> FunctionClass<S> {
    pub fn indicator(phi0: MeasurableFunction<S>) -> Self {
        FunctionClass::Indicator(IndicatorClass::new(phi0))
    }

    pub fn lipschitz(lo: S, hi: S, bound: S, lipschitz: S) -> Result<Self> {
        Ok(FunctionClass::Lipschitz(LipschitzClass::new(lo, hi, bound, lipschitz)?))
    }

    pub fn finite(members: Vec<MeasurableFunction<S>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("finite class needs at least one member".into()));
        }
        Ok(FunctionClass::Finite(FiniteClass { members }))
    }

    pub fn label(&self) -> String {
        match self {
            FunctionClass::Indicator(c) => format!("indicator class of {}", c.phi0.label()),
            FunctionClass::Lipschitz(c) => format!(
                "Lipschitz({}) class on [{}, {}] bounded by {}",
                c.lipschitz, c.lo, c.hi, c.bound
            ),
            FunctionClass::Finite(c) => format!("finite class of {} functions", c.members.len()),
        }
    }

    /// A function dominating `|φ|` for every member.
    pub fn envelope(&self) -> MeasurableFunction<S> {
        match self {
            FunctionClass::Indicator(c) => c.phi0.abs(),
            FunctionClass::Lipschitz(c) => MeasurableFunction::constant(c.bound),
            FunctionClass::Finite(c) => {
                let members = c.members.clone();
                let mut breaks = Vec::new();
                for m in &members {
                    breaks.extend_from_slice(m.breakpoints());
                }
                MeasurableFunction::new("max |φ_i|", move |x| {
                    members.iter().map(|m| m.eval(x).abs()).fold(S::zero(), |a, b| a.max(b))
                })
                .with_breakpoints(breaks)
            }
        }
    }

    /// A random class member.
    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R, base: &ContinuousDistribution<S>) -> MeasurableFunction<S> {
        match self {
            FunctionClass::Indicator(c) => {
                let u: f64 = rng.random();
                let t = if u < 0.02 {
                    S::neg_infinity()
                } else if u > 0.98 {
                    S::infinity()
                } else {
                    base.quantile(S::lit((u - 0.02) / 0.96))
                };
                c.member(t)
            }
            FunctionClass::Lipschitz(c) => c.sample_member(rng),
            FunctionClass::Finite(c) => c.members[rng.random_range(0..c.members.len())].clone(),
        }
    }

    /// An `ε`-cover of the class in `L^p(base)`.
    pub fn bracket_cover(&self, epsilon: S, p: u32, base: &ContinuousDistribution<S>, budget: &CoverBudget) -> Result<BracketCover<S>> {
        validate_epsilon(epsilon)?;
        validate_norm_order(p)?;
        let brackets = match self {
            FunctionClass::Indicator(c) => c.brackets_from_cuts(&c.cut_points(epsilon, p, base, budget)?),
            FunctionClass::Lipschitz(c) => {
                let grid = c.grid(epsilon)?;
                let log_n = grid.log_count();
                if log_n > (budget.max_brackets as f64).ln() {
                    return Err(Error::Budget {
                        what: "Lipschitz cover brackets".into(),
                        limit: budget.max_brackets as f64,
                        partial: Some(log_n),
                    });
                }
                grid.enumerate().iter().map(|lv| grid.bracket(lv)).collect()
            }
            FunctionClass::Finite(c) => c.members.iter().cloned().map(Bracket::degenerate).collect(),
        };
        BracketCover::new(epsilon, p, brackets, base.clone())
    }

    /// `log` of the size of the cover [`bracket_cover`](Self::bracket_cover)
    /// would build, without materializing it.
    pub fn log_cover_size(&self, epsilon: S, p: u32, base: &ContinuousDistribution<S>, budget: &CoverBudget) -> Result<f64> {
        validate_epsilon(epsilon)?;
        validate_norm_order(p)?;
        let log_n = match self {
            FunctionClass::Indicator(c) => c.piece_count(epsilon, p, base)?.1.ln(),
            FunctionClass::Lipschitz(c) => c.grid(epsilon)?.log_count(),
            FunctionClass::Finite(c) => (c.members.len() as f64).ln(),
        };
        if log_n > budget.max_log_size {
            return Err(budget_error("log cover size", budget.max_log_size));
        }
        Ok(log_n)
    }
}

/// Approximation of `J(δ) = ∫_0^δ √(log N(ε)) dε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyIntegral {
    pub value: f64,
    pub epsilon_min: f64,
    /// `(ε, log N(ε))` in decreasing `ε`.
    pub grid: Vec<(f64, f64)>,
}

/// Trapezoid rule over `δ, δ/2, δ/4, …` down to [`EPSILON_MIN`], plus
/// `ε_min √(log N(ε_min))` for the remaining range `(0, ε_min]`.
///
/// The final node is always `ε_min`, so grids for different `δ` share their
/// tail and `J` is monotone in `δ`.
pub fn entropy_integral<S: Real>(
    class: &FunctionClass<S>,
    delta: S,
    p: u32,
    base: &ContinuousDistribution<S>,
    budget: &CoverBudget,
) -> Result<EntropyIntegral> {
    let d = delta.to_f64_lossy();
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::InvalidArgument(format!("δ must lie in (0, 1], got {d}")));
    }
    let mut eps = vec![d];
    if d > EPSILON_MIN {
        let mut e = d / 2.0;
        while e > EPSILON_MIN {
            eps.push(e);
            e /= 2.0;
        }
        eps.push(EPSILON_MIN);
    }
    let mut grid = Vec::with_capacity(eps.len());
    let mut value = 0.0;
    for (i, &e) in eps.iter().enumerate() {
        let log_n = match class.log_cover_size(S::lit(e), p, base, budget) {
            Ok(v) => v.max(0.0),
            Err(Error::Budget { what, limit, .. }) => {
                return Err(Error::Budget {
                    what: format!("{what} at ε = {e}"),
                    limit,
                    partial: Some(value),
                })
            }
            Err(other) => return Err(other),
        };
        if i > 0 {
            let (prev_e, prev_log) = grid[i - 1];
            value += 0.5 * (prev_e - e) * (f64::sqrt(prev_log) + log_n.sqrt());
        }
        grid.push((e, log_n));
    }
    let (last_e, last_log) = *grid.last().expect("nonempty grid");
    value += last_e * last_log.sqrt();
    Ok(EntropyIntegral {
        value,
        epsilon_min: EPSILON_MIN,
        grid,
    })
}

/// `d(φ₁, φ₂) = (∫ (φ₁ - φ₂)² dF)^{1/2}`.
pub fn d_metric<S: Real>(phi1: &MeasurableFunction<S>, phi2: &MeasurableFunction<S>, base: &ContinuousDistribution<S>) -> Result<S> {
    let cfg = QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    phi1.sub(phi2).lp_norm(2, base, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unif() -> ContinuousDistribution<f64> {
        ContinuousDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn indicator_cover_of_unit_weight() {
        let class = FunctionClass::indicator(MeasurableFunction::constant(1.0));
        let cover = class.bracket_cover(0.1, 1, &unif(), &CoverBudget::default()).unwrap();
        assert_eq!(cover.len(), 10);
        for (k, g) in cover.gap_norms.iter().enumerate() {
            assert!((g - 0.1).abs() < 1e-9, "bracket {k}: {g}");
        }
        // bracket 3 is [1(-∞, 0.3], 1(-∞, 0.4]]
        let b = &cover.brackets[3];
        assert_eq!(b.lower.eval(0.3), 1.0);
        assert_eq!(b.lower.eval(0.31), 0.0);
        assert_eq!(b.upper.eval(0.4), 1.0);
        assert_eq!(b.upper.eval(0.41), 0.0);
        let p2 = class.bracket_cover(0.1, 2, &unif(), &CoverBudget::default()).unwrap();
        assert_eq!(p2.len(), 100);
    }

    #[test]
    fn sign_changing_weight_cover() {
        let phi0 = MeasurableFunction::new("x-0.5", |x: f64| x - 0.5);
        let class = FunctionClass::indicator(phi0.clone());
        let cover = class.bracket_cover(0.05, 1, &unif(), &CoverBudget::default()).unwrap();
        // ∫|x - 1/2| dx = 1/4
        assert!((5..=6).contains(&cover.len()), "{}", cover.len());
        let ic = IndicatorClass::new(phi0);
        for t in [-1.0, 0.0, 0.1, 0.33, 0.5, 0.77, 1.0, 3.0] {
            assert!(cover.locate(&ic.member(t)).is_some(), "t = {t}");
        }
    }

    #[test]
    fn finite_cover_is_degenerate() {
        let class = FunctionClass::finite(vec![MeasurableFunction::indicator(0.2), MeasurableFunction::identity()]).unwrap();
        let cover = class.bracket_cover(1e-6, 2, &unif(), &CoverBudget::default()).unwrap();
        assert_eq!(cover.len(), 2);
        assert!(cover.gap_norms.iter().all(|g| *g == 0.0));
        assert_eq!(cover.locate(&MeasurableFunction::identity()), Some(1));
    }

    #[test]
    fn lipschitz_cover_is_valid() {
        let class = FunctionClass::lipschitz(0.0, 1.0, 1.0, 1.0).unwrap();
        let cover = class.bracket_cover(0.5, 2, &unif(), &CoverBudget::default()).unwrap();
        let log_n = class.log_cover_size(0.5, 2, &unif(), &CoverBudget::default()).unwrap();
        assert!(((cover.len() as f64).ln() - log_n).abs() < 1e-9);
        assert!(cover.gap_norms.iter().all(|g| *g <= 0.5 + 1e-8));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let phi = class.sample_member(&mut rng, &unif());
            assert!(cover.locate(&phi).is_some(), "{}", phi.label());
        }
    }

    #[test]
    fn lipschitz_budget() {
        let class = FunctionClass::lipschitz(0.0, 1.0, 1.0, 1.0).unwrap();
        let err = class.bracket_cover(0.05, 1, &unif(), &CoverBudget::default()).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        assert!(class.log_cover_size(0.05, 1, &unif(), &CoverBudget::default()).unwrap() > 11.0);
    }

    #[test]
    fn bracket_rejects_disorder() {
        let lo = MeasurableFunction::constant(1.0);
        let hi = MeasurableFunction::constant(0.0);
        assert!(Bracket::new(lo, hi, &unif()).is_err());
    }

    #[test]
    fn entropy_of_singleton_is_zero() {
        let class = FunctionClass::finite(vec![MeasurableFunction::identity()]).unwrap();
        let j = entropy_integral(&class, 1.0, 2, &unif(), &CoverBudget::default()).unwrap();
        assert_eq!(j.value, 0.0);
    }

    #[test]
    fn entropy_of_indicators() {
        let class = FunctionClass::indicator(MeasurableFunction::constant(1.0));
        let j = entropy_integral(&class, 1.0, 2, &unif(), &CoverBudget::default()).unwrap();
        assert!(j.value > 1.0 && j.value <= 2.0, "{}", j.value);
        let mut prev = j.value;
        for k in 1..12 {
            let d = 0.5f64.powi(k) * 0.9;
            let v = entropy_integral(&class, d, 2, &unif(), &CoverBudget::default()).unwrap().value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!(prev < 2e-3);
    }

    #[test]
    fn metric_examples() {
        let a = MeasurableFunction::indicator(0.25);
        let b = MeasurableFunction::indicator(0.75);
        let d = d_metric(&a, &b, &unif()).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-8);
        assert_eq!(d_metric(&a, &a, &unif()).unwrap(), 0.0);
    }
}
