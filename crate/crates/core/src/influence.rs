//! Influence functions of the product-limit integral `∫ φ dF_n`.
//!
//! With `ψ(w) = φ(w)(1 - F(w)) - ∫_{(w,∞)} φ dF` and the coverage function
//! `C`, each observed pair contributes
//!
//! ```text
//! ζ(t, y) = ψ(y) / C(y) - ∫_t^y ψ(u) / C²(u) dF*(u)
//! ```
//!
//! and `√n ∫ φ d(F_n - F)` is asymptotically `n^{-1/2} Σ ζ(T_i, Y_i)`.
//!
//! Everything is evaluated in probability coordinates `p = F(x)`. The tail
//! integral `T(p) = ∫_p^1 φ(Q(r)) dr` and the inner integral
//! `K(p) = ∫_0^p α ψ(Q(r)) / (G(Q(r)) (1 - r)²) dr` are tabulated on a fixed
//! grid of probability cells when the evaluator is built, so a point
//! evaluation only integrates over one partial cell. Tables are immutable
//! afterwards and shared freely across threads.
//!
//! Moments of `ζ` under the observable law `H*` are reduced to
//! one-dimensional integrals: writing `ζ(t, y) = A(y) + κ(t)` with
//! `A = ψ/C - K∘F` and `κ = K∘F`,
//!
//! ```text
//! E[ζ_a ζ_b] = α⁻¹ [ ∫ A_a A_b G dF + ∫ (A_a M_b + A_b M_a) dF + ∫ κ_a κ_b (1 - F) dG ]
//! ```
//!
//! where `M(y) = ∫_{t <= y} κ dG`.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::classes::Bracket;
use crate::error::{Assumption, Error, Result};
use crate::function::MeasurableFunction;
use crate::model::{Integrability, TruncationModel};
use crate::quadrature::{integrate_finite, QuadConfig, Quadrature};
use crate::sampler::{draw_fixed_n, TruncatedSample};
use crate::scalar::Real;

/// Number of probability cells in the memo tables.
pub const CELLS: usize = 512;

/// Evaluations with `C(y)` below this value are refused.
pub const BOUNDARY_FLOOR: f64 = 1e-12;

/// Draws used when quadrature moments fail.
pub const MC_FALLBACK_DRAWS: usize = 1_000_000;

const MC_FALLBACK_SEED: u64 = 0x05EE_D0F5_16A2_0001;

fn inner_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 2000,
    }
}

fn outer_cfg(tol: f64) -> QuadConfig {
    QuadConfig {
        abs_tol: tol,
        rel_tol: tol,
        max_intervals: 4000,
    }
}

/// Runs `run` on an infallible wrapper of `f`, surfacing the first error.
fn guarded<S: Real, R>(
    mut f: impl FnMut(S) -> Result<S>,
    run: impl FnOnce(&mut dyn FnMut(S) -> S) -> Result<R>,
) -> Result<R> {
    let mut first: Option<Error> = None;
    let out = {
        let mut h = |x: S| match f(x) {
            Ok(v) => v,
            Err(e) => {
                first.get_or_insert(e);
                S::zero()
            }
        };
        run(&mut h)
    };
    match first {
        Some(e) => Err(e),
        None => out,
    }
}

fn ratio<S: Real>(i: usize, n: usize) -> S {
    S::from_usize(i).expect("small") / S::from_usize(n).expect("small")
}

struct Context<S: Real> {
    model: TruncationModel<S>,
    alpha: S,
    /// Upper end of the truncation-probability grid: `G(b_F)`.
    q_top: S,
}

impl<S: Real> Context<S> {
    fn new(model: TruncationModel<S>) -> Result<Self> {
        let alpha = model.alpha()?;
        let b_f = model.f().support_hi();
        let q_top = if b_f.is_finite() { model.g().cdf(b_f) } else { S::one() };
        Ok(Context { model, alpha, q_top })
    }

    fn cell_of(p: S) -> usize {
        (p * S::from_usize(CELLS).expect("small"))
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(CELLS - 1)
    }

    fn coverage(&self, y: S) -> S {
        let m = &self.model;
        m.g().cdf(y) * (S::one() - m.f().cdf(y)) / self.alpha
    }

    fn same_model(&self, other: &Self) -> bool {
        self.model.f() == other.model.f() && self.model.g() == other.model.g()
    }
}

/// `ψ_{a,b}(w) = a(w)(1 - F(w)) - ∫_{(w,∞)} b dF` with its memo tables.
///
/// `ψ_{φ,φ}` is the `ψ` of `φ`. Mixed forms arise for brackets: `ψ_{a,b}` is
/// increasing in `a` and decreasing in `b`.
struct PsiForm<S: Real> {
    a: MeasurableFunction<S>,
    b: MeasurableFunction<S>,
    /// `ψ ≡ 0`, which happens when `a = b` is constant.
    null: bool,
    pbreaks: Vec<S>,
    xbreaks: Vec<S>,
    /// `T(i / N)` for `i = 0..=N`.
    tail: Vec<S>,
    /// `K(i / N)` for `i = 0..N`; the last cell is never tabulated because
    /// `K` may diverge at `p = 1`.
    k: Vec<S>,
    /// `M` at `q_top i / N`, built on first use.
    m: OnceLock<std::result::Result<Vec<S>, String>>,
}

impl<S: Real> PsiForm<S> {
    fn new(ctx: &Context<S>, a: MeasurableFunction<S>, b: MeasurableFunction<S>) -> Result<Self> {
        let (f, g) = (ctx.model.f(), ctx.model.g());
        let null = matches!((a.as_constant(), b.as_constant()), (Some(x), Some(y)) if x == y);
        let mut xbreaks: Vec<S> = a.breakpoints().to_vec();
        xbreaks.extend_from_slice(b.breakpoints());
        xbreaks.extend(f.kinks());
        xbreaks.extend(g.kinks());
        xbreaks.extend([f.support_lo(), f.support_hi(), g.support_lo(), g.support_hi()]);
        xbreaks.retain(|x| x.is_finite());
        xbreaks.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        xbreaks.dedup();
        let mut pbreaks: Vec<S> = xbreaks.iter().map(|&x| f.cdf(x)).collect();
        pbreaks.extend(f.knot_probabilities());
        let mut form = PsiForm {
            a,
            b,
            null,
            pbreaks,
            xbreaks,
            tail: Vec::new(),
            k: Vec::new(),
            m: OnceLock::new(),
        };
        if null {
            return Ok(form);
        }
        let mut tail = vec![S::zero(); CELLS + 1];
        if form.b.as_constant().is_none() {
            for i in (0..CELLS).rev() {
                let piece = integrate_finite(|r| form.b.eval(f.quantile(r)), ratio(i, CELLS), ratio(i + 1, CELLS), &form.pbreaks, &inner_cfg())?;
                tail[i] = tail[i + 1] + piece.value;
            }
        }
        form.tail = tail;
        let mut k = vec![S::zero(); CELLS];
        for i in 0..CELLS - 1 {
            let piece = guarded(
                |r| form.kappa_integrand(ctx, r),
                |h| integrate_finite(h, ratio(i, CELLS), ratio(i + 1, CELLS), &form.pbreaks, &inner_cfg()),
            )?;
            k[i + 1] = k[i] + piece.value;
        }
        form.k = k;
        Ok(form)
    }

    /// `T(p) = ∫_p^1 b(Q(r)) dr`.
    fn tail_at(&self, ctx: &Context<S>, p: S) -> Result<S> {
        if p >= S::one() {
            return Ok(S::zero());
        }
        if let Some(c) = self.b.as_constant() {
            return Ok(c * (S::one() - p));
        }
        let p = p.max(S::zero());
        let i = Context::<S>::cell_of(p);
        let f = ctx.model.f();
        let piece = integrate_finite(|r| self.b.eval(f.quantile(r)), p, ratio(i + 1, CELLS), &self.pbreaks, &inner_cfg())?;
        Ok(self.tail[i + 1] + piece.value)
    }

    /// `ψ` at `x` with `p = F(x)`.
    fn psi_at(&self, ctx: &Context<S>, p: S, x: S) -> Result<S> {
        if self.null || p >= S::one() {
            return Ok(S::zero());
        }
        Ok(self.a.eval(x) * (S::one() - p) - self.tail_at(ctx, p)?)
    }

    fn kappa_integrand(&self, ctx: &Context<S>, r: S) -> Result<S> {
        let x = ctx.model.f().quantile(r);
        let gx = ctx.model.g().cdf(x);
        if gx == S::zero() {
            return Ok(S::zero());
        }
        let q = S::one() - r;
        Ok(ctx.alpha * self.psi_at(ctx, r, x)? / (gx * q * q))
    }

    /// `K(p)`, finite for `p < 1`.
    fn k_at(&self, ctx: &Context<S>, p: S) -> Result<S> {
        if self.null || p <= S::zero() {
            return Ok(S::zero());
        }
        if p >= S::one() {
            return Err(Error::numerical("inner integral at F = 1", f64::INFINITY));
        }
        let i = Context::<S>::cell_of(p);
        let piece = guarded(
            |r| self.kappa_integrand(ctx, r),
            |h| integrate_finite(h, ratio(i, CELLS), p, &self.pbreaks, &inner_cfg()),
        )?;
        Ok(self.k[i] + piece.value)
    }

    /// `κ(t) = K(F(t))`, set to zero where `F(t) = 1`, a region that only
    /// enters integrals multiplied by `1 - F(t) = 0`.
    fn kappa(&self, ctx: &Context<S>, t: S) -> Result<S> {
        let p = ctx.model.f().cdf(t);
        if p >= S::one() {
            return Ok(S::zero());
        }
        self.k_at(ctx, p)
    }

    fn m_table(&self, ctx: &Context<S>) -> Result<&[S]> {
        let g = ctx.model.g();
        let built = self.m.get_or_init(|| {
            let mut gbreaks: Vec<S> = self.xbreaks.iter().map(|&x| g.cdf(x)).collect();
            gbreaks.extend(g.knot_probabilities());
            let mut m = vec![S::zero(); CELLS + 1];
            for j in 0..CELLS {
                let lo = ctx.q_top * ratio(j, CELLS);
                let hi = ctx.q_top * ratio(j + 1, CELLS);
                let piece = guarded(
                    |q| self.kappa(ctx, g.quantile(q)),
                    |h| integrate_finite(h, lo, hi, &gbreaks, &inner_cfg()),
                )
                .map_err(|e| e.to_string())?;
                m[j + 1] = m[j] + piece.value;
            }
            Ok(m)
        });
        built
            .as_deref()
            .map_err(|e| Error::numerical(format!("cumulative table of κ dG: {e}"), f64::NAN))
    }

    /// `M(y) = ∫_{t <= y} κ dG`.
    fn m_at(&self, ctx: &Context<S>, y: S) -> Result<S> {
        if self.null {
            return Ok(S::zero());
        }
        let g = ctx.model.g();
        if let Some(at) = g.atom() {
            return if at <= y { self.kappa(ctx, at) } else { Ok(S::zero()) };
        }
        let q = g.cdf(y).min(ctx.q_top);
        if q <= S::zero() {
            return Ok(S::zero());
        }
        let table = self.m_table(ctx)?;
        let j = Context::<S>::cell_of(q / ctx.q_top);
        let lo = ctx.q_top * ratio(j, CELLS);
        let mut gbreaks: Vec<S> = self.xbreaks.iter().map(|&x| g.cdf(x)).collect();
        gbreaks.extend(g.knot_probabilities());
        let piece = guarded(
            |q| self.kappa(ctx, g.quantile(q)),
            |h| integrate_finite(h, lo, q, &gbreaks, &inner_cfg()),
        )?;
        Ok(table[j] + piece.value)
    }
}

/// A function of an observed pair of the form
/// `ψ_head(y) / C(y) - (K_tail(F(y)) - K_tail(F(t)))`.
///
/// `ζ(φ)` has head and tail `ψ_{φ,φ}`; the bracket functions of
/// [`zeta_bracket`] mix the two bracket ends.
#[derive(Clone)]
pub struct ZetaFunction<S: Real> {
    ctx: Arc<Context<S>>,
    head: Arc<PsiForm<S>>,
    tail: Arc<PsiForm<S>>,
    label: String,
}

impl<S: Real> std::fmt::Debug for ZetaFunction<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZetaFunction").field("label", &self.label).finish()
    }
}

impl<S: Real> ZetaFunction<S> {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Value at an observed pair `(t, y)`, `t <= y`.
    pub fn eval(&self, t: S, y: S) -> Result<S> {
        if !(y >= t) {
            return Err(Error::InvalidPair {
                index: 0,
                t: t.to_f64_lossy(),
                y: y.to_f64_lossy(),
            });
        }
        let ctx = &*self.ctx;
        let c = ctx.coverage(y);
        if !(c >= S::lit(BOUNDARY_FLOOR)) {
            return Err(Error::NearBoundary {
                y: y.to_f64_lossy(),
                c: c.to_f64_lossy(),
            });
        }
        let f = ctx.model.f();
        let py = f.cdf(y);
        let lead = self.head.psi_at(ctx, py, y)? / c;
        if t == y {
            return Ok(lead);
        }
        let inner = self.tail.k_at(ctx, py)? - self.tail.k_at(ctx, f.cdf(t))?;
        Ok(lead - inner)
    }

    /// `A(y) G(y)` with `A = ψ_head / C - K_tail ∘ F`.
    fn a_times_g(&self, y: S) -> Result<(S, S)> {
        let ctx = &*self.ctx;
        let (f, g) = (ctx.model.f(), ctx.model.g());
        let p = f.cdf(y);
        let gy = g.cdf(y);
        if gy == S::zero() || p >= S::one() {
            return Ok((S::zero(), gy));
        }
        let psi = self.head.psi_at(ctx, p, y)?;
        let ag = ctx.alpha * psi / (S::one() - p) - self.tail.k_at(ctx, p)? * gy;
        Ok((ag, gy))
    }

    fn xbreaks(&self, other: &Self) -> Vec<S> {
        let mut b = self.head.xbreaks.clone();
        b.extend_from_slice(&self.tail.xbreaks);
        b.extend_from_slice(&other.head.xbreaks);
        b.extend_from_slice(&other.tail.xbreaks);
        b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        b.dedup();
        b
    }

    fn check_shared(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx.same_model(&other.ctx) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("influence functions belong to different models".into()))
        }
    }

    /// `E[ζ]` under `H*` by quadrature.
    pub fn mean(&self, tol: f64) -> Result<Quadrature<S>> {
        let ctx = &*self.ctx;
        let f = ctx.model.f();
        let breaks = self.xbreaks(self);
        let q = guarded(
            |y| {
                let (ag, _) = self.a_times_g(y)?;
                Ok(ag + self.tail.m_at(ctx, y)?)
            },
            |h| f.integrate_against(h, S::neg_infinity(), S::infinity(), &breaks, &outer_cfg(tol)),
        )?;
        Ok(Quadrature {
            value: q.value / ctx.alpha,
            ..q
        })
    }

    /// `E[ζ_a ζ_b]` under `H*` by quadrature.
    pub fn cross_moment(&self, other: &Self, tol: f64) -> Result<Quadrature<S>> {
        self.check_shared(other)?;
        let ctx = &*self.ctx;
        let (f, g) = (ctx.model.f(), ctx.model.g());
        let breaks = self.xbreaks(other);
        let first = guarded(
            |y| {
                let (ag_a, gy) = self.a_times_g(y)?;
                if gy == S::zero() {
                    return Ok(S::zero());
                }
                let (ag_b, _) = other.a_times_g(y)?;
                let (ma, mb) = (self.tail.m_at(ctx, y)?, other.tail.m_at(ctx, y)?);
                Ok((ag_a * ag_b + ag_a * mb + ag_b * ma) / gy)
            },
            |h| f.integrate_against(h, S::neg_infinity(), S::infinity(), &breaks, &outer_cfg(tol)),
        )?;
        let b_f = f.support_hi();
        let second = guarded(
            |t| {
                let p = f.cdf(t);
                if p >= S::one() {
                    return Ok(S::zero());
                }
                Ok(self.tail.kappa(ctx, t)? * other.tail.kappa(ctx, t)? * (S::one() - p))
            },
            |h| g.integrate_against(h, S::neg_infinity(), b_f, &breaks, &outer_cfg(tol)),
        )?;
        Ok(Quadrature {
            value: (first.value + second.value) / ctx.alpha,
            abs_error: (first.abs_error + second.abs_error) / ctx.alpha.to_f64_lossy(),
            evaluations: first.evaluations + second.evaluations,
            intervals: first.intervals + second.intervals,
        })
    }
}

/// Which computation produced a moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentPath {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate<S> {
    pub value: S,
    pub path: MomentPath,
    /// Quadrature error estimate, or the Monte Carlo standard error.
    pub error_estimate: f64,
    /// Why quadrature was abandoned, when it was.
    pub quadrature_failure: Option<String>,
}

/// Both integrals of the weak conditions `∫ dF/G < ∞`, `∫ φ²/G dF < ∞`.
#[derive(Debug, Clone, Serialize)]
pub struct WeakConditions {
    pub holds: bool,
    pub f_continuous: bool,
    pub inverse_g: Integrability,
    pub phi_squared: Integrability,
}

pub fn check_weak_conditions<S: Real>(phi: &MeasurableFunction<S>, model: &TruncationModel<S>) -> WeakConditions {
    let inverse_g = model.inverse_g_integrability(|_| S::one());
    let phi_squared = if phi.as_constant() == Some(S::zero()) {
        Integrability {
            convergent: true,
            estimate: 0.0,
            partial_values: Vec::new(),
            note: "φ vanishes identically".into(),
        }
    } else {
        model.inverse_g_integrability(|x| {
            let v = phi.eval(x);
            v * v
        })
    };
    let f_continuous = model.f().is_continuous();
    WeakConditions {
        holds: f_continuous && inverse_g.convergent && phi_squared.convergent,
        f_continuous,
        inverse_g,
        phi_squared,
    }
}

/// Sample mean and spread of `ζ` over draws from `H*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloMoments {
    pub draws: usize,
    pub mean: f64,
    pub sd: f64,
    pub standard_error: f64,
    pub seed: u64,
}

/// `ζ` evaluated at each pair of `sample`, in order.
pub fn zeta_values<S: Real>(zeta: &ZetaFunction<S>, sample: &TruncatedSample<S>) -> Result<Vec<S>> {
    sample.pairs().par_iter().map(|&(t, y)| zeta.eval(t, y)).collect()
}

fn monte_carlo<S: Real>(zeta: &ZetaFunction<S>, draws: usize, seed: u64) -> Result<MonteCarloMoments> {
    if draws < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least two draws".into()));
    }
    let sample = draw_fixed_n(&zeta.ctx.model, draws, seed)?;
    let values = zeta_values(zeta, &sample)?;
    let n = draws as f64;
    let mean = values.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
    let var = values.iter().map(|v| (v.to_f64_lossy() - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloMoments {
        draws,
        mean,
        sd: var.sqrt(),
        standard_error: (var / n).sqrt(),
        seed,
    })
}

/// `ζ(φ)` with its memo tables, for one `φ` and one model.
#[derive(Clone)]
pub struct InfluenceEvaluator<S: Real> {
    phi: MeasurableFunction<S>,
    zeta: ZetaFunction<S>,
    tolerance: f64,
    weak: WeakConditions,
}

impl<S: Real> std::fmt::Debug for InfluenceEvaluator<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InfluenceEvaluator")
            .field("phi", &self.phi.label())
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl<S: Real> InfluenceEvaluator<S> {
    /// Fails unless the model satisfies Assumption B or the weak conditions
    /// hold for `φ`.
    pub fn new(phi: MeasurableFunction<S>, model: &TruncationModel<S>) -> Result<Self> {
        let report = model.check_assumptions();
        let weak = check_weak_conditions(&phi, model);
        if !(report.b_holds || weak.holds) {
            return Err(Error::AssumptionViolated {
                assumption: Assumption::Weak,
                detail: format!(
                    "neither Assumption B nor the weak conditions hold for {}: ∫ dF/G {} ({}), ∫ φ²/G dF {} ({})",
                    phi.label(),
                    if weak.inverse_g.convergent { "converges" } else { "diverges" },
                    weak.inverse_g.note,
                    if weak.phi_squared.convergent { "converges" } else { "diverges" },
                    weak.phi_squared.note,
                ),
            });
        }
        let ctx = Arc::new(Context::new(model.clone())?);
        let form = Arc::new(PsiForm::new(&ctx, phi.clone(), phi.clone())?);
        let zeta = ZetaFunction {
            ctx,
            head: form.clone(),
            tail: form,
            label: format!("zeta({})", phi.label()),
        };
        Ok(InfluenceEvaluator {
            phi,
            zeta,
            tolerance: 1e-9,
            weak,
        })
    }

    /// Absolute tolerance of the moment quadratures.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn phi(&self) -> &MeasurableFunction<S> {
        &self.phi
    }

    pub fn model(&self) -> &TruncationModel<S> {
        &self.zeta.ctx.model
    }

    pub fn weak_conditions(&self) -> &WeakConditions {
        &self.weak
    }

    pub fn zeta_function(&self) -> &ZetaFunction<S> {
        &self.zeta
    }

    /// `ψ(w) = φ(w)(1 - F(w)) - ∫_{(w,∞)} φ dF`.
    pub fn psi(&self, w: S) -> Result<S> {
        let ctx = &*self.zeta.ctx;
        self.zeta.head.psi_at(ctx, ctx.model.f().cdf(w), w)
    }

    pub fn zeta(&self, t: S, y: S) -> Result<S> {
        self.zeta.eval(t, y)
    }

    /// Monte Carlo mean and spread of `ζ` over `draws` pairs from `H*`.
    pub fn monte_carlo(&self, draws: usize, seed: u64) -> Result<MonteCarloMoments> {
        monte_carlo(&self.zeta, draws, seed)
    }

    /// `Var ζ(φ)`.
    pub fn sigma2(&self) -> Result<MomentEstimate<S>> {
        covariance(self, self)
    }
}

/// `Cov(ζ(φ₁), ζ(φ₂))` by quadrature, or by Monte Carlo when quadrature fails.
pub fn covariance<S: Real>(ev1: &InfluenceEvaluator<S>, ev2: &InfluenceEvaluator<S>) -> Result<MomentEstimate<S>> {
    ev1.zeta.check_shared(&ev2.zeta)?;
    let tol = ev1.tolerance.max(ev2.tolerance);
    let quad = (|| {
        let cross = ev1.zeta.cross_moment(&ev2.zeta, tol)?;
        let m1 = ev1.zeta.mean(tol)?;
        let m2 = if std::ptr::eq(ev1, ev2) { m1.clone() } else { ev2.zeta.mean(tol)? };
        let err = cross.abs_error + m1.abs_error * m2.value.abs().to_f64_lossy() + m2.abs_error * m1.value.abs().to_f64_lossy();
        Ok::<_, Error>((cross.value - m1.value * m2.value, err))
    })();
    match quad {
        Ok((value, err)) => Ok(MomentEstimate {
            value,
            path: MomentPath::Quadrature,
            error_estimate: err,
            quadrature_failure: None,
        }),
        Err(e) if e.is_numerical() => {
            let reason = e.to_string();
            let sample = draw_fixed_n(ev1.model(), MC_FALLBACK_DRAWS, MC_FALLBACK_SEED)?;
            let z1 = zeta_values(&ev1.zeta, &sample)?;
            let z2 = zeta_values(&ev2.zeta, &sample)?;
            let n = z1.len() as f64;
            let m1 = z1.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
            let m2 = z2.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
            let prods: Vec<f64> = z1
                .iter()
                .zip(&z2)
                .map(|(a, b)| (a.to_f64_lossy() - m1) * (b.to_f64_lossy() - m2))
                .collect();
            let cov = prods.iter().sum::<f64>() / (n - 1.0);
            let spread = prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(MomentEstimate {
                value: S::lit(cov),
                path: MomentPath::MonteCarlo,
                error_estimate: (spread / n).sqrt(),
                quadrature_failure: Some(reason),
            })
        }
        Err(e) => Err(e),
    }
}

/// Covariance matrix of `ζ(φ_1), …, ζ(φ_k)`.
pub fn covariance_matrix<S: Real>(evs: &[InfluenceEvaluator<S>]) -> Result<Vec<Vec<MomentEstimate<S>>>> {
    let k = evs.len();
    let mut out: Vec<Vec<Option<MomentEstimate<S>>>> = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let c = covariance(&evs[i], &evs[j])?;
            out[j][i] = Some(c.clone());
            out[i][j] = Some(c);
        }
    }
    Ok(out
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.expect("filled")).collect())
        .collect())
}

/// `[g^l, g^u]` enclosing `ζ(φ)` for every `φ` in a bracket `[l, u]`.
#[derive(Debug, Clone)]
pub struct ZetaBracket<S: Real> {
    pub lower: ZetaFunction<S>,
    pub upper: ZetaFunction<S>,
    /// `g^u - g^l`.
    pub gap: ZetaFunction<S>,
}

impl<S: Real> ZetaBracket<S> {
    /// `(E[(g^u - g^l)²])^{1/2}` under `H*`.
    pub fn d_gap(&self, tol: f64) -> Result<S> {
        Ok(self.gap.cross_moment(&self.gap, tol)?.value.max(S::zero()).sqrt())
    }

    /// True when `g^l - tol <= v <= g^u + tol` at `(t, y)`.
    pub fn contains_value(&self, t: S, y: S, v: S, tol: S) -> Result<bool> {
        Ok(self.lower.eval(t, y)? - tol <= v && v <= self.upper.eval(t, y)? + tol)
    }
}

/// Transfers a bracket `[l, u]` of `φ`'s to a bracket of their influence
/// functions.
///
/// `ψ_{a,b}` rises with `a` and falls with `b`, and `ζ` rises with `ψ` in its
/// leading term and falls with it in the integral, so
/// `g^l` takes `ψ_{l,u}` in the leading term and `ψ_{u,l}` in the integral,
/// and `g^u` the reverse.
pub fn zeta_bracket<S: Real>(bracket: &Bracket<S>, model: &TruncationModel<S>) -> Result<ZetaBracket<S>> {
    let ctx = Arc::new(Context::new(model.clone())?);
    let (l, u) = (&bracket.lower, &bracket.upper);
    let lu = Arc::new(PsiForm::new(&ctx, l.clone(), u.clone())?);
    let ul = Arc::new(PsiForm::new(&ctx, u.clone(), l.clone())?);
    let d = u.sub(l);
    let neg = d.scale(-S::one());
    let dn = Arc::new(PsiForm::new(&ctx, d.clone(), neg.clone())?);
    let nd = Arc::new(PsiForm::new(&ctx, neg, d)?);
    let make = |head: &Arc<PsiForm<S>>, tail: &Arc<PsiForm<S>>, label: String| ZetaFunction {
        ctx: ctx.clone(),
        head: head.clone(),
        tail: tail.clone(),
        label,
    };
    Ok(ZetaBracket {
        lower: make(&lu, &ul, format!("g_lower[{}, {}]", l.label(), u.label())),
        upper: make(&ul, &lu, format!("g_upper[{}, {}]", l.label(), u.label())),
        gap: make(&dn, &nd, format!("g_gap[{}, {}]", l.label(), u.label())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::ContinuousDistribution;

    fn model(glo: f64, ghi: f64) -> TruncationModel<f64> {
        TruncationModel::new(
            ContinuousDistribution::uniform(0.0, 1.0).unwrap(),
            ContinuousDistribution::uniform(glo, ghi).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_phi_is_null() {
        let ev = InfluenceEvaluator::new(MeasurableFunction::constant(2.0), &model(-0.5, 0.5)).unwrap();
        assert_eq!(ev.psi(0.3).unwrap(), 0.0);
        assert_eq!(ev.zeta(0.1, 0.6).unwrap(), 0.0);
        assert_eq!(ev.sigma2().unwrap().value, 0.0);
    }

    #[test]
    fn psi_of_indicator() {
        let ev = InfluenceEvaluator::new(MeasurableFunction::indicator(0.5), &model(-0.5, 0.5)).unwrap();
        for k in 0..100 {
            let w = -0.2 + 1.4 * k as f64 / 99.0;
            let expected = if w <= 0.5 { 0.5 } else { 0.0 };
            assert!((ev.psi(w).unwrap() - expected).abs() < 1e-9, "w = {w}");
        }
        assert_eq!(ev.psi(1.5).unwrap(), 0.0);
    }

    #[test]
    fn zeta_at_own_truncation_point() {
        let m = model(-0.5, 0.5);
        let ev = InfluenceEvaluator::new(MeasurableFunction::identity(), &m).unwrap();
        let y = 0.4;
        let expected = ev.psi(y).unwrap() / m.c_true(y).unwrap();
        assert_eq!(ev.zeta(y, y).unwrap(), expected);
    }

    #[test]
    fn ecdf_variance_without_truncation() {
        let ev = InfluenceEvaluator::new(MeasurableFunction::indicator(0.5), &model(-2.0, -1.0)).unwrap();
        let s = ev.sigma2().unwrap();
        assert_eq!(s.path, MomentPath::Quadrature);
        assert!((s.value - 0.25).abs() < 1e-8, "{}", s.value);
        // ζ is ±1/2 away from the truncation effect
        assert!((ev.zeta(-1.5, 0.2).unwrap() - 0.5).abs() < 1e-9);
        assert!((ev.zeta(-1.5, 0.7).unwrap() + 0.5).abs() < 1e-9);
    }

    #[test]
    fn indicator_variance_under_truncation() {
        // (1 - F(s))² α ∫_0^s dF / (G (1-F)²) with G(u) = u + 1/2, α = 7/8
        let i = 8.0 / 9.0 * 2f64.ln() + 2.0 / 3.0;
        let expected = 0.25 * 0.875 * i;
        let ev = InfluenceEvaluator::new(MeasurableFunction::indicator(0.5), &model(-0.5, 0.5)).unwrap();
        let s = ev.sigma2().unwrap();
        assert!((s.value - expected).abs() < 1e-7, "{} vs {expected}", s.value);
    }

    #[test]
    fn rejects_without_conditions() {
        let err = InfluenceEvaluator::new(MeasurableFunction::indicator(0.5), &model(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolated { .. }));
    }

    #[test]
    fn degenerate_bracket_collapses() {
        let m = model(-0.5, 0.5);
        let phi = MeasurableFunction::ramp(2.0, 0.5);
        let zb = zeta_bracket(&Bracket::degenerate(phi.clone()), &m).unwrap();
        let ev = InfluenceEvaluator::new(phi, &m).unwrap();
        for (t, y) in [(-0.3, 0.1), (0.2, 0.9), (0.0, 0.5)] {
            let z = ev.zeta(t, y).unwrap();
            assert!((zb.lower.eval(t, y).unwrap() - z).abs() < 1e-12);
            assert!((zb.upper.eval(t, y).unwrap() - z).abs() < 1e-12);
        }
        assert_eq!(zb.d_gap(1e-9).unwrap(), 0.0);
    }

    #[test]
    fn weak_conditions() {
        let w = check_weak_conditions(&MeasurableFunction::identity(), &model(0.0, 1.0));
        assert!(!w.holds && !w.inverse_g.convergent);
        let w = check_weak_conditions(&MeasurableFunction::zero(), &model(0.0, 1.0));
        assert_eq!(w.phi_squared.estimate, 0.0);
        let w = check_weak_conditions(&MeasurableFunction::identity(), &model(-0.5, 0.5));
        assert!(w.holds);
    }
}
