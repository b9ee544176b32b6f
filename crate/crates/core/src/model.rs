//! The data-generating model: an interest variable `Y ~ F` and an independent
//! truncation variable `T ~ G`, with `(T, Y)` observed only when `Y >= T`.
//!
//! Population quantities (observation probability, the observable marginals
//! `F*`, `G*`, the joint `H*` and the coverage function `C`) are computed by
//! adaptive quadrature in probability space. Left limits `F(y-)` are taken
//! equal to `F(y)`: the interest law must be continuous for the limit theory,
//! and atoms are only supported in the truncation law.

use std::sync::OnceLock;

use serde::Serialize;

use crate::distribution::ContinuousDistribution;
use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;
use crate::scalar::Real;

#[derive(Debug)]
pub struct TruncationModel<S: Real> {
    f: ContinuousDistribution<S>,
    g: ContinuousDistribution<S>,
    quad: QuadConfig,
    alpha_cache: OnceLock<S>,
}

impl<S: Real> Clone for TruncationModel<S> {
    fn clone(&self) -> Self {
        let alpha_cache = OnceLock::new();
        if let Some(a) = self.alpha_cache.get() {
            let _ = alpha_cache.set(*a);
        }
        TruncationModel {
            f: self.f.clone(),
            g: self.g.clone(),
            quad: self.quad,
            alpha_cache,
        }
    }
}

/// Support bounds and the standing-assumption flags of a model.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub a_holds: bool,
    pub b_holds: bool,
    pub weak_holds: bool,
    pub f_continuous: bool,
    pub g_continuous: bool,
    pub a_f: f64,
    pub b_f: f64,
    pub a_g: f64,
    pub b_g: f64,
    /// Whether `∫ dF/G` converged (None when it was not evaluated).
    pub inverse_g_integrable: Option<bool>,
}

/// Outcome of an improper-integral convergence probe.
#[derive(Debug, Clone, Serialize)]
pub struct Integrability {
    pub convergent: bool,
    /// Best estimate of the integral (the last partial value when divergent).
    pub estimate: f64,
    /// Partial integrals over `[p_k, 1]` in probability space, `p_k = 2^-k`.
    pub partial_values: Vec<f64>,
    pub note: String,
}

impl<S: Real> TruncationModel<S> {
    pub fn new(f: ContinuousDistribution<S>, g: ContinuousDistribution<S>) -> Result<Self> {
        f.validate()?;
        g.validate()?;
        Ok(TruncationModel {
            f,
            g,
            quad: QuadConfig::default(),
            alpha_cache: OnceLock::new(),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self.alpha_cache = OnceLock::new();
        self
    }

    pub fn f(&self) -> &ContinuousDistribution<S> {
        &self.f
    }

    pub fn g(&self) -> &ContinuousDistribution<S> {
        &self.g
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn label(&self) -> String {
        format!("Y ~ {}, T ~ {}", self.f.label(), self.g.label())
    }

    /// `α = P(Y >= T) = ∫ G dF`, cached after the first call.
    pub fn alpha(&self) -> Result<S> {
        if let Some(a) = self.alpha_cache.get() {
            return Ok(*a);
        }
        let a = self.observed_mass(S::infinity())?;
        if a <= S::zero() {
            return Err(Error::ZeroObservationProbability);
        }
        let a = a.min(S::one());
        // Racing writers compute the same value.
        let _ = self.alpha_cache.set(a);
        Ok(a)
    }

    /// `∫_{(-∞, y]} G dF`, unnormalized.
    fn observed_mass(&self, y: S) -> Result<S> {
        let g = &self.g;
        let q = self
            .f
            .integrate_against(|u| g.cdf(u), S::neg_infinity(), y, &g.kinks(), &self.quad)?;
        Ok(q.value)
    }

    /// Distribution function of observed `Y`: `α⁻¹ ∫_{(-∞,y]} G dF`.
    pub fn f_star(&self, y: S) -> Result<S> {
        let alpha = self.alpha()?;
        if y < self.f.support_lo() {
            return Ok(S::zero());
        }
        Ok((self.observed_mass(y)? / alpha).min(S::one()).max(S::zero()))
    }

    /// Distribution function of observed `T`: `α⁻¹ ∫_{(-∞,t]} (1 - F) dG`.
    pub fn g_star(&self, t: S) -> Result<S> {
        let alpha = self.alpha()?;
        if t < self.g.support_lo() {
            return Ok(S::zero());
        }
        let f = &self.f;
        let q = self.g.integrate_against(
            |u| S::one() - f.cdf(u),
            S::neg_infinity(),
            t,
            &f.kinks(),
            &self.quad,
        )?;
        Ok((q.value / alpha).min(S::one()).max(S::zero()))
    }

    /// Joint distribution function of the observed pair:
    /// `H*(y, t) = α⁻¹ ∫_{(-∞,y]} G(t ∧ u) dF(u)`.
    pub fn h_star(&self, y: S, t: S) -> Result<S> {
        let alpha = self.alpha()?;
        let g = &self.g;
        let mut breaks = g.kinks();
        if t.is_finite() {
            breaks.push(t);
        }
        let q = self.f.integrate_against(
            |u| g.cdf(if t < u { t } else { u }),
            S::neg_infinity(),
            y,
            &breaks,
            &self.quad,
        )?;
        Ok((q.value / alpha).min(S::one()).max(S::zero()))
    }

    /// Coverage probability `C(y) = α⁻¹ G(y) (1 - F(y))`.
    pub fn c_true(&self, y: S) -> Result<S> {
        let alpha = self.alpha()?;
        Ok(self.g.cdf(y) * (S::one() - self.f.cdf(y)) / alpha)
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        let a_f = self.f.support_lo();
        let b_f = self.f.support_hi();
        let a_g = self.g.support_lo();
        let b_g = self.g.support_hi();
        let f_continuous = self.f.is_continuous();
        let g_continuous = self.g.is_continuous();
        let a_holds = f_continuous && g_continuous && a_g < b_f;
        let b_holds = f_continuous && a_g < a_f;
        let (weak_holds, inverse_g_integrable) = if f_continuous && a_g <= a_f {
            let probe = self.inverse_g_integrability(|_| S::one());
            (probe.convergent, Some(probe.convergent))
        } else {
            (false, None)
        };
        AssumptionReport {
            a_holds,
            b_holds,
            weak_holds,
            f_continuous,
            g_continuous,
            a_f: a_f.to_f64_lossy(),
            b_f: b_f.to_f64_lossy(),
            a_g: a_g.to_f64_lossy(),
            b_g: b_g.to_f64_lossy(),
            inverse_g_integrable,
        }
    }

    /// Fails with the named assumption when it does not hold.
    pub fn require(&self, assumption: crate::error::Assumption) -> Result<AssumptionReport> {
        use crate::error::Assumption;
        let report = self.check_assumptions();
        let (ok, detail) = match assumption {
            Assumption::A => (
                report.a_holds,
                format!(
                    "need continuous F, G and a_G < b_F; a_G = {}, b_F = {}, continuous = ({}, {})",
                    report.a_g, report.b_f, report.f_continuous, report.g_continuous
                ),
            ),
            Assumption::B => (
                report.b_holds,
                format!(
                    "need continuous F and a_G < a_F; a_G = {}, a_F = {}",
                    report.a_g, report.a_f
                ),
            ),
            Assumption::Weak => (
                report.weak_holds,
                format!(
                    "need a_G <= a_F and ∫ dF/G < ∞; a_G = {}, a_F = {}",
                    report.a_g, report.a_f
                ),
            ),
        };
        if ok {
            Ok(report)
        } else {
            Err(Error::AssumptionViolated { assumption, detail })
        }
    }

    /// Convergence probe for `∫ h / G dF`.
    ///
    /// The integrand can only blow up where `G` vanishes on the support of
    /// `F`. When `a_G > a_F` that is a set of positive `F`-mass and the integral
    /// is infinite outright. Otherwise the only candidate is the lower end of
    /// the support, probed by integrating over `[2^-k, 1]` in probability space
    /// for growing `k` and watching whether the increments decay geometrically.
    pub fn inverse_g_integrability<H>(&self, h: H) -> Integrability
    where
        H: Fn(S) -> S,
    {
        let f = &self.f;
        let g = &self.g;
        if f.cdf(g.support_lo()) > S::zero() && g.cdf(g.support_lo()) == S::zero() {
            return Integrability {
                convergent: false,
                estimate: f64::INFINITY,
                partial_values: Vec::new(),
                note: "G vanishes on a set of positive F-mass".into(),
            };
        }
        let integrand = |p: S| {
            let x = f.quantile(p);
            let v = h(x);
            if v == S::zero() {
                return S::zero();
            }
            v / g.cdf(x)
        };
        let mut pbreaks: Vec<S> = g.kinks().into_iter().map(|k| f.cdf(k)).collect();
        pbreaks.extend(f.knot_probabilities());
        let cfg = QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        };
        let mut partial_values = Vec::new();
        let mut increments: Vec<f64> = Vec::new();
        let mut total = 0.0;
        let mut upper = S::one();
        for k in 1..=48 {
            let lower = S::lit(0.5f64.powi(k));
            let piece = match crate::quadrature::integrate_finite(integrand, lower, upper, &pbreaks, &cfg) {
                Ok(q) => q.value.to_f64_lossy(),
                Err(_) => {
                    return Integrability {
                        convergent: false,
                        estimate: f64::INFINITY,
                        partial_values,
                        note: format!("quadrature failed on [2^-{k}, 2^-{}]", k - 1),
                    }
                }
            };
            total += piece;
            partial_values.push(total);
            increments.push(piece.abs());
            upper = lower;
            if k >= 12 {
                let last = increments[increments.len() - 1];
                if last <= 1e-13 * total.abs().max(1.0) {
                    return Integrability {
                        convergent: true,
                        estimate: total,
                        partial_values,
                        note: "increments vanished".into(),
                    };
                }
            }
        }
        // Ratio of successive dyadic increments: ~1 for a logarithmic or
        // worse blow-up, < 1 for an integrable power singularity.
        let n = increments.len();
        let ratio = (increments[n - 1] / increments[n - 2] + increments[n - 2] / increments[n - 3]) / 2.0;
        if ratio < 0.95 {
            let tail = increments[n - 1] * ratio / (1.0 - ratio);
            Integrability {
                convergent: true,
                estimate: total + tail,
                partial_values,
                note: format!("geometric decay of increments (ratio {ratio:.3})"),
            }
        } else {
            Integrability {
                convergent: false,
                estimate: total,
                partial_values,
                note: format!("increments do not decay (ratio {ratio:.3})"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Assumption;

    fn u(lo: f64, hi: f64) -> ContinuousDistribution<f64> {
        ContinuousDistribution::uniform(lo, hi).unwrap()
    }

    fn model(g: ContinuousDistribution<f64>) -> TruncationModel<f64> {
        TruncationModel::new(u(0.0, 1.0), g).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let none = model(ContinuousDistribution::point_mass(-1.0).unwrap());
        assert_eq!(none.alpha().unwrap(), 1.0);
        assert!((model(u(0.0, 1.0)).alpha().unwrap() - 0.5).abs() < 1e-9);
        assert!((model(u(-0.5, 0.5)).alpha().unwrap() - 0.875).abs() < 1e-9);
    }

    #[test]
    fn zero_alpha_is_an_error() {
        let m = model(u(2.0, 3.0));
        assert!(matches!(m.alpha(), Err(Error::ZeroObservationProbability)));
    }

    #[test]
    fn marginal_examples() {
        let m = model(u(0.0, 1.0));
        assert_eq!(m.f_star(-0.1).unwrap(), 0.0);
        assert!((m.f_star(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((m.f_star(0.5).unwrap() - 0.25).abs() < 1e-9);
        assert!((m.g_star(0.5).unwrap() - 0.75).abs() < 1e-9);
        assert!((m.g_star(1.5).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(m.g_star(-0.5).unwrap(), 0.0);
    }

    #[test]
    fn joint_examples_and_marginalization() {
        let m = model(u(0.0, 1.0));
        assert!((m.h_star(0.5, 0.5).unwrap() - 0.25).abs() < 1e-9);
        for y in [0.1, 0.4, 0.77] {
            assert!((m.h_star(y, f64::INFINITY).unwrap() - m.f_star(y).unwrap()).abs() < 1e-8);
            assert!((m.h_star(f64::INFINITY, y).unwrap() - m.g_star(y).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn coverage_examples() {
        let shifted = model(u(-0.5, 0.5));
        assert!((shifted.c_true(0.5).unwrap() - 0.5 / 0.875).abs() < 1e-9);
        assert_eq!(shifted.c_true(1.0).unwrap(), 0.0);
        assert!((model(u(0.0, 1.0)).c_true(0.5).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn assumption_flags() {
        let r = model(u(-0.5, 0.5)).check_assumptions();
        assert!(r.a_holds && r.b_holds && r.weak_holds);
        let r = model(u(0.0, 1.0)).check_assumptions();
        assert!(r.a_holds && !r.b_holds && !r.weak_holds);
        let r = model(u(2.0, 3.0)).check_assumptions();
        assert!(!r.a_holds && !r.b_holds);
        let r = model(ContinuousDistribution::point_mass(-1.0).unwrap()).check_assumptions();
        assert!(!r.a_holds && r.b_holds, "G atom breaks A but not B");
        assert!(model(u(2.0, 3.0)).require(Assumption::A).is_err());
    }

    #[test]
    fn integrability_probe() {
        assert!(!model(u(0.0, 1.0)).inverse_g_integrability(|_| 1.0).convergent);
        let shifted = model(u(-0.5, 0.5)).inverse_g_integrability(|_| 1.0);
        assert!(shifted.convergent);
        // ∫_0^1 du / (u + 0.5) over the part where G < 1, plus the rest
        let exact = (1.0f64 / 0.5).ln() + 0.5;
        assert!((shifted.estimate - exact).abs() < 1e-8, "{}", shifted.estimate);
        // G(x) = sqrt(x): ∫ x^{-1/2} dx = 2 converges despite a_G = a_F
        let sq = TruncationModel::new(
            u(0.0, 1.0),
            ContinuousDistribution::weibull(0.5, 1.0).unwrap(),
        )
        .unwrap();
        assert!(sq.inverse_g_integrability(|_| 1.0).convergent);
    }
}
