//! Closed-form univariate distributions used for the interest variable `Y`
//! and the truncation variable `T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_finite, QuadConfig, Quadrature};
use crate::scalar::Real;

/// A univariate law with closed-form CDF, density and quantile.
///
/// All families except [`ContinuousDistribution::PointMass`] are continuous.
/// The point mass exists so that "truncation that never bites" can be written
/// down directly; it is flagged as non-continuous by [`is_continuous`].
///
/// [`is_continuous`]: ContinuousDistribution::is_continuous
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContinuousDistribution<S> {
    Uniform { lo: S, hi: S },
    Exponential {
        rate: S,
        #[serde(default)]
        shift: S,
    },
    Weibull {
        shape: S,
        scale: S,
        #[serde(default)]
        shift: S,
    },
    /// CDF interpolating `(knots[i], probs[i])` linearly.
    PiecewiseLinear { knots: Vec<S>, probs: Vec<S> },
    PointMass { at: S },
    /// Law of `loc + scale * X` for `X` distributed as `base`.
    Affine {
        base: Box<ContinuousDistribution<S>>,
        loc: S,
        scale: S,
    },
}

impl<S: Real> ContinuousDistribution<S> {
    pub fn uniform(lo: S, hi: S) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn exponential(rate: S) -> Result<Self> {
        Self::Exponential {
            rate,
            shift: S::zero(),
        }
        .validated()
    }

    pub fn shifted_exponential(rate: S, shift: S) -> Result<Self> {
        Self::Exponential { rate, shift }.validated()
    }

    pub fn weibull(shape: S, scale: S) -> Result<Self> {
        Self::Weibull {
            shape,
            scale,
            shift: S::zero(),
        }
        .validated()
    }

    pub fn piecewise_linear(knots: Vec<S>, probs: Vec<S>) -> Result<Self> {
        Self::PiecewiseLinear { knots, probs }.validated()
    }

    pub fn point_mass(at: S) -> Result<Self> {
        Self::PointMass { at }.validated()
    }

    pub fn affine(base: Self, loc: S, scale: S) -> Result<Self> {
        Self::Affine {
            base: Box::new(base),
            loc,
            scale,
        }
        .validated()
    }

    /// Checks parameters; deserialized values must pass through here.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            Self::Exponential { rate, shift } => {
                if !(rate.is_finite() && *rate > S::zero() && shift.is_finite()) {
                    return bad(format!("exponential needs rate > 0, got {rate}"));
                }
            }
            Self::Weibull {
                shape,
                scale,
                shift,
            } => {
                if !(*shape > S::zero() && *scale > S::zero() && shape.is_finite() && scale.is_finite())
                    || !shift.is_finite()
                {
                    return bad(format!("weibull needs shape, scale > 0, got {shape}, {scale}"));
                }
            }
            Self::PiecewiseLinear { knots, probs } => {
                if knots.len() < 2 || knots.len() != probs.len() {
                    return bad("piecewise-linear needs >= 2 knots and matching probs".into());
                }
                if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("piecewise-linear knots must be finite and strictly increasing".into());
                }
                if probs[0] != S::zero() || probs[probs.len() - 1] != S::one() {
                    return bad("piecewise-linear probs must start at 0 and end at 1".into());
                }
                if probs.windows(2).any(|w| w[0] > w[1]) {
                    return bad("piecewise-linear probs must be nondecreasing".into());
                }
            }
            Self::PointMass { at } => {
                if !at.is_finite() {
                    return bad(format!("point mass location must be finite, got {at}"));
                }
            }
            Self::Affine { base, loc, scale } => {
                if !(loc.is_finite() && scale.is_finite() && *scale > S::zero()) {
                    return bad(format!("affine map needs finite loc and scale > 0, got {loc}, {scale}"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            Self::Uniform { lo, hi } => format!("U({lo}, {hi})"),
            Self::Exponential { rate, shift } => {
                if *shift == S::zero() {
                    format!("Exp({rate})")
                } else {
                    format!("{shift} + Exp({rate})")
                }
            }
            Self::Weibull {
                shape,
                scale,
                shift,
            } => {
                if *shift == S::zero() {
                    format!("Weibull({shape}, {scale})")
                } else {
                    format!("{shift} + Weibull({shape}, {scale})")
                }
            }
            Self::PiecewiseLinear { knots, .. } => format!("PiecewiseLinear({} knots)", knots.len()),
            Self::PointMass { at } => format!("delta({at})"),
            Self::Affine { base, loc, scale } => format!("{loc} + {scale} * {}", base.label()),
        }
    }

    pub fn cdf(&self, x: S) -> S {
        let zero = S::zero();
        let one = S::one();
        if x.is_nan() {
            return S::nan();
        }
        match self {
            Self::Uniform { lo, hi } => {
                if x <= *lo {
                    zero
                } else if x >= *hi {
                    one
                } else {
                    (x - *lo) / (*hi - *lo)
                }
            }
            Self::Exponential { rate, shift } => {
                if x <= *shift {
                    zero
                } else {
                    -(-(*rate) * (x - *shift)).exp_m1()
                }
            }
            Self::Weibull {
                shape,
                scale,
                shift,
            } => {
                if x <= *shift {
                    zero
                } else {
                    -(-((x - *shift) / *scale).powf(*shape)).exp_m1()
                }
            }
            Self::PiecewiseLinear { knots, probs } => {
                let last = knots.len() - 1;
                if x <= knots[0] {
                    return zero;
                }
                if x >= knots[last] {
                    return one;
                }
                let j = knots.partition_point(|k| *k <= x) - 1;
                let w = (x - knots[j]) / (knots[j + 1] - knots[j]);
                probs[j] + w * (probs[j + 1] - probs[j])
            }
            Self::PointMass { at } => {
                if x >= *at {
                    one
                } else {
                    zero
                }
            }
            Self::Affine { base, loc, scale } => base.cdf((x - *loc) / *scale),
        }
    }

    /// Density with respect to Lebesgue measure; zero for the point mass.
    pub fn pdf(&self, x: S) -> S {
        let zero = S::zero();
        match self {
            Self::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    S::one() / (*hi - *lo)
                } else {
                    zero
                }
            }
            Self::Exponential { rate, shift } => {
                if x < *shift {
                    zero
                } else {
                    *rate * (-(*rate) * (x - *shift)).exp()
                }
            }
            Self::Weibull {
                shape,
                scale,
                shift,
            } => {
                if x < *shift {
                    return zero;
                }
                let z = (x - *shift) / *scale;
                *shape / *scale * z.powf(*shape - S::one()) * (-z.powf(*shape)).exp()
            }
            Self::PiecewiseLinear { knots, probs } => {
                let last = knots.len() - 1;
                if x < knots[0] || x > knots[last] {
                    return zero;
                }
                let j = (knots.partition_point(|k| *k <= x).max(1) - 1).min(last - 1);
                (probs[j + 1] - probs[j]) / (knots[j + 1] - knots[j])
            }
            Self::PointMass { .. } => zero,
            Self::Affine { base, loc, scale } => base.pdf((x - *loc) / *scale) / *scale,
        }
    }

    /// Left-continuous inverse `inf{x : F(x) >= p}`; `p = 0` and `p = 1` map to
    /// the support bounds.
    pub fn quantile(&self, p: S) -> S {
        let one = S::one();
        if p <= S::zero() {
            return self.support_lo();
        }
        if p >= one {
            return self.support_hi();
        }
        match self {
            Self::Uniform { lo, hi } => *lo + p * (*hi - *lo),
            Self::Exponential { rate, shift } => *shift - (-p).ln_1p() / *rate,
            Self::Weibull {
                shape,
                scale,
                shift,
            } => *shift + *scale * (-(-p).ln_1p()).powf(one / *shape),
            Self::PiecewiseLinear { knots, probs } => {
                // first segment whose upper probability reaches p
                let j = probs.partition_point(|c| *c < p).max(1) - 1;
                let dp = probs[j + 1] - probs[j];
                let w = if dp > S::zero() { (p - probs[j]) / dp } else { S::zero() };
                knots[j] + w * (knots[j + 1] - knots[j])
            }
            Self::PointMass { at } => *at,
            Self::Affine { base, loc, scale } => *loc + *scale * base.quantile(p),
        }
    }

    /// `inf{x : F(x) > 0}`.
    pub fn support_lo(&self) -> S {
        match self {
            Self::Uniform { lo, .. } => *lo,
            Self::Exponential { shift, .. } | Self::Weibull { shift, .. } => *shift,
            Self::PiecewiseLinear { knots, probs } => {
                let j = probs.partition_point(|c| *c <= S::zero());
                knots[j.max(1) - 1]
            }
            Self::PointMass { at } => *at,
            Self::Affine { base, loc, scale } => *loc + *scale * base.support_lo(),
        }
    }

    /// `sup{x : F(x) < 1}`.
    pub fn support_hi(&self) -> S {
        match self {
            Self::Uniform { hi, .. } => *hi,
            Self::Exponential { .. } | Self::Weibull { .. } => S::infinity(),
            Self::PiecewiseLinear { knots, probs } => {
                let j = probs.partition_point(|c| *c < S::one());
                knots[j.min(knots.len() - 1)]
            }
            Self::PointMass { at } => *at,
            Self::Affine { base, loc, scale } => *loc + *scale * base.support_hi(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            Self::PointMass { .. } => false,
            Self::Affine { base, .. } => base.is_continuous(),
            _ => true,
        }
    }

    /// Location of the single atom of a point mass (after affine maps).
    pub fn atom(&self) -> Option<S> {
        match self {
            Self::PointMass { at } => Some(*at),
            Self::Affine { base, loc, scale } => base.atom().map(|a| *loc + *scale * a),
            _ => None,
        }
    }

    /// Points where the CDF is not smooth (finite support ends, knots).
    pub fn kinks(&self) -> Vec<S> {
        let mut out = match self {
            Self::PiecewiseLinear { knots, .. } => knots.clone(),
            Self::Affine { base, loc, scale } => base.kinks().into_iter().map(|k| *loc + *scale * k).collect(),
            _ => vec![self.support_lo(), self.support_hi()],
        };
        out.retain(|k| k.is_finite());
        out
    }

    /// `∫_{(lo, hi]} h dF` for this law `F`.
    ///
    /// Continuous laws are integrated in probability space,
    /// `∫_{F(lo)}^{F(hi)} h(Q(p)) dp`, which removes infinite ranges and density
    /// singularities. `breaks` lists points where `h` jumps or kinks.
    pub fn integrate_against<H>(&self, mut h: H, lo: S, hi: S, breaks: &[S], cfg: &QuadConfig) -> Result<Quadrature<S>>
    where
        H: FnMut(S) -> S,
    {
        if let Some(at) = self.atom() {
            let value = if lo < at && at <= hi { h(at) } else { S::zero() };
            return Ok(Quadrature {
                value,
                abs_error: 0.0,
                evaluations: 1,
                intervals: 0,
            });
        }
        if hi <= lo {
            return Ok(Quadrature {
                value: S::zero(),
                abs_error: 0.0,
                evaluations: 0,
                intervals: 0,
            });
        }
        let p_lo = self.cdf(lo);
        let p_hi = self.cdf(hi);
        let mut pbreaks: Vec<S> = breaks.iter().map(|&b| self.cdf(b)).collect();
        pbreaks.extend(self.knot_probabilities());
        integrate_finite(|p| h(self.quantile(p)), p_lo, p_hi, &pbreaks, cfg)
    }

    /// Probabilities at which the quantile function kinks.
    pub fn knot_probabilities(&self) -> Vec<S> {
        match self {
            Self::PiecewiseLinear { probs, .. } => probs.clone(),
            Self::Affine { base, .. } => base.knot_probabilities(),
            _ => Vec::new(),
        }
    }
}
