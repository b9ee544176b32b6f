use std::fmt;
use std::sync::Arc;

use crate::distribution::ContinuousDistribution;
use crate::error::Result;
use crate::quadrature::QuadConfig;
use crate::scalar::Real;

type Eval<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// A real function on the line with a label and the points where it may jump
/// or kink. Breakpoints feed the quadrature partition; they never change the
/// function's values.
#[derive(Clone)]
pub struct MeasurableFunction<S> {
    eval: Eval<S>,
    label: String,
    breakpoints: Vec<S>,
    constant: Option<S>,
}

impl<S: fmt::Debug> fmt::Debug for MeasurableFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurableFunction")
            .field("label", &self.label)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl<S: Real> MeasurableFunction<S> {
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(S) -> S + Send + Sync + 'static,
    {
        MeasurableFunction {
            eval: Arc::new(eval),
            label: label.into(),
            breakpoints: Vec::new(),
            constant: None,
        }
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<S>) -> Self {
        breakpoints.retain(|b| b.is_finite());
        breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        self
    }

    pub fn constant(c: S) -> Self {
        MeasurableFunction {
            eval: Arc::new(move |_| c),
            label: format!("constant({c})"),
            breakpoints: Vec::new(),
            constant: Some(c),
        }
    }

    pub fn zero() -> Self {
        Self::constant(S::zero())
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x)
    }

    /// `x ↦ 1(x <= s)`.
    pub fn indicator(s: S) -> Self {
        Self::new(format!("indicator({s})"), move |x| if x <= s { S::one() } else { S::zero() })
            .with_breakpoints(vec![s])
    }

    /// `x ↦ clamp(slope (x - shift), -1, 1)`, Lipschitz with constant `|slope|`.
    pub fn ramp(slope: S, shift: S) -> Self {
        let one = S::one();
        let f = Self::new(format!("lipschitz({slope}, {shift})"), move |x| {
            (slope * (x - shift)).max(-one).min(one)
        });
        if slope == S::zero() {
            f
        } else {
            f.with_breakpoints(vec![shift - one / slope, shift + one / slope])
        }
    }

    /// `x ↦ φ₀(x) 1(x <= t)`.
    pub fn truncated_at(phi0: &Self, t: S) -> Self {
        let inner = phi0.eval.clone();
        let mut breaks = phi0.breakpoints.clone();
        breaks.push(t);
        Self::new(format!("{}*indicator({t})", phi0.label), move |x| {
            if x <= t {
                inner(x)
            } else {
                S::zero()
            }
        })
        .with_breakpoints(breaks)
    }

    #[inline]
    pub fn eval(&self, x: S) -> S {
        (self.eval)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    /// `Some(c)` when the function is known to be identically `c`.
    pub fn as_constant(&self) -> Option<S> {
        self.constant
    }

    fn merged_breaks(&self, other: &Self) -> Vec<S> {
        let mut b = self.breakpoints.clone();
        b.extend_from_slice(&other.breakpoints);
        b
    }

    /// `a φ + b ψ`.
    pub fn linear_combination(a: S, phi: &Self, b: S, psi: &Self) -> Self {
        if let (Some(c1), Some(c2)) = (phi.constant, psi.constant) {
            return Self::constant(a * c1 + b * c2);
        }
        let (f, g) = (phi.eval.clone(), psi.eval.clone());
        Self::new(format!("{a}*{} + {b}*{}", phi.label, psi.label), move |x| a * f(x) + b * g(x))
            .with_breakpoints(phi.merged_breaks(psi))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self::new(format!("{} - {}", self.label, other.label), move |x| f(x) - g(x))
            .with_breakpoints(self.merged_breaks(other))
    }

    pub fn scale(&self, a: S) -> Self {
        Self::linear_combination(a, self, S::zero(), &Self::zero())
    }

    /// Pointwise map `x ↦ m(φ(x))`.
    pub fn map<M>(&self, label: impl Into<String>, m: M) -> Self
    where
        M: Fn(S) -> S + Send + Sync + 'static,
    {
        let f = self.eval.clone();
        let mut out = Self::new(label, move |x| m(f(x))).with_breakpoints(self.breakpoints.clone());
        if self.constant.is_some() {
            out.constant = Some(out.eval(S::zero()));
        }
        out
    }

    pub fn abs(&self) -> Self {
        self.map(format!("|{}|", self.label), |v| v.abs())
    }

    pub fn positive_part(&self) -> Self {
        self.map(format!("({})+", self.label), |v| v.max(S::zero()))
    }

    pub fn negative_part(&self) -> Self {
        self.map(format!("({})-", self.label), |v| (-v).max(S::zero()))
    }

    /// `∫ φ dF` over the whole line.
    pub fn integral(&self, base: &ContinuousDistribution<S>, cfg: &QuadConfig) -> Result<S> {
        if let Some(c) = self.constant {
            return Ok(c);
        }
        Ok(base
            .integrate_against(|x| self.eval(x), S::neg_infinity(), S::infinity(), &self.breakpoints, cfg)?
            .value)
    }

    /// `(∫ |φ|^p dF)^{1/p}`.
    pub fn lp_norm(&self, p: u32, base: &ContinuousDistribution<S>, cfg: &QuadConfig) -> Result<S> {
        let pp = S::from_u32(p).expect("small exponent");
        if let Some(c) = self.constant {
            return Ok(c.abs());
        }
        let v = base
            .integrate_against(|x| self.eval(x).abs().powi(p as i32), S::neg_infinity(), S::infinity(), &self.breakpoints, cfg)?
            .value;
        Ok(v.max(S::zero()).powf(S::one() / pp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_is_right_closed() {
        let f = MeasurableFunction::indicator(0.5);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(0.5000001), 0.0);
        assert_eq!(f.breakpoints(), &[0.5]);
    }

    #[test]
    fn ramp_is_clamped() {
        let f = MeasurableFunction::ramp(2.0, 0.5);
        assert_eq!(f.eval(-10.0), -1.0);
        assert_eq!(f.eval(0.75), 0.5);
        assert_eq!(f.eval(10.0), 1.0);
    }

    #[test]
    fn combinations() {
        let f = MeasurableFunction::indicator(0.3);
        let g = MeasurableFunction::identity();
        let h = MeasurableFunction::linear_combination(2.0, &f, -1.0, &g);
        assert_eq!(h.eval(0.1), 2.0 - 0.1);
        assert_eq!(h.breakpoints(), &[0.3]);
        let c = MeasurableFunction::linear_combination(2.0, &MeasurableFunction::constant(1.5), 1.0, &MeasurableFunction::constant(1.0));
        assert_eq!(c.as_constant(), Some(4.0));
        let n = MeasurableFunction::constant(-2.0).abs();
        assert_eq!(n.as_constant(), Some(2.0));
    }

    #[test]
    fn norms_under_uniform() {
        let base = ContinuousDistribution::<f64>::uniform(0.0, 1.0).unwrap();
        let cfg = QuadConfig::with_abs_tol(1e-12);
        let f = MeasurableFunction::indicator(0.25);
        assert!((f.lp_norm(1, &base, &cfg).unwrap() - 0.25).abs() < 1e-12);
        assert!((f.lp_norm(2, &base, &cfg).unwrap() - 0.5).abs() < 1e-12);
        assert!((MeasurableFunction::identity().integral(&base, &cfg).unwrap() - 0.5).abs() < 1e-12);
    }
}
