use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Piecewise-constant function on the real line.
///
/// `values[k]` holds on the open gap `(breakpoints[k], breakpoints[k+1])` and,
/// unless `point_values` overrides it, at `breakpoints[k]` itself, which makes
/// the function right-continuous. `point_values` exists for closed-interval
/// counting functions such as the risk-set function, which keep their mass at
/// the right end of each interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
    point_values: Option<Vec<S>>,
    value_before_first: S,
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(breakpoints: Vec<S>, values: Vec<S>, value_before_first: S) -> Result<Self> {
        Self::build(breakpoints, values, None, value_before_first)
    }

    pub fn with_point_values(
        breakpoints: Vec<S>,
        values: Vec<S>,
        point_values: Vec<S>,
        value_before_first: S,
    ) -> Result<Self> {
        Self::build(breakpoints, values, Some(point_values), value_before_first)
    }

    fn build(breakpoints: Vec<S>, values: Vec<S>, point_values: Option<Vec<S>>, value_before_first: S) -> Result<Self> {
        if breakpoints.len() != values.len() || point_values.as_ref().is_some_and(|p| p.len() != values.len()) {
            return Err(Error::InvalidArgument("step function: length mismatch".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "step function breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(StepFunction {
            breakpoints,
            values,
            point_values,
            value_before_first,
        })
    }

    /// The zero function.
    pub fn zero() -> Self {
        StepFunction {
            breakpoints: Vec::new(),
            values: Vec::new(),
            point_values: None,
            value_before_first: S::zero(),
        }
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn value_before_first(&self) -> &S {
        &self.value_before_first
    }

    pub fn is_right_continuous(&self) -> bool {
        self.point_values.as_ref().is_none_or(|p| p == &self.values)
    }

    /// Value at `y`.
    pub fn evaluate(&self, y: &S) -> S {
        let k = self.breakpoints.partition_point(|b| b <= y);
        if k == 0 {
            return self.value_before_first.clone();
        }
        let i = k - 1;
        match &self.point_values {
            Some(p) if &self.breakpoints[i] == y => p[i].clone(),
            _ => self.values[i].clone(),
        }
    }

    /// `lim_{x ↑ y}` of the function.
    pub fn left_limit(&self, y: &S) -> S {
        let k = self.breakpoints.partition_point(|b| b < y);
        if k == 0 {
            self.value_before_first.clone()
        } else {
            self.values[k - 1].clone()
        }
    }

    /// `(breakpoint, right value - left value)` for every breakpoint.
    pub fn jumps(&self) -> impl Iterator<Item = (&S, S)> {
        self.breakpoints.iter().enumerate().map(move |(k, b)| {
            let before = if k == 0 {
                self.value_before_first.clone()
            } else {
                self.values[k - 1].clone()
            };
            (b, self.values[k].clone() - before)
        })
    }

    /// Nondecreasing, within `[0, 1]`, zero before the first breakpoint.
    pub fn is_cdf_like(&self) -> bool {
        let zero = S::zero();
        let one = S::one();
        self.value_before_first == zero
            && self.is_right_continuous()
            && self.values.iter().all(|v| *v >= zero && *v <= one)
            && self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Empirical distribution function of `points` (ties allowed).
    pub fn ecdf<'a, I: IntoIterator<Item = &'a S>>(points: I) -> Result<Self> {
        let mut xs: Vec<S> = points.into_iter().cloned().collect();
        if xs.is_empty() {
            return Err(Error::EmptySample);
        }
        xs.sort_by(|a, b| a.partial_cmp(b).expect("comparable sample"));
        let n = S::from_count(xs.len());
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            if i + 1 == xs.len() || xs[i + 1] != *x {
                breakpoints.push(x.clone());
                values.push(S::from_count(i + 1) / n.clone());
            }
        }
        Self::new(breakpoints, values, S::zero())
    }
}

impl<S: Scalar> StepFunction<S> {
    /// Tabulates the function as `(breakpoint, value)` rows.
    pub fn table(&self) -> Vec<(S, S)> {
        self.breakpoints.iter().cloned().zip(self.values.iter().cloned()).collect()
    }
}
