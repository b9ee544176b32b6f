//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature.
//!
//! Intervals are refined largest-error-first until the summed error estimate
//! meets the tolerance. Infinite endpoints are handled by rational
//! substitutions onto a finite interval; interior breakpoints (jumps or kinks
//! of the integrand) seed the initial partition so that no panel straddles them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the 7-point rule embedded at the odd Kronrod indices.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and refinement budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadConfig {
            abs_tol,
            ..Default::default()
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<S> {
    pub value: S,
    pub abs_error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

struct Panel<S> {
    lo: S,
    hi: S,
    value: S,
    error: f64,
    /// `∫|f|` over the panel.
    magnitude: f64,
}

impl<S> PartialEq for Panel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<S> Eq for Panel<S> {}
impl<S> PartialOrd for Panel<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S> Ord for Panel<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<S: Real, F: FnMut(S) -> S>(f: &mut F, lo: S, hi: S) -> Result<(S, f64, f64)> {
    let half = S::lit(0.5);
    let center = half * (lo + hi);
    let half_len = half * (hi - lo);
    let fc = f(center);
    let mut res_k = fc * S::lit(WGK[7]);
    let mut res_g = fc * S::lit(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [S::zero(); 7];
    let mut fv2 = [S::zero(); 7];
    for j in 0..7 {
        let dx = half_len * S::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = S::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + S::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    if !res_k.is_finite() {
        return Err(Error::numerical(
            format!("non-finite integrand on [{lo}, {hi}]"),
            f64::INFINITY,
        ));
    }
    let mean = res_k * half;
    let mut res_asc = S::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + S::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half_len.abs();
    let value = res_k * half_len;
    let res_abs = (res_abs * scale).to_f64_lossy();
    let res_asc = (res_asc * scale).to_f64_lossy();
    let mut err = ((res_k - res_g) * half_len).abs().to_f64_lossy();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let eps = S::epsilon().to_f64_lossy();
    if res_abs > f64::MIN_POSITIVE / (50.0 * eps) {
        err = err.max(50.0 * eps * res_abs);
    }
    Ok((value, err, res_abs))
}

/// Integrates `f` over the finite interval `[lo, hi]`, splitting first at `breaks`.
pub fn integrate_finite<S, F>(
    mut f: F,
    lo: S,
    hi: S,
    breaks: &[S],
    cfg: &QuadConfig,
) -> Result<Quadrature<S>>
where
    S: Real,
    F: FnMut(S) -> S,
{
    if lo == hi {
        return Ok(Quadrature {
            value: S::zero(),
            abs_error: 0.0,
            evaluations: 0,
            intervals: 0,
        });
    }
    if hi < lo {
        let q = integrate_finite(f, hi, lo, breaks, cfg)?;
        return Ok(Quadrature {
            value: -q.value,
            ..q
        });
    }
    let mut cuts: Vec<S> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(lo);
    let mut inner: Vec<S> = breaks
        .iter()
        .copied()
        .filter(|b| *b > lo && *b < hi && b.is_finite())
        .collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    inner.dedup();
    cuts.extend(inner);
    cuts.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = S::zero();
    let mut total_err = 0.0;
    let mut total_abs = 0.0;
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        let (value, error, magnitude) = kronrod15(&mut f, w[0], w[1])?;
        evaluations += 15;
        total = total + value;
        total_err += error;
        total_abs += magnitude;
        heap.push(Panel {
            lo: w[0],
            hi: w[1],
            value,
            error,
            magnitude,
        });
    }
    // Panels too narrow to bisect further keep their error here.
    let mut frozen_err = 0.0;
    // The relative part scales with `∫|f|`: when `∫f` cancels, the roundoff
    // floor of the error estimate sits above `rel_tol·|∫f|`.
    let target = |m: f64| cfg.abs_tol.max(cfg.rel_tol * m);
    while total_err > target(total_abs) {
        if heap.len() >= cfg.max_intervals {
            return Err(Error::numerical(
                format!("adaptive quadrature on [{lo}, {hi}] exhausted {} panels", cfg.max_intervals),
                total_err,
            ));
        }
        let Some(worst) = heap.pop() else { break };
        let mid = S::lit(0.5) * (worst.lo + worst.hi);
        let width = (worst.hi - worst.lo).to_f64_lossy();
        let tiny = 64.0 * S::epsilon().to_f64_lossy() * mid.abs().to_f64_lossy().max(1.0);
        if width <= tiny || mid <= worst.lo || mid >= worst.hi {
            frozen_err += worst.error;
            if frozen_err > target(total_abs) {
                return Err(Error::numerical(
                    format!("roundoff limits refinement near {mid}"),
                    total_err,
                ));
            }
            continue;
        }
        let (v1, e1, m1) = kronrod15(&mut f, worst.lo, mid)?;
        let (v2, e2, m2) = kronrod15(&mut f, mid, worst.hi)?;
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        total_abs += m1 + m2 - worst.magnitude;
        heap.push(Panel {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
            magnitude: m1,
        });
        heap.push(Panel {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
            magnitude: m2,
        });
    }
    // Re-sum to shed the drift of incremental updates.
    let value = heap.iter().fold(S::zero(), |acc, p| acc + p.value);
    let intervals = heap.len();
    let value = if frozen_err > 0.0 { total } else { value };
    Ok(Quadrature {
        value,
        abs_error: total_err.max(0.0),
        evaluations,
        intervals,
    })
}

/// Adaptive integration over `[lo, hi]` where either endpoint may be infinite.
pub fn integrate_with<S, F>(
    mut f: F,
    lo: S,
    hi: S,
    breaks: &[S],
    cfg: &QuadConfig,
) -> Result<Quadrature<S>>
where
    S: Real,
    F: FnMut(S) -> S,
{
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidArgument("NaN integration limit".into()));
    }
    if lo == hi {
        return integrate_finite(f, lo, hi, breaks, cfg);
    }
    if hi < lo {
        let q = integrate_with(f, hi, lo, breaks, cfg)?;
        return Ok(Quadrature {
            value: -q.value,
            ..q
        });
    }
    let one = S::one();
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => integrate_finite(f, lo, hi, breaks, cfg),
        (true, false) => {
            // x = lo + s / (1 - s), s in [0, 1)
            let mapped: Vec<S> = breaks
                .iter()
                .filter(|b| **b > lo && b.is_finite())
                .map(|&b| (b - lo) / (one + b - lo))
                .collect();
            integrate_finite(
                |s: S| {
                    let d = one - s;
                    f(lo + s / d) / (d * d)
                },
                S::zero(),
                one,
                &mapped,
                cfg,
            )
        }
        (false, true) => {
            // x = hi - (1 - s) / s, s in (0, 1]
            let mapped: Vec<S> = breaks
                .iter()
                .filter(|b| **b < hi && b.is_finite())
                .map(|&b| one / (one + hi - b))
                .collect();
            integrate_finite(
                |s: S| f(hi - (one - s) / s) / (s * s),
                S::zero(),
                one,
                &mapped,
                cfg,
            )
        }
        (false, false) => {
            // x = s / (1 - s^2), s in (-1, 1)
            let two = S::lit(2.0);
            let mapped: Vec<S> = breaks
                .iter()
                .filter(|b| b.is_finite())
                .map(|&b| {
                    if b == S::zero() {
                        S::zero()
                    } else {
                        // inverse of s / (1 - s^2) = b on (-1, 1)
                        (two * b) / (one + (one + S::lit(4.0) * b * b).sqrt())
                    }
                })
                .collect();
            integrate_finite(
                |s: S| {
                    let d = one - s * s;
                    f(s / d) * (one + s * s) / (d * d)
                },
                -one,
                one,
                &mapped,
                cfg,
            )
        }
    }
}

/// `∫_lo^hi f(x) dx` to absolute tolerance `tol`.
pub fn integrate<S, F>(f: F, lo: S, hi: S, tol: f64) -> Result<S>
where
    S: Real,
    F: FnMut(S) -> S,
{
    integrate_with(f, lo, hi, &[], &QuadConfig::with_abs_tol(tol)).map(|q| q.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_linear() {
        assert!((integrate(|_: f64| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate(|x: f64| x, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-6).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn cancelling_integrand_meets_relative_target() {
        let cfg = QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        };
        let q = integrate_finite(|x: f64| 1e5 * (x * x).sin() / (1.0 + x), 0.0, 12.0, &[], &cfg).unwrap();
        assert!(q.abs_error < 1e-5, "{}", q.abs_error);
    }

    #[test]
    fn reversed_limits_negate() {
        let a = integrate(|x: f64| x * x, 0.0, 2.0, 1e-12).unwrap();
        let b = integrate(|x: f64| x * x, 2.0, 0.0, 1e-12).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn infinite_limits() {
        let v = integrate(|x: f64| (-x).exp(), 0.0, f64::INFINITY, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let v = integrate(|x: f64| x.exp(), f64::NEG_INFINITY, 0.0, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let v = integrate(|x: f64| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-10).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn breakpoints_resolve_jumps() {
        let cfg = QuadConfig::with_abs_tol(1e-13);
        let q = integrate_finite(|x: f64| if x <= 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &[0.3], &cfg).unwrap();
        assert!((q.value - 0.3).abs() < 1e-14);
        assert_eq!(q.intervals, 2);
    }

    #[test]
    fn jump_without_breakpoint_still_converges() {
        let v = integrate(|x: f64| if x <= 1.0 / 3.0 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-9).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_reports_error() {
        let cfg = QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_intervals: 4,
        };
        let err = integrate_finite(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &[], &cfg).unwrap_err();
        match err {
            Error::NumericalFailure { achieved_error, .. } => assert!(achieved_error > 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_precision() {
        let v = integrate(|x: f32| x * x, 0.0f32, 3.0, 1e-4).unwrap();
        assert!((v - 9.0).abs() < 1e-4);
    }
}
