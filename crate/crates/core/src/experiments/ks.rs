use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// `sup_x |ECDF(x) - cdf(x)|`, evaluated on both sides of every order
/// statistic.
pub fn ks_statistic<C: Fn(f64) -> f64>(sample: &[f64], cdf: C) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let fx = cdf(x);
        let above = (i + 1) as f64 / n - fx;
        let below = fx - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// K-S distance to the standard normal law.
pub fn ks_standard_normal(sample: &[f64]) -> Result<f64> {
    let normal = Normal::standard();
    ks_statistic(sample, |x| normal.cdf(x))
}

/// Asymptotic 1% critical value of the K-S statistic for `m` observations.
pub fn ks_critical_1pct(m: usize) -> f64 {
    1.63 / (m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        assert_eq!(ks_statistic(&[0.5], |x| x).unwrap(), 0.5);
    }

    #[test]
    fn midpoint_quantiles() {
        let m = 40;
        let s: Vec<f64> = (1..=m).map(|k| (k as f64 - 0.5) / m as f64).collect();
        assert!((ks_statistic(&s, |x| x).unwrap() - 0.5 / m as f64).abs() < 1e-15);
    }

    #[test]
    fn empty_errors() {
        assert!(matches!(ks_statistic(&[], |x| x), Err(Error::EmptySample)));
    }

    #[test]
    fn normal_at_center() {
        assert!((ks_standard_normal(&[0.0]).unwrap() - 0.5).abs() < 1e-15);
    }
}
