//! Parallel-efficiency figures over per-worker suffix timings.

use crate::error::{Error, Result};

/// Σt / max t. Equals P for perfectly balanced workers.
pub fn load_balance(times: &[f64]) -> Result<f64> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Argument("timings must be finite and non-negative".into()));
    }
    let max = times.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::UndefinedMetric("load balance needs a positive timing".into()));
    }
    Ok(times.iter().sum::<f64>() / max)
}

/// Σt / t₁¹, where t₁¹ is the single-worker suffix time.
pub fn increase_of_work(times: &[f64], t11: Option<f64>) -> Result<f64> {
    let t11 = t11.ok_or_else(|| Error::UndefinedMetric("no single-thread baseline".into()))?;
    if !(t11.is_finite() && t11 > 0.0) {
        return Err(Error::UndefinedMetric(format!("single-thread baseline {t11} is not positive")));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Argument("timings must be finite and non-negative".into()));
    }
    Ok(times.iter().sum::<f64>() / t11)
}

/// Median; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(load_balance(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 4.0);
        assert!((load_balance(&[10.0, 1.0, 1.0, 1.0]).unwrap() - 1.3).abs() < 1e-12);
        assert!(matches!(load_balance(&[0.0, 0.0]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(load_balance(&[]), Err(Error::UndefinedMetric(_))));
        assert_eq!(increase_of_work(&[7.5], Some(7.5)).unwrap(), 1.0);
        assert!((increase_of_work(&[6.0, 6.0], Some(10.0)).unwrap() - 1.2).abs() < 1e-12);
        assert!(matches!(increase_of_work(&[1.0], None), Err(Error::UndefinedMetric(_))));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
