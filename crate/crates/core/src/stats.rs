//! Student-t confidence intervals over independent runs.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    /// Two-sided half-width; `None` with fewer than two samples.
    pub half_width: Option<f64>,
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample standard deviation (n - 1 denominator).
pub fn sample_std(samples: &[f64]) -> f64 {
    let m = mean(samples);
    let ss: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (samples.len() - 1) as f64).sqrt()
}

/// Two-sided Student-t quantile `t_{(1 + level) / 2, df}`.
pub fn t_quantile(level: f64, df: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    t.inverse_cdf(0.5 + level / 2.0)
}

/// Mean and `level` two-sided half-width with df = n - 1.
pub fn confidence_interval_at(samples: &[f64], level: f64) -> Interval {
    assert!(!samples.is_empty(), "confidence interval of no samples");
    let m = mean(samples);
    if samples.len() < 2 {
        return Interval { mean: m, half_width: None };
    }
    let n = samples.len();
    let s = sample_std(samples);
    let hw = if s == 0.0 { 0.0 } else { t_quantile(level, n - 1) * s / (n as f64).sqrt() };
    Interval { mean: m, half_width: Some(hw) }
}

/// 95% interval.
pub fn confidence_interval(samples: &[f64]) -> Interval {
    confidence_interval_at(samples, 0.95)
}

/// One-sided lower confidence bound at `level` for the mean of the paired
/// differences `a[i] - b[i]`. A positive bound means `a` exceeds `b`
/// significantly.
pub fn paired_lower_bound(a: &[f64], b: &[f64], level: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples");
    assert!(a.len() >= 2, "paired test needs two pairs");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let s = sample_std(&d);
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df >= 1").inverse_cdf(level);
    mean(&d) - t * s / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_fixture() {
        let ci = confidence_interval(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(ci.mean, 3.0);
        // t(0.975, 4) = 2.776445, s = sqrt(2.5)
        let hw = ci.half_width.unwrap();
        assert!((hw - 1.963).abs() < 1e-3, "{hw}");
        assert!((t_quantile(0.95, 4) - 2.776_445).abs() < 1e-5);
    }

    #[test]
    fn two_point_fixture() {
        let ci = confidence_interval(&[0.0, 10.0]);
        assert_eq!(ci.mean, 5.0);
        let hw = ci.half_width.unwrap();
        // t(0.975, 1) = 12.7062, s = 7.0711
        assert!((hw - 63.53).abs() < 0.01, "{hw}");
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(confidence_interval(&[4.2]), Interval { mean: 4.2, half_width: None });
        assert_eq!(confidence_interval(&[2.0, 2.0, 2.0]).half_width, Some(0.0));
    }

    #[test]
    fn paired_bound_detects_shift() {
        let a = [3.0, 4.1, 5.0, 6.2, 7.0];
        let b = [2.0, 3.0, 4.1, 5.0, 6.1];
        assert!(paired_lower_bound(&a, &b, 0.95) > 0.0);
        assert!(paired_lower_bound(&b, &a, 0.95) < 0.0);
    }
}
