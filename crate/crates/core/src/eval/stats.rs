use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided two-sample Student's t-test with pooled variance.
///
/// With zero pooled variance the p-value is 1 for equal means and 0
/// otherwise.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(format!(
            "t-test needs at least 2 samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let df = n1 + n2 - 2.0;
    let (m1, m2) = (mean(a), mean(b));
    let ss = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let pooled = (ss(a, m1) + ss(b, m2)) / df;
    if pooled == 0.0 {
        return Ok(if m1 == m2 {
            TTest {
                t: 0.0,
                df,
                p_value: 1.0,
            }
        } else {
            TTest {
                t: f64::INFINITY.copysign(m1 - m2),
                df,
                p_value: 0.0,
            }
        });
    }
    let t = (m1 - m2) / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    Ok(TTest {
        t,
        df,
        p_value: two_sided_p(t, df),
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = t_test(&[0.7, 0.8, 0.75], &[0.7, 0.8, 0.75]).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variance() {
        let r = t_test(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert_eq!(t_test(&[2.0; 3], &[2.0; 3]).unwrap().p_value, 1.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn std_uses_n_minus_one() {
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sample_std(&[1.0]), 0.0);
    }
}
