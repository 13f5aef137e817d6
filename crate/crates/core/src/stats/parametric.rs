use super::special::student_t_two_tailed;
use super::{check_finite, Method, StatsError, TestResult};
use crate::scalar::{mean, sample_variance, Real};

fn all_equal<T: Real>(xs: &[T]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// Two-tailed paired t-test on `x - y` with `n - 1` degrees of freedom.
pub fn paired_t_test<T: Real>(x: &[T], y: &[T]) -> Result<TestResult<T>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: x.len() });
    }
    check_finite(x)?;
    check_finite(y)?;
    let d: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let n = T::of_usize(d.len());
    let df = vec![n - T::one()];
    if all_equal(&d) {
        return Ok(if d[0] == T::zero() {
            TestResult::degenerate(Method::PairedT, T::zero(), df, T::one())
        } else {
            TestResult::degenerate(Method::PairedT, d[0].signum() * T::infinity(), df, T::zero())
        });
    }
    let t = mean(&d) * n.sqrt() / sample_variance(&d).sqrt();
    let p = student_t_two_tailed(t, df[0]);
    Ok(TestResult::new(Method::PairedT, t, df, p))
}

/// Two-tailed Welch t-test with Welch–Satterthwaite degrees of freedom.
pub fn unpaired_t_test<T: Real>(x: &[T], y: &[T]) -> Result<TestResult<T>, StatsError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (n1, n2) = (T::of_usize(x.len()), T::of_usize(y.len()));
    let (m1, m2) = (mean(x), mean(y));
    if all_equal(x) && all_equal(y) {
        let df = vec![n1 + n2 - T::lit(2.0)];
        return Ok(if x[0] == y[0] {
            TestResult::degenerate(Method::WelchT, T::zero(), df, T::one())
        } else {
            TestResult::degenerate(Method::WelchT, (x[0] - y[0]).signum() * T::infinity(), df, T::zero())
        });
    }
    let a = if all_equal(x) { T::zero() } else { sample_variance(x) / n1 };
    let b = if all_equal(y) { T::zero() } else { sample_variance(y) / n2 };
    let t = (m1 - m2) / (a + b).sqrt();
    let df = (a + b) * (a + b) / (a * a / (n1 - T::one()) + b * b / (n2 - T::one()));
    let p = student_t_two_tailed(t, df);
    Ok(TestResult::new(Method::WelchT, t, vec![df], p))
}

/// Pearson's r with a two-tailed p from `t = r√(n-2)/√(1-r²)`.
pub fn pearson_correlation<T: Real>(x: &[T], y: &[T]) -> Result<TestResult<T>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: x.len() });
    }
    check_finite(x)?;
    check_finite(y)?;
    if all_equal(x) || all_equal(y) {
        return Err(StatsError::ZeroVariance);
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let r = (sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one());
    let df = T::of_usize(x.len() - 2);
    let p = if r.abs() == T::one() {
        T::zero()
    } else {
        student_t_two_tailed(r * df.sqrt() / (T::one() - r * r).sqrt(), df)
    };
    Ok(TestResult::new(Method::Pearson, r, vec![df], p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_identical_samples() {
        let x = [1.0f64, 2.0, 4.0];
        let r = paired_t_test(&x, &x).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn paired_constant_shift_is_degenerate() {
        let r = paired_t_test(&[3.0f64, 4.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        assert!(r.statistic.is_infinite() && r.statistic > 0.0);
    }

    #[test]
    fn paired_errors() {
        assert_eq!(paired_t_test(&[1.0f64], &[2.0]).unwrap_err(), StatsError::TooFewObservations { needed: 2, got: 1 });
        assert_eq!(paired_t_test(&[1.0f64, 2.0], &[2.0]).unwrap_err(), StatsError::LengthMismatch(2, 1));
    }

    #[test]
    fn welch_cases() {
        let x = [1.0f64, 2.0, 3.0, 4.0];
        let r = unpaired_t_test(&x, &x).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let r = unpaired_t_test(&[0.0f64, 0.0], &[1.0, 1.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        // One constant group leaves the other's variance in charge.
        let r = unpaired_t_test(&[0.0f64, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(!r.degenerate);
        assert!((r.df[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = pearson_correlation(&x, &y).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-15);
        assert!(r.p_value < 1e-6);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &y).unwrap().statistic + 1.0).abs() < 1e-15);
        assert_eq!(pearson_correlation(&x, &[1.0; 5]).unwrap_err(), StatsError::ZeroVariance);
        assert!(pearson_correlation(&x[..2], &y[..2]).is_err());
    }
}
