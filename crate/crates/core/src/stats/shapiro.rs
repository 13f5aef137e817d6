//! Shapiro–Wilk W with Royston's (1995) coefficient and p-value approximations.

use super::special::{normal_quantile, normal_sf};
use super::{check_finite, Method, StatsError, TestResult};
use crate::scalar::Real;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly<T: Real>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::lit(ci))
}

/// Half-sample weights `a_1 >= a_2 >= ... >= a_{n/2} > 0`.
fn weights<T: Real>(n: usize) -> Vec<T> {
    if n == 3 {
        return vec![T::FRAC_1_SQRT_2()];
    }
    let half = n / 2;
    let an = T::of_usize(n);
    let m: Vec<T> = (1..=half)
        .map(|i| normal_quantile((T::of_usize(i) - T::lit(0.375)) / (an + T::lit(0.25))))
        .collect();
    let summ2 = T::lit(2.0) * m.iter().map(|&v| v * v).sum::<T>();
    let ssumm2 = summ2.sqrt();
    let rsn = T::one() / an.sqrt();
    let two = T::lit(2.0);
    let mut a: Vec<T> = m.iter().map(|&v| -v).collect();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let (first_scaled, fac) = if n > 5 {
        let a2 = poly(&C2, rsn) - m[1] / ssumm2;
        let fac = ((summ2 - two * m[0] * m[0] - two * m[1] * m[1])
            / (T::one() - two * a1 * a1 - two * a2 * a2))
            .sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - two * m[0] * m[0]) / (T::one() - two * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for v in &mut a[first_scaled..] {
        *v /= fac;
    }
    a
}

/// Shapiro–Wilk normality test for `3 <= n <= 5000`.
pub fn shapiro_wilk<T: Real>(x: &[T]) -> Result<TestResult<T>, StatsError> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(StatsError::SampleTooSmall(n));
    }
    check_finite(x)?;
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let range = sorted[n - 1] - sorted[0];
    let scale = sorted[0].abs().max(sorted[n - 1].abs());
    if range <= scale * T::epsilon() * T::lit(8.0) || range < T::lit(1e-19) {
        return Err(StatsError::ConstantSample);
    }
    let a = weights::<T>(n);
    // Work on range-scaled data to avoid overflow in the sums of squares.
    let z: Vec<T> = sorted.iter().map(|&v| v / range).collect();
    let mean = crate::scalar::mean(&z);
    let ss: T = z.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let b: T = a.iter().enumerate().map(|(i, &ai)| ai * (z[n - 1 - i] - z[i])).sum();
    let w = (b * b / ss).min(T::one());
    let w1 = T::one() - w;

    let an = T::of_usize(n);
    let p = if n == 3 {
        let six_over_pi = T::lit(6.0) / T::PI();
        (six_over_pi * (w.sqrt().asin() - T::FRAC_PI_3())).max(T::zero()).min(T::one())
    } else if w1 <= T::zero() {
        T::one()
    } else {
        let mut y = w1.ln();
        let (m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return Ok(TestResult::new(Method::ShapiroWilk, w, vec![], T::lit(1e-99)));
            }
            y = -(gamma - y).ln();
            (poly(&C3, an), poly(&C4, an).exp())
        } else {
            let ln_n = an.ln();
            (poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        normal_sf((y - m) / s)
    };
    Ok(TestResult::new(Method::ShapiroWilk, w, vec![], p))
}
