//! Mann–Whitney U with an exact null distribution for small tie-free samples.

use num_rational::Ratio;

use super::special::normal_sf;
use super::{check_finite, Method, StatsError, TestResult};
use crate::scalar::Real;

/// Largest per-sample size for which `MwMode::Auto` uses the exact distribution.
pub const EXACT_MAX_N: usize = 9;

/// Upper bound on `n_x + n_y` for exact enumeration in `u128`.
const EXACT_MAX_TOTAL: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwMode {
    Exact,
    NormalApprox,
    /// Exact when both samples have at most [`EXACT_MAX_N`] values and there are no ties.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MannWhitney<T> {
    pub u_x: T,
    pub u_y: T,
    /// `statistic` is `min(U_X, U_Y)`.
    pub test: TestResult<T>,
    /// Exact two-tailed p as a fraction of all rank arrangements.
    pub exact_p: Option<Ratio<u128>>,
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their positions.
pub fn midranks<T: Real>(values: &[T]) -> (Vec<T>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = T::of_usize(i + j + 1) / T::lit(2.0);
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        if j - i > 1 {
            tie_sizes.push(j - i);
        }
        i = j;
    }
    (ranks, tie_sizes)
}

/// Counts of `U = u` over all `C(m + n, m)` arrangements of two tie-free samples.
pub fn mann_whitney_null_counts(m: usize, n: usize) -> Vec<u128> {
    // table[j] holds the distribution for (i, j) while sweeping i.
    let mut table: Vec<Vec<u128>> = (0..=n).map(|_| vec![1u128]).collect();
    for i in 1..=m {
        let mut next: Vec<Vec<u128>> = Vec::with_capacity(n + 1);
        next.push(vec![1u128]);
        for j in 1..=n {
            // f(i, j, u) = f(i - 1, j, u - j) + f(i, j - 1, u)
            let mut d = vec![0u128; i * j + 1];
            for (u, &c) in table[j].iter().enumerate() {
                d[u + j] += c;
            }
            for (u, &c) in next[j - 1].iter().enumerate() {
                d[u] += c;
            }
            next.push(d);
        }
        table = next;
    }
    table.swap_remove(n)
}

fn exact_two_tailed(u_min: usize, m: usize, n: usize) -> Ratio<u128> {
    let counts = mann_whitney_null_counts(m, n);
    let total: u128 = counts.iter().sum();
    let tail: u128 = counts[..=u_min.min(counts.len() - 1)].iter().sum();
    let favourable = (2 * tail).min(total);
    Ratio::new(favourable, total)
}

/// Two-tailed Mann–Whitney U test.
///
/// `U_X = R_X - n_X(n_X + 1)/2` with midranks; the reported statistic is
/// `min(U_X, U_Y)`. The normal approximation uses the tie-corrected variance
/// and a continuity correction of 0.5.
pub fn mann_whitney_u<T: Real>(x: &[T], y: &[T], mode: MwMode) -> Result<MannWhitney<T>, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(x)?;
    check_finite(y)?;
    let (nx, ny) = (x.len(), y.len());
    let pooled: Vec<T> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r_x: T = ranks[..nx].iter().copied().sum();
    let r_y: T = ranks[nx..].iter().copied().sum();
    let half = T::lit(0.5);
    let u_x = r_x - T::of_usize(nx * (nx + 1)) * half;
    let u_y = r_y - T::of_usize(ny * (ny + 1)) * half;
    let u = u_x.min(u_y);

    let use_exact = match mode {
        MwMode::Exact => {
            if !ties.is_empty() {
                return Err(StatsError::ExactUnavailable("samples contain ties".into()));
            }
            if nx + ny > EXACT_MAX_TOTAL {
                return Err(StatsError::ExactUnavailable(format!("n_x + n_y = {} too large", nx + ny)));
            }
            true
        }
        MwMode::NormalApprox => false,
        MwMode::Auto => ties.is_empty() && nx <= EXACT_MAX_N && ny <= EXACT_MAX_N,
    };

    if use_exact {
        let u_min = u.to_usize().expect("integral U without ties");
        let p = exact_two_tailed(u_min, nx, ny);
        let p_value = T::lit(*p.numer() as f64) / T::lit(*p.denom() as f64);
        return Ok(MannWhitney {
            u_x,
            u_y,
            test: TestResult::new(Method::MannWhitneyExact, u, vec![], p_value),
            exact_p: Some(p),
        });
    }

    let (m, n) = (T::of_usize(nx), T::of_usize(ny));
    let big_n = m + n;
    let tie_term: T = ties.iter().map(|&t| T::of_usize(t * t * t - t)).sum();
    let var = m * n / T::lit(12.0) * ((big_n + T::one()) - tie_term / (big_n * (big_n - T::one())));
    let mu = m * n * half;
    let test = if var <= T::zero() {
        TestResult::degenerate(Method::MannWhitneyNormal, u, vec![], T::one())
    } else {
        let z = ((u_x - mu).abs() - half).max(T::zero()) / var.sqrt();
        let p = (T::lit(2.0) * normal_sf(z)).min(T::one());
        TestResult::new(Method::MannWhitneyNormal, u, vec![], p)
    };
    Ok(MannWhitney { u_x, u_y, test, exact_p: None })
}
