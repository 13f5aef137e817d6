use anonbench_core::stats::special::student_t_two_tailed;
use anonbench_core::stats::{
    bh_fdr, mann_whitney_u, one_way_anova, paired_t_test, pearson_correlation, repeated_measures_anova,
    shapiro_wilk, unpaired_t_test, Method, MwMode, RepeatedMeasuresTable, StatsError,
};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

/// All size-`k` subsets of `0..n` as bit masks.
fn subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).collect()
}

/// U of the sample occupying ranks given by `mask` (ranks 1..=n).
fn u_of(mask: u32, n: usize, m: usize) -> u64 {
    let ranks: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i as u64 + 1).sum();
    ranks - (m * (m + 1) / 2) as u64
}

#[test]
fn mann_whitney_exact_matches_enumeration() {
    for m in 1..=7 {
        for n in 1..=7 {
            let total = m + n;
            let all = subsets(total, m);
            let us: Vec<u64> = all.iter().map(|&mask| u_of(mask, total, m)).collect();
            let centre2 = (m * n) as i64; // twice the null mean
            for &mask in &all {
                let x: Vec<f64> = (0..total).filter(|i| mask >> i & 1 == 1).map(|i| i as f64).collect();
                let y: Vec<f64> = (0..total).filter(|i| mask >> i & 1 == 0).map(|i| i as f64).collect();
                let u = u_of(mask, total, m) as i64;
                let d = (2 * u - centre2).abs();
                let extreme = us.iter().filter(|&&v| (2 * v as i64 - centre2).abs() >= d).count();
                let oracle = Ratio::new(extreme as u128, all.len() as u128);
                let r = mann_whitney_u(&x, &y, MwMode::Exact).unwrap();
                assert_eq!(r.exact_p, Some(oracle), "m={m} n={n} mask={mask:b}");
                assert_eq!(r.u_x + r.u_y, (m * n) as f64);
                assert_eq!(r.test.method, Method::MannWhitneyExact);
            }
        }
    }
}

fn bh_oracle(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let best = (1..=m)
        .filter(|&k| p.iter().filter(|&&q| q <= k as f64 * alpha / m as f64).count() >= k)
        .max();
    match best {
        None => vec![false; m],
        Some(k) => p.iter().map(|&q| q <= k as f64 * alpha / m as f64).collect(),
    }
}

#[test]
fn bh_matches_largest_k_rule() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for trial in 0..1000 {
        let m = rng.random_range(1..=12);
        let p: Vec<f64> = (0..m)
            .map(|_| match trial % 3 {
                0 => rng.random::<f64>(),
                1 => rng.random::<f64>() * 0.1,
                _ => (rng.random_range(0..20) as f64) / 200.0,
            })
            .collect();
        for alpha in [0.01, 0.05, 0.1, 0.25] {
            let out = bh_fdr(&p, alpha).unwrap();
            assert_eq!(out.significant, bh_oracle(&p, alpha), "p={p:?} alpha={alpha}");
            assert_eq!(out.rejected(), out.cutoff_rank);
            for (s, a) in out.significant.iter().zip(&out.adjusted) {
                assert_eq!(*s, *a <= alpha);
            }
        }
        let loose = bh_fdr(&p, 0.2).unwrap();
        let tight = bh_fdr(&p, 0.05).unwrap();
        for (t, l) in tight.significant.iter().zip(&loose.significant) {
            assert!(!t || *l);
        }
    }
}

#[test]
fn rm_anova_two_conditions_is_paired_t() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(17);
    for _ in 0..200 {
        let s = rng.random_range(3..15);
        let rows: Vec<Vec<f64>> = (0..s).map(|_| vec![rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0 + 1.0]).collect();
        let table = RepeatedMeasuresTable::from_rows(rows.clone()).unwrap();
        let f = repeated_measures_anova(&table).unwrap();
        let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let t = paired_t_test(&x, &y).unwrap();
        assert!((f.p_value - t.p_value).abs() < 1e-9);
        assert!((f.statistic - t.statistic * t.statistic).abs() < 1e-9 * f.statistic.max(1.0));
        assert_eq!(f.df, vec![1.0, (s - 1) as f64]);
    }
}

fn pooled_t(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let m1 = x.iter().sum::<f64>() / n1;
    let m2 = y.iter().sum::<f64>() / n2;
    let ss1: f64 = x.iter().map(|v| (v - m1).powi(2)).sum();
    let ss2: f64 = y.iter().map(|v| (v - m2).powi(2)).sum();
    let sp2 = (ss1 + ss2) / (n1 + n2 - 2.0);
    let t = (m1 - m2) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt();
    (t, n1 + n2 - 2.0)
}

#[test]
fn one_way_two_groups_is_pooled_t_squared() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(23);
    for _ in 0..200 {
        let x: Vec<f64> = (0..rng.random_range(2..12)).map(|_| rng.random::<f64>() * 5.0).collect();
        let y: Vec<f64> = (0..rng.random_range(2..12)).map(|_| rng.random::<f64>() * 5.0 + 0.5).collect();
        let f = one_way_anova(&[x.clone(), y.clone()]).unwrap();
        let (t, df) = pooled_t(&x, &y);
        assert!((f.statistic - t * t).abs() < 1e-9 * (t * t).max(1.0));
        assert!((f.p_value - student_t_two_tailed(t, df)).abs() < 1e-9);
    }
}

// Reference values: scipy.stats.ttest_rel / ttest_ind(equal_var=False) / pearsonr.
#[test]
fn paired_fixture() {
    let x = [12.1, 14.3, 11.8, 15.2, 13.9, 12.7, 16.1, 14.8, 13.3, 12.9];
    let y = [11.4, 13.9, 12.0, 14.1, 13.0, 12.9, 15.0, 14.2, 12.5, 12.1];
    // textbook oracle for the statistic
    let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / 10.0;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
    let r = paired_t_test(&x, &y).unwrap();
    assert!((r.statistic - mean * 10f64.sqrt() / sd).abs() < 1e-10);
    assert!((r.statistic - 4.024922359499621).abs() < 1e-10);
    assert!((r.p_value - 0.002995777451398833).abs() < 1e-10);
    assert_eq!(r.df, vec![9.0]);
}

#[test]
fn welch_fixture() {
    let a = [3.1f64, 4.5, 2.8, 5.9, 4.2, 3.7];
    let b = [5.2, 6.8, 4.9, 7.7, 6.1, 5.5, 6.4, 7.1];
    let r = unpaired_t_test(&a, &b).unwrap();
    assert!((r.statistic - -3.813688572647529).abs() < 1e-10);
    assert!((r.df[0] - 10.01174733660036).abs() < 1e-9);
    assert!((r.p_value - 0.0034013533193625).abs() < 1e-10);
}

#[test]
fn pearson_fixture() {
    let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
    let y = [2.1, 3.9, 6.2, 7.8, 9.7];
    let r = pearson_correlation(&x, &y).unwrap();
    assert!((r.statistic - 0.9987551039312825).abs() < 1e-10);
    assert!((r.p_value - 5.271720619674239e-05).abs() < 1e-10);
    let line = pearson_correlation(&x, &[3.0, 5.0, 7.0, 9.0, 11.0]).unwrap();
    assert!((line.statistic - 1.0).abs() < 1e-12);
    assert!(line.p_value < 1e-12);
    let neg = pearson_correlation(&x, &[-1.0, -2.0, -3.0, -4.0, -5.0]).unwrap();
    assert!((neg.statistic + 1.0).abs() < 1e-12);
    assert_eq!(pearson_correlation(&x, &[1.0; 5]).unwrap_err(), StatsError::ZeroVariance);
}

#[test]
fn degenerate_cases() {
    let same = paired_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
    let shift = paired_t_test(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(shift.degenerate);
    assert_eq!(shift.p_value, 0.0);
    let welch = unpaired_t_test(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    assert!(welch.degenerate);
    let ident = unpaired_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((ident.statistic, ident.p_value), (0.0, 1.0));
    let flat = one_way_anova(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
    assert!(flat.degenerate);
    assert_eq!(flat.p_value, 1.0);
    let rm = repeated_measures_anova(&RepeatedMeasuresTable::from_rows(vec![vec![1.0, 1.0], vec![3.0, 3.0], vec![2.0, 2.0]]).unwrap()).unwrap();
    assert_eq!((rm.statistic, rm.p_value), (0.0, 1.0));
    assert_eq!(one_way_anova(&[vec![1.0, 2.0]]).unwrap_err(), StatsError::TooFewGroups);
}

proptest! {
    #[test]
    fn statistics_are_affine_invariant(
        x in prop::collection::vec(-50.0f64..50.0, 5..20),
        y in prop::collection::vec(-50.0f64..50.0, 5..20),
        a in 0.1f64..10.0,
        b in -100.0f64..100.0,
    ) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        let tx: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let ty: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-9 * p.abs().max(1.0);

        let t0 = paired_t_test(x, y).unwrap();
        let t1 = paired_t_test(&tx, &ty).unwrap();
        prop_assert!(close(t0.statistic, t1.statistic) || (t0.degenerate && t1.degenerate));
        let r0 = pearson_correlation(x, y);
        if let (Ok(r0), Ok(r1)) = (r0, pearson_correlation(&tx, &ty)) {
            prop_assert!(close(r0.statistic, r1.statistic));
        }
        let u0 = mann_whitney_u(x, y, MwMode::NormalApprox).unwrap();
        let u1 = mann_whitney_u(&tx, &ty, MwMode::NormalApprox).unwrap();
        prop_assert_eq!(u0.test.statistic, u1.test.statistic);
        let f0 = one_way_anova(&[x.to_vec(), y.to_vec()]).unwrap();
        let f1 = one_way_anova(&[tx.clone(), ty.clone()]).unwrap();
        prop_assert!(close(f0.statistic, f1.statistic));
        if let (Ok(w0), Ok(w1)) = (shapiro_wilk(x), shapiro_wilk(&tx)) {
            prop_assert!((w0.statistic - w1.statistic).abs() < 1e-9);
        }
    }

    #[test]
    fn p_values_in_unit_interval(
        x in prop::collection::vec(0.0f64..100.0, 3..30),
        y in prop::collection::vec(0.0f64..100.0, 3..30),
    ) {
        let results = [
            unpaired_t_test(&x, &y).ok(),
            Some(mann_whitney_u(&x, &y, MwMode::Auto).unwrap().test),
            shapiro_wilk(&x).ok(),
            one_way_anova(&[x.clone(), y.clone()]).ok(),
        ];
        for r in results.into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&r.p_value), "{:?}", r);
        }
    }

    #[test]
    fn reordering_does_not_change_tests(mut x in prop::collection::vec(0.0f64..10.0, 4..15), y in prop::collection::vec(0.0f64..10.0, 4..15)) {
        let a = unpaired_t_test(&x, &y).ok();
        let u = mann_whitney_u(&x, &y, MwMode::Auto).unwrap().test.p_value;
        x.reverse();
        let b = unpaired_t_test(&x, &y).ok();
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        }
        prop_assert!((mann_whitney_u(&x, &y, MwMode::Auto).unwrap().test.p_value - u).abs() < 1e-12);
    }
}
