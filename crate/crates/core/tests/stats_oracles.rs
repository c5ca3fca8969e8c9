//! Statistics checked against statrs and against brute-force enumeration.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use cas_core::stats::special::{chi_square_sf, erfc, gamma_p, ln_gamma, normal_sf};
use cas_core::stats::{
    self, wilcoxon_signed_rank_with, BlockedSample, Method, StatsError, WilcoxonMethod,
};

#[test]
fn special_functions_match_statrs() {
    for &x in &[0.1, 0.5, 1.0, 2.5, 7.0, 20.0, 171.3] {
        let want = statrs::function::gamma::ln_gamma(x);
        assert!((ln_gamma(x) - want).abs() < 1e-10 * want.abs().max(1.0), "ln_gamma({x})");
    }
    for &(a, x) in &[(0.5, 0.2), (1.5, 3.0), (4.0, 2.0), (10.0, 12.5), (30.0, 25.0)] {
        let want = statrs::function::gamma::gamma_lr(a, x);
        assert!((gamma_p(a, x) - want).abs() < 1e-11, "P({a}, {x})");
    }
    for df in 1..=12 {
        let dist = ChiSquared::new(df as f64).unwrap();
        for &x in &[0.01, 0.5, 1.0, 3.0, 6.75, 12.0, 30.0, 80.0] {
            let want = dist.sf(x);
            let got = chi_square_sf(x, df);
            assert!((got - want).abs() < 1e-10 + 1e-8 * want, "sf({x}; {df}) = {got} vs {want}");
        }
    }
    // statrs' erfc is itself only good to about 1e-11 here.
    let normal = Normal::new(0.0, 1.0).unwrap();
    for &z in &[-3.0, -1.0, 0.0, 0.5, 1.96, 3.5, 6.0] {
        assert!((normal_sf(z) - normal.sf(z)).abs() < 1e-10, "normal_sf({z})");
        assert!((erfc(z) - statrs::function::erf::erfc(z)).abs() < 1e-10, "erfc({z})");
    }
}

#[test]
fn erfc_matches_libm() {
    // Reference values from the C library's erfc.
    let table = [
        (-3.0, 1.9999779095030015),
        (-1.0, 1.842700792949715),
        (0.5, 0.4795001221869535),
        (1.96, 0.005573724535172132),
        (3.5, 7.430983723414128e-07),
        (6.0, 2.1519736712498916e-17),
    ];
    for (x, want) in table {
        let got: f64 = erfc(x);
        assert!(((got - want) / want).abs() < 1e-13, "erfc({x}) = {got} vs {want}");
    }
}

#[test]
fn published_friedman_p_values() {
    // Reported χ²(3) statistics and p-values, both rounded. For 7.93 the
    // exact tail is 0.04746, so agreement is only to within the rounding of
    // the reported statistic.
    for (chi2, reported) in [(6.75f64, 0.080f64), (7.93, 0.048)] {
        let p = chi_square_sf(chi2, 3);
        assert!((p - reported).abs() < 1e-3, "χ²={chi2}: p={p}, reported {reported}");
    }
    assert_eq!(format!("{:.3}", chi_square_sf(6.75, 3)), "0.080");
    assert!(chi_square_sf(21.8, 3) < 0.001);
}

#[test]
fn tabulated_exact_wilcoxon() {
    // n = 10 with W = 8 is the two-sided 5% critical value: P(W <= 8) = 25/1024.
    let x: Vec<f64> = (1..=10).map(f64::from).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| if v == 1.0 || v == 3.0 || v == 4.0 { 2.0 * v } else { 0.0 })
        .collect();
    let t = stats::wilcoxon_signed_rank(&x, &y).unwrap();
    assert_eq!(t.statistic, 8.0);
    assert_eq!(t.p_value, 50.0 / 1024.0);
    assert_eq!(t.method, Method::WilcoxonExact);
}

/// Mid-ranks by counting, then the two-sided tail over all sign flips.
fn brute_wilcoxon(diffs: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|v| *v != 0.0).collect();
    let mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let rank = |m: f64| {
        let below = mags.iter().filter(|&&w| w < m).count() as f64;
        let equal = mags.iter().filter(|&&w| w == m).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = mags.iter().map(|&m| rank(m)).collect();
    let observed: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let total: f64 = ranks.iter().sum();
    let n = d.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let p = (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0);
    (observed.min(total - observed), p)
}

proptest! {
    #[test]
    fn exact_wilcoxon_matches_enumeration(
        diffs in prop::collection::vec((-4i32..=4).prop_map(|v| v as f64 * 0.5), 2..11)
    ) {
        let zeros = vec![0.0; diffs.len()];
        match stats::wilcoxon_signed_rank_with(&diffs, &zeros, WilcoxonMethod::Exact) {
            Ok(t) => {
                let (w, p) = brute_wilcoxon(&diffs);
                prop_assert_eq!(t.statistic, w);
                prop_assert!((t.p_value - p).abs() < 1e-12, "{} vs {}", t.p_value, p);
            }
            Err(e) => prop_assert_eq!(e, StatsError::AllZeroDifferences),
        }
    }

    #[test]
    fn friedman_matches_rank_formula(
        rows in prop::collection::vec(prop::collection::vec(0u8..4, 4), 2..15)
    ) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
        let t = stats::friedman(&BlockedSample::new(rows.clone()).unwrap()).unwrap();
        let k = 4usize;
        let n = rows.len() as f64;
        let mean = (k as f64 + 1.0) / 2.0;
        let ranks: Vec<Vec<f64>> = rows.iter().map(|row| row.iter().map(|&v| {
            let below = row.iter().filter(|&&w| w < v).count() as f64;
            let equal = row.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        }).collect()).collect();
        let within: f64 = ranks.iter().flatten().map(|r| (r - mean).powi(2)).sum();
        if within == 0.0 {
            prop_assert_eq!(t.statistic, 0.0);
            prop_assert_eq!(t.p_value, 1.0);
        } else {
            let between: f64 = (0..k).map(|j| {
                let r: f64 = ranks.iter().map(|row| row[j]).sum();
                (r - n * mean).powi(2)
            }).sum();
            let want = (k as f64 - 1.0) * between / within;
            prop_assert!((t.statistic - want).abs() < 1e-9, "{} vs {}", t.statistic, want);
            prop_assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn bonferroni_is_clamped_and_monotone(p in 0.0f64..=1.0, m in 1usize..20) {
        let b = stats::bonferroni(p, m);
        prop_assert!(b >= p && b <= 1.0);
        prop_assert!(stats::bonferroni(p, m + 1) >= b);
    }
}

#[test]
fn exact_and_normal_agree_at_the_switchover() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let y = vec![0.0; 12];
        let exact = wilcoxon_signed_rank_with(&x, &y, WilcoxonMethod::Exact).unwrap();
        let normal = wilcoxon_signed_rank_with(&x, &y, WilcoxonMethod::Normal).unwrap();
        assert_eq!(exact.statistic, normal.statistic);
        worst = worst.max((exact.p_value - normal.p_value).abs());
    }
    assert!(worst < 0.02, "largest exact/normal gap at n = 12: {worst}");
}

#[test]
fn one_sample_against_zero() {
    let t = stats::wilcoxon_one_sample(&[0.2, 0.5, 0.9, 0.4, 0.7, 0.3], 0.0).unwrap();
    assert_eq!(t.statistic, 0.0);
    assert_eq!(t.p_value, 0.03125);
    assert_eq!(t.n, 6);
}

