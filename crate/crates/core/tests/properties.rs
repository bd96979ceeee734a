use lrdfield::cli::parse_radii;
use lrdfield::covariance::CovarianceModel;
use lrdfield::field::SeedPolicy;
use lrdfield::functionals::{cloud_weights, exact_variance, lse_estimate, FunctionalConfig, WeightFunction};
use lrdfield::hermite::{hermite_coeffs, hermite_poly, Nonlinearity};
use lrdfield::study::{boxplot_summary, fit_log_rate, ks_statistic, spearman};
use lrdfield::surface::{cube_points, sphere_points, SurfaceCloud};
use proptest::prelude::*;

fn sample(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, len)
}

fn config(weight: WeightFunction) -> FunctionalConfig {
    let model = CovarianceModel::cauchy(3, 2.0 / 3.0).unwrap();
    FunctionalConfig::new(model, weight, hermite_coeffs(&Nonlinearity::Hermite(2), 6, 20).unwrap()).unwrap()
}

fn rotate(p: [f64; 3], a: f64, b: f64, c: f64) -> [f64; 3] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sc, cc) = c.sin_cos();
    let p = [ca * p[0] - sa * p[1], sa * p[0] + ca * p[1], p[2]];
    let p = [cb * p[0] + sb * p[2], p[1], -sb * p[0] + cb * p[2]];
    [p[0], cc * p[1] - sc * p[2], sc * p[1] + cc * p[2]]
}

fn permuted(cloud: &SurfaceCloud, seed: u64) -> SurfaceCloud {
    let mut idx: Vec<usize> = (0..cloud.len()).collect();
    let mut state = seed;
    for i in (1..idx.len()).rev() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        idx.swap(i, (state >> 33) as usize % (i + 1));
    }
    let mut out = cloud.clone();
    out.points = idx.iter().map(|&i| cloud.points[i]).collect();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_is_a_bounded_symmetric_distance(a in sample(1..60), b in sample(1..60)) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        let mut rev = a.clone();
        rev.reverse();
        prop_assert_eq!(ks_statistic(&a, &rev).unwrap(), 0.0);
    }

    #[test]
    fn box_summary_is_ordered(v in sample(1..80)) {
        let s = boxplot_summary(&v).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }

    #[test]
    fn rate_fit_ignores_repeat_order(
        rows in prop::collection::vec(prop::collection::vec(0.001..1.0f64, 5), 2..6),
        seed in any::<u64>(),
    ) {
        let grid = [10.0, 20.0, 30.0, 40.0, 50.0];
        let a = fit_log_rate(&rows, &grid).unwrap();
        let mut shuffled = rows.clone();
        shuffled.rotate_left((seed % rows.len() as u64) as usize);
        shuffled.reverse();
        let b = fit_log_rate(&shuffled, &grid).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-12 * (1.0 + a.slope.abs()));
        prop_assert!((a.intercept - b.intercept).abs() <= 1e-12 * (1.0 + a.intercept.abs()));
        prop_assert_eq!(a.n_points, b.n_points);
    }

    #[test]
    fn spearman_rho_is_a_correlation(x in sample(3..12), shift in -5.0..5.0f64) {
        let y: Vec<f64> = x.iter().map(|v| v * v + shift).collect();
        let t = spearman(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&t.rho));
        prop_assert!((0.0..=1.0).contains(&t.p_less) && (0.0..=1.0).contains(&t.p_greater));
        let mono = spearman(&x, &x.iter().map(|v| v.exp()).collect::<Vec<_>>()).unwrap();
        let distinct = { let mut s = x.clone(); s.sort_by(f64::total_cmp); s.windows(2).all(|w| w[0] < w[1]) };
        if distinct {
            prop_assert!((mono.rho - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_is_a_decreasing_correlation(d1 in 0.0..1e4f64, d2 in 0.0..1e4f64, alpha in 0.05..1.95f64) {
        let m = CovarianceModel::cauchy(3, alpha).unwrap();
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let (b_lo, b_hi) = (m.cov(lo).unwrap(), m.cov(hi).unwrap());
        prop_assert!(b_hi > 0.0 && b_hi <= b_lo && b_lo <= 1.0);
    }

    #[test]
    fn hermite_matches_explicit_sum(k in 0usize..12, x in -6.0..6.0f64) {
        let mut sum = 0.0;
        let mut fact = [1.0f64; 13];
        for i in 1..13 { fact[i] = fact[i - 1] * i as f64; }
        for m in 0..=k / 2 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * fact[k] / (fact[m] * fact[k - 2 * m] * 2f64.powi(m as i32)) * x.powi((k - 2 * m) as i32);
        }
        let h = hermite_poly(k, x).unwrap();
        prop_assert!((h - sum).abs() <= 1e-9 * (1.0 + sum.abs()));
    }

    #[test]
    fn seed_paths_are_distinct(a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        let p = SeedPolicy::new(7);
        prop_assert_ne!(p.derive(&[a, 1]), p.derive(&[b, 1]));
        prop_assert_eq!(p.derive(&[a, 1]), p.derive(&[a, 1]));
    }

    #[test]
    fn radius_range_expands(start in 1u32..50, steps in 1u32..10, step in 1u32..20) {
        let end = start + steps * step;
        let r = parse_radii(&format!("{start}:{end}:{step}")).unwrap();
        prop_assert_eq!(r.len(), steps as usize + 1);
        prop_assert_eq!(r[0], start as f64);
        prop_assert_eq!(*r.last().unwrap(), end as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_variance_ignores_point_order(seed in any::<u64>(), r in 2.0..30.0f64, cube in any::<bool>()) {
        let cloud = if cube { cube_points(r, 60).unwrap() } else { sphere_points(r, 40).unwrap() };
        for weight in [WeightFunction::constant_one(), WeightFunction::sphere_weight(), WeightFunction::cube_weight()] {
            let cfg = config(weight);
            let a = exact_variance(&cfg, &cloud, r).unwrap();
            let b = exact_variance(&cfg, &permuted(&cloud, seed), r).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn exact_variance_is_rotation_invariant_for_constant_weight(
        a in 0.0..6.3f64, b in 0.0..6.3f64, c in 0.0..6.3f64, r in 2.0..30.0f64,
    ) {
        let cloud = sphere_points(r, 50).unwrap();
        let mut turned = cloud.clone();
        turned.points = cloud.points.iter().map(|&p| rotate(p, a, b, c)).collect();
        let cfg = config(WeightFunction::constant_one());
        let v0 = exact_variance(&cfg, &cloud, r).unwrap();
        let v1 = exact_variance(&cfg, &turned, r).unwrap();
        prop_assert!((v0 - v1).abs() <= 1e-10 * v0.abs());
    }

    #[test]
    fn lse_recovers_coefficient_without_noise(a in -100.0..100.0f64, r in 2.0..40.0f64, cube in any::<bool>(), w in 0usize..3) {
        let cloud = if cube { cube_points(r, 96).unwrap() } else { sphere_points(r, 80).unwrap() };
        let weight = [WeightFunction::constant_one(), WeightFunction::sphere_weight(), WeightFunction::cube_weight()][w].clone();
        let cfg = config(weight);
        let h = cloud_weights(&cfg.weight, &cloud).unwrap();
        let obs: Vec<f64> = h.iter().map(|v| a * v).collect();
        let est = lse_estimate(&obs, &cfg, &cloud).unwrap();
        prop_assert!((est - a).abs() <= 1e-9 * (1.0 + a.abs()));
    }
}
