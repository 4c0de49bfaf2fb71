use proptest::prelude::*;

use meanwidth::conjecture::{softmax_bound, InterpolationFamily};
use meanwidth::extremes::{cdf_max, cdf_max_abs, u_sequence};
use meanwidth::gram::{random_gram, GramConfiguration};
use meanwidth::limits::{limit_cdf, standardize_cube, LimitLaw};
use meanwidth::monte_carlo::{chunk_rng, merge_all, sample_width, Welford};
use meanwidth::special::{gaussian_abs_moment, log_gamma_ratio, normal_pdf, normal_tail};
use meanwidth::widths::{PolytopeKind, RegularPolytope};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tail_is_a_decreasing_probability(t in -8.0f64..37.0, dt in 1e-3f64..2.0) {
        let a = normal_tail(t);
        let b = normal_tail(t + dt);
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(b < a);
    }

    #[test]
    fn tail_symmetry(t in -8.0f64..8.0) {
        prop_assert!((normal_tail(t) + normal_tail(-t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_sandwich(t in 0.05f64..35.0) {
        let v = normal_tail(t);
        let p = normal_pdf(t);
        prop_assert!(v <= p / t * (1.0 + 1e-14));
        prop_assert!(v >= p * (1.0 / t - 1.0 / (t * t * t)) * (1.0 - 1e-14));
    }

    #[test]
    fn gamma_ratio_is_a_log_difference(a in 0.1f64..1e6, b in 0.1f64..1e6, c in 0.1f64..1e6) {
        let ab = log_gamma_ratio(a, b).unwrap();
        let bc = log_gamma_ratio(b, c).unwrap();
        let ac = log_gamma_ratio(a, c).unwrap();
        prop_assert!((ab + log_gamma_ratio(b, a).unwrap()).abs() <= 1e-12 * ab.abs().max(1.0));
        prop_assert!((ab + bc - ac).abs() <= 1e-11 * ab.abs().max(bc.abs()).max(1.0));
    }

    #[test]
    fn gamma_ratio_recurrence(a in 0.1f64..1e7) {
        // Γ(a + 1) = a Γ(a)
        let v = log_gamma_ratio(a + 1.0, a).unwrap();
        prop_assert!((v - a.ln()).abs() <= 1e-12 * a.ln().abs().max(1.0));
    }

    #[test]
    fn abs_moment_recurrence(k in 2u32..40) {
        let r = gaussian_abs_moment(k) / gaussian_abs_moment(k - 2);
        prop_assert!((r - f64::from(k - 1)).abs() < 1e-12 * f64::from(k));
    }

    #[test]
    fn maximum_cdfs_are_ordered_probabilities(n in 1u64..100_000, t in 0.0f64..12.0) {
        let fa = cdf_max_abs(n, t).unwrap();
        let fb = cdf_max(2 * n, t);
        prop_assert!((0.0..=1.0).contains(&fa));
        // max|η_i| over n is at least max over the n signed copies
        prop_assert!(fa <= fb + 1e-15);
        prop_assert!(cdf_max_abs(n, t + 0.1).unwrap() >= fa);
    }

    #[test]
    fn u_sequence_defining_relation(n in 1_000_000u64..1_000_000_000_000) {
        // the relation holds only asymptotically, with a (ln ln n)^2 / ln n error
        let u = u_sequence(n).unwrap();
        let lhs = (2.0 * std::f64::consts::PI).sqrt() * u * (0.5 * u * u).exp();
        prop_assert!((lhs / n as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn welford_merge_is_split_invariant(xs in prop::collection::vec(-1e3f64..1e3, 2..300), cut in 1usize..50) {
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let parts: Vec<Welford> = xs.chunks(cut).map(|c| {
            let mut w = Welford::default();
            c.iter().for_each(|&x| w.push(x));
            w
        }).collect();
        let m = merge_all(&parts);
        prop_assert_eq!(m.count, all.count);
        prop_assert!((m.mean - all.mean).abs() <= 1e-9);
        prop_assert!((m.variance() - all.variance()).abs() <= 1e-7 * all.variance().max(1.0));
    }

    #[test]
    fn softmax_sandwich(xs in prop::collection::vec(-50.0f64..50.0, 1..40), beta in 1e-2f64..1e3) {
        let (soft, max) = softmax_bound(&xs, beta).unwrap();
        let slack = 1e-12 * max.abs().max(1.0);
        prop_assert!(soft >= max - slack);
        prop_assert!(soft <= max + (xs.len() as f64).ln() / beta + slack);
    }

    #[test]
    fn limit_cdfs_are_monotone(x in -20.0f64..40.0, dx in 1e-3f64..3.0) {
        for law in [LimitLaw::NormalLimitVar, LimitLaw::Gumbel, LimitLaw::TwoGumbel, LimitLaw::GumbelSum] {
            let a = limit_cdf(law, x).unwrap();
            let b = limit_cdf(law, x + dx).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b >= a - 1e-12, "{:?}", law);
        }
        prop_assert_eq!(limit_cdf(LimitLaw::TwoGumbel, x).unwrap(), limit_cdf(LimitLaw::Gumbel, x / 2.0).unwrap());
    }

    #[test]
    fn cube_standardization_is_a_shift(w in 0.01f64..100.0, n in 1usize..10_000) {
        let z = standardize_cube(w, n);
        prop_assert!((z - standardize_cube(w + 1.0, n) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_widths_respect_support(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = chunk_rng(seed, 0);
        for kind in [PolytopeKind::Cube, PolytopeKind::Crosspolytope, PolytopeKind::SimplexT, PolytopeKind::SimplexS] {
            let p = RegularPolytope::new(kind, n).unwrap();
            let w = sample_width(p, &mut rng).value;
            let cap = match kind {
                PolytopeKind::Cube => (n as f64).sqrt(),
                PolytopeKind::SimplexS => 2f64.sqrt(),
                _ => 2.0,
            };
            prop_assert!(w > 0.0 && w <= cap * (1.0 + 1e-12), "{} {}", p, w);
        }
    }

    #[test]
    fn interpolation_covariance_is_psd(n in 1usize..6, t in 0.0f64..=1.0) {
        let f = InterpolationFamily::new(n, t).unwrap();
        let ev = nalgebra::SymmetricEigen::new(f.covariance()).eigenvalues;
        prop_assert!(ev.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn random_grams_are_valid_and_permutation_invariant(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = chunk_rng(seed, 1);
        let g = random_gram(n, &mut rng).unwrap();
        prop_assert!(g.min_eigenvalue() >= -1e-10);
        for i in 0..n {
            prop_assert_eq!(g.matrix()[(i, i)], 1.0);
        }
        let perm: Vec<usize> = (0..n).rev().collect();
        let h = GramConfiguration::new(nalgebra::DMatrix::from_fn(n, n, |i, j| g.matrix()[(perm[i], perm[j])])).unwrap();
        prop_assert!(g.fingerprint_distance(&h) < 1e-10);
    }

    #[test]
    fn gram_is_rotation_invariant(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = chunk_rng(seed, 2);
        let mut buf = vec![0.0; n * n];
        meanwidth::monte_carlo::fill_normal(&mut rng, &mut buf);
        let y = nalgebra::DMatrix::from_vec(n, n, buf.clone());
        meanwidth::monte_carlo::fill_normal(&mut rng, &mut buf);
        let q = nalgebra::DMatrix::from_vec(n, n, buf).qr().q();
        let g1 = GramConfiguration::from_points(&y).unwrap();
        let g2 = GramConfiguration::from_points(&(&y * q)).unwrap();
        prop_assert!(g1.frobenius_distance(&g2) < 1e-10);
    }
}
