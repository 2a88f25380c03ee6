use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use young_power::coefficients::*;

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

#[test]
fn power_evaluation() {
    let c = Coefficient::power(1.0, 0.5).unwrap();
    assert_eq!(c.eval(&[4.0]), vec![2.0]);
    assert_eq!(c.eval(&[-4.0]), vec![2.0]);
    assert_eq!(c.eval(&[0.0]), vec![0.0]);
}

#[test]
fn construction_checks() {
    assert!(Coefficient::power(1.0, 0.0).is_err());
    assert!(Coefficient::power(1.0, 1.0).is_err());
    assert!(Coefficient::power(-1.0, 0.5).is_err());
    assert!(Coefficient::custom("shifted", 0.5, |r| r.sqrt() + 1.0).is_err());
    assert!(Coefficient::power(1.0, 0.5).unwrap().with_direction(vec![1.0, 1.0]).is_err());
}

#[test]
fn regularized_clamps_below_threshold() {
    let c = Coefficient::power(2.0, 0.5).unwrap();
    let r = regularize(&c, 3);
    assert_eq!(r.threshold(), 0.125);
    assert!((r.eval(&[0.01])[0] - 2.0 * 0.125f64.sqrt()).abs() < 1e-15);
    assert_eq!(r.eval(&[0.0])[0], r.eval(&[0.125])[0]);

    let p = regularize(&Coefficient::power(1.0, 0.5).unwrap(), 2);
    assert_eq!(p.eval(&[0.25])[0], 0.5);
    assert_eq!(p.eval(&[0.1])[0], 0.5);

    let z = regularize(&Coefficient::power(1.0, 0.5).unwrap(), 0);
    assert_eq!(z.eval(&[0.0])[0], 1.0);
}

#[test]
fn regularization_is_bitwise_transparent_above_threshold() {
    let c = Coefficient::power(1.3, 0.4).unwrap().with_direction(unit(vec![1.0, 2.0, -2.0])).unwrap();
    let r = regularize(&c, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let xi: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        if xi.iter().map(|v| v * v).sum::<f64>().sqrt() > r.threshold() {
            assert_eq!(r.eval(&xi), c.eval(&xi));
        }
    }
}

#[test]
fn seminorm_of_power_is_its_scale() {
    let c = Coefficient::power(1.7, 0.3).unwrap();
    let est = seminorm_estimate(&c, 2000, 5.0, 9).unwrap();
    assert!((est.value - 1.7).abs() < 1e-12);
    let exact = c.seminorm(10, 1.0, 0).unwrap();
    assert!(exact.exact);
    assert_eq!(exact.value, 1.7);
}

#[test]
fn seminorm_of_perturbed_power_is_bounded_by_scan() {
    let c = Coefficient::radial(Profile::PowerPlusLinear { scale: 1.0, slope: 1.0 }, 0.5).unwrap();
    let est = seminorm_estimate(&c, 20_000, 1.0, 3).unwrap();
    let scan = radius_scan(&c, 1.0, 2000);
    // (ρ(r) − ρ(s))/(√r − √s) = 1 + √r + √s ≤ 3 on [0,1]
    assert!(est.value <= scan * (1.0 + 1e-9));
    assert!(scan <= 3.0 + 1e-12 && scan > 2.9);
}

#[test]
fn seminorm_of_capped_power_matches_scan() {
    let c = Coefficient::radial(Profile::CappedPower { scale: 1.0, cap: 1.0 }, 0.5).unwrap();
    let est = seminorm_estimate(&c, 100_000, 4.0, 5).unwrap();
    let scan = radius_scan(&c, 4.0, 1000);
    assert!((est.value - scan).abs() <= 0.01 * scan, "{} vs {scan}", est.value);
}

#[test]
fn seminorm_reports_degenerate_sampling() {
    let c = Coefficient::power(1.0, 0.5).unwrap();
    let same = vec![(vec![0.5], vec![-0.5]); 4];
    assert!(seminorm_on_pairs(&c, &same).is_none());
}

#[test]
fn regularized_seminorm_never_exceeds_base() {
    let c = Coefficient::power(1.0, 0.5).unwrap();
    let pairs = sample_pairs(1, 100_000, 1.0, 17);
    let base = seminorm_on_pairs(&c, &pairs).unwrap().0;
    let reg = seminorm_on_pairs(&regularize(&c, 5), &pairs).unwrap().0;
    assert!(reg <= 1.0 + 1e-12);
    assert!(reg <= base + 1e-12);
}

#[test]
fn interpolation_bound_endpoints() {
    let c = Coefficient::power(1.0, 0.4).unwrap();
    let (lhs, rhs) = lemma23_bound(&c, &[0.3], &[0.3], 0.2).unwrap();
    assert_eq!(lhs, 0.0);
    assert!(rhs >= 0.0);
    let (lhs, rhs) = lemma23_bound(&c, &[0.3], &[0.9], 0.0).unwrap();
    assert!((rhs - 2.0 * 0.6f64.powf(0.4)).abs() < 1e-12);
    assert!(lhs <= rhs);
    assert!(lemma23_bound(&c, &[0.3], &[0.9], 0.7).is_err());
    assert!(lemma23_bound(&c, &[0.0], &[0.9], 0.1).is_err());
}

#[test]
fn hypothesis_reports() {
    let c = Coefficient::power(1.0, 0.5).unwrap();
    let r = check_hypotheses(&c, 0.6);
    assert_eq!(r.regime, Regime::SuperYoung);
    assert!((r.regime_witness - 0.9).abs() < 1e-12);
    assert!(r.increasing.passed);
    assert!(r.inverse_integrable.passed);
    assert!((r.inverse_integrable.witness - 2.0).abs() < 1e-8);
    assert!(r.power_lower_bound.passed);
    assert_eq!(r.gradient_regularity, "assumed");

    let c = Coefficient::power(1.0, 0.9).unwrap();
    assert_eq!(check_hypotheses(&c, 0.6).regime, Regime::ClassicalYoung);
}

#[test]
fn spec_strings_parse() {
    let c = Coefficient::parse("power C=2 kappa=0.25").unwrap();
    assert_eq!(c.power_scale(), Some(2.0));
    assert_eq!(c.kappa(), 0.25);
    let c = Coefficient::parse("radial kappa=0.5 profile=capped cap=3").unwrap();
    assert_eq!(c.radial(100.0), 3.0);
    let c = Coefficient::parse("radial kappa=0.5 profile=power-plus-linear slope=2").unwrap();
    assert_eq!(c.radial(4.0), 10.0);
    assert!(Coefficient::parse("power C=1").is_err());
    assert!(Coefficient::parse("radial kappa=0.5 profile=wiggly").is_err());
    assert!(Coefficient::parse("power C=1 kappa=0.5 extra=1").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_is_radial(seed in 0u64..10_000, r in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Coefficient::power(1.2, 0.35).unwrap().with_direction(unit(vec![0.0, 3.0, 4.0])).unwrap();
        let a: Vec<f64> = unit((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).iter().map(|v| v * r).collect();
        let b: Vec<f64> = unit((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).iter().map(|v| v * r).collect();
        let (ea, eb) = (c.eval(&a), c.eval(&b));
        for (p, q) in ea.iter().zip(&eb) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn interpolation_inequality_holds(k in 0.05f64..0.95, t in 0.0f64..1.0, dim in 1usize..4, seed in 0u64..u64::MAX) {
        let c = Coefficient::power(1.0, k).unwrap();
        let eta = t * (1.0 - k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = || -> Vec<f64> {
            let scale = 10f64.powf(rng.random_range(-6.0..2.0));
            (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
        };
        let (a, b) = (point(), point());
        prop_assume!(a.iter().any(|v| *v != 0.0) && b.iter().any(|v| *v != 0.0));
        let (lhs, rhs) = lemma23_bound(&c, &a, &b, eta).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "lhs {} rhs {}", lhs, rhs);
    }
}
