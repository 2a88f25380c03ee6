use proptest::prelude::*;
use young_power::coefficients::Coefficient;
use young_power::frac_calc::FracConfig;
use young_power::holder_paths::*;
use young_power::lamperti::{solve_lamperti, LampertiMap};
use young_power::riemann::*;

fn sqrt_coeff() -> Coefficient {
    Coefficient::power(1.0, 0.5).unwrap()
}

#[test]
fn uniform_partition_mesh() {
    let p = Partition::uniform(0.0, 2.0, 5).unwrap();
    assert_eq!(p.nodes(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    assert_eq!(p.mesh(), 0.5);
    assert_eq!(p.kind(), PartitionKind::Uniform);
    assert!(Partition::uniform(0.0, 1.0, 1).is_err());
    assert!(Partition::uniform(1.0, 1.0, 4).is_err());
}

#[test]
fn sum_of_constant_integrand_telescopes() {
    let x = generate_fbm(&HurstSpec::new(0.7, 2, 1).unwrap(), 1025, 1.0).unwrap();
    let f = GridPath::constant(1.0, 1025, &[2.0, -1.0]).unwrap();
    let s = riemann_sum(&f, &x, &Partition::uniform(0.0, 1.0, 33).unwrap()).unwrap();
    let expected = 2.0 * x.value(1024)[0] - x.value(1024)[1];
    assert!((s.value[0] - expected).abs() < 1e-12);
    assert_eq!(s.interpolated_nodes, 0);
}

#[test]
fn off_grid_nodes_are_interpolated_and_counted() {
    let x = GridPath::from_fn(1.0, 11, |t| t).unwrap();
    let f = GridPath::from_fn(1.0, 11, |t| t).unwrap();
    let pi = Partition::uniform(0.0, 1.0, 4).unwrap();
    let s = riemann_sum(&f, &x, &pi).unwrap();
    assert_eq!(s.interpolated_nodes, 2);
    // left sum of t dt with three cells: (0 + 1/3 + 2/3)/3
    assert!((s.value[0] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn mismatched_grids_are_rejected() {
    let x = GridPath::from_fn(1.0, 11, |t| t).unwrap();
    let f = GridPath::from_fn(1.0, 21, |t| t).unwrap();
    assert!(riemann_sum(&f, &x, &Partition::uniform(0.0, 1.0, 3).unwrap()).is_err());
    let pi = Partition::uniform(0.0, 2.0, 3).unwrap();
    assert!(riemann_sum(&x, &x, &pi).is_err());
}

#[test]
fn averaged_integrand_is_a_step_function() {
    let x = generate_fbm(&HurstSpec::new(0.7, 1, 2).unwrap(), 257, 1.0).unwrap();
    let y = x.map(|v| 2.0 + v);
    let c = sqrt_coeff();
    let pi = Partition::uniform(0.0, 1.0, 9).unwrap();
    let z = averaged_integrand(&y, std::slice::from_ref(&c), &pi).unwrap();
    for cell in 0..8 {
        let base = z.value(cell * 32)[0];
        for k in cell * 32..(cell + 1) * 32 {
            assert_eq!(z.value(k)[0], base);
        }
        let trap: f64 = (cell * 32..(cell + 1) * 32)
            .map(|k| 0.5 * (y.value(k)[0].sqrt() + y.value(k + 1)[0].sqrt()))
            .sum::<f64>()
            / 32.0;
        assert!((base - trap).abs() < 1e-14);
    }
    assert_eq!(z.value(256), z.value(255));
    let direct = riemann_sum(&z, &x, &pi).unwrap().value;
    let averaged = averaged_riemann_integral(&y, &x, std::slice::from_ref(&c), &pi).unwrap();
    assert_eq!(direct, averaged);
}

#[test]
fn averaged_integrand_needs_aligned_partitions() {
    let y = GridPath::from_fn(1.0, 101, |t| 1.0 + t).unwrap();
    let c = sqrt_coeff();
    let err = averaged_integrand(&y, std::slice::from_ref(&c), &Partition::uniform(0.0, 1.0, 8).unwrap());
    assert!(matches!(err, Err(young_power::Error::GridTooCoarse(_))));
    assert!(
        averaged_integrand(&y, std::slice::from_ref(&c), &Partition::uniform(0.0, 0.5, 11).unwrap()).is_err()
    );
}

#[test]
fn linear_driver_convergence_table() {
    // x_t = t, y_t = ((1+t)/2)², σ(y_t) = (1+t)/2, ∫_0^1 σ(y) dx = 3/4
    let n = (1 << 12) + 1;
    let x = GridPath::from_fn(1.0, n, |t| t).unwrap();
    let c = sqrt_coeff();
    let y = solve_lamperti(&x, &LampertiMap::new(&c).unwrap(), 0.25).unwrap();
    let cfg = FracConfig::with_default_alpha(0.9, 0.5, 0.3).unwrap();
    let reference = Reference { value: 0.75, kind: ReferenceKind::LampertiClosedForm };
    let ns: Vec<usize> = (4..=9).map(|k| (1 << k) + 1).collect();
    let table = convergence_study(&y, &x, &c, &cfg, &ns, reference).unwrap();
    assert_eq!(table.rows.len(), ns.len());
    for r in &table.rows {
        assert!(r.abs_error < 1e-12, "{r:?}");
        assert!((r.sup_integrand_error - r.mesh / 4.0).abs() < 1e-9, "{r:?}");
    }
    assert!(table.lemma27_holds());
    let mut csv = Vec::new();
    table.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("n,mesh,value,abs_error,sup_integrand_err,lemma27_bound\n"));
    assert_eq!(text.lines().count(), ns.len() + 1);
}

#[test]
fn convergence_study_checks_its_inputs() {
    let x = GridPath::from_fn(1.0, 257, |t| t).unwrap();
    let y = x.map(|v| 1.0 + v);
    let c = sqrt_coeff();
    let cfg = FracConfig::with_default_alpha(0.9, 0.5, 0.3).unwrap();
    let r = Reference { value: 0.0, kind: ReferenceKind::Supplied };
    let coarse = convergence_study(&y, &x, &c, &cfg, &[65, 129], r);
    assert!(matches!(coarse, Err(young_power::Error::GridTooCoarse(_))));
    assert!(convergence_study(&y, &x, &c, &cfg, &[17, 9], r).is_err());
}

#[test]
fn fbm_convergence_satisfies_the_integrand_bound() {
    let x = generate_fbm(&HurstSpec::new(0.75, 1, 3).unwrap(), (1 << 13) + 1, 1.0).unwrap();
    let c = sqrt_coeff();
    let y = solve_lamperti(&x, &LampertiMap::new(&c).unwrap(), 0.5).unwrap();
    let cfg = FracConfig::with_default_alpha(0.7, 0.5, 0.3).unwrap();
    let reference =
        Reference { value: y.value(y.n_points() - 1)[0] - 0.5, kind: ReferenceKind::LampertiClosedForm };
    let ns: Vec<usize> = (4..=10).map(|k| (1 << k) + 1).collect();
    let table = convergence_study(&y, &x, &c, &cfg, &ns, reference).unwrap();
    assert!(table.lemma27_holds());
    assert!(table.rows.last().unwrap().abs_error < table.rows[0].abs_error);
}

#[test]
fn tau_window_solves_its_defining_equation() {
    for (eps, gamma, norm) in [(1e-2, 0.7, 1.3), (1e-4, 0.55, 4.0), (0.3, 0.9, 0.2)] {
        let eta = tau_window(eps, gamma, norm);
        assert!((norm * (2.0 * eta).powf(gamma) - eps / 3.0).abs() < 1e-12 * eps);
    }
}

#[test]
fn tau_aware_partition_on_a_linear_absorption() {
    // x_t = −t, a = 1/4: y_t = ((1−t)/2)², absorbed at τ = 1, ∫_0^τ σ(y) dx = −1/4
    let n = (1 << 14) + 1;
    let x = GridPath::from_fn(1.0, n, |t| -t).unwrap();
    let c = sqrt_coeff();
    let y = solve_lamperti(&x, &LampertiMap::new(&c).unwrap(), 0.25).unwrap();
    let gamma = 0.8;
    let yn = holder_norm_full(&y, gamma).unwrap().norm;
    let eps = 1e-3;
    let pi = tau_aware_partition(0.0, 1.0, 1.0, eps, gamma, yn, 257).unwrap();
    let PartitionKind::TauAware { eta, j_star, .. } = pi.kind() else { panic!("{:?}", pi.kind()) };
    let gap = 1.0 - pi.nodes()[j_star];
    assert!(gap >= eta && gap <= 2.0 * eta);
    let f = young_power::riemann::integrand_path(&y, std::slice::from_ref(&c)).unwrap();
    let s = riemann_sum(&f, &x, &pi).unwrap().value[0];
    assert!((s + 0.25).abs() < eps, "{s}");
}

#[test]
fn tau_aware_partition_rejects_wide_windows() {
    assert!(tau_aware_partition(0.0, 1.0, 0.01, 1.0, 0.7, 1.0, 65).is_err());
    assert!(tau_aware_partition(0.0, 1.0, 1.5, 1e-3, 0.7, 1.0, 65).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tau_aware_window_always_holds(tau in 0.2f64..1.0, log_eps in -6.0f64..-2.0, gamma in 0.5f64..0.95, base in 5usize..300) {
        let eps = 10f64.powf(log_eps);
        let pi = tau_aware_partition(0.0, 1.0, tau, eps, gamma, 1.0, base).unwrap();
        pi.validate().unwrap();
        let PartitionKind::TauAware { eta, j_star, .. } = pi.kind() else { unreachable!() };
        let gap = tau - pi.nodes()[j_star];
        prop_assert!(gap >= eta * (1.0 - 1e-9) && gap <= 2.0 * eta * (1.0 + 1e-9));
        prop_assert!(pi.nodes()[j_star + 1] >= tau);
    }
}
