use fredstab::canonical::to_canonical_string;
use fredstab::heat_torus_unit;
use fredstab::linalg::norm2;
use fredstab::scalar::Cx;
use fredstab::simulate::{
    burgers_scaled, conjugacy_defect, fit_decay, simulate_burgers, simulate_closed_loop, simulate_target,
    uniform_times, Integrator,
};
use fredstab::spectral::{
    branch_split, classify_controllability, sobolev_norm, verify_gap, IntervalConvention, SpectralBranch,
    SpectralSystem, SystemDoc, Tagged, VerifyOptions,
};
use fredstab::synthesis::{select_shift, solve_gains_direct, synthesize, IterativeOptions, Method};
use fredstab::transform::{closed_loop_matrix, tb_residual, transform_matrix};
use proptest::prelude::*;

type C = Cx<f64>;

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| C::new(a, b)), 1..max_len)
}

fn nonzero_scalar() -> impl Strategy<Value = C> {
    (0.1f64..10.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| C::from_polar(r, t))
}

/// Real, strictly decreasing spectrum `-n^2 - d_n` with small jitter.
fn heat_like(n: usize, jitter: &[f64]) -> Vec<C> {
    (1..=n).map(|k| C::new(-((k * k) as f64) - 0.3 * jitter[k - 1], 0.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sobolev_zero_is_euclidean(f in coeffs(40)) {
        let direct = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert_eq!(sobolev_norm(&f, 0.0), direct);
        prop_assert!((norm2(&f) - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn sobolev_monotone_in_r(f in coeffs(40), r in -3.0f64..3.0, dr in 0.0f64..2.0) {
        let lo = sobolev_norm(&f, r);
        let hi = sobolev_norm(&f, r + dr);
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn branch_split_keeps_the_multiset(values in prop::collection::vec((1usize..40, 1usize..=3), 1..30), m in 1usize..=3) {
        let mut seen = std::collections::BTreeMap::new();
        for (v, k) in &values {
            seen.insert(*v, (*k).min(m));
        }
        // every branch needs at least one mode
        *seen.values_mut().next().unwrap() = m;
        let tagged: Vec<Tagged<f64>> =
            seen.iter().map(|(v, k)| Tagged { value: C::new(-(*v as f64), 0.0), multiplicity: *k }).collect();
        let sys = branch_split("p", &tagged, m, 2.0, 0.0, 0.0).unwrap();
        let mut flat: Vec<i64> = sys.branches.iter().flat_map(|b| b.eigenvalues.iter().map(|z| z.re as i64)).collect();
        let mut want: Vec<i64> = seen.iter().flat_map(|(v, k)| std::iter::repeat_n(-(*v as i64), *k)).collect();
        flat.sort();
        want.sort();
        prop_assert_eq!(flat, want);
        for b in &sys.branches {
            prop_assert!(b.ensure_distinct().is_ok());
        }
    }

    #[test]
    fn triple_multiplicity_with_two_branches_fails(v in 1usize..50) {
        let tagged = vec![Tagged { value: C::new(-(v as f64), 0.0), multiplicity: 3 }];
        prop_assert!(branch_split::<f64>("p", &tagged, 2, 2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn heat_gap_constant_at_least_one(n in 4usize..80) {
        let sys = heat_torus_unit::<f64>(n).unwrap();
        let g = verify_gap(&sys.branches[0], &VerifyOptions::default()).unwrap();
        prop_assert!(g.c_hat >= 1.0 - 1e-12);
    }

    #[test]
    fn classification_is_scale_invariant(
        n in 16usize..64,
        growth in -1.0f64..1.5,
        s in nonzero_scalar(),
        r in -1.0f64..1.0,
    ) {
        let pi2 = std::f64::consts::PI.powi(2);
        let eig: Vec<C> = (1..=n).map(|k| C::new(0.0, -pi2 * ((k * k) as f64 - 1.0))).collect();
        let b: Vec<C> = (1..=n).map(|k| C::new((k as f64).powf(growth), 0.0)).collect();
        let br = SpectralBranch::new(1, eig, b, 2.0, 0.0, 0.0).unwrap();
        let a = classify_controllability(&br, r, IntervalConvention::Symmetric).unwrap();
        let c = classify_controllability(&br.scaled_control(s), r, IntervalConvention::Symmetric).unwrap();
        prop_assert_eq!(a.regime, c.regime);
        prop_assert_eq!(a.admissibility_necessary_ok, c.admissibility_necessary_ok);
        prop_assert_eq!(a.exact_controllability_necessary_ok, c.exact_controllability_necessary_ok);
    }

    #[test]
    fn gains_scale_inversely_with_b(
        n in 2usize..24,
        jitter in prop::collection::vec(0.0f64..1.0, 24),
        s in nonzero_scalar(),
    ) {
        let eig = heat_like(n, &jitter);
        let br = SpectralBranch::new(1, eig, vec![C::new(1.0, 0.5); n], 2.0, 0.0, 0.0).unwrap();
        let sys = SpectralSystem::new("p", vec![br.clone()]).unwrap();
        let lambda = select_shift(&sys, 2.0, 0.1, None).unwrap().lambda;
        let a = solve_gains_direct(&br, lambda).unwrap();
        let b = solve_gains_direct(&br.scaled_control(s), lambda).unwrap();
        let kmax = a.gains.iter().map(|k| k.norm()).fold(0.0, f64::max);
        for (ka, kb) in a.gains.iter().zip(&b.gains) {
            prop_assert!((ka / s - kb).norm() <= 1e-10 * kmax / s.norm());
        }
        for (xa, xb) in a.products_x.iter().zip(&b.products_x) {
            prop_assert!((xa - xb).norm() <= 1e-10 * xa.norm().max(1.0));
        }
    }

    #[test]
    fn transform_fixes_b_and_conjugates(
        n in 2usize..32,
        jitter in prop::collection::vec(0.0f64..1.0, 32),
        phases in prop::collection::vec(0.0f64..6.0, 32),
        lambda0 in 0.5f64..6.0,
    ) {
        let eig = heat_like(n, &jitter);
        let b: Vec<C> = (0..n).map(|k| C::from_polar(1.0 + 0.5 * jitter[k], phases[k])).collect();
        let br = SpectralBranch::new(1, eig, b, 2.0, 0.0, 0.0).unwrap();
        let sys = SpectralSystem::new("p", vec![br.clone()]).unwrap();
        let lambda = select_shift(&sys, lambda0, 0.1, None).unwrap().lambda;
        let law = solve_gains_direct(&br, lambda).unwrap();
        let t = transform_matrix(&br, &law, lambda).unwrap();
        prop_assert!(tb_residual(&t, &br.control_coeffs) <= 1e-9);
        let cl = closed_loop_matrix(&br, &law).unwrap();
        let target: Vec<C> = br.eigenvalues.iter().map(|l| l - lambda).collect();
        prop_assert!(fredstab::spectrum_match_error(&cl.spectrum, &target) <= 1e-6);
    }

    #[test]
    fn system_doc_round_trips_canonically(
        eig in prop::collection::vec(-1e6f64..1e6, 1..12),
        im in -1e3f64..1e3,
    ) {
        let n = eig.len();
        let e: Vec<C> = eig.iter().map(|v| C::new(*v, im)).collect();
        let br = SpectralBranch::new(1, e, vec![C::new(1.0, -im); n], 2.5, 0.25, 0.1).unwrap();
        let sys = SpectralSystem::new("rt", vec![br]).unwrap();
        let text = to_canonical_string(&sys.to_doc()).unwrap();
        let doc: SystemDoc = serde_json::from_str(&text).unwrap();
        let back = SpectralSystem::<f64>::from_doc(&doc).unwrap();
        prop_assert_eq!(to_canonical_string(&back.to_doc()).unwrap(), text);
        prop_assert_eq!(back.branches[0].eigenvalues.clone(), sys.branches[0].eigenvalues.clone());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_loop_conjugacy_is_conserved(seed in prop::collection::vec(-1.0f64..1.0, 32)) {
        let n = 16;
        let sys = heat_torus_unit::<f64>(n).unwrap();
        let law = synthesize(&sys, 2.5, Method::Direct, &IterativeOptions::default()).unwrap();
        let u0: Vec<Vec<C>> = (0..2).map(|i| (0..n).map(|k| C::new(seed[i * n + k], 0.0)).collect()).collect();
        let times = uniform_times(1.0, 21);
        let u = simulate_closed_loop(&sys, &law, &u0, &times, Integrator::SemigroupExact, 1e-3, &[0.0]).unwrap();
        let v0: Vec<Vec<C>> = sys
            .branches
            .iter()
            .zip(&law.branches)
            .map(|(b, l)| transform_matrix(b, l, 2.5).unwrap().matvec(&u0[b.index - 1]))
            .collect();
        let v = simulate_target(&sys, 2.5, &v0, &times, &[0.0]).unwrap();
        prop_assert!(conjugacy_defect(&sys, &law, &u, &v).unwrap() <= 1e-8);
    }

    #[test]
    fn fitted_decay_respects_the_spectral_abscissa(seed in prop::collection::vec(-1.0f64..1.0, 32), lambda in 1.0f64..5.0) {
        let n = 16;
        let sys = heat_torus_unit::<f64>(n).unwrap();
        let lambda = select_shift(&sys, lambda, 0.1, None).unwrap().lambda;
        let law = synthesize(&sys, lambda, Method::Direct, &IterativeOptions::default()).unwrap();
        let u0: Vec<Vec<C>> = (0..2).map(|i| (0..n).map(|k| C::new(seed[i * n + k], 0.0)).collect()).collect();
        let times = uniform_times(12.0, 241);
        let tr = simulate_closed_loop(&sys, &law, &u0, &times, Integrator::SemigroupExact, 1e-3, &[0.0]).unwrap();
        let fit = fit_decay(&tr, 0.0, None).unwrap();
        let abscissa = sys
            .branches
            .iter()
            .zip(&law.branches)
            .flat_map(|(b, l)| closed_loop_matrix(b, l).unwrap().spectrum)
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(fit.mu_hat >= -abscissa - 0.05, "mu_hat {} abscissa {}", fit.mu_hat, abscissa);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn burgers_halving_amplitude_does_not_slow_decay(seed in prop::collection::vec(-1.0f64..1.0, 32), delta in 1e-3f64..5e-2) {
        let n = 16;
        let sys = heat_torus_unit::<f64>(n).unwrap();
        let law = synthesize(&sys, 3.25, Method::Direct, &IterativeOptions::default()).unwrap();
        let shape: Vec<Vec<C>> =
            (0..2).map(|i| (0..n).map(|k| C::new(seed[i * n + k] / ((k + 1) * (k + 1)) as f64, 0.0)).collect()).collect();
        let times = uniform_times(1.0, 51);
        let rate = |d: f64| {
            let u0 = burgers_scaled(n, &shape, d).unwrap();
            let tr = simulate_burgers(&sys, Some(&law), &u0, &times, 1e-4, &[0.0]).unwrap();
            prop_assert!(tr.realness_defect.unwrap() <= 1e-10);
            Ok(fit_decay(&tr, 0.0, Some((0.1, 1.0))).unwrap().mu_hat)
        };
        let full = rate(delta)?;
        let half = rate(delta / 2.0)?;
        prop_assert!(half >= full - 0.05, "delta {delta}: {full} -> {half}");
    }
}
