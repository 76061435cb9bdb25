//! Acceptance checks, one `PASS`/`FAIL` line per criterion. Runs as a plain
//! binary (no libtest harness) so the lines are always printed.

use std::time::Instant;

use fredstab::models::{
    gribov_model, schrodinger_model, sturm_liouville_direct, sturm_liouville_model, SturmLiouvilleProblem,
    SCHRODINGER_QUAD_POINTS,
};
use fredstab::quadrature::SampledFunction;
use fredstab::scalar::Cx;
use fredstab::simulate::{
    burgers_scaled, fit_decay, simulate_burgers, simulate_closed_loop, uniform_times, BurgersInitial, Integrator,
};
use fredstab::spectral::{classify_controllability, IntervalConvention, Regime, SpectralBranch, SpectralSystem};
use fredstab::synthesis::{
    cross_sum_probe, select_shift, solve_gains_beta_reduced, solve_gains_direct, solve_gains_iterative, synthesize,
    IterativeOptions, Method,
};
use fredstab::transform::{
    build_transform, closed_loop_matrix, conditioning, spectrum_match_error, target_spectrum, transform_matrix,
};
use fredstab::{heat_torus_unit, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Cx<f64>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

struct Check {
    id: u32,
    name: &'static str,
    parts: Vec<(String, bool)>,
}

impl Check {
    fn new(id: u32, name: &'static str) -> Self {
        Self { id, name, parts: Vec::new() }
    }

    fn part(&mut self, label: impl Into<String>, ok: bool) {
        self.parts.push((label.into(), ok));
    }

    fn le(&mut self, label: &str, value: f64, bound: f64) {
        self.part(format!("{label} = {value:.3e} <= {bound:.1e}"), value <= bound);
    }

    fn passed(&self) -> bool {
        !self.parts.is_empty() && self.parts.iter().all(|(_, ok)| *ok)
    }
}

fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn certify_system(ck: &mut Check, name: &str, sys: &SpectralSystem<f64>, lambda: f64) {
    let law = synthesize(sys, lambda, Method::Direct, &IterativeOptions::default()).unwrap();
    let (mut spec, mut opeq, mut tb) = (0.0f64, 0.0f64, 0.0f64);
    for (b, l) in sys.branches.iter().zip(&law.branches) {
        let t = build_transform(b, l, lambda).unwrap();
        let cl = closed_loop_matrix(b, l).unwrap();
        spec = spec.max(spectrum_match_error(&cl.spectrum, &target_spectrum(b, lambda)));
        opeq = opeq.max(t.opeq_residual);
        tb = tb.max(t.tb_residual);
    }
    ck.part(
        format!("{name} lambda={lambda}: spectrum {spec:.2e}, opeq {opeq:.2e}, tb {tb:.2e}"),
        spec <= 1e-6 && opeq <= 1e-8 && tb <= 1e-10,
    );
}

fn schrodinger(n: usize) -> SpectralSystem<f64> {
    let mu = SampledFunction::from_fn(0.0, 1.0, SCHRODINGER_QUAD_POINTS, |x| x * x).unwrap();
    schrodinger_model(n, &mu).unwrap().system
}

fn criterion_1() -> Check {
    let mut ck = Check::new(1, "single-mode exactness");
    let lambda = 3.0;
    let b = SpectralBranch::new(1, vec![c(-2.0, 1.0)], vec![c(0.3, -2.0)], 2.0, 0.0, 0.0).unwrap();
    let law = solve_gains_direct(&b, lambda).unwrap();
    ck.le("|x_1 - lambda|", (law.products_x[0] - lambda).norm(), 1e-14);
    let t = transform_matrix(&b, &law, lambda).unwrap();
    ck.le("|T - 1|", (t[(0, 0)] - 1.0).norm(), 1e-14);
    let cl = closed_loop_matrix(&b, &law).unwrap();
    ck.le("|eig - (lambda_1 - lambda)|", (cl.spectrum[0] - c(-5.0, 1.0)).norm(), 1e-14);
    ck
}

fn criterion_2() -> Check {
    let mut ck = Check::new(2, "worked 2x2 case");
    let (l1, l2, lambda) = (-1.0f64, -4.0f64, 2.0f64);
    let b =
        SpectralBranch::new(1, vec![c(l1, 0.0), c(l2, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)], 2.0, 0.0, 0.0).unwrap();
    // Cramer's rule on sum_n x_n / (l_n - l_p + lambda) = 1
    let (a11, a12, a21, a22) = (1.0 / lambda, 1.0 / (l2 - l1 + lambda), 1.0 / (l1 - l2 + lambda), 1.0 / lambda);
    let det = a11 * a22 - a12 * a21;
    let x_oracle = [(a22 - a12) / det, (a11 - a21) / det];
    let law = solve_gains_direct(&b, lambda).unwrap();
    let x_err = law.products_x.iter().zip(&x_oracle).map(|(x, o)| (x - o).norm()).fold(0.0, f64::max);
    ck.le("x vs Cramer", x_err, 1e-12);
    ck.le("x vs (10/3, 2/3)", max_abs_diff(&law.products_x, &[c(10.0 / 3.0, 0.0), c(2.0 / 3.0, 0.0)]), 1e-12);
    let t = transform_matrix(&b, &law, lambda).unwrap();
    let want = [[5.0 / 3.0, -2.0 / 3.0], [2.0 / 3.0, 1.0 / 3.0]];
    let t_err = (0..2)
        .flat_map(|p| (0..2).map(move |n| (p, n)))
        .map(|(p, n)| (t[(p, n)] - want[p][n]).norm())
        .fold(0.0, f64::max);
    ck.le("T", t_err, 1e-12);
    // characteristic polynomial of A_cl = diag(l) + b K^T
    let k = &law.gains;
    let (m11, m12, m21, m22) = (l1 + k[0], k[1], k[0], l2 + k[1]);
    let tr = m11 + m22;
    let dt = m11 * m22 - m12 * m21;
    let disc = (tr * tr - 4.0 * dt).sqrt();
    let roots = [(tr + disc) / 2.0, (tr - disc) / 2.0];
    let cl = closed_loop_matrix(&b, &law).unwrap();
    ck.le("eig vs char. polynomial", spectrum_match_error(&cl.spectrum, &roots), 1e-12);
    ck.le("eig vs {-3, -6}", spectrum_match_error(&cl.spectrum, &[c(-3.0, 0.0), c(-6.0, 0.0)]), 1e-12);
    ck
}

fn criterion_3() -> Check {
    let mut ck = Check::new(3, "truncated conjugacy");
    for n in [32, 64, 128] {
        let sys = heat_torus_unit::<f64>(n).unwrap();
        let lambda = select_shift(&sys, 2.5, 0.25, None).unwrap().lambda;
        certify_system(&mut ck, &format!("heat N={n}"), &sys, lambda);
    }
    let sys = schrodinger(64);
    let lambda = select_shift(&sys, 2.5, 0.25, None).unwrap().lambda;
    certify_system(&mut ck, "schrodinger N=64", &sys, lambda);

    let p = SturmLiouvilleProblem::<f64>::constant(1.0, 0.0, 1.0, [1.0, 0.0, 1.0, 0.0], 2000).unwrap();
    let phi = SampledFunction::from_fn(0.0, 1.0, 2001, |x| 1.0 + 0.5 * x).unwrap();
    let sys = sturm_liouville_model(&p, 32, &phi, 0.0).unwrap().system;
    let lambda = select_shift(&sys, 2.5, 0.25, None).unwrap().lambda;
    certify_system(&mut ck, "sturm-liouville N=32", &sys, lambda);

    let sys = gribov_model(32, c(0.05, 0.0), 0.1, |n| c(1.0 / n as f64, 0.0), vec![c(1.0, 0.0); 32], 0.0, 0.0).unwrap();
    let lambda = select_shift(&sys, 2.5, 0.25, None).unwrap().lambda;
    certify_system(&mut ck, "gribov eps=0.05 N=32", &sys, lambda);
    ck
}

fn criterion_4() -> Check {
    let mut ck = Check::new(4, "gain structure");
    let lambda = 2.5;
    let sys = heat_torus_unit::<f64>(256).unwrap();
    for b in &sys.branches {
        let direct = solve_gains_direct(b, lambda).unwrap();
        let trend = fredstab::gain_trend(&direct, lambda).unwrap();
        ck.part(
            format!("branch {}: sup|x_n| = {:.4} <= 2 lambda = {}", b.index, trend.sup_x, 2.0 * lambda),
            trend.sup_x <= 2.0 * lambda,
        );
        ck.part(format!("branch {}: trend ratio = {:.4} < 0.5", b.index, trend.ratio), trend.ratio < 0.5);
        let iter = solve_gains_iterative(b, lambda, &IterativeOptions::default()).unwrap();
        ck.le(
            &format!("branch {}: direct vs iterative", b.index),
            max_abs_diff(&direct.products_x, &iter.products_x),
            1e-8,
        );
    }
    ck
}

fn criterion_5() -> Check {
    let mut ck = Check::new(5, "scaling covariance and beta reduction");
    let lambda = 2.5;
    let scale = c(7.0, 3.0);
    let sys = heat_torus_unit::<f64>(32).unwrap();
    for b in &sys.branches {
        let base = solve_gains_direct(b, lambda).unwrap();
        let sb = b.scaled_control(scale);
        let scaled = solve_gains_direct(&sb, lambda).unwrap();
        let kmax = base.gains.iter().map(|k| k.norm()).fold(0.0, f64::max);
        let k_err =
            base.gains.iter().zip(&scaled.gains).map(|(k, ks)| (k / scale - ks).norm()).fold(0.0, f64::max) / kmax;
        ck.le(&format!("branch {}: K' vs K/c (rel)", b.index), k_err, 1e-12);
        let xmax = base.products_x.iter().map(|x| x.norm()).fold(0.0, f64::max);
        ck.le(
            &format!("branch {}: x (rel)", b.index),
            max_abs_diff(&base.products_x, &scaled.products_x) / xmax,
            1e-12,
        );
        let t0 = transform_matrix(b, &base, lambda).unwrap();
        let t1 = transform_matrix(&sb, &scaled, lambda).unwrap();
        ck.le(&format!("branch {}: T (rel)", b.index), t0.sub(&t1).max_abs() / t0.max_abs(), 1e-12);
        let e0 = closed_loop_matrix(b, &base).unwrap().spectrum;
        let e1 = closed_loop_matrix(&sb, &scaled).unwrap().spectrum;
        ck.le(&format!("branch {}: eig(A_cl) (rel)", b.index), spectrum_match_error(&e1, &e0), 1e-12);
    }
    let n = 48;
    let beta = 0.5;
    let eig: Vec<C> = (1..=n).map(|k| c(-((k * k) as f64), 0.0)).collect();
    let ctrl: Vec<C> = (1..=n).map(|k| c(1.0, 0.1) * (k as f64).powf(-beta)).collect();
    let b = SpectralBranch::new(1, eig, ctrl, 2.0, beta, 0.0).unwrap();
    let direct = solve_gains_direct(&b, lambda).unwrap();
    let reduced = solve_gains_beta_reduced(&b, lambda).unwrap();
    let kmax = direct.gains.iter().map(|k| k.norm()).fold(0.0, f64::max);
    ck.le("beta reduction K (rel)", max_abs_diff(&direct.gains, &reduced.gains) / kmax, 1e-10);
    ck
}

fn criterion_6() -> Check {
    let mut ck = Check::new(6, "cross-sum bound");
    let sys = heat_torus_unit::<f64>(256).unwrap();
    for b in &sys.branches {
        let prof = cross_sum_probe(b, 2.5, 0.0).unwrap();
        let max = prof.max_ratio.unwrap_or(f64::INFINITY);
        ck.part(format!("branch {}: max ratio on [8,256] = {max:.4} finite", b.index), max.is_finite());
        let q = prof.ratio[127] / prof.ratio[15];
        ck.le(&format!("branch {}: ratio(128)/ratio(16)", b.index), q, 2.0);
    }
    ck
}

fn criterion_7() -> Check {
    let mut ck = Check::new(7, "isomorphism proxy");
    let lambda = 2.5;
    let conv = IntervalConvention::Symmetric;
    let sys = heat_torus_unit::<f64>(128).unwrap();
    for b in &sys.branches {
        let b64 = b.truncated(64);
        let l64 = solve_gains_direct(&b64, lambda).unwrap();
        let l128 = solve_gains_direct(b, lambda).unwrap();
        let t64 = transform_matrix(&b64, &l64, lambda).unwrap();
        let t128 = transform_matrix(b, &l128, lambda).unwrap();
        for r in [-1.0, 0.0, 1.0] {
            let k64 = conditioning(&b64, &t64, r, conv).unwrap();
            let k128 = conditioning(b, &t128, r, conv).unwrap();
            let f = (k64 / k128).max(k128 / k64);
            ck.part(format!("branch {} r={r}: kappa {k64:.3} -> {k128:.3}, factor {f:.3} < 2", b.index), f < 2.0);
        }
        let rejected = matches!(conditioning(b, &t128, 1.5, conv), Err(Error::OutOfRange { .. }))
            && matches!(conditioning(b, &t128, -1.7, conv), Err(Error::OutOfRange { .. }));
        ck.part(format!("branch {}: r = 1.5, -1.7 rejected", b.index), rejected);
    }
    ck
}

fn criterion_8() -> Check {
    let mut ck = Check::new(8, "closed-loop decay");
    let lambda = 2.5;
    let n = 32;
    let sys = heat_torus_unit::<f64>(n).unwrap();
    let law = synthesize(&sys, lambda, Method::Direct, &IterativeOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u0: Vec<Vec<C>> = (0..2).map(|_| (0..n).map(|_| c(rng.gen_range(-1.0..1.0), 0.0)).collect()).collect();
    ck.part(format!("constant mode present: u0 = {:.3}", u0[1][0].re), u0[1][0].norm() > 0.0);
    // the non-normal transient of T^{-1} slows the early decay below lambda;
    // a horizon of 10 lets the default window see the asymptotic rate
    let times = uniform_times(10.0, 401);
    let exact = simulate_closed_loop(&sys, &law, &u0, &times, Integrator::SemigroupExact, 1e-4, &[0.0]).unwrap();
    let rk4 = simulate_closed_loop(&sys, &law, &u0, &times, Integrator::Rk4, 1e-4, &[0.0]).unwrap();
    let fit = fit_decay(&exact, 0.0, None).unwrap();
    let (lo, hi) = (0.95 * lambda, 1.05 * (lambda + 1.0));
    ck.part(
        format!("mu_hat = {:.4} in [{lo:.3}, {hi:.3}] (r2 {:.4})", fit.mu_hat, fit.r2),
        fit.mu_hat >= lo && fit.mu_hat <= hi,
    );
    ck.le("semigroup vs rk4 (rel)", exact.max_relative_deviation(&rk4).unwrap(), 1e-4);
    ck
}

fn criterion_9() -> Check {
    let mut ck = Check::new(9, "Schrodinger spectral shift");
    let sys = schrodinger(64);
    let lambda = select_shift(&sys, 2.5, 0.25, None).unwrap().lambda;
    let open = sys.branches[0].eigenvalues.iter().map(|l| l.re.abs()).fold(0.0, f64::max);
    ck.le("open-loop max |Re|", open, 1e-12);
    let law = synthesize(&sys, lambda, Method::Direct, &IterativeOptions::default()).unwrap();
    let cl = closed_loop_matrix(&sys.branches[0], &law.branches[0]).unwrap();
    let dev = cl.spectrum.iter().map(|z| (z.re + lambda).abs()).fold(0.0, f64::max);
    ck.le(&format!("max |Re + lambda| (lambda = {lambda})"), dev, 1e-6);
    ck
}

fn criterion_10() -> Check {
    let mut ck = Check::new(10, "Burgers local stabilization");
    let n = 32;
    let sys = heat_torus_unit::<f64>(n).unwrap();
    let lambda = select_shift(&sys, 3.0, 0.25, None).unwrap().lambda;
    let law = synthesize(&sys, lambda, Method::Direct, &IterativeOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let shape: Vec<Vec<C>> =
        (0..2).map(|_| (1..=n).map(|k| c(rng.gen_range(-1.0..1.0) / (k * k) as f64, 0.0)).collect()).collect();
    let u0 = burgers_scaled(n, &shape, 1e-3).unwrap();
    let times = uniform_times(1.0, 101);
    let dt = 1e-4;
    let tr = simulate_burgers(&sys, Some(&law), &u0, &times, dt, &[0.0]).unwrap();
    let fit = fit_decay(&tr, 0.0, Some((0.1, 1.0))).unwrap();
    ck.part(format!("lambda = {lambda}: mu_hat = {:.4} >= 1.9 on [0.1, 1.0]", fit.mu_hat), fit.mu_hat >= 1.9);
    ck.le("realness defect", tr.realness_defect.unwrap(), 1e-10);
    let zero = BurgersInitial::Modal(vec![vec![c(0.0, 0.0); n]; 2]);
    let tz = simulate_burgers(&sys, Some(&law), &zero, &times, dt, &[0.0]).unwrap();
    let max = tz.norms.iter().map(|r| r[0]).fold(0.0, f64::max);
    ck.le("u0 = 0: max norm", max, 1e-14);
    ck
}

fn criterion_11() -> Check {
    let mut ck = Check::new(11, "Sturm-Liouville pipeline");
    let (l, n) = (1.0, 32);
    let p = SturmLiouvilleProblem::<f64>::constant(1.0, 0.0, l, [1.0, 0.0, 1.0, 0.0], 2000).unwrap();
    let phi = SampledFunction::from_fn(0.0, l, 2001, |x| 1.0 + 0.5 * x).unwrap();
    let model = sturm_liouville_model(&p, n, &phi, 0.0).unwrap();
    let pi = std::f64::consts::PI;
    let rel = (1..=10)
        .map(|k| {
            let exact = -(k as f64 * pi / l).powi(2);
            (model.eigenvalues[k - 1] - exact).abs() / exact.abs()
        })
        .fold(0.0, f64::max);
    ck.le("lambda_n vs -(n pi / L)^2, n <= 10 (rel)", rel, 1e-3);
    let direct = sturm_liouville_direct(&p, n).unwrap();
    let inv = direct.iter().zip(&model.eigenvalues).map(|(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max);
    ck.le("direct vs transformed (rel)", inv, 1e-3);
    let scaled: Vec<f64> = (n / 2..=n).map(|k| model.eigenvalues[k - 1] / (k * k) as f64).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    ck.le("lambda_n / n^2 spread on [N/2, N]", (hi - lo) / mean.abs(), 0.05);
    ck
}

fn criterion_12() -> Check {
    let mut ck = Check::new(12, "controllability classifier");
    let sys = schrodinger(64);
    let base = &sys.branches[0];
    let n = base.len();
    let conv = IntervalConvention::Symmetric;
    let ones = base.with_control(vec![c(1.0, 0.0); n]).unwrap();
    let lin = base.with_control((1..=n).map(|k| c(k as f64, 0.0)).collect()).unwrap();
    let a = classify_controllability(&ones, 0.0, conv).unwrap();
    ck.part(
        format!(
            "b_n = 1: regime {:?}, admissible {}, exact {}",
            a.regime, a.admissibility_necessary_ok, a.exact_controllability_necessary_ok
        ),
        a.regime == Regime::Classical && a.admissibility_necessary_ok && a.exact_controllability_necessary_ok,
    );
    let b = classify_controllability(&lin, 1.0, conv).unwrap();
    ck.part(
        format!("b_n = n: admissible {} (expect false)", b.admissibility_necessary_ok),
        !b.admissibility_necessary_ok,
    );
    let s = c(-2.5, 4.0);
    let a2 = classify_controllability(&ones.scaled_control(s), 0.0, conv).unwrap();
    let b2 = classify_controllability(&lin.scaled_control(s), 1.0, conv).unwrap();
    let same = |x: &fredstab::Classification, y: &fredstab::Classification| {
        x.regime == y.regime
            && x.admissibility_necessary_ok == y.admissibility_necessary_ok
            && x.exact_controllability_necessary_ok == y.exact_controllability_necessary_ok
    };
    ck.part("labels invariant under b -> (-2.5+4i) b", same(&a, &a2) && same(&b, &b2));
    ck
}

fn main() {
    let criteria: [fn() -> Check; 12] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    let mut failed = Vec::new();
    for f in criteria {
        let start = Instant::now();
        let ck = f();
        let secs = start.elapsed().as_secs_f64();
        let verdict = if ck.passed() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {} ({secs:.2} s)", ck.id, ck.name);
        for (label, ok) in &ck.parts {
            println!("    [{}] {label}", if *ok { "ok" } else { "FAILED" });
        }
        if !ck.passed() {
            failed.push(ck.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
