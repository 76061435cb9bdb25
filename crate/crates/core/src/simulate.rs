//! Time integration in modal coordinates: the target system, the linear
//! closed loop (exact semigroup or RK4), and the closed-loop viscous Burgers
//! equation on the torus. Also least-squares decay fitting and CSV export.

use serde::{Deserialize, Serialize};

use crate::canonical::{csv_err, csv_finish, csv_writer, format_float};
use crate::error::{Error, Result};
use crate::linalg::{norm2, Lu};
use crate::scalar::{cre, cx, czero, ls_line, Cx, Real};
use crate::spectral::{sobolev_norm, SpectralBranch, SpectralSystem};
use crate::synthesis::{BranchLaw, FeedbackLaw};
use crate::transform::transform_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    SemigroupExact,
    Rk4,
    ImexEuler,
}

impl Integrator {
    pub fn as_str(self) -> &'static str {
        match self {
            Integrator::SemigroupExact => "semigroup_exact",
            Integrator::Rk4 => "rk4",
            Integrator::ImexEuler => "imex_euler",
        }
    }
}

/// Modal trajectory sampled on a time grid.
#[derive(Debug, Clone)]
pub struct SimulationTrace<T: Real> {
    pub times: Vec<T>,
    /// `states[k][i]` is the coefficient vector of branch `i` at `times[k]`.
    pub states: Vec<Vec<Vec<Cx<T>>>>,
    pub r_list: Vec<T>,
    /// `norms[k][j]` is the weighted norm at `r_list[j]` at `times[k]`.
    pub norms: Vec<Vec<T>>,
    pub integrator: Integrator,
    pub dt: T,
    /// Largest conjugate-symmetry defect of the Fourier coefficients (Burgers only).
    pub realness_defect: Option<T>,
}

/// Norm over all branches: `(sum_i ||u^i||_r^2)^{1/2}`.
pub fn state_norm<T: Real>(state: &[Vec<Cx<T>>], r: T) -> T {
    state.iter().map(|s| sobolev_norm(s, r).powi(2)).sum::<T>().sqrt()
}

impl<T: Real> SimulationTrace<T> {
    fn new(times: Vec<T>, states: Vec<Vec<Vec<Cx<T>>>>, r_list: &[T], integrator: Integrator, dt: T) -> Self {
        let norms = states.iter().map(|s| r_list.iter().map(|&r| state_norm(s, r)).collect()).collect();
        Self { times, states, r_list: r_list.to_vec(), norms, integrator, dt, realness_defect: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Norm series at `r`, taken from the stored table when `r` was recorded.
    pub fn norm_series(&self, r: T) -> Vec<T> {
        match self.r_list.iter().position(|&x| x == r) {
            Some(j) => self.norms.iter().map(|row| row[j]).collect(),
            None => self.states.iter().map(|s| state_norm(s, r)).collect(),
        }
    }

    /// Largest `||u(t) - w(t)||_2 / ||u(t_0)||_2` between two traces on the same grid.
    pub fn max_relative_deviation(&self, other: &Self) -> Result<T> {
        if self.times.len() != other.times.len() {
            return Err(Error::Dimension("traces have different time grids".into()));
        }
        let scale = state_norm(&self.states[0], T::zero()).max(T::min_positive_value());
        let mut worst = T::zero();
        for (a, b) in self.states.iter().zip(&other.states) {
            let d: T =
                a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (*p - *q).norm_sqr())).sum::<T>().sqrt();
            worst = worst.max(d / scale);
        }
        Ok(worst)
    }

    /// Long CSV: `t,branch,n,re,im` with one row per coefficient.
    pub fn to_long_csv(&self) -> Result<String> {
        let mut w = csv_writer();
        w.write_record(["t", "branch", "n", "re", "im"]).map_err(csv_err)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            let ts = format_float(t.to_f64_lossy());
            for (i, s) in state.iter().enumerate() {
                for (n, z) in s.iter().enumerate() {
                    w.write_record([
                        ts.clone(),
                        (i + 1).to_string(),
                        (n + 1).to_string(),
                        format_float(z.re.to_f64_lossy()),
                        format_float(z.im.to_f64_lossy()),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        csv_finish(w)
    }

    /// Wide CSV: `t,norm_r{r}...` with one row per time.
    pub fn to_wide_csv(&self) -> Result<String> {
        let mut w = csv_writer();
        let mut header = vec!["t".to_string()];
        header.extend(self.r_list.iter().map(|r| format!("norm_r{}", r.to_f64_lossy())));
        w.write_record(&header).map_err(csv_err)?;
        for (t, row) in self.times.iter().zip(&self.norms) {
            let mut rec = vec![format_float(t.to_f64_lossy())];
            rec.extend(row.iter().map(|v| format_float(v.to_f64_lossy())));
            w.write_record(&rec).map_err(csv_err)?;
        }
        csv_finish(w)
    }
}

/// `samples` equispaced times on `[0, t_end]`.
pub fn uniform_times<T: Real>(t_end: T, samples: usize) -> Vec<T> {
    crate::quadrature::uniform_grid(T::zero(), t_end, samples.max(2))
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn check_state<T: Real>(system: &SpectralSystem<T>, u0: &[Vec<Cx<T>>]) -> Result<()> {
    if u0.len() != system.m() {
        return Err(Error::Dimension(format!("initial state has {} branches, system {}", u0.len(), system.m())));
    }
    for (b, s) in system.branches.iter().zip(u0) {
        if b.len() != s.len() {
            return Err(Error::Dimension(format!(
                "branch {}: initial state has {} modes, system {}",
                b.index,
                s.len(),
                b.len()
            )));
        }
        if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("branch {}: initial state is not finite", b.index)));
        }
    }
    Ok(())
}

fn check_law<T: Real>(system: &SpectralSystem<T>, law: &FeedbackLaw<T>) -> Result<()> {
    if law.branches.len() != system.m() || system.branches.iter().zip(&law.branches).any(|(b, l)| b.len() != l.len()) {
        return Err(Error::Dimension("law does not match the system".into()));
    }
    Ok(())
}

/// Exact target solution `v_n(t) = e^{(lambda_n - lambda)(t - t_0)} v_n(t_0)`.
pub fn simulate_target<T: Real>(
    system: &SpectralSystem<T>,
    lambda: T,
    v0: &[Vec<Cx<T>>],
    times: &[T],
    r_list: &[T],
) -> Result<SimulationTrace<T>> {
    check_times(times)?;
    check_state(system, v0)?;
    let t0 = times[0];
    let states = times
        .iter()
        .map(|&t| {
            system
                .branches
                .iter()
                .zip(v0)
                .map(|(b, v)| {
                    b.eigenvalues.iter().zip(v).map(|(&l, &z)| ((l - cre(lambda)) * cre(t - t0)).exp() * z).collect()
                })
                .collect()
        })
        .collect();
    Ok(SimulationTrace::new(times.to_vec(), states, r_list, Integrator::SemigroupExact, T::zero()))
}

/// `A_cl u = Lambda u + b (K . u)`, applied in O(N).
fn closed_loop_apply<T: Real>(branch: &SpectralBranch<T>, law: &BranchLaw<T>, u: &[Cx<T>]) -> Vec<Cx<T>> {
    let w: Cx<T> = law.gains.iter().zip(u).map(|(k, z)| *k * *z).sum();
    branch.eigenvalues.iter().zip(&branch.control_coeffs).zip(u).map(|((l, b), z)| *l * *z + *b * w).collect()
}

fn axpy<T: Real>(u: &[Cx<T>], h: T, k: &[Cx<T>]) -> Vec<Cx<T>> {
    u.iter().zip(k).map(|(a, b)| *a + *b * h).collect()
}

fn rk4_step<T: Real>(branch: &SpectralBranch<T>, law: &BranchLaw<T>, u: &[Cx<T>], h: T) -> Vec<Cx<T>> {
    let half = h / T::lit(2.0);
    let k1 = closed_loop_apply(branch, law, u);
    let k2 = closed_loop_apply(branch, law, &axpy(u, half, &k1));
    let k3 = closed_loop_apply(branch, law, &axpy(u, half, &k2));
    let k4 = closed_loop_apply(branch, law, &axpy(u, h, &k3));
    let six = T::lit(6.0);
    u.iter().enumerate().map(|(i, z)| *z + (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * (h / six)).collect()
}

/// Substep count and size covering `[a, b]` with steps no longer than `dt`.
fn substeps<T: Real>(a: T, b: T, dt: T) -> (usize, T) {
    let span = b - a;
    let count = (span / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
    (count, span / T::idx(count))
}

/// Largest `|lambda_n - lambda|`, which bounds the closed-loop spectral radius.
fn stiffness<T: Real>(system: &SpectralSystem<T>, lambda: T) -> T {
    system
        .branches
        .iter()
        .flat_map(|b| b.eigenvalues.iter().map(move |l| (*l - cre(lambda)).norm()))
        .fold(T::zero(), T::max)
}

/// Closed-loop trajectory. `semigroup_exact` evaluates
/// `T^{-1} diag(e^{(lambda_n - lambda) t}) T u_0` per branch; `rk4` steps
/// `u' = A_cl u` with step at most `dt` and requires `dt max|lambda_n - lambda| <= 2`.
pub fn simulate_closed_loop<T: Real>(
    system: &SpectralSystem<T>,
    law: &FeedbackLaw<T>,
    u0: &[Vec<Cx<T>>],
    times: &[T],
    integrator: Integrator,
    dt: T,
    r_list: &[T],
) -> Result<SimulationTrace<T>> {
    check_times(times)?;
    check_state(system, u0)?;
    check_law(system, law)?;
    let lambda = law.lambda;
    match integrator {
        Integrator::SemigroupExact => {
            let mut per_branch = Vec::with_capacity(system.m());
            for (b, l) in system.branches.iter().zip(&law.branches) {
                let t = transform_matrix(b, l, lambda)?;
                let lu = Lu::factor(&t)?;
                if lu.is_singular() {
                    return Err(Error::Singular { condition: f64::INFINITY });
                }
                per_branch.push((lu, t.matvec(&u0[b.index - 1])));
            }
            let t0 = times[0];
            let mut states = Vec::with_capacity(times.len());
            for &t in times {
                let mut state = Vec::with_capacity(system.m());
                for (b, (lu, v0)) in system.branches.iter().zip(&per_branch) {
                    let v: Vec<Cx<T>> = b
                        .eigenvalues
                        .iter()
                        .zip(v0)
                        .map(|(&l, &z)| ((l - cre(lambda)) * cre(t - t0)).exp() * z)
                        .collect();
                    state.push(lu.solve(&v)?);
                }
                states.push(state);
            }
            Ok(SimulationTrace::new(times.to_vec(), states, r_list, integrator, dt))
        }
        Integrator::Rk4 => {
            if !(dt > T::zero()) {
                return Err(Error::IntegratorGuard("rk4 needs a positive dt".into()));
            }
            let stiff = stiffness(system, lambda);
            if dt * stiff > T::lit(2.0) {
                return Err(Error::IntegratorGuard(format!(
                    "rk4 step dt = {dt} exceeds 2 / max|lambda_n - lambda| = {}",
                    T::lit(2.0) / stiff
                )));
            }
            let mut u: Vec<Vec<Cx<T>>> = u0.to_vec();
            let mut states = vec![u.clone()];
            for w in times.windows(2) {
                let (count, h) = substeps(w[0], w[1], dt);
                for _ in 0..count {
                    for ((b, l), s) in system.branches.iter().zip(&law.branches).zip(u.iter_mut()) {
                        *s = rk4_step(b, l, s, h);
                    }
                }
                guard_finite(&u, w[1])?;
                states.push(u.clone());
            }
            Ok(SimulationTrace::new(times.to_vec(), states, r_list, integrator, dt))
        }
        Integrator::ImexEuler => Err(Error::InvalidInput("imex_euler is reserved for the Burgers system".into())),
    }
}

const BLOW_UP: f64 = 1e100;

fn guard_finite<T: Real>(u: &[Vec<Cx<T>>], t: T) -> Result<()> {
    let limit = T::lit(BLOW_UP).min(T::max_value().sqrt());
    for s in u {
        for z in s {
            if !z.re.is_finite() || !z.im.is_finite() || z.norm() > limit {
                return Err(Error::BlowUp {
                    time: t.to_f64_lossy(),
                    detail: "state is not finite or overflowing".into(),
                });
            }
        }
    }
    Ok(())
}

/// `max_t ||T u(t) - v(t)||_2 / ||u_0||_2` for a closed-loop trace `u` and the
/// target trace `v` started from `T u_0`.
pub fn conjugacy_defect<T: Real>(
    system: &SpectralSystem<T>,
    law: &FeedbackLaw<T>,
    closed: &SimulationTrace<T>,
    target: &SimulationTrace<T>,
) -> Result<T> {
    check_law(system, law)?;
    if closed.len() != target.len() {
        return Err(Error::Dimension("traces have different time grids".into()));
    }
    let ts: Vec<_> = system
        .branches
        .iter()
        .zip(&law.branches)
        .map(|(b, l)| transform_matrix(b, l, law.lambda))
        .collect::<Result<_>>()?;
    let scale = state_norm(&closed.states[0], T::zero()).max(T::min_positive_value());
    let mut worst = T::zero();
    for (u, v) in closed.states.iter().zip(&target.states) {
        let d: T = ts
            .iter()
            .zip(u)
            .zip(v)
            .map(|((t, ui), vi)| {
                let tu = t.matvec(ui);
                tu.iter().zip(vi).map(|(a, b)| (*a - *b).norm_sqr()).sum::<T>()
            })
            .sum::<T>()
            .sqrt();
        worst = worst.max(d / scale);
    }
    Ok(worst)
}

/// Initial data for the Burgers system.
#[derive(Debug, Clone)]
pub enum BurgersInitial<T: Real> {
    /// Branch coordinates: sine coefficients `n = 1..N`, then cosine
    /// coefficients `k = 0..N-1`.
    Modal(Vec<Vec<Cx<T>>>),
    /// Real samples at `x_j = 2 pi j / M`, `j = 0..M-1`.
    Physical(Vec<T>),
}

/// Torus Fourier coefficients `u_k`, `k = -K..K`, stored at `k + K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fourier<T: Real> {
    pub kmax: usize,
    pub coeffs: Vec<Cx<T>>,
}

impl<T: Real> Fourier<T> {
    pub fn zeros(kmax: usize) -> Self {
        Self { kmax, coeffs: vec![czero(); 2 * kmax + 1] }
    }

    pub fn get(&self, k: i64) -> Cx<T> {
        let idx = k + self.kmax as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            czero()
        } else {
            self.coeffs[idx as usize]
        }
    }

    fn slot(&mut self, k: i64) -> &mut Cx<T> {
        &mut self.coeffs[(k + self.kmax as i64) as usize]
    }

    /// `u = sum_n a1_n sin(n x) + sum_k a2_{k+1} cos(k x)`.
    pub fn from_modal(kmax: usize, sine: &[Cx<T>], cosine: &[Cx<T>]) -> Self {
        let mut f = Self::zeros(kmax);
        let half = T::lit(0.5);
        let i = cx(T::zero(), T::one());
        for (n, &bn) in sine.iter().enumerate().map(|(k, v)| (k as i64 + 1, v)) {
            if n as usize > kmax {
                break;
            }
            *f.slot(n) = f.get(n) - i * bn * half;
            *f.slot(-n) = f.get(-n) + i * bn * half;
        }
        for (k, &ak) in cosine.iter().enumerate().map(|(k, v)| (k as i64, v)) {
            if k as usize > kmax {
                break;
            }
            if k == 0 {
                *f.slot(0) = f.get(0) + ak;
            } else {
                *f.slot(k) = f.get(k) + ak * half;
                *f.slot(-k) = f.get(-k) + ak * half;
            }
        }
        f
    }

    /// Inverse of [`Fourier::from_modal`] on the first `n` sine and cosine modes.
    pub fn to_modal(&self, n: usize) -> (Vec<Cx<T>>, Vec<Cx<T>>) {
        let i = cx(T::zero(), T::one());
        let sine = (1..=n as i64).map(|k| i * (self.get(k) - self.get(-k))).collect();
        let cosine = (0..n as i64).map(|k| if k == 0 { self.get(0) } else { self.get(k) + self.get(-k) }).collect();
        (sine, cosine)
    }

    /// Coefficients of real samples on the uniform periodic grid.
    pub fn from_samples(kmax: usize, samples: &[T]) -> Result<Self> {
        let m = samples.len();
        if m <= 2 * kmax {
            return Err(Error::InvalidInput(format!("need more than {} physical samples, got {m}", 2 * kmax)));
        }
        let mut f = Self::zeros(kmax);
        let two_pi = T::PI() + T::PI();
        for k in -(kmax as i64)..=kmax as i64 {
            let mut acc = czero();
            for (j, &u) in samples.iter().enumerate() {
                let theta = -two_pi * T::lit(k as f64) * T::idx(j) / T::idx(m);
                acc = acc + cx(theta.cos(), theta.sin()) * u;
            }
            *f.slot(k) = acc / T::idx(m);
        }
        Ok(f)
    }

    /// `||u||_{L2(0, 2 pi)} = (2 pi sum |u_k|^2)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        ((T::PI() + T::PI()) * self.coeffs.iter().map(|z| z.norm_sqr()).sum::<T>()).sqrt()
    }

    /// `max_k |u_k - conj(u_{-k})|`.
    pub fn realness_defect(&self) -> T {
        let k = self.kmax as i64;
        (0..=k).map(|j| (self.get(j) - self.get(-j).conj()).norm()).fold(T::zero(), T::max)
    }

    /// Coefficients of `u * u` truncated to `|k| <= kmax`.
    fn square(&self) -> Vec<Cx<T>> {
        let k = self.kmax as i64;
        let mut out = vec![czero(); self.coeffs.len()];
        for m in -k..=k {
            let lo = (m - k).max(-k);
            let hi = (m + k).min(k);
            let mut acc = czero();
            for j in lo..=hi {
                acc = acc + self.get(j) * self.get(m - j);
            }
            out[(m + k) as usize] = acc;
        }
        out
    }
}

fn check_heat_torus<T: Real>(system: &SpectralSystem<T>) -> Result<usize> {
    if system.m() != 2 {
        return Err(Error::InvalidInput("Burgers needs the two-branch heat torus system".into()));
    }
    let n = system.branches[0].len();
    let tol = T::lit(1e-9);
    let sine_ok = system.branches[0]
        .eigenvalues
        .iter()
        .enumerate()
        .all(|(k, l)| (*l + cre(T::idx((k + 1) * (k + 1)))).norm() <= tol);
    let cos_ok = system.branches[1].len() == n
        && system.branches[1].eigenvalues.iter().enumerate().all(|(k, l)| (*l + cre(T::idx(k * k))).norm() <= tol);
    if !sine_ok || !cos_ok {
        return Err(Error::InvalidInput("Burgers needs the heat torus spectrum (sine -n^2, cosine -k^2)".into()));
    }
    Ok(n)
}

/// Closed-loop viscous Burgers `u_t = u_xx - u u_x + phi_1 w_1 + phi_2 w_2`
/// with `w_i = sum_n K^i_n a^i_n` (`law = None` runs the open loop).
///
/// Fourier-Galerkin on `|k| <= N` with the quadratic term by direct
/// convolution, stepped by IMEX Euler: `u_k <- (u_k + dt (N_k + F_k)) / (1 + dt k^2)`.
/// The recorded states are the branch coordinates.
pub fn simulate_burgers<T: Real>(
    system: &SpectralSystem<T>,
    law: Option<&FeedbackLaw<T>>,
    u0: &BurgersInitial<T>,
    times: &[T],
    dt: T,
    r_list: &[T],
) -> Result<SimulationTrace<T>> {
    let n = check_heat_torus(system)?;
    check_times(times)?;
    if !(dt > T::zero()) {
        return Err(Error::IntegratorGuard("imex_euler needs a positive dt".into()));
    }
    if let Some(l) = law {
        check_law(system, l)?;
        let loop_gain: T =
            system.branches.iter().zip(&l.branches).map(|(b, bl)| norm2(&b.control_coeffs) * norm2(&bl.gains)).sum();
        if dt * loop_gain > T::lit(2.0) {
            return Err(Error::IntegratorGuard(format!(
                "explicit feedback step dt = {dt} exceeds 2 / (sum ||b|| ||K||) = {}",
                T::lit(2.0) / loop_gain
            )));
        }
    }
    let mut u = match u0 {
        BurgersInitial::Modal(s) => {
            check_state(system, s)?;
            Fourier::from_modal(n, &s[0], &s[1])
        }
        BurgersInitial::Physical(samples) => {
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("physical initial data is not finite".into()));
            }
            Fourier::from_samples(n, samples)?
        }
    };
    let phi1 = Fourier::from_modal(n, &system.branches[0].control_coeffs, &[]);
    let phi2 = Fourier::from_modal(n, &[], &system.branches[1].control_coeffs);
    let k = n as i64;
    let half = T::lit(0.5);
    let modal = |f: &Fourier<T>| {
        let (s, c) = f.to_modal(n);
        vec![s, c]
    };
    let mut defect = u.realness_defect();
    let mut states = vec![modal(&u)];
    for w in times.windows(2) {
        let (count, h) = substeps(w[0], w[1], dt);
        for step in 0..count {
            let sq = u.square();
            let (w1, w2) = match law {
                Some(l) => {
                    let (s, c) = u.to_modal(n);
                    let w1: Cx<T> = l.branches[0].gains.iter().zip(&s).map(|(a, b)| *a * *b).sum();
                    let w2: Cx<T> = l.branches[1].gains.iter().zip(&c).map(|(a, b)| *a * *b).sum();
                    (w1, w2)
                }
                None => (czero(), czero()),
            };
            for m in -k..=k {
                let idx = (m + k) as usize;
                let km = T::lit(m as f64);
                // -(1/2) d/dx (u^2) has coefficient -(i k / 2) (u^2)_k
                let nonlinear = cx(T::zero(), -km * half) * sq[idx];
                let forcing = phi1.coeffs[idx] * w1 + phi2.coeffs[idx] * w2;
                u.coeffs[idx] = (u.coeffs[idx] + (nonlinear + forcing) * h) / (T::one() + h * km * km);
            }
            let blown = u.coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() > T::lit(BLOW_UP));
            if blown {
                return Err(Error::BlowUp {
                    time: (w[0] + h * T::idx(step + 1)).to_f64_lossy(),
                    detail: "nonlinear blow-up: initial data outside the local basin".into(),
                });
            }
        }
        defect = defect.max(u.realness_defect());
        states.push(modal(&u));
    }
    let mut trace = SimulationTrace::new(times.to_vec(), states, r_list, Integrator::ImexEuler, dt);
    trace.realness_defect = Some(defect);
    Ok(trace)
}

/// `delta * sin(x)` style initial data normalized to `||u_0||_{L2(0, 2 pi)} = delta`.
pub fn burgers_scaled<T: Real>(n: usize, shape: &[Vec<Cx<T>>], delta: T) -> Result<BurgersInitial<T>> {
    if shape.len() != 2 || shape[0].len() != n || shape[1].len() != n {
        return Err(Error::Dimension("Burgers shape must have two branches of length N".into()));
    }
    let norm = Fourier::from_modal(n, &shape[0], &shape[1]).l2_norm();
    if !(norm > T::zero()) {
        return Err(Error::InvalidInput("Burgers shape has zero norm".into()));
    }
    let s = delta / norm;
    Ok(BurgersInitial::Modal(shape.iter().map(|b| b.iter().map(|z| *z * s).collect()).collect()))
}

/// Least-squares exponential fit `||u(t)||_r ~ c_hat e^{-mu_hat t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mu_hat: f64,
    pub c_hat: f64,
    pub r2: f64,
    pub window: [f64; 2],
}

/// Fits `log ||u(t)||_r` on `window` (default: drop the first 10% of the horizon).
pub fn fit_decay<T: Real>(trace: &SimulationTrace<T>, r: T, window: Option<(T, T)>) -> Result<DecayFit> {
    if trace.is_empty() {
        return Err(Error::InvalidInput("empty trace".into()));
    }
    let t0 = trace.times[0];
    let t1 = trace.times[trace.len() - 1];
    let (a, b) = window.unwrap_or((t0 + (t1 - t0) * T::lit(0.1), t1));
    let norms = trace.norm_series(r);
    let picked: Vec<(T, T)> =
        trace.times.iter().zip(&norms).filter(|(t, _)| **t >= a && **t <= b).map(|(t, v)| (*t, *v)).collect();
    if picked.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 4 samples in the window, got {}",
            picked.len()
        )));
    }
    if picked.iter().any(|(_, v)| !(*v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidInput("decay fit needs positive finite norms on the window".into()));
    }
    let x: Vec<f64> = picked.iter().map(|(t, _)| t.to_f64_lossy()).collect();
    let y: Vec<f64> = picked.iter().map(|(_, v)| v.to_f64_lossy().ln()).collect();
    let (slope, intercept) =
        ls_line(&x, &y).ok_or_else(|| Error::InvalidInput("degenerate decay-fit window".into()))?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - (slope * xi + intercept)).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DecayFit { mu_hat: -slope, c_hat: intercept.exp(), r2, window: [a.to_f64_lossy(), b.to_f64_lossy()] })
}

/// Outcome of one Burgers run inside the basin search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinSample {
    pub delta: f64,
    pub decays: bool,
    pub mu_hat: Option<f64>,
}

/// Bisected size threshold between decaying and non-decaying initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    /// Largest amplitude observed to decay.
    pub decaying: Option<f64>,
    /// Smallest amplitude observed to blow up or grow.
    pub failing: Option<f64>,
    pub samples: Vec<BasinSample>,
}

/// Geometric bisection on the L2 amplitude of `shape` over `[lo, hi]`.
/// A run decays when it completes without blow-up and ends below its start.
#[allow(clippy::too_many_arguments)]
pub fn burgers_basin<T: Real>(
    system: &SpectralSystem<T>,
    law: &FeedbackLaw<T>,
    shape: &[Vec<Cx<T>>],
    lo: T,
    hi: T,
    bisections: usize,
    t_end: T,
    dt: T,
    samples: usize,
) -> Result<BasinReport> {
    if !(lo > T::zero()) || !(hi > lo) {
        return Err(Error::InvalidInput("basin search needs 0 < lo < hi".into()));
    }
    let n = check_heat_torus(system)?;
    let times = uniform_times(t_end, samples.max(8));
    let run = |delta: T| -> Result<BasinSample> {
        let u0 = burgers_scaled(n, shape, delta)?;
        let d = delta.to_f64_lossy();
        match simulate_burgers(system, Some(law), &u0, &times, dt, &[T::zero()]) {
            Ok(trace) => {
                let s = trace.norm_series(T::zero());
                let decays = s[s.len() - 1] < s[0];
                Ok(BasinSample { delta: d, decays, mu_hat: fit_decay(&trace, T::zero(), None).ok().map(|f| f.mu_hat) })
            }
            Err(Error::BlowUp { .. }) => Ok(BasinSample { delta: d, decays: false, mu_hat: None }),
            Err(e) => Err(e),
        }
    };
    let mut out = BasinReport { decaying: None, failing: None, samples: Vec::new() };
    let record = |s: BasinSample, out: &mut BasinReport| {
        if s.decays {
            out.decaying = Some(out.decaying.map_or(s.delta, |v: f64| v.max(s.delta)));
        } else {
            out.failing = Some(out.failing.map_or(s.delta, |v: f64| v.min(s.delta)));
        }
        out.samples.push(s);
        s.decays
    };
    let lo_ok = record(run(lo)?, &mut out);
    let hi_ok = record(run(hi)?, &mut out);
    if !lo_ok || hi_ok {
        return Ok(out);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..bisections {
        let mid = (a * b).sqrt();
        if record(run(mid)?, &mut out) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::heat_torus_unit;
    use crate::synthesis::{synthesize, Method};

    #[test]
    fn target_single_exponential() {
        let sys = heat_torus_unit::<f64>(4).unwrap();
        let mut v0 = vec![vec![cre(0.0); 4], vec![cre(0.0); 4]];
        v0[0][0] = cre(1.0);
        let tr = simulate_target(&sys, 2.5, &v0, &[0.0, 1.0], &[0.0]).unwrap();
        assert!((tr.states[1][0][0].re - (-3.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn fourier_modal_round_trip() {
        let s = vec![cre(0.3), cre(-1.0), cre(2.0)];
        let c = vec![cre(0.7), cre(0.1), cre(-0.4)];
        let f = Fourier::<f64>::from_modal(3, &s, &c);
        assert!(f.realness_defect() < 1e-16);
        let (s2, c2) = f.to_modal(3);
        for (a, b) in s.iter().zip(&s2).chain(c.iter().zip(&c2)) {
            assert!((*a - *b).norm() < 1e-15);
        }
        let m = 64;
        let samples: Vec<f64> = (0..m)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                0.3 * x.sin() - (2.0 * x).sin() + 2.0 * (3.0 * x).sin() + 0.7 + 0.1 * x.cos() - 0.4 * (2.0 * x).cos()
            })
            .collect();
        let g = Fourier::from_samples(3, &samples).unwrap();
        assert!(g.coeffs.iter().zip(&f.coeffs).all(|(a, b)| (*a - *b).norm() < 1e-13));
    }

    #[test]
    fn square_matches_product_of_sines() {
        // sin^2 x = 1/2 - cos(2x)/2
        let f = Fourier::<f64>::from_modal(2, &[cre(1.0), cre(0.0)], &[]);
        let sq = f.square();
        assert!((sq[2] - cre(0.5)).norm() < 1e-15);
        assert!((sq[4] - cre(-0.25)).norm() < 1e-15);
        assert!((sq[0] - cre(-0.25)).norm() < 1e-15);
    }

    #[test]
    fn rk4_guard_and_zero_state_fit() {
        let sys = heat_torus_unit::<f64>(8).unwrap();
        let law = synthesize(&sys, 2.5, Method::Direct, &Default::default()).unwrap();
        let u0 = vec![vec![cre(1.0); 8], vec![cre(1.0); 8]];
        let times = uniform_times(0.1, 5);
        let err = simulate_closed_loop(&sys, &law, &u0, &times, Integrator::Rk4, 0.1, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::IntegratorGuard(_)));
        let zero = vec![vec![cre(0.0); 8], vec![cre(0.0); 8]];
        let tr = simulate_closed_loop(&sys, &law, &zero, &times, Integrator::SemigroupExact, 0.0, &[0.0]).unwrap();
        assert!(fit_decay(&tr, 0.0, None).is_err());
    }
}
