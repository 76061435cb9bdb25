//! Shift selection and feedback gain synthesis.
//!
//! For a branch with eigenvalues `lambda_n` and control coefficients `b_n`, the
//! gains `K_n` are fixed by the normalization `T B = B`, which after projection
//! reads
//!
//! ```text
//!     sum_n x_n / (lambda_n - lambda_p + lambda) = 1   for every p,   x_n = -K_n b_n.
//! ```
//!
//! The matrix `C[p][n] = 1/(lambda_n - lambda_p + lambda)` does not involve `b`,
//! so `x` depends on the spectrum and the shift only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_1, gmres, norm2, norm_inf, solve_refined, sub_vec, CMatrix, Lu};
use crate::scalar::{cre, czero, powi_idx, Cx, Real};
use crate::spectral::{from_pairs, to_pairs, SpectralBranch, SpectralSystem};

/// Condition estimate above which the gain system counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// An accepted spectral shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSelection<T: Real> {
    pub lambda: T,
    pub delta: T,
    /// `min |lambda_n - lambda_p + lambda|` over all branches and `n, p`.
    pub forbidden_min_distance: T,
}

/// Distance of `lambda` from the forbidden set of eigenvalue differences.
pub fn forbidden_distance<T: Real>(system: &SpectralSystem<T>, lambda: T) -> T {
    let mut best = T::infinity();
    for b in &system.branches {
        for &ln in &b.eigenvalues {
            for &lp in &b.eigenvalues {
                best = best.min((ln - lp + cre(lambda)).norm());
            }
        }
    }
    best
}

/// Smallest `lambda >= lambda0` on a grid of step `delta/2` whose distance to
/// the forbidden set is at least `delta`. The search stops at
/// `lambda0 + width` (default `100 * delta`).
pub fn select_shift<T: Real>(
    system: &SpectralSystem<T>,
    lambda0: T,
    delta: T,
    width: Option<T>,
) -> Result<ShiftSelection<T>> {
    if !(lambda0 > T::zero()) || !(delta > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "shift search needs lambda0 > 0 and delta > 0 (got {lambda0}, {delta})"
        )));
    }
    let width = width.unwrap_or(delta * T::lit(100.0));
    let step = delta / T::lit(2.0);
    let steps = (width / step).floor().to_usize().unwrap_or(0);
    for k in 0..=steps {
        let lambda = lambda0 + step * T::idx(k);
        let d = forbidden_distance(system, lambda);
        if d >= delta {
            return Ok(ShiftSelection { lambda, delta, forbidden_min_distance: d });
        }
    }
    Err(Error::ShiftSearchExhausted {
        lambda0: lambda0.to_f64_lossy(),
        upper: (lambda0 + width).to_f64_lossy(),
        delta: delta.to_f64_lossy(),
    })
}

/// `D[p][n] = lambda_n - lambda_p + lambda`.
pub fn denominators<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> CMatrix<T> {
    let l = &branch.eigenvalues;
    CMatrix::from_fn(l.len(), l.len(), |p, n| l[n] - l[p] + cre(lambda))
}

fn check_denominators<T: Real>(d: &CMatrix<T>) -> Result<()> {
    if d.as_slice().iter().any(|z| z.norm() == T::zero()) {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    Ok(())
}

/// Coefficients of `q_n`: entry `p` is `1/(lambda_n - lambda_p + lambda)`.
/// `n` is one-based.
pub fn build_q<T: Real>(branch: &SpectralBranch<T>, lambda: T, n: usize) -> Result<Vec<Cx<T>>> {
    if n == 0 || n > branch.len() {
        return Err(Error::InvalidInput(format!("mode index {n} outside 1..={}", branch.len())));
    }
    let ln = branch.eigenvalues[n - 1];
    Ok(branch.eigenvalues.iter().map(|&lp| (ln - lp + cre(lambda)).inv()).collect())
}

/// `S` with columns `q_n`, split as `S = lambda^{-1} I + S_c`.
#[derive(Debug, Clone)]
pub struct SOperator<T: Real> {
    pub s: CMatrix<T>,
    pub identity_coeff: T,
    pub s_c: CMatrix<T>,
}

pub fn build_s<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<SOperator<T>> {
    let d = denominators(branch, lambda);
    check_denominators(&d)?;
    let s = d.map(|z| z.inv());
    let identity_coeff = lambda.recip();
    let mut s_c = s.clone();
    for i in 0..s.rows() {
        s_c[(i, i)] = czero();
    }
    Ok(SOperator { s, identity_coeff, s_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Iterative,
}

/// Gains for one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLaw<T: Real> {
    pub index: usize,
    pub gains: Vec<Cx<T>>,
    /// `x_n = -K_n b_n`.
    pub products_x: Vec<Cx<T>>,
    /// `||C x - 1||_2 / sqrt(N)`.
    pub tb_residual: T,
    /// Iterations used (0 for the direct solve).
    pub iterations: usize,
    /// Sup norms of the series terms `e^i`, `i >= 1`.
    pub history: Vec<T>,
}

impl<T: Real> BranchLaw<T> {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// `sup_n |x_n|`.
    pub fn sup_x(&self) -> T {
        norm_inf(&self.products_x)
    }
}

/// The synthesized feedback on every branch.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLaw<T: Real> {
    pub lambda: T,
    pub method: Method,
    pub branches: Vec<BranchLaw<T>>,
}

/// Serialized form of a [`FeedbackLaw`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawDoc {
    pub lambda: f64,
    pub method: Method,
    pub branches: Vec<BranchLawDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchLawDoc {
    pub i: usize,
    pub gains: Vec<[f64; 2]>,
    pub products_x: Vec<[f64; 2]>,
    pub tb_residual: f64,
}

impl<T: Real> FeedbackLaw<T> {
    pub fn branch(&self, index: usize) -> Option<&BranchLaw<T>> {
        self.branches.iter().find(|b| b.index == index)
    }

    pub fn max_tb_residual(&self) -> T {
        self.branches.iter().map(|b| b.tb_residual).fold(T::zero(), T::max)
    }

    pub fn to_doc(&self) -> LawDoc {
        LawDoc {
            lambda: self.lambda.to_f64_lossy(),
            method: self.method,
            branches: self
                .branches
                .iter()
                .map(|b| BranchLawDoc {
                    i: b.index,
                    gains: to_pairs(&b.gains),
                    products_x: to_pairs(&b.products_x),
                    tb_residual: b.tb_residual.to_f64_lossy(),
                })
                .collect(),
        }
    }

    /// Rebuilds a law from its document. Gains are authoritative; `x_n` is
    /// recomputed as `-K_n b_n` from the system. See
    /// [`LawDoc::stored_x_mismatch`] for the consistency of the stored `x`.
    pub fn from_doc(doc: &LawDoc, system: &SpectralSystem<T>) -> Result<Self> {
        check_doc_shape(doc, system)?;
        let branches = doc
            .branches
            .iter()
            .zip(&system.branches)
            .map(|(bd, br)| {
                let gains: Vec<Cx<T>> = from_pairs(&bd.gains);
                let x = gains.iter().zip(&br.control_coeffs).map(|(k, b)| -*k * *b).collect();
                BranchLaw {
                    index: bd.i,
                    gains,
                    products_x: x,
                    tb_residual: T::lit(bd.tb_residual),
                    iterations: 0,
                    history: Vec::new(),
                }
            })
            .collect();
        Ok(Self { lambda: T::lit(doc.lambda), method: doc.method, branches })
    }
}

fn check_doc_shape<T: Real>(doc: &LawDoc, system: &SpectralSystem<T>) -> Result<()> {
    if doc.branches.len() != system.m() {
        return Err(Error::Schema(format!("law has {} branches, system {}", doc.branches.len(), system.m())));
    }
    for (bd, br) in doc.branches.iter().zip(&system.branches) {
        if bd.i != br.index || bd.gains.len() != br.len() || bd.products_x.len() != br.len() {
            return Err(Error::Schema(format!("law branch {} does not match the system", bd.i)));
        }
    }
    Ok(())
}

impl LawDoc {
    /// Largest relative gap between the stored `x_n` and `-K_n b_n`.
    pub fn stored_x_mismatch<T: Real>(&self, system: &SpectralSystem<T>) -> Result<T> {
        check_doc_shape(self, system)?;
        let mut worst = T::zero();
        for (bd, br) in self.branches.iter().zip(&system.branches) {
            let gains: Vec<Cx<T>> = from_pairs(&bd.gains);
            let stored: Vec<Cx<T>> = from_pairs(&bd.products_x);
            let x: Vec<Cx<T>> = gains.iter().zip(&br.control_coeffs).map(|(k, b)| -*k * *b).collect();
            let scale = norm_inf(&x).max(T::one());
            worst = worst.max(norm_inf(&sub_vec(&x, &stored)) / scale);
        }
        Ok(worst)
    }
}

fn validate_branch<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<()> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidInput(format!("shift lambda = {lambda} must be positive")));
    }
    branch.ensure_controllable()?;
    branch.ensure_distinct()
}

/// `||C x - 1||_2 / sqrt(N)` for the normalization system.
pub fn normalization_residual<T: Real>(branch: &SpectralBranch<T>, lambda: T, x: &[Cx<T>]) -> T {
    let c = denominators(branch, lambda).map(|z| z.inv());
    let ones = vec![cre(T::one()); x.len()];
    norm2(&sub_vec(&c.matvec(x), &ones)) / T::idx(x.len()).sqrt()
}

fn finish<T: Real>(
    branch: &SpectralBranch<T>,
    lambda: T,
    x: Vec<Cx<T>>,
    iterations: usize,
    history: Vec<T>,
) -> BranchLaw<T> {
    let gains = x.iter().zip(&branch.control_coeffs).map(|(xn, bn)| -*xn / *bn).collect();
    let tb_residual = normalization_residual(branch, lambda, &x);
    BranchLaw { index: branch.index, gains, products_x: x, tb_residual, iterations, history }
}

/// Direct solve of the normalization system by pivoted LU (one step of
/// iterative refinement when `refine` is set).
pub fn solve_gains_direct_with<T: Real>(branch: &SpectralBranch<T>, lambda: T, refine: bool) -> Result<BranchLaw<T>> {
    validate_branch(branch, lambda)?;
    let d = denominators(branch, lambda);
    check_denominators(&d)?;
    let c = d.map(|z| z.inv());
    let kappa = condition_1(&c)?;
    if !(kappa.to_f64_lossy() <= SINGULAR_CONDITION) {
        return Err(Error::Singular { condition: kappa.to_f64_lossy() });
    }
    let ones = vec![cre(T::one()); branch.len()];
    let x = if refine { solve_refined(&c, &ones)? } else { Lu::factor(&c)?.solve(&ones)? };
    Ok(finish(branch, lambda, x, 0, Vec::new()))
}

pub fn solve_gains_direct<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<BranchLaw<T>> {
    solve_gains_direct_with(branch, lambda, true)
}

/// How the series `x = sum_i e^i` is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesAcceleration {
    /// Partial sums of the series, term by term.
    None,
    /// Minimal-residual recombination of the series terms (GMRES on the
    /// fixed-point equation; its Krylov space is spanned by `e^0, e^1, ...`).
    #[default]
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions<T: Real> {
    pub max_iters: usize,
    /// Stop once `||e^i||_inf < tol * lambda` (plain) or the relative
    /// residual drops below `tol` (Krylov).
    pub tol: T,
    pub acceleration: SeriesAcceleration,
}

impl<T: Real> Default for IterativeOptions<T> {
    fn default() -> Self {
        Self { max_iters: 10_000, tol: T::lit(1e-13), acceleration: SeriesAcceleration::Krylov }
    }
}

/// One series step: `(M e)_m = -lambda sum_{n != m} e_n / (lambda_n - lambda_m + lambda)`.
fn series_step<T: Real>(c: &CMatrix<T>, lambda: T, e: &[Cx<T>]) -> Vec<Cx<T>> {
    let n = e.len();
    let mut out = vec![czero(); n];
    for (m, o) in out.iter_mut().enumerate() {
        let row = c.row(m);
        let mut s = czero();
        for k in 0..n {
            if k != m {
                s = s + row[k] * e[k];
            }
        }
        *o = s * (-lambda);
    }
    out
}

/// Gains from the series `e^0 = lambda`, `e^{i+1} = M e^i`, `x = sum_i e^i`.
pub fn solve_gains_iterative<T: Real>(
    branch: &SpectralBranch<T>,
    lambda: T,
    opts: &IterativeOptions<T>,
) -> Result<BranchLaw<T>> {
    validate_branch(branch, lambda)?;
    let d = denominators(branch, lambda);
    check_denominators(&d)?;
    let c = d.map(|z| z.inv());
    let n = branch.len();
    let e0 = vec![cre(lambda); n];
    if n == 1 {
        // the series has no off-diagonal terms: x_1 = lambda
        return Ok(finish(branch, lambda, e0, 0, Vec::new()));
    }
    match opts.acceleration {
        SeriesAcceleration::None => {
            let mut x = e0.clone();
            let mut e = e0;
            let mut history = Vec::new();
            let blowup = T::lit(1e100);
            for it in 1..=opts.max_iters {
                e = series_step(&c, lambda, &e);
                let en = norm_inf(&e);
                history.push(en);
                x.iter_mut().zip(&e).for_each(|(xi, ei)| *xi = *xi + *ei);
                if en < opts.tol * lambda {
                    return Ok(finish(branch, lambda, x, it, history));
                }
                if !(en < blowup) {
                    break;
                }
            }
            Err(Error::NonConvergence { iterations: history.len(), ratio: contraction_ratio(&history) })
        }
        SeriesAcceleration::Krylov => {
            let apply = |v: &[Cx<T>]| {
                let mv = series_step(&c, lambda, v);
                sub_vec(v, &mv)
            };
            let out = gmres(apply, &e0, opts.tol, n.min(opts.max_iters).max(1), opts.max_iters);
            if !(out.relative_residual <= opts.tol * T::lit(10.0)) {
                return Err(Error::NonConvergence {
                    iterations: out.iterations,
                    ratio: out.relative_residual.to_f64_lossy(),
                });
            }
            // series term norms over the same number of steps, for reporting
            let mut history = Vec::with_capacity(out.iterations);
            let mut e = e0;
            for _ in 0..out.iterations.min(64) {
                e = series_step(&c, lambda, &e);
                history.push(norm_inf(&e));
            }
            Ok(finish(branch, lambda, out.x, out.iterations, history))
        }
    }
}

/// Geometric mean of the last few successive ratios of a norm history.
pub fn contraction_ratio<T: Real>(history: &[T]) -> f64 {
    let k = history.len();
    if k < 2 {
        return f64::NAN;
    }
    let span = (k - 1).min(10);
    let a = history[k - 1 - span].to_f64_lossy();
    let b = history[k - 1].to_f64_lossy();
    (b / a).powf(1.0 / span as f64)
}

/// Spectral radius of the series iteration matrix (decides whether the plain
/// series converges).
pub fn series_spectral_radius<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<T> {
    let d = denominators(branch, lambda);
    check_denominators(&d)?;
    let n = branch.len();
    let m = CMatrix::from_fn(n, n, |p, k| if p == k { czero() } else { cre(-lambda) / d[(p, k)] });
    let ev = crate::linalg::eigenvalues(&m)?;
    Ok(ev.iter().map(|z| z.norm()).fold(T::zero(), T::max))
}

/// Synthesizes every branch of `system` with the chosen method.
pub fn synthesize<T: Real>(
    system: &SpectralSystem<T>,
    lambda: T,
    method: Method,
    opts: &IterativeOptions<T>,
) -> Result<FeedbackLaw<T>> {
    let branches = system
        .branches
        .iter()
        .map(|b| match method {
            Method::Direct => solve_gains_direct(b, lambda),
            Method::Iterative => solve_gains_iterative(b, lambda, opts),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeedbackLaw { lambda, method, branches })
}

/// Synthesis for `beta != 0` through the diagonal rescaling `M = diag(n^beta)`:
/// solve with `b~_n = n^beta b_n`, then `K = K~ M`.
pub fn solve_gains_beta_reduced<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<BranchLaw<T>> {
    let w: Vec<T> = (1..=branch.len()).map(|n| powi_idx(n, branch.beta)).collect();
    let scaled: Vec<Cx<T>> = branch.control_coeffs.iter().zip(&w).map(|(b, s)| *b * *s).collect();
    let reduced = SpectralBranch { control_coeffs: scaled, beta: T::zero(), ..branch.clone() };
    let tilde = solve_gains_direct(&reduced, lambda)?;
    let gains: Vec<Cx<T>> = tilde.gains.iter().zip(&w).map(|(k, s)| *k * *s).collect();
    let x: Vec<Cx<T>> = gains.iter().zip(&branch.control_coeffs).map(|(k, b)| -*k * *b).collect();
    let tb_residual = normalization_residual(branch, lambda, &x);
    Ok(BranchLaw { index: branch.index, gains, products_x: x, tb_residual, iterations: 0, history: Vec::new() })
}

/// Truncation tail: `max_{n <= N/2} |x_n^{(N)} - x_n^{(N/2)}|`.
pub fn truncation_tail<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<T> {
    let n = branch.len();
    if n < 2 {
        return Ok(T::zero());
    }
    let full = solve_gains_direct(branch, lambda)?;
    let half = solve_gains_direct(&branch.truncated(n / 2), lambda)?;
    Ok(norm_inf(&sub_vec(&full.products_x[..n / 2], &half.products_x)))
}

/// Ratio profile against the bound `p^{1-alpha+s} log p + p^{-alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSumProfile<T: Real> {
    /// `sum_{n != p} n^s / |lambda_n - lambda_p + lambda|`.
    pub lhs: Vec<T>,
    pub ratio: Vec<T>,
    /// Maximum ratio over `p` in `[8, N]` (`None` when `N < 8`).
    pub max_ratio: Option<T>,
}

pub fn cross_sum_probe<T: Real>(branch: &SpectralBranch<T>, lambda: T, s: T) -> Result<CrossSumProfile<T>> {
    let cap = branch.alpha - T::one();
    if !(s < cap) {
        return Err(Error::OutOfRange {
            what: "s",
            value: s.to_f64_lossy(),
            low: f64::NEG_INFINITY,
            high: cap.to_f64_lossy(),
        });
    }
    let l = &branch.eigenvalues;
    let n = l.len();
    let ws: Vec<T> = (1..=n).map(|k| powi_idx(k, s)).collect();
    let mut lhs = Vec::with_capacity(n);
    let mut ratio = Vec::with_capacity(n);
    for p in 0..n {
        let mut acc = T::zero();
        for k in 0..n {
            if k != p {
                acc = acc + ws[k] / (l[k] - l[p] + cre(lambda)).norm();
            }
        }
        let pp = T::idx(p + 1);
        let bound = pp.powf(T::one() - branch.alpha + s) * pp.max(T::lit(2.0)).ln() + pp.powf(-branch.alpha);
        lhs.push(acc);
        ratio.push(acc / bound);
    }
    let max_ratio = (n >= 8).then(|| ratio[7..].iter().copied().fold(T::zero(), T::max));
    Ok(CrossSumProfile { lhs, ratio, max_ratio })
}
