//! Spectral systems in coefficient coordinates: per-branch eigenvalues and
//! control coefficients, the weighted coefficient norms, and numerical checks
//! of the growth, gap and control-coefficient assumptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cx, is_finite_c, ls_line, powi_idx, Cx, Real};

/// One invariant subspace with simple spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBranch<T: Real> {
    pub index: usize,
    pub eigenvalues: Vec<Cx<T>>,
    pub control_coeffs: Vec<Cx<T>>,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> SpectralBranch<T> {
    /// Validates shape and exponents. Distinctness and non-vanishing control
    /// coefficients are checked by [`verify_gap`] / [`verify_control`] and by
    /// the synthesis routines, so that they can be reported rather than
    /// rejected up front.
    pub fn new(
        index: usize,
        eigenvalues: Vec<Cx<T>>,
        control_coeffs: Vec<Cx<T>>,
        alpha: T,
        beta: T,
        gamma: T,
    ) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidInput("branch indices start at 1".into()));
        }
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput(format!("branch {index} has no modes")));
        }
        if eigenvalues.len() != control_coeffs.len() {
            return Err(Error::Dimension(format!(
                "branch {index}: {} eigenvalues but {} control coefficients",
                eigenvalues.len(),
                control_coeffs.len()
            )));
        }
        if let Some(n) = eigenvalues.iter().position(|&z| !is_finite_c(z)) {
            return Err(Error::NonFiniteEigenvalue { branch: index, n: n + 1 });
        }
        if let Some(n) = control_coeffs.iter().position(|&z| !is_finite_c(z)) {
            return Err(Error::InvalidInput(format!("branch {index}: control coefficient b_{} is not finite", n + 1)));
        }
        if !(alpha > T::one()) {
            return Err(Error::InvalidInput(format!("branch {index}: alpha = {alpha} must exceed 1")));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidInput(format!("branch {index}: beta is not finite")));
        }
        let gmax = (alpha - T::one()) / T::lit(2.0);
        if !(gamma >= T::zero() && gamma < gmax) {
            return Err(Error::OutOfRange {
                what: "gamma",
                value: gamma.to_f64_lossy(),
                low: 0.0,
                high: gmax.to_f64_lossy(),
            });
        }
        Ok(Self { index, eigenvalues, control_coeffs, alpha, beta, gamma })
    }

    /// Truncation level N.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Keeps the first `n` modes.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len()).max(1);
        Self {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            control_coeffs: self.control_coeffs[..n].to_vec(),
            ..self.clone()
        }
    }

    pub fn with_control(&self, control_coeffs: Vec<Cx<T>>) -> Result<Self> {
        Self::new(self.index, self.eigenvalues.clone(), control_coeffs, self.alpha, self.beta, self.gamma)
    }

    /// Same branch with every control coefficient multiplied by `c`.
    pub fn scaled_control(&self, c: Cx<T>) -> Self {
        Self { control_coeffs: self.control_coeffs.iter().map(|&b| b * c).collect(), ..self.clone() }
    }

    /// Fails on the first coinciding pair of eigenvalues.
    pub fn ensure_distinct(&self) -> Result<()> {
        let eps = T::epsilon() * T::lit(8.0);
        for n in 0..self.len() {
            for p in (n + 1)..self.len() {
                let (a, b) = (self.eigenvalues[n], self.eigenvalues[p]);
                let scale = a.norm().max(b.norm()).max(T::one());
                if (a - b).norm() <= eps * scale {
                    return Err(Error::DuplicateEigenvalue { branch: self.index, n: n + 1, p: p + 1 });
                }
            }
        }
        Ok(())
    }

    /// Fails on the first vanishing control coefficient.
    pub fn ensure_controllable(&self) -> Result<()> {
        match self.control_coeffs.iter().position(|b| b.norm() == T::zero()) {
            Some(n) => Err(Error::ZeroControlCoefficient { branch: self.index, n: n + 1 }),
            None => Ok(()),
        }
    }

    /// Largest real part of the spectrum (open-loop growth bound).
    pub fn growth_bound(&self) -> T {
        self.eigenvalues.iter().map(|z| z.re).fold(T::neg_infinity(), T::max)
    }
}

/// The direct sum of branches. Branch indices run 1..m without gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem<T: Real> {
    pub label: String,
    pub branches: Vec<SpectralBranch<T>>,
}

impl<T: Real> SpectralSystem<T> {
    pub fn new(label: impl Into<String>, branches: Vec<SpectralBranch<T>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidInput("a system needs at least one branch".into()));
        }
        for (k, b) in branches.iter().enumerate() {
            if b.index != k + 1 {
                return Err(Error::InvalidInput(format!(
                    "branch at position {} carries index {} (expected {})",
                    k + 1,
                    b.index,
                    k + 1
                )));
            }
        }
        Ok(Self { label: label.into(), branches })
    }

    /// Number of branches (highest multiplicity).
    pub fn m(&self) -> usize {
        self.branches.len()
    }

    /// Shared truncation level, or `None` when branch lengths differ.
    pub fn common_truncation(&self) -> Option<usize> {
        let n = self.branches[0].len();
        self.branches.iter().all(|b| b.len() == n).then_some(n)
    }

    /// Cuts every branch to the shortest branch length.
    pub fn truncated_to_common(&self) -> Self {
        let n = self.branches.iter().map(|b| b.len()).min().unwrap_or(1);
        self.truncated(n)
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self { label: self.label.clone(), branches: self.branches.iter().map(|b| b.truncated(n)).collect() }
    }

    pub fn total_modes(&self) -> usize {
        self.branches.iter().map(|b| b.len()).sum()
    }

    pub fn growth_bound(&self) -> T {
        self.branches.iter().map(|b| b.growth_bound()).fold(T::neg_infinity(), T::max)
    }

    pub fn to_doc(&self) -> SystemDoc {
        SystemDoc {
            label: self.label.clone(),
            m: self.m(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchDoc {
                    i: b.index,
                    alpha: b.alpha.to_f64_lossy(),
                    beta: b.beta.to_f64_lossy(),
                    gamma: b.gamma.to_f64_lossy(),
                    eigenvalues: to_pairs(&b.eigenvalues),
                    control_coeffs: to_pairs(&b.control_coeffs),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &SystemDoc) -> Result<Self> {
        if doc.m != doc.branches.len() {
            return Err(Error::Schema(format!("m = {} but {} branches listed", doc.m, doc.branches.len())));
        }
        let branches = doc
            .branches
            .iter()
            .map(|b| {
                SpectralBranch::new(
                    b.i,
                    from_pairs(&b.eigenvalues),
                    from_pairs(&b.control_coeffs),
                    T::lit(b.alpha),
                    T::lit(b.beta),
                    T::lit(b.gamma),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.label.clone(), branches)
    }
}

/// Serialized form of a [`SpectralBranch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub i: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eigenvalues: Vec<[f64; 2]>,
    pub control_coeffs: Vec<[f64; 2]>,
}

/// Serialized form of a [`SpectralSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub label: String,
    pub m: usize,
    pub branches: Vec<BranchDoc>,
}

pub fn to_pairs<T: Real>(v: &[Cx<T>]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()]).collect()
}

pub fn from_pairs<T: Real>(v: &[[f64; 2]]) -> Vec<Cx<T>> {
    v.iter().map(|&[re, im]| cx(T::lit(re), T::lit(im))).collect()
}

/// `(sum_n n^{2r} |f_n|^2)^{1/2}` with one-based `n`.
pub fn sobolev_norm<T: Real>(coeffs: &[Cx<T>], r: T) -> T {
    let two_r = r + r;
    coeffs
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let w = if r == T::zero() { T::one() } else { powi_idx(k + 1, two_r) };
            w * z.norm_sqr()
        })
        .sum::<T>()
        .sqrt()
}

/// Coefficient-weighted norm at a fixed Sobolev index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorm<T: Real> {
    pub r: T,
}

impl<T: Real> WeightedNorm<T> {
    pub fn new(r: T) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::InvalidInput("norm exponent must be finite".into()));
        }
        Ok(Self { r })
    }

    pub fn norm(&self, coeffs: &[Cx<T>]) -> T {
        sobolev_norm(coeffs, self.r)
    }

    /// `n^r` for `n = 1..len`.
    pub fn weights(&self, len: usize) -> Vec<T> {
        (1..=len).map(|n| powi_idx(n, self.r)).collect()
    }
}

/// Log-log slope of `values` against the one-based index over the upper
/// three quarters of the range (entries with zero value are skipped).
pub(crate) fn tail_loglog_slope<T: Real>(values: &[T]) -> Option<T> {
    let n = values.len();
    let start = n / 4;
    let (xs, ys): (Vec<T>, Vec<T>) = values
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, v)| **v > T::zero() && v.is_finite())
        .map(|(k, v)| (T::idx(k + 1).ln(), v.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    ls_line(&xs, &ys).map(|(s, _)| s)
}

/// Growth condition `n^alpha ~ |lambda_n| + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthVerdict<T: Real> {
    pub ok: bool,
    pub alpha_hat: Option<T>,
    pub c_low: T,
    pub c_high: T,
    pub ratio: T,
    pub ratio_threshold: T,
    pub witness_low: usize,
    pub witness_high: usize,
}

/// Gap condition `|lambda_n - lambda_p| >= C n^{alpha-1} |n-p|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVerdict<T: Real> {
    pub ok: bool,
    pub c_hat: T,
    pub floor: T,
    pub witness: (usize, usize),
}

/// Control coefficient bounds `c1 n^{-beta} <= |b_n| <= c2 n^{-beta+gamma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVerdict<T: Real> {
    pub ok: bool,
    pub c1: T,
    pub c2: T,
    pub beta_hat: Option<T>,
    pub gamma_hat: Option<T>,
    pub witness_low: usize,
    pub witness_high: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionVerdict<T: Real> {
    pub branch: usize,
    pub growth: GrowthVerdict<T>,
    pub gap: GapVerdict<T>,
    pub control: ControlVerdict<T>,
}

impl<T: Real> AssumptionVerdict<T> {
    pub fn all_ok(&self) -> bool {
        self.growth.ok && self.gap.ok && self.control.ok
    }
}

/// Tunables for the assumption checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions<T: Real> {
    pub growth_ratio_max: T,
    pub gap_floor: T,
}

impl<T: Real> Default for VerifyOptions<T> {
    fn default() -> Self {
        Self { growth_ratio_max: T::lit(25.0), gap_floor: T::lit(1e-6) }
    }
}

pub fn verify_growth<T: Real>(branch: &SpectralBranch<T>, opts: &VerifyOptions<T>) -> Result<GrowthVerdict<T>> {
    if let Some(n) = branch.eigenvalues.iter().position(|&z| !is_finite_c(z)) {
        return Err(Error::NonFiniteEigenvalue { branch: branch.index, n: n + 1 });
    }
    let mut c_low = T::infinity();
    let mut c_high = T::zero();
    let (mut wl, mut wh) = (1, 1);
    for (k, z) in branch.eigenvalues.iter().enumerate() {
        let v = (z.norm() + T::one()) / powi_idx(k + 1, branch.alpha);
        if v < c_low {
            c_low = v;
            wl = k + 1;
        }
        if v > c_high {
            c_high = v;
            wh = k + 1;
        }
    }
    let ratio = c_high / c_low;
    let mags: Vec<T> = branch.eigenvalues.iter().map(|z| z.norm()).collect();
    let alpha_hat = if branch.len() >= 8 { tail_loglog_slope(&mags) } else { None };
    let ok = c_low > T::zero() && c_high.is_finite() && ratio <= opts.growth_ratio_max;
    Ok(GrowthVerdict {
        ok,
        alpha_hat,
        c_low,
        c_high,
        ratio,
        ratio_threshold: opts.growth_ratio_max,
        witness_low: wl,
        witness_high: wh,
    })
}

pub fn verify_gap<T: Real>(branch: &SpectralBranch<T>, opts: &VerifyOptions<T>) -> Result<GapVerdict<T>> {
    branch.ensure_distinct()?;
    let mut c_hat = T::infinity();
    let mut witness = (1, 1);
    let am1 = branch.alpha - T::one();
    for n in 0..branch.len() {
        let wn = powi_idx(n + 1, am1);
        for p in 0..branch.len() {
            if p == n {
                continue;
            }
            let d = (branch.eigenvalues[n] - branch.eigenvalues[p]).norm();
            let v = d / (wn * T::idx(n.abs_diff(p)));
            if v < c_hat {
                c_hat = v;
                witness = (n + 1, p + 1);
            }
        }
    }
    Ok(GapVerdict { ok: c_hat > opts.gap_floor, c_hat, floor: opts.gap_floor, witness })
}

pub fn verify_control<T: Real>(branch: &SpectralBranch<T>) -> Result<ControlVerdict<T>> {
    branch.ensure_controllable()?;
    let mut c1 = T::infinity();
    let mut c2 = T::zero();
    let (mut wl, mut wh) = (1, 1);
    for (k, b) in branch.control_coeffs.iter().enumerate() {
        let lo = b.norm() * powi_idx(k + 1, branch.beta);
        let hi = b.norm() * powi_idx(k + 1, branch.beta - branch.gamma);
        if lo < c1 {
            c1 = lo;
            wl = k + 1;
        }
        if hi > c2 {
            c2 = hi;
            wh = k + 1;
        }
    }
    let mags: Vec<T> = branch.control_coeffs.iter().map(|z| z.norm()).collect();
    let beta_hat = if branch.len() >= 8 { tail_loglog_slope(&mags).map(|s| -s) } else { None };
    let gamma_hat = beta_hat.map(|bh| (branch.beta - bh).max(T::zero()));
    Ok(ControlVerdict {
        ok: c1 > T::zero() && c2.is_finite(),
        c1,
        c2,
        beta_hat,
        gamma_hat,
        witness_low: wl,
        witness_high: wh,
    })
}

pub fn verify_branch<T: Real>(branch: &SpectralBranch<T>, opts: &VerifyOptions<T>) -> Result<AssumptionVerdict<T>> {
    Ok(AssumptionVerdict {
        branch: branch.index,
        growth: verify_growth(branch, opts)?,
        gap: verify_gap(branch, opts)?,
        control: verify_control(branch)?,
    })
}

/// Which admissible r-interval to enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalConvention {
    /// `(1/2 - alpha + gamma, alpha - 1/2 - gamma)`
    #[default]
    Symmetric,
    /// `(1/2 - alpha + gamma, alpha - 1/2)`
    OneSided,
}

/// Open interval of Sobolev indices for which the construction is an
/// isomorphism, shifted by `shift` (the branch beta for transform checks).
pub fn admissible_interval<T: Real>(alpha: T, gamma: T, shift: T, convention: IntervalConvention) -> (T, T) {
    let half = T::lit(0.5);
    let low = shift + half - alpha + gamma;
    let high = match convention {
        IntervalConvention::Symmetric => shift + alpha - half - gamma,
        IntervalConvention::OneSided => shift + alpha - half,
    };
    (low, high)
}

pub(crate) fn check_in_interval<T: Real>(what: &'static str, value: T, (low, high): (T, T)) -> Result<()> {
    if value > low && value < high {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value: value.to_f64_lossy(), low: low.to_f64_lossy(), high: high.to_f64_lossy() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Classical,
    NotNecessarilyAdmissible,
    NotExactlyControllableInX,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub r: f64,
    pub admissibility_necessary_ok: bool,
    pub exact_controllability_necessary_ok: bool,
    pub bounded_real_part: bool,
    pub regime: Regime,
    /// Fitted log-log slope of `|b_n| / (1 + |Re lambda_n|)^{1/2}`.
    pub ratio_slope: Option<f64>,
}

/// Slope tolerance used to decide whether a sequence is bounded above/below.
pub const SLOPE_TOL: f64 = 0.1;

pub fn classify_controllability<T: Real>(
    branch: &SpectralBranch<T>,
    r: T,
    convention: IntervalConvention,
) -> Result<Classification> {
    branch.ensure_controllable()?;
    check_in_interval("r", r, admissible_interval(branch.alpha, branch.gamma, T::zero(), convention))?;
    let tol = T::lit(SLOPE_TOL);
    let half = T::lit(0.5);
    let ratios: Vec<T> = branch
        .eigenvalues
        .iter()
        .zip(&branch.control_coeffs)
        .map(|(l, b)| b.norm() / (T::one() + l.re.abs()).powf(half))
        .collect();
    let slope = tail_loglog_slope(&ratios);
    let re_abs: Vec<T> = branch.eigenvalues.iter().map(|l| l.re.abs() + T::one()).collect();
    let bounded_real_part = match tail_loglog_slope(&re_abs) {
        Some(s) => s <= tol,
        None => re_abs.iter().all(|&v| v <= T::lit(2.0)),
    };
    let (adm, exact) = match slope {
        Some(s) => (s <= tol, s >= -tol),
        // too few modes for a trend: fall back to the raw spread
        None => {
            let hi = ratios.iter().copied().fold(T::zero(), T::max);
            let lo = ratios.iter().copied().fold(T::infinity(), T::min);
            let bounded = hi / lo <= T::lit(4.0);
            (bounded, bounded)
        }
    };
    let regime = if !bounded_real_part {
        Regime::Unclassified
    } else if r == T::zero() && branch.gamma == T::zero() {
        Regime::Classical
    } else if r > T::zero() {
        Regime::NotNecessarilyAdmissible
    } else if r < T::zero() {
        Regime::NotExactlyControllableInX
    } else {
        Regime::Unclassified
    };
    Ok(Classification {
        r: r.to_f64_lossy(),
        admissibility_necessary_ok: adm,
        exact_controllability_necessary_ok: exact,
        bounded_real_part,
        regime,
        ratio_slope: slope.map(|s| s.to_f64_lossy()),
    })
}

/// Eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tagged<T: Real> {
    pub value: Cx<T>,
    pub multiplicity: usize,
}

/// Distributes a spectrum with multiplicities over `m` simple-spectrum
/// branches. An eigenvalue of multiplicity `k` lands in the last `k` branches,
/// so a torus Laplacian gives a sine branch `(-1, -4, ...)` and a cosine
/// branch `(0, -1, -4, ...)`. Branches may end up with different lengths; see
/// [`SpectralSystem::truncated_to_common`]. Control coefficients start at 1.
pub fn branch_split<T: Real>(
    label: &str,
    spectrum: &[Tagged<T>],
    m: usize,
    alpha: T,
    beta: T,
    gamma: T,
) -> Result<SpectralSystem<T>> {
    if m == 0 {
        return Err(Error::InvalidInput("branch count must be positive".into()));
    }
    let mut groups: Vec<Vec<Cx<T>>> = vec![Vec::new(); m];
    for (idx, t) in spectrum.iter().enumerate() {
        if t.multiplicity == 0 || t.multiplicity > m {
            return Err(Error::MultiplicityExceeded { index: idx + 1, multiplicity: t.multiplicity, max: m });
        }
        for g in groups.iter_mut().skip(m - t.multiplicity) {
            g.push(t.value);
        }
    }
    let branches = groups
        .into_iter()
        .enumerate()
        .map(|(k, eig)| {
            let n = eig.len();
            let b = SpectralBranch::new(k + 1, eig, vec![Cx::new(T::one(), T::zero()); n], alpha, beta, gamma)?;
            b.ensure_distinct()?;
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralSystem::new(label, branches)
}
