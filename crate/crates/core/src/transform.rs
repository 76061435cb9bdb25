//! The truncated Fredholm transform `T`, the auxiliary operators `tau` and
//! `tau~`, the closed-loop matrix, and the numerical certificates of the
//! identities they satisfy.
//!
//! With `x_n = -K_n b_n`, column `n` of `T` is `x_n b_p / (b_n D[p][n])`, where
//! `D[p][n] = lambda_n - lambda_p + lambda`. Once `T b = b` holds, the
//! conjugacy `T (A + b K^T) = (A - lambda) T` is exact at every truncation:
//! column `n` of the defect reduces to `K_n (T b - b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_2, eigenvalues, norm2, sub_vec, CMatrix, Lu};
use crate::scalar::{cre, czero, powi_idx, Cx, Real};
use crate::spectral::{admissible_interval, check_in_interval, IntervalConvention, SpectralBranch, SpectralSystem};
use crate::synthesis::{denominators, solve_gains_direct, BranchLaw, FeedbackLaw};

fn check_law<T: Real>(branch: &SpectralBranch<T>, law: &BranchLaw<T>) -> Result<()> {
    if law.len() != branch.len() || law.index != branch.index {
        return Err(Error::Dimension(format!(
            "law for branch {} with {} gains does not fit branch {} with {} modes",
            law.index,
            law.len(),
            branch.index,
            branch.len()
        )));
    }
    Ok(())
}

/// `T[p][n] = -K_n b_p / (lambda_n - lambda_p + lambda)`.
pub fn transform_matrix<T: Real>(branch: &SpectralBranch<T>, law: &BranchLaw<T>, lambda: T) -> Result<CMatrix<T>> {
    check_law(branch, law)?;
    let d = denominators(branch, lambda);
    let b = &branch.control_coeffs;
    Ok(CMatrix::from_fn(branch.len(), branch.len(), |p, n| -law.gains[n] * b[p] / d[(p, n)]))
}

/// `||T b - b||_2 / ||b||_2`.
pub fn tb_residual<T: Real>(t: &CMatrix<T>, b: &[Cx<T>]) -> T {
    norm2(&sub_vec(&t.matvec(b), b)) / norm2(b)
}

/// Transform of one branch with its certificates.
#[derive(Debug, Clone)]
pub struct BranchTransform<T: Real> {
    pub index: usize,
    pub lambda: T,
    pub t: CMatrix<T>,
    pub tb_residual: T,
    pub opeq_residual: T,
    /// `(r, kappa_r)` pairs.
    pub conditioning: Vec<(T, T)>,
}

pub fn build_transform<T: Real>(
    branch: &SpectralBranch<T>,
    law: &BranchLaw<T>,
    lambda: T,
) -> Result<BranchTransform<T>> {
    let t = transform_matrix(branch, law, lambda)?;
    let tb = tb_residual(&t, &branch.control_coeffs);
    let a_cl = closed_loop_operator(branch, law)?;
    let opeq = operator_equality_residual(&t, &a_cl, branch, lambda);
    Ok(BranchTransform {
        index: branch.index,
        lambda,
        t,
        tb_residual: tb,
        opeq_residual: opeq,
        conditioning: Vec::new(),
    })
}

/// Builds and certifies `T` on every branch; `r_list` selects the condition
/// numbers to record (each `r` must lie in the admissible interval).
pub fn build_system_transform<T: Real>(
    system: &SpectralSystem<T>,
    law: &FeedbackLaw<T>,
    r_list: &[T],
    convention: IntervalConvention,
) -> Result<Vec<BranchTransform<T>>> {
    if law.branches.len() != system.m() {
        return Err(Error::Dimension(format!("law has {} branches, system {}", law.branches.len(), system.m())));
    }
    system
        .branches
        .iter()
        .zip(&law.branches)
        .map(|(br, bl)| {
            let mut bt = build_transform(br, bl, law.lambda)?;
            for &r in r_list {
                bt.conditioning.push((r, conditioning(br, &bt.t, r, convention)?));
            }
            Ok(bt)
        })
        .collect()
}

/// `tau = diag(b_n)`.
pub fn build_tau<T: Real>(branch: &SpectralBranch<T>) -> CMatrix<T> {
    CMatrix::diag(&branch.control_coeffs)
}

/// `tau~` and its split `tau~ = lambda^{-1} I + tau~_c`.
#[derive(Debug, Clone)]
pub struct TauTilde<T: Real> {
    pub full: CMatrix<T>,
    pub identity_coeff: T,
    pub compact: CMatrix<T>,
}

/// `tau~[p][n] = b_p / (b_n (lambda_n - lambda_p + lambda))`.
pub fn build_tau_tilde<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Result<TauTilde<T>> {
    branch.ensure_controllable()?;
    let d = denominators(branch, lambda);
    if d.as_slice().iter().any(|z| z.norm() == T::zero()) {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let b = &branch.control_coeffs;
    let full = CMatrix::from_fn(branch.len(), branch.len(), |p, n| b[p] / (b[n] * d[(p, n)]));
    let mut compact = full.clone();
    for i in 0..branch.len() {
        compact[(i, i)] = czero();
    }
    Ok(TauTilde { full, identity_coeff: lambda.recip(), compact })
}

/// Max entrywise gap `|T[p][n] - x_n tau~[p][n]|`, relative to `max |T|`.
pub fn tau_tilde_reconstruction_error<T: Real>(t: &CMatrix<T>, tau_tilde: &CMatrix<T>, x: &[Cx<T>]) -> T {
    let n = t.cols();
    let mut worst = T::zero();
    for p in 0..t.rows() {
        for k in 0..n {
            worst = worst.max((t[(p, k)] - x[k] * tau_tilde[(p, k)]).norm());
        }
    }
    worst / t.max_abs().max(T::min_positive_value())
}

/// `A_cl = diag(lambda_n) + b K^T`.
pub fn closed_loop_operator<T: Real>(branch: &SpectralBranch<T>, law: &BranchLaw<T>) -> Result<CMatrix<T>> {
    check_law(branch, law)?;
    let b = &branch.control_coeffs;
    let l = &branch.eigenvalues;
    Ok(CMatrix::from_fn(branch.len(), branch.len(), |p, n| {
        let base = b[p] * law.gains[n];
        if p == n {
            base + l[n]
        } else {
            base
        }
    }))
}

#[derive(Debug, Clone)]
pub struct ClosedLoopMatrix<T: Real> {
    pub a_cl: CMatrix<T>,
    pub spectrum: Vec<Cx<T>>,
    /// Largest 2x2 minor of `A_cl - diag(lambda)` through its pivot entry,
    /// relative to the squared pivot magnitude (zero for rank one).
    pub rank_one_defect: T,
}

pub fn closed_loop_matrix<T: Real>(branch: &SpectralBranch<T>, law: &BranchLaw<T>) -> Result<ClosedLoopMatrix<T>> {
    let a_cl = closed_loop_operator(branch, law)?;
    let spectrum = eigenvalues(&a_cl)?;
    let mut off = a_cl.clone();
    for (i, l) in branch.eigenvalues.iter().enumerate() {
        off[(i, i)] = off[(i, i)] - *l;
    }
    Ok(ClosedLoopMatrix { a_cl, spectrum, rank_one_defect: rank_one_defect(&off) })
}

fn rank_one_defect<T: Real>(m: &CMatrix<T>) -> T {
    let (mut i0, mut j0, mut best) = (0, 0, T::zero());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m[(i, j)].norm();
            if v > best {
                best = v;
                i0 = i;
                j0 = j;
            }
        }
    }
    if best == T::zero() {
        return T::zero();
    }
    let piv = m[(i0, j0)];
    let mut worst = T::zero();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let minor = m[(i, j)] * piv - m[(i, j0)] * m[(i0, j)];
            worst = worst.max(minor.norm());
        }
    }
    worst / (best * best)
}

/// Target spectrum `{lambda_n - lambda}`.
pub fn target_spectrum<T: Real>(branch: &SpectralBranch<T>, lambda: T) -> Vec<Cx<T>> {
    branch.eigenvalues.iter().map(|&l| l - cre(lambda)).collect()
}

/// Max relative distance between `computed` and `target` after a greedy
/// nearest-pair matching.
pub fn spectrum_match_error<T: Real>(computed: &[Cx<T>], target: &[Cx<T>]) -> T {
    if computed.len() != target.len() {
        return T::infinity();
    }
    let n = target.len();
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(n * n);
    for (i, t) in target.iter().enumerate() {
        for (j, c) in computed.iter().enumerate() {
            pairs.push(((*t - *c).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut used_t = vec![false; n];
    let mut used_c = vec![false; n];
    let mut worst = T::zero();
    let mut matched = 0;
    for (d, i, j) in pairs {
        if used_t[i] || used_c[j] {
            continue;
        }
        used_t[i] = true;
        used_c[j] = true;
        worst = worst.max(d / target[i].norm().max(T::min_positive_value()));
        matched += 1;
        if matched == n {
            break;
        }
    }
    worst
}

/// `||T A_cl - (diag(lambda_p) - lambda) T||_F / (||T||_F ||A_cl||_F)`.
pub fn operator_equality_residual<T: Real>(
    t: &CMatrix<T>,
    a_cl: &CMatrix<T>,
    branch: &SpectralBranch<T>,
    lambda: T,
) -> T {
    let lhs = t.matmul(a_cl);
    let n = t.rows();
    let shifted = CMatrix::from_fn(n, n, |p, k| (branch.eigenvalues[p] - cre(lambda)) * t[(p, k)]);
    let denom = t.frobenius() * a_cl.frobenius();
    if denom == T::zero() {
        return T::zero();
    }
    lhs.sub(&shifted).frobenius() / denom
}

/// `cond_2(W_r T W_r^{-1})` with `W_r = diag(n^r)`; `r` must lie in the
/// open admissible interval shifted by the branch `beta`.
pub fn conditioning<T: Real>(
    branch: &SpectralBranch<T>,
    t: &CMatrix<T>,
    r: T,
    convention: IntervalConvention,
) -> Result<T> {
    check_in_interval("r", r, admissible_interval(branch.alpha, branch.gamma, branch.beta, convention))?;
    let n = t.rows();
    if n == 1 {
        return Ok(T::one());
    }
    let w: Vec<T> = (1..=n).map(|k| powi_idx(k, r)).collect();
    let winv: Vec<T> = w.iter().map(|v| v.recip()).collect();
    Ok(condition_2(&t.scale_rows_cols(&w, &winv)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningRow<T: Real> {
    pub n: usize,
    pub r: T,
    pub kappa: T,
}

/// Re-synthesizes (direct solve) at truncations `N/4, N/2, N` and records
/// `kappa_r` for every `r`.
pub fn conditioning_profile<T: Real>(
    branch: &SpectralBranch<T>,
    lambda: T,
    r_list: &[T],
    convention: IntervalConvention,
) -> Result<Vec<ConditioningRow<T>>> {
    let n = branch.len();
    let mut sizes = vec![(n / 4).max(1), (n / 2).max(1), n];
    sizes.dedup();
    let mut rows = Vec::new();
    for &size in &sizes {
        let b = branch.truncated(size);
        let law = solve_gains_direct(&b, lambda)?;
        let t = transform_matrix(&b, &law, lambda)?;
        for &r in r_list {
            rows.push(ConditioningRow { n: size, r, kappa: conditioning(&b, &t, r, convention)? });
        }
    }
    Ok(rows)
}

/// Block-diagonal transform over all branches, with its branch-wise inverse.
#[derive(Debug, Clone)]
pub struct SystemTransform<T: Real> {
    pub lambda: T,
    pub blocks: Vec<CMatrix<T>>,
    pub inverse_blocks: Vec<CMatrix<T>>,
}

impl<T: Real> SystemTransform<T> {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.rows()).sum()
    }

    fn dense_from(blocks: &[CMatrix<T>]) -> CMatrix<T> {
        let n: usize = blocks.iter().map(|b| b.rows()).sum();
        let mut out = CMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.rows();
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        Self::dense_from(&self.blocks)
    }

    pub fn inverse_dense(&self) -> CMatrix<T> {
        Self::dense_from(&self.inverse_blocks)
    }

    /// Applies `T` to a stacked coefficient vector.
    pub fn apply(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = Vec::with_capacity(v.len());
        let mut off = 0;
        for b in &self.blocks {
            out.extend(b.matvec(&v[off..off + b.cols()]));
            off += b.cols();
        }
        out
    }
}

pub fn assemble_system_transform<T: Real>(parts: &[BranchTransform<T>]) -> Result<SystemTransform<T>> {
    let first = parts.first().ok_or_else(|| Error::InvalidInput("no branch transforms to assemble".into()))?;
    let n = first.t.rows();
    for p in parts {
        if p.lambda != first.lambda {
            return Err(Error::InvalidInput(format!(
                "branch {} uses lambda = {} but branch {} uses {}",
                p.index, p.lambda, first.index, first.lambda
            )));
        }
        if p.t.rows() != n {
            return Err(Error::Dimension(format!(
                "branch {} has N = {} but branch {} has N = {n}",
                p.index,
                p.t.rows(),
                first.index
            )));
        }
    }
    let mut inverse_blocks = Vec::with_capacity(parts.len());
    for p in parts {
        let lu = Lu::factor(&p.t)?;
        if lu.is_singular() {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        inverse_blocks.push(lu.inverse()?);
    }
    Ok(SystemTransform { lambda: first.lambda, blocks: parts.iter().map(|p| p.t.clone()).collect(), inverse_blocks })
}

/// JSON matrix `{rows, cols, data: [[re, im], ...]}` in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix<T: Real>(m: &CMatrix<T>) -> Self {
        Self { rows: m.rows(), cols: m.cols(), data: crate::spectral::to_pairs(m.as_slice()) }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<CMatrix<T>> {
        CMatrix::from_row_major(self.rows, self.cols, crate::spectral::from_pairs(&self.data))
            .map_err(|e| Error::Schema(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchTransformDoc {
    pub i: usize,
    pub matrix: MatrixDoc,
    /// `[r, kappa_r]` pairs.
    pub conditioning: Vec<[f64; 2]>,
    pub opeq_residual: f64,
    pub tb_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDoc {
    pub lambda: f64,
    pub branches: Vec<BranchTransformDoc>,
}

impl TransformDoc {
    pub fn from_transforms<T: Real>(lambda: T, parts: &[BranchTransform<T>]) -> Self {
        Self {
            lambda: lambda.to_f64_lossy(),
            branches: parts
                .iter()
                .map(|p| BranchTransformDoc {
                    i: p.index,
                    matrix: MatrixDoc::from_matrix(&p.t),
                    conditioning: p.conditioning.iter().map(|(r, k)| [r.to_f64_lossy(), k.to_f64_lossy()]).collect(),
                    opeq_residual: p.opeq_residual.to_f64_lossy(),
                    tb_residual: p.tb_residual.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::heat_torus_unit;
    use crate::scalar::cx;
    use crate::synthesis::solve_gains_direct;

    fn worked() -> (SpectralBranch<f64>, BranchLaw<f64>) {
        let b = SpectralBranch::new(1, vec![cre(-1.0), cre(-4.0)], vec![cre(1.0), cre(1.0)], 2.0, 0.0, 0.0).unwrap();
        let law = solve_gains_direct(&b, 2.0).unwrap();
        (b, law)
    }

    #[test]
    fn worked_case_transform_and_spectrum() {
        let (b, law) = worked();
        let t = build_transform(&b, &law, 2.0).unwrap();
        let want = [[5.0 / 3.0, -2.0 / 3.0], [2.0 / 3.0, 1.0 / 3.0]];
        for p in 0..2 {
            for n in 0..2 {
                assert!((t.t[(p, n)] - cre(want[p][n])).norm() < 1e-13);
            }
        }
        assert!(t.tb_residual < 1e-15);
        assert!(t.opeq_residual <= 1e-15);
        let cl = closed_loop_matrix(&b, &law).unwrap();
        assert!(spectrum_match_error(&cl.spectrum, &[cre(-3.0), cre(-6.0)]) < 1e-12);
        assert!(cl.rank_one_defect < 1e-15);
    }

    #[test]
    fn single_mode_is_identity() {
        let b = SpectralBranch::new(1, vec![cre(-1.0)], vec![cx(0.5, 2.0)], 2.0, 0.0, 0.0).unwrap();
        let law = solve_gains_direct(&b, 3.0).unwrap();
        let t = build_transform(&b, &law, 3.0).unwrap();
        assert!((t.t[(0, 0)] - cre(1.0)).norm() < 1e-15);
        assert_eq!(t.opeq_residual, 0.0);
        assert_eq!(conditioning(&b, &t.t, 0.3, IntervalConvention::Symmetric).unwrap(), 1.0);
    }

    #[test]
    fn tau_and_tau_tilde() {
        let (b, law) = worked();
        let tt = build_tau_tilde(&b, 2.0).unwrap();
        let s = crate::synthesis::build_s(&b, 2.0).unwrap();
        assert_eq!(tt.full, s.s);
        assert!(tt.full.diagonal().iter().all(|z| (*z - cre(0.5)).norm() < 1e-15));
        let t = transform_matrix(&b, &law, 2.0).unwrap();
        assert!(tau_tilde_reconstruction_error(&t, &tt.full, &law.products_x) < 1e-15);
        let bn = SpectralBranch::new(
            1,
            vec![cre(-1.0), cre(-4.0), cre(-9.0)],
            vec![cre(1.0), cre(2.0), cre(3.0)],
            2.0,
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(build_tau(&bn).diagonal(), vec![cre(1.0), cre(2.0), cre(3.0)]);
    }

    #[test]
    fn out_of_interval_r_rejected() {
        let (b, law) = worked();
        let t = transform_matrix(&b, &law, 2.0).unwrap();
        assert!(matches!(conditioning(&b, &t, 1.5, IntervalConvention::Symmetric), Err(Error::OutOfRange { .. })));
        assert!(conditioning(&b, &t, 1.4, IntervalConvention::Symmetric).is_ok());
    }

    #[test]
    fn assembly_checks() {
        let sys = heat_torus_unit::<f64>(8).unwrap();
        let law =
            crate::synthesis::synthesize(&sys, 2.5, crate::synthesis::Method::Direct, &Default::default()).unwrap();
        let parts = build_system_transform(&sys, &law, &[0.0], IntervalConvention::Symmetric).unwrap();
        let st = assemble_system_transform(&parts).unwrap();
        assert_eq!(st.dim(), 16);
        let prod = st.to_dense().matmul(&st.inverse_dense());
        assert!(prod.sub(&CMatrix::identity(16)).max_abs() < 1e-12);
        let mut other = parts.clone();
        other[1].lambda = 3.0;
        assert!(assemble_system_transform(&other).is_err());
        let doc = TransformDoc::from_transforms(2.5, &parts);
        let back = doc.branches[0].matrix.to_matrix::<f64>().unwrap();
        assert_eq!(back, parts[0].t);
    }
}
