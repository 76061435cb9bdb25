//! Dense complex linear algebra used by the synthesis and certification code.
//!
//! Everything here is desk-scale (N up to a few hundred), so the routines are
//! plain O(N^3) algorithms: partially pivoted LU, Householder/shifted-QR
//! eigenvalues, one-sided Jacobi singular values, restarted GMRES, and a
//! bisection/inverse-iteration solver for real symmetric tridiagonal matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{cone, cre, czero, Cx, Real};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diag(d: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Cx<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn map(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matvec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(x).fold(czero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<T>()).fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scale_rows_cols(&self, left: &[T], right: &[T]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * (left[i] * right[j]))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.cols + j]
    }
}

pub fn norm2<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn norm_inf<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

pub fn dot_h<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter().zip(b).fold(czero(), |acc, (&x, &y)| acc + x.conj() * y)
}

pub fn sub_vec<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Vec<Cx<T>> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Real> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &CMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU of a {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.re == T::zero() && f.im == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Ok(Self { lu, perm, singular })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!("rhs of length {} for an {n}x{n} system", b.len())));
        }
        if self.singular {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        let mut x: Vec<Cx<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix<T>> {
        let n = self.dim();
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![czero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = czero());
            e[j] = cone();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// One-norm condition number `||A||_1 ||A^-1||_1` (infinite when singular).
pub fn condition_1<T: Real>(a: &CMatrix<T>) -> Result<T> {
    let lu = Lu::factor(a)?;
    if lu.is_singular() {
        return Ok(T::infinity());
    }
    Ok(a.norm1() * lu.inverse()?.norm1())
}

/// Solves `A x = b`, then applies one step of iterative refinement.
pub fn solve_refined<T: Real>(a: &CMatrix<T>, b: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    let lu = Lu::factor(a)?;
    let mut x = lu.solve(b)?;
    let r = sub_vec(b, &a.matvec(&x));
    let dx = lu.solve(&r)?;
    x.iter_mut().zip(dx).for_each(|(xi, d)| *xi = *xi + d);
    Ok(x)
}

fn balance<T: Real>(a: &mut CMatrix<T>) {
    let n = a.rows();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + a[(j, i)].l1_norm();
                    r = r + a[(i, j)].l1_norm();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / two;
            while c < g {
                f = f * two;
                c = c * four;
            }
            g = r * two;
            while c > g {
                f = f / two;
                c = c / four;
            }
            if (c + r) / f < T::lit(0.95) * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] / f;
                    a[(j, i)] = a[(j, i)] * f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

fn hessenberg<T: Real>(a: &mut CMatrix<T>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<Cx<T>> = ((k + 1)..n).map(|i| a[(i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == T::zero() { cone() } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] = v[0] - alpha;
        let vnorm = norm2(&v);
        if vnorm == T::zero() {
            continue;
        }
        v.iter_mut().for_each(|z| *z = *z / vnorm);
        let two = cre(T::lit(2.0));
        // left: rows k+1.., H <- (I - 2 v v^H) H
        for j in 0..n {
            let mut s = czero();
            for (idx, vi) in v.iter().enumerate() {
                s = s + vi.conj() * a[(k + 1 + idx, j)];
            }
            s = s * two;
            for (idx, vi) in v.iter().enumerate() {
                let cur = a[(k + 1 + idx, j)];
                a[(k + 1 + idx, j)] = cur - *vi * s;
            }
        }
        // right: cols k+1.., H <- H (I - 2 v v^H)
        for i in 0..n {
            let mut s: Cx<T> = czero();
            for (idx, vi) in v.iter().enumerate() {
                s = s + a[(i, k + 1 + idx)] * *vi;
            }
            s = s * two;
            for (idx, vi) in v.iter().enumerate() {
                let cur = a[(i, k + 1 + idx)];
                a[(i, k + 1 + idx)] = cur - s * vi.conj();
            }
        }
        for i in (k + 2)..n {
            a[(i, k)] = czero();
        }
    }
}

fn givens<T: Real>(a: Cx<T>, b: Cx<T>) -> (T, Cx<T>) {
    let an = a.norm();
    let bn = b.norm();
    if bn == T::zero() {
        return (T::one(), czero());
    }
    if an == T::zero() {
        return (T::zero(), cone());
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// All eigenvalues of a general complex square matrix.
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<Cx<T>>> {
    if !a.is_square() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let eps = T::epsilon();
    let hnorm = h.max_abs().max(T::min_positive_value());
    let mut eig = vec![czero(); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(4);
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = 0;
        for k in (1..=hi).rev() {
            let s = h[(k, k)].l1_norm() + h[(k - 1, k - 1)].l1_norm();
            let s = if s == T::zero() { hnorm } else { s };
            if h[(k, k - 1)].l1_norm() <= eps * s {
                h[(k, k - 1)] = czero();
                l = k;
                break;
            }
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(Error::Eigensolver(format!("QR iteration stalled after {total} sweeps")));
        }
        let shift = if iter % 11 == 10 {
            h[(hi, hi)] + cre(h[(hi, hi - 1)].norm() * T::lit(0.75))
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let half = cre(T::lit(0.5));
            let tr = (a11 + a22) * half;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr - det).sqrt();
            let e1 = tr + disc;
            let e2 = tr - disc;
            if (e1 - a22).norm() <= (e2 - a22).norm() {
                e1
            } else {
                e2
            }
        };
        for k in l..=hi {
            h[(k, k)] = h[(k, k)] - shift;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (off, &(c, s)) in rots.iter().enumerate() {
            let k = l + off;
            let top = (k + 2).min(hi);
            for i in l..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] = h[(k, k)] + shift;
        }
    }
    Ok(eig)
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<Cx<T>>> = (0..n).map(|j| a.column(j)).collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha: T = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma = dot_h(&cols[i], &cols[j]);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                let ci = &mut left[i];
                let cj = &mut right[0];
                for k in 0..m {
                    let x = ci[k];
                    let y = cj[k] * phase.conj();
                    ci[k] = x * c - y * s;
                    cj[k] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Spectral condition number `sigma_max / sigma_min`.
pub fn condition_2<T: Real>(a: &CMatrix<T>) -> T {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        (Some(_), Some(_)) => T::infinity(),
        _ => T::one(),
    }
}

/// Operator 2-norm estimate of `A` by power iteration on `A^H A`.
pub fn power_norm<T: Real>(a: &CMatrix<T>, steps: usize) -> T {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return T::zero();
    }
    let ah = a.adjoint();
    let mut v: Vec<Cx<T>> = (0..n).map(|k| cre(T::one() + T::lit(0.01) * T::idx(k % 7))).collect();
    let mut est = T::zero();
    for _ in 0..steps {
        let nv = norm2(&v);
        if nv == T::zero() {
            return T::zero();
        }
        v.iter_mut().for_each(|z| *z = *z / nv);
        let av = a.matvec(&v);
        est = norm2(&av);
        v = ah.matvec(&av);
    }
    est
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone)]
pub struct GmresOutcome<T: Real> {
    pub x: Vec<Cx<T>>,
    pub iterations: usize,
    pub relative_residual: T,
}

/// Restarted GMRES for `A x = b` where `A` is given as a matrix-free operator.
pub fn gmres<T: Real>(
    apply: impl Fn(&[Cx<T>]) -> Vec<Cx<T>>,
    b: &[Cx<T>],
    tol: T,
    restart: usize,
    max_iters: usize,
) -> GmresOutcome<T> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![czero(); n];
    if bnorm == T::zero() {
        return GmresOutcome { x, iterations: 0, relative_residual: T::zero() };
    }
    let m = restart.max(1).min(n.max(1));
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r = sub_vec(b, &ax);
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= tol || total >= max_iters {
            return GmresOutcome { x, iterations: total, relative_residual: rel };
        }
        let mut basis: Vec<Vec<Cx<T>>> = vec![r.iter().map(|&z| z / beta).collect()];
        let mut hcols: Vec<Vec<Cx<T>>> = Vec::with_capacity(m);
        let mut rots: Vec<(T, Cx<T>)> = Vec::with_capacity(m);
        let mut g = vec![czero(); m + 1];
        g[0] = cre(beta);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&basis[k]);
            let mut hcol = vec![czero(); k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot_h(v, &w);
                hcol[i] = hij;
                w.iter_mut().zip(v).for_each(|(wi, &vi)| *wi = *wi - hij * vi);
            }
            let wn = norm2(&w);
            hcol[k + 1] = cre(wn);
            for (i, &(c, s)) in rots.iter().enumerate() {
                let x0 = hcol[i];
                let y0 = hcol[i + 1];
                hcol[i] = x0 * c + s * y0;
                hcol[i + 1] = -s.conj() * x0 + y0 * c;
            }
            let (c, s) = givens(hcol[k], hcol[k + 1]);
            let x0 = hcol[k];
            let y0 = hcol[k + 1];
            hcol[k] = x0 * c + s * y0;
            hcol[k + 1] = czero();
            rots.push((c, s));
            let gk = g[k];
            g[k] = gk * c;
            g[k + 1] = -s.conj() * gk;
            hcols.push(hcol);
            k_used = k + 1;
            total += 1;
            let res = g[k + 1].norm() / bnorm;
            if res <= tol || wn == T::zero() || total >= max_iters {
                break;
            }
            basis.push(w.iter().map(|&z| z / wn).collect());
        }
        // back substitution on the k_used x k_used triangle
        let mut y = vec![czero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s = s - hcols[j][i] * y[j];
            }
            y[i] = s / hcols[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(xi, &vi)| *xi = *xi + *yj * vi);
        }
    }
}

/// Real symmetric tridiagonal matrix (diagonal `d`, off-diagonal `e`).
#[derive(Debug, Clone)]
pub struct SymTridiagonal<T: Real> {
    pub d: Vec<T>,
    pub e: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(d: Vec<T>, e: Vec<T>) -> Result<Self> {
        if d.is_empty() || e.len() + 1 != d.len() {
            return Err(Error::Dimension(format!(
                "tridiagonal with {} diagonal and {} off-diagonal entries",
                d.len(),
                e.len()
            )));
        }
        Ok(Self { d, e })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: T) -> usize {
        let tiny = T::min_positive_value() / T::epsilon();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q == T::zero() {
            q = -tiny;
        }
        if q < T::zero() {
            count += 1;
        }
        for i in 1..self.dim() {
            let e2 = self.e[i - 1] * self.e[i - 1];
            q = self.d[i] - x - e2 / q;
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.dim();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = (if i > 0 { self.e[i - 1].abs() } else { T::zero() })
                + (if i + 1 < n { self.e[i].abs() } else { T::zero() });
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k` smallest eigenvalues, ascending, by bisection.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<T>> {
        if k > self.dim() {
            return Err(Error::Dimension(format!("{k} eigenvalues requested from dimension {}", self.dim())));
        }
        let (glo, ghi) = self.gershgorin();
        let span = (ghi - glo).abs().max(T::one());
        let mut out = Vec::with_capacity(k);
        for idx in 0..k {
            let mut lo = glo - span * T::lit(1e-3);
            let mut hi = ghi + span * T::lit(1e-3);
            for _ in 0..200 {
                let mid = (lo + hi) * T::lit(0.5);
                if self.count_below(mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
                let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
                if hi - lo <= T::lit(4.0) * T::epsilon() * scale {
                    break;
                }
            }
            out.push((lo + hi) * T::lit(0.5));
        }
        Ok(out)
    }

    /// Eigenvector for an (approximate) eigenvalue `mu` by inverse iteration,
    /// normalized to unit Euclidean norm.
    pub fn eigenvector(&self, mu: T) -> Result<Vec<T>> {
        let n = self.dim();
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(T::one());
        let shift = mu + scale * T::epsilon() * T::lit(8.0);
        let mut v: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.1) * T::idx(i % 3)).collect();
        for _ in 0..4 {
            v = self.shifted_solve(shift, &v)?;
            let nv = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
            if !nv.is_finite() || nv == T::zero() {
                return Err(Error::Eigensolver("inverse iteration broke down".into()));
            }
            v.iter_mut().for_each(|x| *x = *x / nv);
        }
        Ok(v)
    }

    /// Solves `(A - s I) x = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, s: T, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if n == 1 {
            let p = self.d[0] - s;
            let p = if p == T::zero() { T::epsilon() } else { p };
            return Ok(vec![b[0] / p]);
        }
        // rows stored as (diag, super1, super2) after elimination; sub holds multipliers
        let mut dl: Vec<T> = self.e.clone();
        let mut dd: Vec<T> = self.d.iter().map(|&x| x - s).collect();
        let mut du: Vec<T> = self.e.clone();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut rhs = b.to_vec();
        let tiny =
            T::epsilon() * self.d.iter().chain(self.e.iter()).map(|x| x.abs()).fold(T::zero(), T::max).max(T::one());
        for i in 0..n - 1 {
            if dd[i].abs() >= dl[i].abs() {
                let piv = if dd[i] == T::zero() { tiny } else { dd[i] };
                dd[i] = piv;
                let f = dl[i] / piv;
                dd[i + 1] = dd[i + 1] - f * du[i];
                rhs[i + 1] = rhs[i + 1] - f * rhs[i];
                dl[i] = f;
            } else {
                let f = dd[i] / dl[i];
                dd[i] = dl[i];
                let tmp = dd[i + 1];
                dd[i + 1] = du[i] - f * tmp;
                du[i] = tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                rhs.swap(i, i + 1);
                rhs[i + 1] = rhs[i + 1] - f * rhs[i];
                dl[i] = f;
            }
        }
        if dd[n - 1] == T::zero() {
            dd[n - 1] = tiny;
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            if i + 1 < n {
                acc = acc - du[i] * x[i + 1];
            }
            if i + 2 < n {
                acc = acc - du2[i] * x[i + 2];
            }
            x[i] = acc / dd[i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn c(re: f64, im: f64) -> Cx<f64> {
        cx(re, im)
    }

    #[test]
    fn lu_solves_small_complex_system() {
        let a = CMatrix::from_row_major(2, 2, vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 2.0)]).unwrap();
        let x_true = vec![c(1.0, -2.0), c(0.5, 0.25)];
        let b = a.matvec(&x_true);
        let x = Lu::factor(&a).unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let a = CMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!(condition_1(&a).unwrap() > 1e15);
    }

    #[test]
    fn eigenvalues_of_triangular_and_companion() {
        let a = CMatrix::from_row_major(
            3,
            3,
            vec![
                c(1.0, 0.0),
                c(5.0, 1.0),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(-2.0, 1.0),
                c(7.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
            ],
        )
        .unwrap();
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - c(-2.0, 1.0)).norm() < 1e-12);
        assert!((ev[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((ev[2] - c(3.0, 0.0)).norm() < 1e-12);

        // rotation generator: eigenvalues +-i
        let r = CMatrix::from_row_major(2, 2, vec![c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let mut ev = eigenvalues(&r).unwrap();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-13);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn eigenvalues_of_random_dense_match_trace_and_determinant() {
        let n = 12;
        let a = CMatrix::from_fn(n, n, |i, j| c(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64 - 2.0));
        let ev = eigenvalues(&a).unwrap();
        let tr: Cx<f64> = a.diagonal().iter().sum();
        let sum: Cx<f64> = ev.iter().sum();
        assert!((tr - sum).norm() < 1e-9);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = CMatrix::diag(&[c(3.0, 4.0), c(-1.0, 0.0), c(0.0, 2.0)]);
        let sv = singular_values(&a);
        assert!((sv[0] - 5.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14 && (sv[2] - 1.0).abs() < 1e-14);
        assert!((condition_2(&a) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn power_norm_matches_largest_singular_value() {
        let a = CMatrix::from_fn(6, 6, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), 0.1 * (i as f64 - j as f64)));
        let sv = singular_values(&a);
        assert!((power_norm(&a, 200) - sv[0]).abs() < 1e-10 * sv[0]);
    }

    #[test]
    fn gmres_matches_direct_solve() {
        let n = 20;
        let a = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(4.0 + i as f64, 1.0)
            } else {
                c(1.0 / (1.0 + (i as f64 - j as f64).abs()), 0.0)
            }
        });
        let b: Vec<Cx<f64>> = (0..n).map(|k| c(1.0, k as f64 * 0.1)).collect();
        let out = gmres(|v| a.matvec(v), &b, 1e-13, n, 200);
        let direct = Lu::factor(&a).unwrap().solve(&b).unwrap();
        assert!(norm_inf(&sub_vec(&out.x, &direct)) < 1e-11);
    }

    #[test]
    fn tridiagonal_laplacian_eigenpairs() {
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0f64; n], vec![-1.0; n - 1]).unwrap();
        let ev = t.lowest_eigenvalues(5).unwrap();
        for (k, &mu) in ev.iter().enumerate() {
            let theta = (k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0);
            let exact = 2.0 - 2.0 * theta.cos();
            assert!((mu - exact).abs() < 1e-13);
            let v = t.eigenvector(mu).unwrap();
            // residual of (A - mu) v
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut s = 2.0 * v[i] - mu * v[i];
                if i > 0 {
                    s -= v[i - 1];
                }
                if i + 1 < n {
                    s -= v[i + 1];
                }
                res = res.max(s.abs());
            }
            assert!(res < 1e-10, "residual {res}");
        }
    }
}
