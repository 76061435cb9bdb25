//! Generators for the example systems: heat equation on the torus, linearized
//! Schrödinger equation around the ground state, Sturm–Liouville diffusion
//! (via the Liouville change of variables and a finite-difference eigensolve)
//! and a cubic-spectrum model with bounded perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;
use crate::quadrature::{
    cumulative_trapezoid, derivatives, interp, simpson, trapezoid, uniform_grid, SampledDoc, SampledFunction,
};
use crate::scalar::{cre, cx, powi_idx, Cx, Real};
use crate::spectral::{tail_loglog_slope, SpectralBranch, SpectralSystem};

const MIN_TRUNCATION: usize = 4;

fn check_truncation(n: usize) -> Result<()> {
    if n < MIN_TRUNCATION {
        return Err(Error::InvalidInput(format!("truncation N = {n} is below the minimum {MIN_TRUNCATION}")));
    }
    Ok(())
}

fn check_coeffs<T: Real>(branch: usize, n: usize, b: &[Cx<T>]) -> Result<()> {
    if b.len() != n {
        return Err(Error::Dimension(format!("branch {branch}: {} coefficients for N = {n}", b.len())));
    }
    if let Some(k) = b.iter().position(|z| z.norm() == T::zero()) {
        return Err(Error::ZeroControlCoefficient { branch, n: k + 1 });
    }
    Ok(())
}

/// Heat equation on the torus with two scalar controls.
///
/// Branch 1 (sine modes) has eigenvalues `-n^2`, `n = 1..N`; branch 2 (cosine
/// modes) starts with the constant mode: `0, -1, -4, ..., -(N-1)^2`. The
/// control coefficients are the projections of the two control profiles on
/// the respective bases. `sobolev_m` only names the state space.
pub fn heat_torus_model<T: Real>(
    n: usize,
    sobolev_m: T,
    phi1: Vec<Cx<T>>,
    phi2: Vec<Cx<T>>,
    beta: T,
    gamma: T,
) -> Result<SpectralSystem<T>> {
    check_truncation(n)?;
    check_coeffs(1, n, &phi1)?;
    check_coeffs(2, n, &phi2)?;
    let sine = (1..=n).map(|k| cre(-T::idx(k * k))).collect();
    let cosine = (0..n).map(|k| cre(-T::idx(k * k))).collect();
    let two = T::lit(2.0);
    SpectralSystem::new(
        format!("heat_torus(N={n}, m={sobolev_m})"),
        vec![
            SpectralBranch::new(1, sine, phi1, two, beta, gamma)?,
            SpectralBranch::new(2, cosine, phi2, two, beta, gamma)?,
        ],
    )
}

/// Heat torus model with `b_n = 1` on both branches.
pub fn heat_torus_unit<T: Real>(n: usize) -> Result<SpectralSystem<T>> {
    heat_torus_model(n, T::zero(), vec![cre(T::one()); n], vec![cre(T::one()); n], T::zero(), T::zero())
}

/// Schrödinger model plus the projection diagnostics.
#[derive(Debug, Clone)]
pub struct SchrodingerModel<T: Real> {
    pub system: SpectralSystem<T>,
    /// `<mu Phi_1, Phi_n>` in L2(0,1).
    pub projections: Vec<T>,
    /// Fitted decay exponent `d` in `|<mu Phi_1, Phi_n>| ~ n^{-d}`.
    pub decay_exponent: Option<T>,
    /// `|<mu Phi_1, Phi_n>| >= c n^{-3}` holds empirically.
    pub cubic_lower_bound_ok: bool,
    /// The relaxed `>= c n^{-7/2 + eps}` bound holds empirically.
    pub relaxed_lower_bound_ok: bool,
}

/// Quadrature resolution used when `mu` is not already on a suitable grid.
pub const SCHRODINGER_QUAD_POINTS: usize = 16385;

/// Linearized Schrödinger equation around the ground state on (0, 1).
///
/// `lambda_n = -i pi^2 (n^2 - 1)` and `b_n = (pi^2 n^2)^{3/2} <mu Phi_1, Phi_n>`
/// with `Phi_n = sqrt(2) sin(n pi x)`, integrated by composite Simpson.
pub fn schrodinger_model<T: Real>(n: usize, mu: &SampledFunction<T>) -> Result<SchrodingerModel<T>> {
    check_truncation(n)?;
    if mu.len() < 512 {
        return Err(Error::InvalidInput(format!("mu needs at least 512 samples (got {})", mu.len())));
    }
    let tol = T::lit(1e-9);
    if mu.start().abs() > tol || (mu.end() - T::one()).abs() > tol {
        return Err(Error::InvalidInput("mu must be sampled on [0, 1]".into()));
    }
    let (grid, values) = if mu.is_uniform() && mu.len() % 2 == 1 && mu.len() >= SCHRODINGER_QUAD_POINTS / 2 {
        (mu.grid.clone(), mu.values.clone())
    } else {
        let g = uniform_grid(T::zero(), T::one(), SCHRODINGER_QUAD_POINTS);
        let v = g.iter().map(|&x| mu.eval(x)).collect();
        (g, v)
    };
    let h = grid[1] - grid[0];
    let pi = T::PI();
    let two = T::lit(2.0);
    let mu_max = mu.max_abs();
    let mut proj = Vec::with_capacity(n);
    for k in 1..=n {
        let kk = T::idx(k);
        let integrand: Vec<T> =
            grid.iter().zip(&values).map(|(&x, &m)| two * m * (pi * x).sin() * (kk * pi * x).sin()).collect();
        proj.push(simpson(h, &integrand));
    }
    if let Some(k) = proj.iter().position(|p| p.abs() <= T::lit(1e-13) * mu_max) {
        return Err(Error::ZeroControlCoefficient { branch: 1, n: k + 1 });
    }
    let pi2 = pi * pi;
    let eig: Vec<Cx<T>> = (1..=n).map(|k| cx(T::zero(), -pi2 * (T::idx(k * k) - T::one()))).collect();
    let b: Vec<Cx<T>> =
        proj.iter().enumerate().map(|(k, &p)| cre(powi_idx(k + 1, T::lit(3.0)) * pi2 * pi * p)).collect();
    let mags: Vec<T> = proj.iter().map(|p| p.abs()).collect();
    let decay = tail_loglog_slope(&mags).map(|s| -s);
    let slack = T::lit(0.1);
    let (cubic, relaxed) = match decay {
        Some(d) => (d <= T::lit(3.0) + slack, d < T::lit(3.5)),
        None => (false, false),
    };
    let system = SpectralSystem::new(
        format!("schrodinger_ground(N={n})"),
        vec![SpectralBranch::new(1, eig, b, two, T::zero(), T::zero())?],
    )?;
    Ok(SchrodingerModel {
        system,
        projections: proj,
        decay_exponent: decay,
        cubic_lower_bound_ok: cubic,
        relaxed_lower_bound_ok: relaxed,
    })
}

/// Diffusion `u_t = (a u_x)_x + b u` on `[0, L]` with
/// `c1 u(0) + c2 u_x(0) = 0` and `c3 u(L) + c4 u_x(L) = 0`.
#[derive(Debug, Clone)]
pub struct SturmLiouvilleProblem<T: Real> {
    pub a: SampledFunction<T>,
    pub b: SampledFunction<T>,
    pub length: T,
    pub c: [T; 4],
    /// Number of finite-difference intervals.
    pub grid_size: usize,
}

pub const MIN_GRID: usize = 200;

impl<T: Real> SturmLiouvilleProblem<T> {
    pub fn new(a: SampledFunction<T>, b: SampledFunction<T>, length: T, c: [T; 4], grid_size: usize) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::InvalidInput("interval length must be positive".into()));
        }
        if grid_size < MIN_GRID {
            return Err(Error::InvalidInput(format!("grid size {grid_size} is below {MIN_GRID}")));
        }
        if c[0] == T::zero() && c[1] == T::zero() || c[2] == T::zero() && c[3] == T::zero() {
            return Err(Error::InvalidInput("each boundary condition needs a nonzero coefficient".into()));
        }
        if let Some(k) = a.values.iter().position(|&v| !(v > T::zero())) {
            return Err(Error::InvalidInput(format!("diffusion coefficient a is not positive at sample {k}")));
        }
        let tol = T::lit(1e-9) * length.max(T::one());
        for (name, f) in [("a", &a), ("b", &b)] {
            if f.start().abs() > tol || (f.end() - length).abs() > tol {
                return Err(Error::InvalidInput(format!("{name} must be sampled on [0, L]")));
            }
        }
        Ok(Self { a, b, length, c, grid_size })
    }

    /// Constant-coefficient problem sampled on `grid_size + 1` nodes.
    pub fn constant(a: T, b: T, length: T, c: [T; 4], grid_size: usize) -> Result<Self> {
        let pts = grid_size + 1;
        Self::new(
            SampledFunction::from_fn(T::zero(), length, pts, |_| a)?,
            SampledFunction::from_fn(T::zero(), length, pts, |_| b)?,
            length,
            c,
            grid_size,
        )
    }
}

/// Result of the Liouville change of variables.
#[derive(Debug, Clone)]
pub struct LiouvilleTransform<T: Real> {
    /// Transformed interval length `M = int_0^L a^{-1/2}`.
    pub m_len: T,
    /// Uniform grid on `[0, M]` with `grid_size + 1` nodes.
    pub y: Vec<T>,
    /// Potential `Q` on the y-grid.
    pub q: Vec<T>,
    /// `x(y)` on the y-grid.
    pub x_of_y: Vec<T>,
    /// `a(x(y))` on the y-grid.
    pub a_of_y: Vec<T>,
    /// Transformed boundary coefficients.
    pub c_tilde: [T; 4],
}

pub fn liouville_transform<T: Real>(p: &SturmLiouvilleProblem<T>) -> Result<LiouvilleTransform<T>> {
    let xs = &p.a.grid;
    let a = &p.a.values;
    if let Some(k) = a.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::InvalidInput(format!("diffusion coefficient a is not positive at sample {k}")));
    }
    let (da, dda) = derivatives(xs, a);
    let sixteen = T::lit(16.0);
    let four = T::lit(4.0);
    // Q = b - (a^{1/4})_yy / a^{1/4} = b - a''/4 + a'^2/(16 a)
    let q_x: Vec<T> =
        xs.iter().enumerate().map(|(k, &x)| p.b.eval(x) - dda[k] / four + da[k] * da[k] / (sixteen * a[k])).collect();
    let inv_sqrt: Vec<T> = a.iter().map(|v| T::one() / v.sqrt()).collect();
    let y_of_x = cumulative_trapezoid(xs, &inv_sqrt);
    let m_len = y_of_x[y_of_x.len() - 1];
    let y = uniform_grid(T::zero(), m_len, p.grid_size + 1);
    let x_of_y: Vec<T> = y.iter().map(|&yy| interp(&y_of_x, xs, yy)).collect();
    let q: Vec<T> = x_of_y.iter().map(|&x| interp(xs, &q_x, x)).collect();
    let a_of_y: Vec<T> = x_of_y.iter().map(|&x| p.a.eval(x)).collect();

    let n = a.len();
    let quarter = T::lit(0.25);
    let tilde = |c_val: T, d_val: T, a0: T, da0: T| -> (T, T) {
        let c_t = c_val * a0.powf(-quarter) - d_val * da0 / (four * a0.powf(T::lit(1.25)));
        let d_t = d_val / a0.powf(T::lit(0.75));
        (c_t, d_t)
    };
    let (c1, c2) = tilde(p.c[0], p.c[1], a[0], da[0]);
    let (c3, c4) = tilde(p.c[2], p.c[3], a[n - 1], da[n - 1]);
    Ok(LiouvilleTransform { m_len, y, q, x_of_y, a_of_y, c_tilde: [c1, c2, c3, c4] })
}

/// Finite-volume discretization of `-(k u')' - V u` on a uniform grid with
/// Robin/Dirichlet ends, symmetrized by the quadrature weights.
struct FvProblem<T: Real> {
    h: T,
    /// Conductivity at the nodes; midpoints use the mean of neighbours.
    k_nodes: Vec<T>,
    potential: Vec<T>,
    /// `c u + d u' = 0` at the left and right ends.
    left: (T, T),
    right: (T, T),
}

struct FvModes<T: Real> {
    mu: Vec<T>,
    /// Node values of each mode, zeros at Dirichlet ends, unit trapezoid norm.
    vectors: Vec<Vec<T>>,
}

impl<T: Real> FvProblem<T> {
    fn solve(&self, count: usize) -> Result<FvModes<T>> {
        let g = self.k_nodes.len() - 1;
        let half = T::lit(0.5);
        let h = self.h;
        let left_dirichlet = self.left.1 == T::zero();
        let right_dirichlet = self.right.1 == T::zero();
        let first = usize::from(left_dirichlet);
        let last = if right_dirichlet { g - 1 } else { g };
        let km = |i: usize| (self.k_nodes[i] + self.k_nodes[i + 1]) * half;
        let mut diag = Vec::new();
        let mut off = Vec::new();
        let mut weights = Vec::new();
        for i in first..=last {
            let w = if i == 0 || i == g { h * half } else { h };
            let mut s = -self.potential[i] * w;
            if i > 0 {
                s = s + km(i - 1) / h;
            }
            if i < g {
                s = s + km(i) / h;
            }
            if i == 0 {
                // u'(0) = -(c/d) u(0)
                s = s - self.k_nodes[0] * self.left.0 / self.left.1;
            }
            if i == g {
                s = s + self.k_nodes[g] * self.right.0 / self.right.1;
            }
            diag.push(s);
            weights.push(w);
            if i < last {
                off.push(-km(i) / h);
            }
        }
        let dim = diag.len();
        if count > dim {
            return Err(Error::Eigensolver(format!("{count} modes requested from a grid with {dim} unknowns")));
        }
        let sq: Vec<T> = weights.iter().map(|w| w.sqrt()).collect();
        let d: Vec<T> = diag.iter().zip(&weights).map(|(s, w)| *s / *w).collect();
        let e: Vec<T> = off.iter().enumerate().map(|(k, s)| *s / (sq[k] * sq[k + 1])).collect();
        let tri = SymTridiagonal::new(d, e)?;
        let mu = tri.lowest_eigenvalues(count)?;
        let scale = mu.iter().map(|m| m.abs()).fold(T::one(), T::max);
        for w in mu.windows(2) {
            if (w[1] - w[0]).abs() < T::lit(1e-8) * scale {
                return Err(Error::Eigensolver(format!("near-degenerate eigenvalues {} and {}", w[0], w[1])));
            }
        }
        let mut vectors = Vec::with_capacity(count);
        for &m in &mu {
            let v = tri.eigenvector(m)?;
            let mut full = vec![T::zero(); g + 1];
            for (k, i) in (first..=last).enumerate() {
                full[i] = v[k] / sq[k];
            }
            // deterministic sign: first clearly nonzero node value positive
            let vmax = full.iter().map(|x| x.abs()).fold(T::zero(), T::max);
            if let Some(s) = full.iter().find(|x| x.abs() > T::lit(1e-3) * vmax) {
                if *s < T::zero() {
                    full.iter_mut().for_each(|x| *x = -*x);
                }
            }
            vectors.push(full);
        }
        Ok(FvModes { mu, vectors })
    }
}

/// Sturm–Liouville model with the computed modes.
#[derive(Debug, Clone)]
pub struct SturmLiouvilleModel<T: Real> {
    pub system: SpectralSystem<T>,
    pub transform: LiouvilleTransform<T>,
    /// Eigenvalues `lambda_n` (descending).
    pub eigenvalues: Vec<T>,
    /// Eigenfunctions `u_n` at the nodes `transform.x_of_y`, unit L2(0,L) norm.
    pub eigenfunctions: Vec<Vec<T>>,
}

/// Eigenvalues of `d_y^2 + Q` from the Liouville-transformed problem.
pub fn sturm_liouville_modes<T: Real>(t: &LiouvilleTransform<T>, count: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let g = t.y.len() - 1;
    let fv = FvProblem {
        h: t.m_len / T::idx(g),
        k_nodes: vec![T::one(); g + 1],
        potential: t.q.clone(),
        left: (t.c_tilde[0], t.c_tilde[1]),
        right: (t.c_tilde[2], t.c_tilde[3]),
    };
    let modes = fv.solve(count)?;
    Ok((modes.mu.iter().map(|m| -*m).collect(), modes.vectors))
}

/// Eigenvalues of `(a u')' + b u` discretized directly in x, without the
/// change of variables. Used to check that the transform preserves the
/// spectrum.
pub fn sturm_liouville_direct<T: Real>(p: &SturmLiouvilleProblem<T>, count: usize) -> Result<Vec<T>> {
    let g = p.grid_size;
    let xs = uniform_grid(T::zero(), p.length, g + 1);
    let fv = FvProblem {
        h: p.length / T::idx(g),
        k_nodes: xs.iter().map(|&x| p.a.eval(x)).collect(),
        potential: xs.iter().map(|&x| p.b.eval(x)).collect(),
        left: (p.c[0], p.c[1]),
        right: (p.c[2], p.c[3]),
    };
    Ok(fv.solve(count)?.mu.iter().map(|m| -*m).collect())
}

/// Single-branch model of the diffusion with one control profile `phi`:
/// `b_n = int_0^L phi u_n dx`.
pub fn sturm_liouville_model<T: Real>(
    p: &SturmLiouvilleProblem<T>,
    n: usize,
    phi: &SampledFunction<T>,
    gamma: T,
) -> Result<SturmLiouvilleModel<T>> {
    check_truncation(n)?;
    let t = liouville_transform(p)?;
    let (lam, phis) = sturm_liouville_modes(&t, n)?;
    let quarter = T::lit(0.25);
    let scale_back: Vec<T> = t.a_of_y.iter().map(|a| a.powf(-quarter)).collect();
    let phi_vals: Vec<T> = t.x_of_y.iter().map(|&x| phi.eval(x)).collect();
    let mut eigenfunctions = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for (k, v) in phis.iter().enumerate() {
        // trapezoid normalization in y is the L2(0,L) normalization of u
        let u: Vec<T> = v.iter().zip(&scale_back).map(|(w, s)| *w * *s).collect();
        let integrand: Vec<T> = u.iter().zip(&phi_vals).map(|(a, f)| *a * *f).collect();
        let bn = trapezoid(&t.x_of_y, &integrand);
        if bn.abs() <= T::lit(1e-12) {
            return Err(Error::ZeroControlCoefficient { branch: 1, n: k + 1 });
        }
        b.push(cre(bn));
        eigenfunctions.push(u);
    }
    let eig: Vec<Cx<T>> = lam.iter().map(|&l| cre(l)).collect();
    let system = SpectralSystem::new(
        format!("sturm_liouville(N={n}, G={})", p.grid_size),
        vec![SpectralBranch::new(1, eig, b, T::lit(2.0), T::zero(), gamma)?],
    )?;
    Ok(SturmLiouvilleModel { system, transform: t, eigenvalues: lam, eigenfunctions })
}

/// Bounded perturbation sequence for the cubic-spectrum model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    Zero,
    /// `1/n`
    Harmonic,
    /// `(-1)^n`
    Alternating,
}

impl Perturbation {
    pub fn value<T: Real>(self, n: usize) -> Cx<T> {
        match self {
            Perturbation::Zero => cre(T::zero()),
            Perturbation::Harmonic => cre(T::one() / T::idx(n)),
            Perturbation::Alternating => cre(if n.is_multiple_of(2) { T::one() } else { -T::one() }),
        }
    }
}

pub const GRIBOV_EPS_CAP: f64 = 0.1;

/// Cubic-spectrum model `lambda_n = -n^3 + eps * pert(n)`, `alpha = 3`.
///
/// The control coefficients are supplied with a declared growth
/// `c1 n^r <= |b_n| <= c2 n^{r+gamma}`, i.e. `beta = -r`.
pub fn gribov_model<T: Real>(
    n: usize,
    eps: Cx<T>,
    eps_cap: T,
    perturbation: impl Fn(usize) -> Cx<T>,
    control: Vec<Cx<T>>,
    r: T,
    gamma: T,
) -> Result<SpectralSystem<T>> {
    check_truncation(n)?;
    if eps.norm() > eps_cap {
        return Err(Error::OutOfRange {
            what: "|eps|",
            value: eps.norm().to_f64_lossy(),
            low: 0.0,
            high: eps_cap.to_f64_lossy(),
        });
    }
    check_coeffs(1, n, &control)?;
    let mut eig = Vec::with_capacity(n);
    for k in 1..=n {
        let p = perturbation(k);
        if !(p.norm() <= T::one()) {
            return Err(Error::InvalidInput(format!("perturbation at n = {k} exceeds 1 in modulus")));
        }
        eig.push(cre(-T::idx(k).powi(3)) + eps * p);
    }
    SpectralSystem::new(
        format!("gribov(N={n}, eps={}{:+}i)", eps.re, eps.im),
        vec![SpectralBranch::new(1, eig, control, T::lit(3.0), -r, gamma)?],
    )
}

// ----- descriptors ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HeatTorus,
    SchrodingerGround,
    SturmLiouville,
    Gribov,
}

/// A model together with its parameters, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// A coefficient sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffSpec {
    /// Every entry equal to this real value.
    Constant(f64),
    /// `scale * n^exponent`.
    Power { scale: f64, exponent: f64 },
    /// Explicit `[re, im]` pairs.
    Values(Vec<[f64; 2]>),
}

impl Default for CoeffSpec {
    fn default() -> Self {
        CoeffSpec::Constant(1.0)
    }
}

impl CoeffSpec {
    pub fn build<T: Real>(&self, n: usize) -> Result<Vec<Cx<T>>> {
        match self {
            CoeffSpec::Constant(c) => Ok(vec![cre(T::lit(*c)); n]),
            CoeffSpec::Power { scale, exponent } => {
                Ok((1..=n).map(|k| cre(T::lit(*scale) * powi_idx(k, T::lit(*exponent)))).collect())
            }
            CoeffSpec::Values(v) => {
                if v.len() < n {
                    return Err(Error::Dimension(format!("{} coefficients supplied for N = {n}", v.len())));
                }
                Ok(v[..n].iter().map(|&[re, im]| cx(T::lit(re), T::lit(im))).collect())
            }
        }
    }
}

/// A real function on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Sampled(SampledDoc),
    Polynomial {
        /// Coefficients in increasing degree.
        polynomial: Vec<f64>,
    },
}

impl FunctionSpec {
    pub fn build<T: Real>(&self, start: T, end: T, points: usize) -> Result<SampledFunction<T>> {
        match self {
            FunctionSpec::Sampled(doc) => SampledFunction::from_doc(doc),
            FunctionSpec::Polynomial { polynomial } => {
                let c: Vec<T> = polynomial.iter().map(|&v| T::lit(v)).collect();
                SampledFunction::from_fn(start, end, points, |x| {
                    c.iter().rev().fold(T::zero(), |acc, &ck| acc * x + ck)
                })
            }
        }
    }
}

fn one_coeffs() -> CoeffSpec {
    CoeffSpec::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatParams {
    #[serde(default)]
    pub m: f64,
    #[serde(default = "one_coeffs")]
    pub phi1: CoeffSpec,
    #[serde(default = "one_coeffs")]
    pub phi2: CoeffSpec,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn default_mu() -> FunctionSpec {
    FunctionSpec::Polynomial { polynomial: vec![0.0, 0.0, 1.0] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerParams {
    #[serde(default = "default_mu")]
    pub mu: FunctionSpec,
}

fn default_grid() -> usize {
    2000
}

fn default_one() -> FunctionSpec {
    FunctionSpec::Polynomial { polynomial: vec![1.0] }
}

fn default_zero() -> FunctionSpec {
    FunctionSpec::Polynomial { polynomial: vec![0.0] }
}

fn default_dirichlet() -> [f64; 4] {
    [1.0, 0.0, 1.0, 0.0]
}

fn default_length() -> f64 {
    1.0
}

fn default_phi() -> FunctionSpec {
    FunctionSpec::Polynomial { polynomial: vec![1.0, 0.5] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SturmLiouvilleParams {
    #[serde(default = "default_one")]
    pub a: FunctionSpec,
    #[serde(default = "default_zero")]
    pub b: FunctionSpec,
    #[serde(rename = "L", default = "default_length")]
    pub length: f64,
    #[serde(default = "default_dirichlet")]
    pub c: [f64; 4],
    #[serde(rename = "G", default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_phi")]
    pub phi: FunctionSpec,
    #[serde(default)]
    pub gamma: f64,
}

fn default_cap() -> f64 {
    GRIBOV_EPS_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GribovParams {
    #[serde(default)]
    pub eps: [f64; 2],
    #[serde(default = "default_cap")]
    pub eps_cap: f64,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default = "one_coeffs")]
    pub control: CoeffSpec,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn parse_params<P: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<P> {
    let v = if v.is_null() { serde_json::Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| Error::Schema(format!("model params: {e}")))
}

impl ModelDescriptor {
    pub fn build<T: Real>(&self) -> Result<SpectralSystem<T>> {
        let n = self.n;
        match self.kind {
            ModelKind::HeatTorus => {
                let p: HeatParams = parse_params(&self.params)?;
                heat_torus_model(n, T::lit(p.m), p.phi1.build(n)?, p.phi2.build(n)?, T::lit(p.beta), T::lit(p.gamma))
            }
            ModelKind::SchrodingerGround => {
                let p: SchrodingerParams = parse_params(&self.params)?;
                let mu = p.mu.build(T::zero(), T::one(), SCHRODINGER_QUAD_POINTS)?;
                Ok(schrodinger_model(n, &mu)?.system)
            }
            ModelKind::SturmLiouville => {
                let p: SturmLiouvilleParams = parse_params(&self.params)?;
                let l = T::lit(p.length);
                let pts = p.grid_size + 1;
                let prob = SturmLiouvilleProblem::new(
                    p.a.build(T::zero(), l, pts)?,
                    p.b.build(T::zero(), l, pts)?,
                    l,
                    [T::lit(p.c[0]), T::lit(p.c[1]), T::lit(p.c[2]), T::lit(p.c[3])],
                    p.grid_size,
                )?;
                let phi = p.phi.build(T::zero(), l, pts)?;
                Ok(sturm_liouville_model(&prob, n, &phi, T::lit(p.gamma))?.system)
            }
            ModelKind::Gribov => {
                let p: GribovParams = parse_params(&self.params)?;
                let pert = p.perturbation;
                gribov_model(
                    n,
                    cx(T::lit(p.eps[0]), T::lit(p.eps[1])),
                    T::lit(p.eps_cap),
                    |k| pert.value(k),
                    p.control.build(n)?,
                    T::lit(p.r),
                    T::lit(p.gamma),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn heat_examples() {
        let sys = heat_torus_unit::<f64>(4).unwrap();
        let re = |b: usize| sys.branches[b].eigenvalues.iter().map(|z| z.re).collect::<Vec<_>>();
        assert_eq!(re(0), vec![-1.0, -4.0, -9.0, -16.0]);
        assert_eq!(re(1), vec![0.0, -1.0, -4.0, -9.0]);
        let mut b = vec![cre(1.0); 4];
        b[1] = cre(0.0);
        let err = heat_torus_model(4, 0.0, b, vec![cre(1.0); 4], 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::ZeroControlCoefficient { branch: 1, n: 2 }));
        assert!(heat_torus_unit::<f64>(3).is_err());
    }

    fn x2_projection(n: usize) -> f64 {
        let i = |k: usize| {
            if k == 0 {
                1.0 / 3.0
            } else {
                2.0 * if k.is_multiple_of(2) { 1.0 } else { -1.0 } / ((k * k) as f64 * PI * PI)
            }
        };
        i(n - 1) - i(n + 1)
    }

    #[test]
    fn schrodinger_projections_match_closed_form() {
        let mu = SampledFunction::from_fn(0.0, 1.0, SCHRODINGER_QUAD_POINTS, |x| x * x).unwrap();
        let m = schrodinger_model(64, &mu).unwrap();
        for (k, p) in m.projections.iter().enumerate() {
            assert!((p - x2_projection(k + 1)).abs() < 1e-9, "n = {}", k + 1);
        }
        assert!(m.cubic_lower_bound_ok && m.relaxed_lower_bound_ok);
        let l3 = m.system.branches[0].eigenvalues[2];
        assert_eq!(l3.re, 0.0);
        assert!((l3.im + PI * PI * 8.0).abs() < 1e-12);

        let zero = SampledFunction::from_fn(0.0, 1.0, 1025, |_| 0.0).unwrap();
        assert!(matches!(schrodinger_model(8, &zero), Err(Error::ZeroControlCoefficient { .. })));
    }

    #[test]
    fn liouville_closed_forms() {
        let id = SturmLiouvilleProblem::<f64>::constant(1.0, 0.0, 1.0, [1.0, 0.5, 2.0, 1.0], 400).unwrap();
        let t = liouville_transform(&id).unwrap();
        assert!((t.m_len - 1.0).abs() < 1e-14);
        assert!(t.q.iter().all(|q| q.abs() < 1e-9));
        for (got, want) in t.c_tilde.iter().zip([1.0, 0.5, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-10);
        }

        let four = SturmLiouvilleProblem::<f64>::constant(4.0, 0.0, 2.0, [1.0, 0.0, 1.0, 0.0], 400).unwrap();
        let t = liouville_transform(&four).unwrap();
        assert!((t.m_len - 1.0).abs() < 1e-14);
        assert!(t.q.iter().all(|q| q.abs() < 1e-9));

        let g = 2000;
        let a = SampledFunction::from_fn(0.0, 1.0, g + 1, |x| (1.0 + x) * (1.0 + x)).unwrap();
        let b = SampledFunction::from_fn(0.0, 1.0, g + 1, |_| 0.0).unwrap();
        let p = SturmLiouvilleProblem::new(a, b, 1.0, [1.0, 0.0, 1.0, 0.0], g).unwrap();
        let t = liouville_transform(&p).unwrap();
        assert!((t.m_len - 2f64.ln()).abs() < 1e-7);
        assert!(t.q.iter().all(|q| (q + 0.25).abs() < 1e-6));
    }

    #[test]
    fn dirichlet_and_neumann_laplacian() {
        let d = SturmLiouvilleProblem::<f64>::constant(1.0, 0.0, 1.0, [1.0, 0.0, 1.0, 0.0], 2000).unwrap();
        let t = liouville_transform(&d).unwrap();
        let (lam, _) = sturm_liouville_modes(&t, 10).unwrap();
        for (k, l) in lam.iter().enumerate() {
            let exact = -((k + 1) as f64 * PI).powi(2);
            assert!(((l - exact) / exact).abs() < 1e-3);
        }
        let nm = SturmLiouvilleProblem::<f64>::constant(1.0, 0.0, 1.0, [0.0, 1.0, 0.0, 1.0], 2000).unwrap();
        let t = liouville_transform(&nm).unwrap();
        let (lam, _) = sturm_liouville_modes(&t, 6).unwrap();
        assert!(lam[0].abs() < 1e-9);
        for (k, l) in lam.iter().enumerate().skip(1) {
            let exact = -(k as f64 * PI).powi(2);
            assert!(((l - exact) / exact).abs() < 1e-3);
        }
    }

    #[test]
    fn gribov_examples() {
        let sys = gribov_model(6, cre(0.0), 0.1, |_| cre(0.0), vec![cre(1.0); 6], 0.0, 0.0).unwrap();
        let re: Vec<f64> = sys.branches[0].eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![-1.0, -8.0, -27.0, -64.0, -125.0, -216.0]);
        assert!(gribov_model(6, cre(0.2), 0.1, |_| cre(0.0), vec![cre(1.0); 6], 0.0, 0.0).is_err());
    }

    #[test]
    fn descriptor_parses_and_rejects_unknown_keys() {
        let d: ModelDescriptor = serde_json::from_str(
            r#"{"kind":"heat_torus","N":8,"params":{"phi1":{"power":{"scale":1.0,"exponent":0.2}}}}"#,
        )
        .unwrap();
        let sys = d.build::<f64>().unwrap();
        assert_eq!(sys.m(), 2);
        let bad: ModelDescriptor = serde_json::from_str(r#"{"kind":"heat_torus","N":8,"params":{"bogus":1}}"#).unwrap();
        assert!(matches!(bad.build::<f64>(), Err(Error::Schema(_))));
        assert!(serde_json::from_str::<ModelDescriptor>(r#"{"kind":"heat_torus","N":8,"x":1}"#).is_err());
    }
}
