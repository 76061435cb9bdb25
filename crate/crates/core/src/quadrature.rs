//! Sampled real functions and the quadrature rules used by the model generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A real function known on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T: Real> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
}

/// Serialized form `{grid: [...], values: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledDoc {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "sampled function needs matching grid/values of length >= 2 (got {} and {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("sample grid must be strictly increasing".into()));
        }
        if values.iter().chain(grid.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sampled function contains non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on `points` equispaced nodes of `[a, b]`.
    pub fn from_fn(a: T, b: T, points: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let grid = uniform_grid(a, b, points.max(2));
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn from_doc(doc: &SampledDoc) -> Result<Self> {
        Self::new(doc.grid.iter().map(|&x| T::lit(x)).collect(), doc.values.iter().map(|&x| T::lit(x)).collect())
    }

    pub fn to_doc(&self) -> SampledDoc {
        SampledDoc {
            grid: self.grid.iter().map(|x| x.to_f64_lossy()).collect(),
            values: self.values.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn start(&self) -> T {
        self.grid[0]
    }

    pub fn end(&self) -> T {
        self.grid[self.grid.len() - 1]
    }

    /// Piecewise-linear interpolation, clamped outside the grid.
    pub fn eval(&self, x: T) -> T {
        interp(&self.grid, &self.values, x)
    }

    /// True when the grid is equispaced to rounding.
    pub fn is_uniform(&self) -> bool {
        let h = (self.end() - self.start()) / T::idx(self.len() - 1);
        let tol = T::lit(1e-9) * h.abs();
        self.grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.abs()).fold(T::zero(), T::max)
    }
}

pub fn uniform_grid<T: Real>(a: T, b: T, points: usize) -> Vec<T> {
    let h = (b - a) / T::idx(points - 1);
    (0..points).map(|k| if k + 1 == points { b } else { a + h * T::idx(k) }).collect()
}

/// Linear interpolation on an increasing grid (clamped).
pub fn interp<T: Real>(grid: &[T], values: &[T], x: T) -> T {
    let n = grid.len();
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let k = grid.partition_point(|&g| g <= x).clamp(1, n - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let t = (x - x0) / (x1 - x0);
    values[k - 1] + (values[k] - values[k - 1]) * t
}

/// Composite Simpson on equispaced samples with spacing `h`. An even number
/// of intervals is required for pure Simpson; otherwise the last interval
/// falls back to the trapezoid rule.
pub fn simpson<T: Real>(h: T, y: &[T]) -> T {
    let n = y.len();
    if n < 2 {
        return T::zero();
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = T::zero();
    if even >= 2 {
        let mut acc = y[0] + y[even];
        for (k, &v) in y.iter().enumerate().take(even).skip(1) {
            acc = acc + v * if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        }
        s = acc * h / T::lit(3.0);
    }
    if even < intervals {
        s = s + (y[n - 2] + y[n - 1]) * h / T::lit(2.0);
    }
    s
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| (xw[1] - xw[0]) * (yw[0] + yw[1]) / T::lit(2.0)).sum()
}

/// Running trapezoid integral, starting at 0.
pub fn cumulative_trapezoid<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = T::zero();
    out.push(acc);
    for k in 1..x.len() {
        acc = acc + (x[k] - x[k - 1]) * (y[k] + y[k - 1]) / T::lit(2.0);
        out.push(acc);
    }
    out
}

/// First and second derivatives by three-point formulas on a (possibly
/// non-uniform) grid; one-sided second-order stencils at the ends.
pub fn derivatives<T: Real>(x: &[T], y: &[T]) -> (Vec<T>, Vec<T>) {
    let n = x.len();
    let mut d1 = vec![T::zero(); n];
    let mut d2 = vec![T::zero(); n];
    if n < 3 {
        if n == 2 {
            let s = (y[1] - y[0]) / (x[1] - x[0]);
            d1 = vec![s, s];
        }
        return (d1, d2);
    }
    let two = T::lit(2.0);
    let stencil = |i0: usize, at: T| -> (T, T) {
        let (xa, xb, xc) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let (ya, yb, yc) = (y[i0], y[i0 + 1], y[i0 + 2]);
        // derivative of the interpolating parabola at `at`
        let la = ((at - xb) + (at - xc)) / ((xa - xb) * (xa - xc));
        let lb = ((at - xa) + (at - xc)) / ((xb - xa) * (xb - xc));
        let lc = ((at - xa) + (at - xb)) / ((xc - xa) * (xc - xb));
        let first = ya * la + yb * lb + yc * lc;
        let second = two * (ya / ((xa - xb) * (xa - xc)) + yb / ((xb - xa) * (xb - xc)) + yc / ((xc - xa) * (xc - xb)));
        (first, second)
    };
    for i in 0..n {
        let i0 = i.saturating_sub(1).min(n - 3);
        let (a, b) = stencil(i0, x[i]);
        d1[i] = a;
        d2[i] = b;
    }
    // the end second derivatives from a 3-point stencil are first order; use
    // a 4-point one-sided formula when the grid is long enough
    if n >= 4 {
        d2[0] = extrapolate_end(&d2[1..4], &x[1..4], x[0]);
        d2[n - 1] = extrapolate_end(&d2[n - 4..n - 1], &x[n - 4..n - 1], x[n - 1]);
    }
    (d1, d2)
}

fn extrapolate_end<T: Real>(v: &[T], xs: &[T], at: T) -> T {
    // quadratic extrapolation through three neighbouring values
    let (x0, x1, x2) = (xs[0], xs[1], xs[2]);
    let l0 = (at - x1) * (at - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (at - x0) * (at - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (at - x0) * (at - x1) / ((x2 - x0) * (x2 - x1));
    v[0] * l0 + v[1] * l1 + v[2] * l2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let x = uniform_grid(0.0f64, 2.0, 11);
        let y: Vec<f64> = x.iter().map(|t| t * t * t - t).collect();
        assert!((simpson(0.2, &y) - (4.0 - 2.0)).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_and_cumulative_agree() {
        let x = vec![0.0f64, 0.1, 0.35, 1.0];
        let y = vec![1.0, 2.0, 0.5, 3.0];
        let c = cumulative_trapezoid(&x, &y);
        assert!((c[3] - trapezoid(&x, &y)).abs() < 1e-15);
    }

    #[test]
    fn derivatives_of_quadratic_are_exact() {
        let x = uniform_grid(0.0f64, 1.0, 21);
        let y: Vec<f64> = x.iter().map(|t| (1.0 + t) * (1.0 + t)).collect();
        let (d1, d2) = derivatives(&x, &y);
        for (k, t) in x.iter().enumerate() {
            assert!((d1[k] - 2.0 * (1.0 + t)).abs() < 1e-10);
            assert!((d2[k] - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn interpolation_clamps_and_hits_nodes() {
        let f = SampledFunction::new(vec![0.0f64, 1.0, 3.0], vec![0.0, 2.0, 6.0]).unwrap();
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(2.0), 4.0);
        assert_eq!(f.eval(5.0), 6.0);
        assert!(SampledFunction::new(vec![0.0f64, 0.0], vec![1.0, 1.0]).is_err());
    }
}
