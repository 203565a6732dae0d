//! Quasi-Newton minimisation.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Stop when the largest absolute gradient component falls below this.
    pub gtol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-5,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f`, which returns the value and gradient at a point.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g) = f(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut first = true;

    for iter in 0..opts.max_iter {
        if g.amax() < opts.gtol {
            return BfgsResult {
                x: x.as_slice().to_vec(),
                value: fx,
                grad: g.as_slice().to_vec(),
                iterations: iter,
                converged: true,
            };
        }
        let mut dir = -(&hinv * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            hinv = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        // keep the very first step short; the gradient scale is arbitrary
        let mut t = if first { (1.0 / g.norm()).min(1.0) } else { 1.0 };
        let (x_new, f_new, g_new) = loop {
            let cand = &x + t * &dir;
            let (fc, gc) = f(cand.as_slice());
            let gc = DVector::from_vec(gc);
            if fc.is_finite() && fc <= fx + 1e-4 * t * slope {
                break (cand, fc, gc);
            }
            // near the optimum the decrease drowns in rounding of f; accept
            // when f is flat to working precision and the slope shrank
            let noise = 1e-12 * fx.abs().max(1.0);
            if fc.is_finite() && fc <= fx + noise && gc.dot(&dir).abs() <= 0.9 * slope.abs() {
                break (cand, fc, gc);
            }
            t *= 0.5;
            if t < 1e-16 {
                return BfgsResult {
                    x: x.as_slice().to_vec(),
                    value: fx,
                    grad: g.as_slice().to_vec(),
                    iterations: iter,
                    converged: g.amax() < opts.gtol,
                };
            }
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                hinv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            hinv += (rho * rho * yhy + rho) * &s * s.transpose()
                - rho * (&hy * s.transpose() + &s * hy.transpose());
            first = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    BfgsResult {
        converged: g.amax() < opts.gtol,
        x: x.as_slice().to_vec(),
        value: fx,
        grad: g.as_slice().to_vec(),
        iterations: opts.max_iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (v, g)
        };
        let r = bfgs(f, &[-1.2, 1.0], BfgsOptions { gtol: 1e-8, max_iter: 1000 });
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic() {
        let f = |x: &[f64]| {
            let v = 3.0 * (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2) + x[0] * x[1];
            (v, vec![6.0 * (x[0] - 2.0) + x[1], 2.0 * (x[1] + 1.0) + x[0]])
        };
        let r = bfgs(f, &[0.0, 0.0], BfgsOptions::default());
        assert!(r.converged);
        assert!(r.iterations < 20);
    }

    #[test]
    fn tight_tolerance_with_large_offset() {
        let f = |x: &[f64]| {
            let v = -2.0e4 + 5.0e3 * ((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2)) + 10.0 * x[0] * x[1];
            (v, vec![1.0e4 * (x[0] - 1.0) + 10.0 * x[1], 3.0e4 * (x[1] + 0.5) + 10.0 * x[0]])
        };
        let r = bfgs(f, &[0.0, 0.0], BfgsOptions { gtol: 1e-7, max_iter: 200 });
        assert!(r.converged, "{r:?}");
    }
}
