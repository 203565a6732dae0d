//! Gaussian mixtures driven by a hidden MRF, fitted by EM with an ICM-based
//! E-step and optional spatial fixed effects.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{DiscreteField, RealField};
use crate::interactions::InteractionStructure;
use crate::kernel::LocalFieldEngine;
use crate::potentials::PotentialArray;

/// Spatial covariates evaluated on every lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    dims: (usize, usize),
    names: Vec<String>,
    /// One row-major grid per function.
    columns: Vec<Vec<f64>>,
}

impl BasisSet {
    pub fn empty(dims: (usize, usize)) -> Self {
        Self {
            dims,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    fn push(&mut self, name: String, col: Vec<f64>) {
        let first = col[0];
        let degenerate = col.iter().all(|v| v.abs() < 1e-12) || col.iter().all(|v| (v - first).abs() < 1e-12);
        if !degenerate {
            self.names.push(name);
            self.columns.push(col);
        }
    }
}

/// Coordinates of 1-based index `i` on `n` cells, centered and scaled to [-1, 1].
fn scaled_coord(i: usize, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let c = (n as f64 + 1.0) / 2.0;
    (i as f64 - c) / ((n as f64 - 1.0) / 2.0)
}

/// Products `u1^a * u2^b` for `0 <= a <= d1`, `0 <= b <= d2`, `(a, b) != (0, 0)`.
pub fn polynomial_basis(max_degrees: (usize, usize), dims: (usize, usize)) -> Result<BasisSet> {
    let (h, w) = dims;
    let mut basis = BasisSet::empty(dims);
    for a in 0..=max_degrees.0 {
        for b in 0..=max_degrees.1 {
            if a == 0 && b == 0 {
                continue;
            }
            let mut col = Vec::with_capacity(h * w);
            for r in 0..h {
                let u1 = scaled_coord(r + 1, h).powi(a as i32);
                for c in 0..w {
                    col.push(u1 * scaled_coord(c + 1, w).powi(b as i32));
                }
            }
            basis.push(format!("poly({a},{b})"), col);
        }
    }
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(basis)
}

/// `sin` and `cos` of `2 pi (q1 i1 / N + q2 i2 / M)` for `q <= k`, `q != 0`.
pub fn fourier_basis(max_freqs: (usize, usize), dims: (usize, usize)) -> Result<BasisSet> {
    let (h, w) = dims;
    let mut basis = BasisSet::empty(dims);
    for q1 in 0..=max_freqs.0 {
        for q2 in 0..=max_freqs.1 {
            if q1 == 0 && q2 == 0 {
                continue;
            }
            let angle = |r: usize, c: usize| {
                2.0 * PI * (q1 as f64 * (r + 1) as f64 / h as f64 + q2 as f64 * (c + 1) as f64 / w as f64)
            };
            let grid = |f: fn(f64) -> f64| -> Vec<f64> {
                (0..h).flat_map(|r| (0..w).map(move |c| f(angle(r, c)))).collect()
            };
            basis.push(format!("sin({q1},{q2})"), grid(f64::sin));
            basis.push(format!("cos({q1},{q2})"), grid(f64::cos));
        }
    }
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(basis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Fixed-effect coefficients, one per basis function.
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HmrfFit {
    pub params: MixtureParams,
    /// ICM configuration of the latent field.
    pub z_pred: DiscreteField,
    /// `x_i' beta` per pixel.
    pub fixed: RealField,
    /// `x_i' beta + mu[z_pred_i]` per pixel.
    pub predicted: RealField,
    pub iterations: usize,
    pub converged: bool,
    pub n_basis: usize,
    pub component_counts: Vec<usize>,
    pub structure: InteractionStructure,
}

#[derive(Debug, Clone)]
pub struct GhmSettings {
    pub equal_vars: bool,
    /// Starting `mu` and `sigma`; quantile-based when absent.
    pub init: Option<(Vec<f64>, Vec<f64>)>,
    pub maxiter: usize,
    pub max_dist: f64,
    pub icm_cycles: usize,
}

impl Default for GhmSettings {
    fn default() -> Self {
        Self {
            equal_vars: false,
            init: None,
            maxiter: 100,
            max_dist: 1e-3,
            icm_cycles: 6,
        }
    }
}

#[inline]
fn log_normal(y: f64, m: f64, s: f64) -> f64 {
    let d = (y - m) / s;
    -0.5 * (2.0 * PI).ln() - s.ln() - 0.5 * d * d
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

/// Type-7 empirical quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantile starting values before any refinement: `mu_k` at level
/// `(2k+1)/(2(C+1))` and `sigma_k = sd(y)/(C+1)`.
pub fn quantile_start(y: &RealField, colors: usize) -> Result<MixtureParams> {
    let mut v: Vec<f64> = y.active_values().collect();
    if v.is_empty() {
        return Err(Error::NoActivePixel);
    }
    v.sort_by(f64::total_cmp);
    if v[0] == v[v.len() - 1] {
        return Err(Error::ConstantField);
    }
    let k = colors + 1;
    let sd = sample_sd(&v);
    Ok(MixtureParams {
        mu: (0..k).map(|j| quantile(&v, (2 * j + 1) as f64 / (2 * k) as f64)).collect(),
        sigma: vec![sd / k as f64; k],
        beta: Vec::new(),
    })
}

/// Quantile start refined by an independent Gaussian mixture EM.
pub fn init_from_quantiles(y: &RealField, colors: usize) -> Result<MixtureParams> {
    let start = quantile_start(y, colors)?;
    let values: Vec<f64> = y.active_values().collect();
    let mut distinct = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= colors {
        return Err(Error::InvalidArgument(format!(
            "{} distinct values cannot seed {} components",
            distinct.len(),
            colors + 1
        )));
    }
    let floor = 1e-6 * sample_sd(&values);
    let (mut mu, mut sigma) = (start.mu, start.sigma);
    let mut w = vec![0.0; colors + 1];
    for _ in 0..100 {
        let k = colors + 1;
        let mut sw = vec![0.0; k];
        let mut swy = vec![0.0; k];
        let mut swyy = vec![0.0; k];
        for &yi in &values {
            for j in 0..k {
                w[j] = log_normal(yi, mu[j], sigma[j]);
            }
            normalize_log(&mut w);
            for j in 0..k {
                sw[j] += w[j];
                swy[j] += w[j] * yi;
            }
        }
        let new_mu: Vec<f64> = (0..k).map(|j| if sw[j] > 0.0 { swy[j] / sw[j] } else { mu[j] }).collect();
        for &yi in &values {
            for j in 0..k {
                w[j] = log_normal(yi, mu[j], sigma[j]);
            }
            normalize_log(&mut w);
            for j in 0..k {
                swyy[j] += w[j] * (yi - new_mu[j]).powi(2);
            }
        }
        let new_sigma: Vec<f64> = (0..k)
            .map(|j| if sw[j] > 0.0 { (swyy[j] / sw[j]).sqrt().max(floor) } else { sigma[j] })
            .collect();
        let done = max_delta(&mu, &new_mu).max(max_delta(&sigma, &new_sigma)) < 1e-3;
        mu = new_mu;
        sigma = new_sigma;
        if done {
            break;
        }
    }
    let mut order: Vec<usize> = (0..=colors).collect();
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]));
    Ok(MixtureParams {
        mu: order.iter().map(|&j| mu[j]).collect(),
        sigma: order.iter().map(|&j| sigma[j]).collect(),
        beta: Vec::new(),
    })
}

fn max_delta(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// In-place softmax of log-weights.
fn normalize_log(w: &mut [f64]) {
    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in w.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    w.iter_mut().for_each(|v| *v /= total);
}

struct Workspace<'a> {
    y: &'a RealField,
    engine: LocalFieldEngine,
    dense: bool,
    active: Vec<usize>,
    /// Design columns restricted to active pixels, mean-centered.
    design: Option<DMatrix<f64>>,
    k: usize,
}

impl Workspace<'_> {
    fn offsets(&self, beta: &[f64]) -> Vec<f64> {
        match &self.design {
            Some(x) => (x * DVector::from_column_slice(beta)).as_slice().to_vec(),
            None => vec![0.0; self.active.len()],
        }
    }

    /// Raster-order ICM on `z`; lowest label wins ties.
    fn icm(&self, z: &mut DiscreteField, params: &MixtureParams, offsets: &[f64], cycles: usize) {
        let dims = z.dims();
        let mut h = vec![0.0; self.k];
        for _ in 0..cycles {
            for (n, &i) in self.active.iter().enumerate() {
                let (row, col) = (i / dims.1, i % dims.1);
                self.engine.local_field(z.labels(), z.mask(), dims, self.dense, row, col, &mut h);
                let yi = self.y.values()[i] - offsets[n];
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (j, hj) in h.iter().enumerate() {
                    let s = hj + log_normal(yi, params.mu[j], params.sigma[j]);
                    if s > best_score {
                        best_score = s;
                        best = j;
                    }
                }
                z.labels_mut()[i] = best as u16;
            }
        }
    }

    /// Posterior weights `w_i(k)`, row-major over active pixels.
    fn weights(&self, z: &DiscreteField, params: &MixtureParams, offsets: &[f64]) -> Vec<f64> {
        let dims = z.dims();
        let mut out = vec![0.0; self.active.len() * self.k];
        let mut h = vec![0.0; self.k];
        for (n, &i) in self.active.iter().enumerate() {
            let (row, col) = (i / dims.1, i % dims.1);
            self.engine.local_field(z.labels(), z.mask(), dims, self.dense, row, col, &mut h);
            let yi = self.y.values()[i] - offsets[n];
            let w = &mut out[n * self.k..(n + 1) * self.k];
            for j in 0..self.k {
                w[j] = h[j] + log_normal(yi, params.mu[j], params.sigma[j]);
            }
            normalize_log(w);
        }
        out
    }
}

/// EM for a Gaussian mixture whose labels follow the MRF `theta`, held fixed.
pub fn fit_ghm(y: &RealField, theta: &PotentialArray, basis: Option<&BasisSet>, settings: &GhmSettings) -> Result<HmrfFit> {
    let n = y.n_active();
    if n == 0 {
        return Err(Error::NoActivePixel);
    }
    let k = theta.colors() + 1;
    let dims = y.dims();
    let active: Vec<usize> = (0..dims.0 * dims.1).filter(|&i| y.mask()[i]).collect();
    let values: Vec<f64> = active.iter().map(|&i| y.values()[i]).collect();
    let sd = sample_sd(&values);
    if sd == 0.0 {
        return Err(Error::ConstantField);
    }
    let floor = 1e-6 * sd;

    let design = match basis {
        Some(b) if !b.is_empty() => {
            if b.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: b.dims(),
                });
            }
            let mut x = DMatrix::from_fn(n, b.len(), |r, c| b.column(c)[active[r]]);
            for mut col in x.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
            Some(x)
        }
        _ => None,
    };
    let p = design.as_ref().map_or(0, |x| x.ncols());

    let mut params = match &settings.init {
        Some((mu, sigma)) => {
            if mu.len() != k || sigma.len() != k {
                return Err(Error::ParameterLength {
                    expected: k,
                    found: mu.len().min(sigma.len()),
                });
            }
            if sigma.iter().any(|s| s.is_nan() || *s <= 0.0) {
                return Err(Error::InvalidArgument("initial sigmas must be positive".into()));
            }
            MixtureParams {
                mu: mu.clone(),
                sigma: sigma.clone(),
                beta: vec![0.0; p],
            }
        }
        None => {
            let mut m = init_from_quantiles(y, theta.colors())?;
            m.beta = vec![0.0; p];
            m
        }
    };
    if settings.equal_vars {
        let s = params.sigma.iter().sum::<f64>() / k as f64;
        params.sigma = vec![s; k];
    }

    let ws = Workspace {
        y,
        engine: LocalFieldEngine::new(theta),
        dense: !y.mask().contains(&false),
        active,
        design,
        k,
    };

    let mut z = DiscreteField::new(dims.0, dims.1, theta.colors(), vec![0; dims.0 * dims.1], Some(y.mask().to_vec()))?;
    // start from the pixelwise most likely labels
    for (n, &i) in ws.active.iter().enumerate() {
        let best = (0..k)
            .map(|j| log_normal(values[n], params.mu[j], params.sigma[j]))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (j, s)| if s > b.1 { (j, s) } else { b });
        z.labels_mut()[i] = best.0 as u16;
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.maxiter {
        iterations += 1;
        let offsets = ws.offsets(&params.beta);
        ws.icm(&mut z, &params, &offsets, settings.icm_cycles);
        let w = ws.weights(&z, &params, &offsets);

        let mut sw = vec![0.0; k];
        for row in w.chunks(k) {
            sw.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        if let Some(j) = sw.iter().position(|&s| s < 1e-8) {
            return Err(Error::EmptyComponent(j));
        }

        let beta = match &ws.design {
            Some(x) => {
                let mut a = DVector::zeros(n);
                let mut b = DVector::zeros(n);
                for (i, row) in w.chunks(k).enumerate() {
                    for (j, wj) in row.iter().enumerate() {
                        let s2 = params.sigma[j] * params.sigma[j];
                        a[i] += wj / s2;
                        b[i] += wj * (values[i] - params.mu[j]) / s2;
                    }
                }
                solve_weighted(x, &a, &b)?
            }
            None => Vec::new(),
        };
        let offsets = ws.offsets(&beta);
        let mut mu = vec![0.0; k];
        for (i, row) in w.chunks(k).enumerate() {
            for j in 0..k {
                mu[j] += row[j] * (values[i] - offsets[i]);
            }
        }
        mu.iter_mut().zip(&sw).for_each(|(m, s)| *m /= s);
        let mut ss = vec![0.0; k];
        for (i, row) in w.chunks(k).enumerate() {
            for j in 0..k {
                ss[j] += row[j] * (values[i] - offsets[i] - mu[j]).powi(2);
            }
        }
        let sigma: Vec<f64> = if settings.equal_vars {
            let pooled = (ss.iter().sum::<f64>() / sw.iter().sum::<f64>()).sqrt().max(floor);
            vec![pooled; k]
        } else {
            ss.iter().zip(&sw).map(|(s, t)| (s / t).sqrt().max(floor)).collect()
        };

        let delta = max_delta(&mu, &params.mu).max(max_delta(&sigma, &params.sigma));
        params = MixtureParams { mu, sigma, beta };
        if delta < settings.max_dist {
            converged = true;
            break;
        }
    }

    let offsets = ws.offsets(&params.beta);
    ws.icm(&mut z, &params, &offsets, settings.icm_cycles);

    if theta.family().is_label_symmetric() {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| params.mu[a].total_cmp(&params.mu[b]));
        let mut rank = vec![0u16; k];
        for (r, &j) in order.iter().enumerate() {
            rank[j] = r as u16;
        }
        for &i in &ws.active {
            let l = z.labels()[i] as usize;
            z.labels_mut()[i] = rank[l];
        }
        params.mu = order.iter().map(|&j| params.mu[j]).collect();
        params.sigma = order.iter().map(|&j| params.sigma[j]).collect();
    }

    let mut fixed = vec![0.0; dims.0 * dims.1];
    let mut predicted = vec![0.0; dims.0 * dims.1];
    for (n, &i) in ws.active.iter().enumerate() {
        fixed[i] = offsets[n];
        predicted[i] = offsets[n] + params.mu[z.labels()[i] as usize];
    }
    let mask = Some(y.mask().to_vec());
    Ok(HmrfFit {
        fixed: RealField::new(dims.0, dims.1, fixed, mask.clone())?,
        predicted: RealField::new(dims.0, dims.1, predicted, mask)?,
        component_counts: z.color_counts(),
        z_pred: z,
        params,
        iterations,
        converged,
        n_basis: p,
        structure: theta.structure().clone(),
    })
}

/// `argmin sum_i a_i (b_i / a_i - x_i' beta)^2`, i.e. `(X'AX) beta = X'b`.
fn solve_weighted(x: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<Vec<f64>> {
    let p = x.ncols();
    let mut xtax = DMatrix::zeros(p, p);
    let mut xtb = DVector::zeros(p);
    for i in 0..x.nrows() {
        let row = x.row(i);
        xtax += a[i] * row.transpose() * row;
        xtb += b[i] * row.transpose();
    }
    let jitter = 1e-10 * (xtax.trace() / p as f64).max(1.0);
    for j in 0..p {
        xtax[(j, j)] += jitter;
    }
    let sol = match xtax.clone().cholesky() {
        Some(c) => c.solve(&xtb),
        None => xtax
            .lu()
            .solve(&xtb)
            .ok_or_else(|| Error::InvalidArgument("singular fixed-effect design".into()))?,
    };
    Ok(sol.as_slice().to_vec())
}
