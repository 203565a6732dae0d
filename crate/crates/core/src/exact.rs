//! Brute-force computations on toy lattices: partition function, exact joint
//! and conditional probabilities, exact expected statistics and the exact
//! maximum likelihood estimate.
//!
//! Everything enumerates all `(C+1)^(N*M)` configurations of a rectangular
//! lattice, so the count is capped at 2^22.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::interactions::InteractionStructure;
use crate::kernel::{cohist_with_colors, logsumexp};
use crate::potentials::{Family, PotentialArray};

pub const MAX_CONFIGURATIONS: usize = 1 << 22;

fn n_configs(dims: (usize, usize), colors: usize) -> Result<usize> {
    let n = (dims.0 * dims.1) as f64 * ((colors + 1) as f64).log2();
    if n > 22.0 {
        return Err(Error::TooLarge(2f64.powf(n)));
    }
    Ok((colors + 1).pow((dims.0 * dims.1) as u32))
}

/// Configuration number `index` (pixel 0 is the fastest-changing digit).
pub fn decode(index: usize, dims: (usize, usize), colors: usize) -> DiscreteField {
    let side = colors + 1;
    let mut rest = index;
    let labels = (0..dims.0 * dims.1)
        .map(|_| {
            let l = rest % side;
            rest /= side;
            l as u16
        })
        .collect();
    DiscreteField::new(dims.0, dims.1, colors, labels, None).expect("valid configuration")
}

pub fn encode(z: &DiscreteField, colors: usize) -> usize {
    z.labels()
        .iter()
        .rev()
        .fold(0, |acc, &l| acc * (colors + 1) + l as usize)
}

/// Exact joint distribution of a small rectangular field.
#[derive(Debug, Clone)]
pub struct ExactModel {
    dims: (usize, usize),
    theta: PotentialArray,
    energies: Vec<f64>,
    log_z: f64,
}

impl ExactModel {
    pub fn new(dims: (usize, usize), theta: &PotentialArray) -> Result<Self> {
        let colors = theta.colors();
        let n = n_configs(dims, colors)?;
        let energies: Vec<f64> = (0..n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|idx| {
                let z = decode(idx, dims, colors);
                cohist_with_colors(&z, theta.structure(), colors)
                    .expect("labels within range")
                    .energy(theta)
            })
            .collect();
        let log_z = logsumexp(&energies);
        Ok(Self {
            dims,
            theta: theta.clone(),
            energies,
            log_z,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn n_configurations(&self) -> usize {
        self.energies.len()
    }

    /// `log zeta_theta`.
    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn prob_index(&self, index: usize) -> f64 {
        (self.energies[index] - self.log_z).exp()
    }

    pub fn prob(&self, z: &DiscreteField) -> f64 {
        self.prob_index(encode(z, self.theta.colors()))
    }

    /// `P(Z_i = k | Z_{-i} = z_{-i})` from the joint table.
    pub fn conditional(&self, z: &DiscreteField, row: usize, col: usize) -> Result<Vec<f64>> {
        if z.dims() != self.dims || z.has_mask_holes() {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                found: z.dims(),
            });
        }
        let colors = self.theta.colors();
        let side = colors + 1;
        let pixel = row * self.dims.1 + col;
        let base = encode(z, colors) - z.labels()[pixel] as usize * side.pow(pixel as u32);
        let joint: Vec<f64> = (0..side)
            .map(|k| self.prob_index(base + k * side.pow(pixel as u32)))
            .collect();
        let total: f64 = joint.iter().sum();
        Ok(joint.into_iter().map(|p| p / total).collect())
    }

    /// `E_theta[S(Z)]` for the given family.
    pub fn expected_stats(&self, family: Family) -> Vec<f64> {
        let colors = self.theta.colors();
        let structure = self.theta.structure();
        let n = family.n_params(structure.len(), colors);
        let partial: Vec<Vec<f64>> = (0..self.energies.len())
            .collect::<Vec<_>>()
            .par_chunks(4096)
            .map(|chunk| {
                let mut acc = vec![0.0; n];
                for &idx in chunk {
                    let p = self.prob_index(idx);
                    let s = cohist_with_colors(&decode(idx, self.dims, colors), structure, colors)
                        .expect("labels within range")
                        .to_stats(family);
                    acc.iter_mut().zip(&s).for_each(|(a, v)| *a += p * v);
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; n];
        for p in partial {
            out.iter_mut().zip(&p).for_each(|(a, v)| *a += v);
        }
        out
    }
}

/// `log zeta_theta` by enumeration.
pub fn log_partition(dims: (usize, usize), theta: &PotentialArray) -> Result<f64> {
    Ok(ExactModel::new(dims, theta)?.log_partition())
}

/// Exact conditional at `(row, col)` given the rest of `config`.
pub fn exact_conditional(theta: &PotentialArray, config: &DiscreteField, row: usize, col: usize) -> Result<Vec<f64>> {
    ExactModel::new(config.dims(), theta)?.conditional(config, row, col)
}

pub fn exact_expected_stats(dims: (usize, usize), theta: &PotentialArray, family: Family) -> Result<Vec<f64>> {
    Ok(ExactModel::new(dims, theta)?.expected_stats(family))
}

/// `log zeta_theta` by a row-by-row recursion. Needs every position to have a
/// row offset in `{-1, 0, 1}`; independent of the enumeration above.
pub fn log_partition_transfer(dims: (usize, usize), theta: &PotentialArray) -> Result<f64> {
    let (h, w) = dims;
    let side = theta.colors() + 1;
    let positions = theta.structure().positions();
    if positions.iter().any(|p| p.row.abs() > 1) {
        return Err(Error::TransferSpan);
    }
    let states_f = (w as f64) * (side as f64).log2();
    if states_f > 11.0 {
        return Err(Error::TooLarge(2f64.powf(2.0 * states_f)));
    }
    let n_states = side.pow(w as u32);
    let row_labels = |s: usize| -> Vec<usize> {
        let mut rest = s;
        (0..w)
            .map(|_| {
                let l = rest % side;
                rest /= side;
                l
            })
            .collect()
    };
    let rows: Vec<Vec<usize>> = (0..n_states).map(row_labels).collect();
    let in_row = |c: i64| c >= 0 && c < w as i64;
    let intra: Vec<f64> = rows
        .iter()
        .map(|r| {
            let mut e = 0.0;
            for (k, p) in positions.iter().enumerate().filter(|(_, p)| p.row == 0) {
                for c in 0..w as i64 {
                    let d = c + p.col as i64;
                    if in_row(d) {
                        e += theta.get(r[c as usize], r[d as usize], k);
                    }
                }
            }
            e
        })
        .collect();
    // energy of pairs between consecutive rows `upper` then `lower`
    let inter = |upper: &[usize], lower: &[usize]| -> f64 {
        let mut e = 0.0;
        for (k, p) in positions.iter().enumerate() {
            for c in 0..w as i64 {
                let d = c + p.col as i64;
                if !in_row(d) {
                    continue;
                }
                match p.row {
                    1 => e += theta.get(upper[c as usize], lower[d as usize], k),
                    -1 => e += theta.get(lower[c as usize], upper[d as usize], k),
                    _ => {}
                }
            }
        }
        e
    };
    let mut alpha = intra.clone();
    for _ in 1..h {
        let next: Vec<f64> = (0..n_states)
            .map(|s| {
                let terms: Vec<f64> = (0..n_states)
                    .map(|prev| alpha[prev] + inter(&rows[prev], &rows[s]))
                    .collect();
                intra[s] + logsumexp(&terms)
            })
            .collect();
        alpha = next;
    }
    Ok(logsumexp(&alpha))
}

/// Exact MLE of the free parameters for an observed rectangular field, by
/// Newton's method on `E_theta[S] = S(z0)`.
pub fn exact_mle(z0: &DiscreteField, structure: &InteractionStructure, family: Family) -> Result<Vec<f64>> {
    if z0.has_mask_holes() {
        return Err(Error::InvalidArgument("exact MLE needs a rectangular field".into()));
    }
    let colors = z0.colors();
    if colors < 1 {
        return Err(Error::TooFewColors);
    }
    let dims = z0.dims();
    let n = n_configs(dims, colors)?;
    let p = family.n_params(structure.len(), colors);
    let stats: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .with_min_len(1024)
        .map(|idx| {
            cohist_with_colors(&decode(idx, dims, colors), structure, colors)
                .expect("labels within range")
                .to_stats(family)
        })
        .collect();
    let s0 = cohist_with_colors(z0, structure, colors)?.to_stats(family);

    for m in 0..p {
        let (lo, hi) = stats
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[m]), hi.max(s[m])));
        if s0[m] <= lo || s0[m] >= hi {
            return Err(Error::BoundaryStatistics);
        }
    }

    let log_lik = |theta: &[f64]| -> (f64, Vec<f64>) {
        let h: Vec<f64> = stats
            .iter()
            .map(|s| s.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect();
        let lz = logsumexp(&h);
        let ll = s0.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() - lz;
        (ll, h.into_iter().map(|v| (v - lz).exp()).collect())
    };

    let mut theta = vec![0.0; p];
    let (mut ll, mut weights) = log_lik(&theta);
    for _ in 0..200 {
        let mut mean = DVector::zeros(p);
        let mut second = DMatrix::zeros(p, p);
        for (s, &wgt) in stats.iter().zip(&weights) {
            let v = DVector::from_column_slice(s);
            mean += wgt * &v;
            second += wgt * &v * v.transpose();
        }
        let cov = second - &mean * mean.transpose();
        let grad = DVector::from_column_slice(&s0) - &mean;
        if grad.amax() < 1e-8 {
            return Ok(theta);
        }
        let step = cov
            .cholesky()
            .map(|c| c.solve(&grad))
            .ok_or(Error::BoundaryStatistics)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let (tll, tw) = log_lik(&trial);
            if tll >= ll - 1e-12 || t < 1e-10 {
                theta = trial;
                ll = tll;
                weights = tw;
                break;
            }
            t *= 0.5;
        }
        if theta.iter().any(|v| v.abs() > 50.0) {
            return Err(Error::BoundaryStatistics);
        }
    }
    Err(Error::BoundaryStatistics)
}
