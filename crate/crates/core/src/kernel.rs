//! Exact evaluation of the model quantities: co-occurrence histogram,
//! sufficient statistics, energy, local fields, conditional probabilities and
//! the pseudo-likelihood with its gradient.
//!
//! Boundary is free: a pair contributes only when both pixels are on the
//! lattice (in bounds and unmasked).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::interactions::InteractionStructure;
use crate::potentials::{Family, PotentialArray};

/// Rows per parallel chunk; fixed so reductions are order-stable.
const ROW_CHUNK: usize = 8;

/// `log(sum(exp(x)))` with max subtraction.
pub fn logsumexp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + x.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

/// In-place softmax with max subtraction.
pub fn softmax(x: &mut [f64]) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in x.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    x.iter_mut().for_each(|v| *v /= total);
}

/// Counts `n[a][b][k]` of label pairs `(z_i, z_{i+r_k})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceHistogram {
    colors: usize,
    structure: InteractionStructure,
    counts: Vec<u64>,
}

impl CooccurrenceHistogram {
    #[inline]
    pub fn get(&self, a: usize, b: usize, k: usize) -> u64 {
        let side = self.colors + 1;
        self.counts[(k * side + a) * side + b]
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn structure(&self) -> &InteractionStructure {
        &self.structure
    }

    /// Raw counts, layout `[k][a][b]`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of valid pairs for position `k`.
    pub fn slice_total(&self, k: usize) -> u64 {
        let s = (self.colors + 1) * (self.colors + 1);
        self.counts[k * s..(k + 1) * s].iter().sum()
    }

    /// Sums counts over the family's equality classes, dropping pinned
    /// entries.
    pub fn to_stats(&self, family: Family) -> Vec<f64> {
        let side = self.colors + 1;
        let mut out = vec![0.0; family.n_params(self.structure.len(), self.colors)];
        for k in 0..self.structure.len() {
            for a in 0..side {
                for b in 0..side {
                    if let Some(m) = family.class(a, b, k, self.colors) {
                        out[m] += self.get(a, b, k) as f64;
                    }
                }
            }
        }
        out
    }

    /// `sum_k sum_{a,b} theta_k(a, b) n[a][b][k]`.
    pub fn energy(&self, theta: &PotentialArray) -> f64 {
        self.counts
            .iter()
            .zip(theta.values())
            .map(|(&n, &t)| n as f64 * t)
            .sum()
    }
}

fn check_colors(z: &DiscreteField, colors: usize) -> Result<()> {
    let max = z.max_label();
    if max > colors {
        return Err(Error::LabelOutOfRange { label: max, colors });
    }
    Ok(())
}

pub(crate) fn check_theta(z: &DiscreteField, theta: &PotentialArray) -> Result<()> {
    if z.max_label() > theta.colors() {
        return Err(Error::ColorMismatch {
            theta: theta.colors(),
            field: z.colors(),
        });
    }
    Ok(())
}

/// Co-occurrence histogram using the field's own color count.
pub fn cohist(z: &DiscreteField, structure: &InteractionStructure) -> CooccurrenceHistogram {
    count_pairs(z, structure, z.colors())
}

/// Histogram over `0..=colors`; labels must not exceed `colors`.
pub fn cohist_with_colors(z: &DiscreteField, structure: &InteractionStructure, colors: usize) -> Result<CooccurrenceHistogram> {
    check_colors(z, colors)?;
    Ok(count_pairs(z, structure, colors))
}

fn count_pairs(z: &DiscreteField, structure: &InteractionStructure, colors: usize) -> CooccurrenceHistogram {
    let side = colors + 1;
    let (h, w) = z.dims();
    let labels = z.labels();
    let mask = z.mask();
    let mut counts = vec![0u64; side * side * structure.len()];
    for (k, p) in structure.positions().iter().enumerate() {
        let slice = &mut counts[k * side * side..(k + 1) * side * side];
        let (dr, dc) = (p.row as isize, p.col as isize);
        let r0 = (-dr).max(0) as usize;
        let r1 = (h as isize - dr.max(0)).max(0) as usize;
        let c0 = (-dc).max(0) as usize;
        let c1 = (w as isize - dc.max(0)).max(0) as usize;
        for row in r0..r1 {
            let nrow = (row as isize + dr) as usize;
            for col in c0..c1 {
                let i = row * w + col;
                let j = nrow * w + (col as isize + dc) as usize;
                if mask[i] && mask[j] {
                    slice[labels[i] as usize * side + labels[j] as usize] += 1;
                }
            }
        }
    }
    CooccurrenceHistogram {
        colors,
        structure: structure.clone(),
        counts,
    }
}

/// Family-aggregated sufficient statistics `S(z)`.
pub fn suff_stat(z: &DiscreteField, structure: &InteractionStructure, family: Family, colors: usize) -> Result<Vec<f64>> {
    Ok(cohist_with_colors(z, structure, colors)?.to_stats(family))
}

/// `H(z, theta)`.
pub fn energy(z: &DiscreteField, theta: &PotentialArray) -> Result<f64> {
    check_theta(z, theta)?;
    Ok(count_pairs(z, theta.structure(), theta.colors()).energy(theta))
}

/// Local-field evaluator with potentials laid out for contiguous access.
///
/// `fwd[k][b][a] = theta_k(a, b)` serves the neighbor at `i + r`, and
/// `bwd[k][b][a] = theta_k(b, a)` the neighbor at `i - r`.
#[derive(Debug, Clone)]
pub(crate) struct LocalFieldEngine {
    side: usize,
    offsets: Vec<(isize, isize)>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
    span: (usize, usize),
}

impl LocalFieldEngine {
    pub(crate) fn new(theta: &PotentialArray) -> Self {
        let side = theta.colors() + 1;
        let structure = theta.structure();
        let offsets = structure
            .positions()
            .iter()
            .map(|p| (p.row as isize, p.col as isize))
            .collect();
        let mut engine = Self {
            side,
            offsets,
            fwd: vec![0.0; side * side * structure.len()],
            bwd: vec![0.0; side * side * structure.len()],
            span: structure.span(),
        };
        engine.set_theta(theta);
        engine
    }

    pub(crate) fn set_theta(&mut self, theta: &PotentialArray) {
        let side = self.side;
        for k in 0..self.offsets.len() {
            for a in 0..side {
                for b in 0..side {
                    let t = theta.get(a, b, k);
                    self.fwd[(k * side + b) * side + a] = t;
                    self.bwd[(k * side + a) * side + b] = t;
                }
            }
        }
    }

    pub(crate) fn side(&self) -> usize {
        self.side
    }

    /// Writes `h_i(.)` into `out` (length C+1). `dense` means the field has
    /// no mask holes, enabling the unchecked interior path.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn local_field(
        &self,
        labels: &[u16],
        mask: &[bool],
        dims: (usize, usize),
        dense: bool,
        row: usize,
        col: usize,
        out: &mut [f64],
    ) {
        let side = self.side;
        let (h, w) = dims;
        out.iter_mut().for_each(|v| *v = 0.0);
        let interior = dense
            && row >= self.span.0
            && row + self.span.0 < h
            && col >= self.span.1
            && col + self.span.1 < w;
        let i = (row * w + col) as isize;
        if interior {
            for (k, &(dr, dc)) in self.offsets.iter().enumerate() {
                let lin = dr * w as isize + dc;
                let b = labels[(i + lin) as usize] as usize;
                let t = &self.fwd[(k * side + b) * side..(k * side + b + 1) * side];
                out.iter_mut().zip(t).for_each(|(o, &v)| *o += v);
                let b = labels[(i - lin) as usize] as usize;
                let t = &self.bwd[(k * side + b) * side..(k * side + b + 1) * side];
                out.iter_mut().zip(t).for_each(|(o, &v)| *o += v);
            }
            return;
        }
        let (row, col) = (row as isize, col as isize);
        let (hh, ww) = (h as isize, w as isize);
        for (k, &(dr, dc)) in self.offsets.iter().enumerate() {
            for (sign, table) in [(1isize, &self.fwd), (-1, &self.bwd)] {
                let (nr, nc) = (row + sign * dr, col + sign * dc);
                if nr < 0 || nc < 0 || nr >= hh || nc >= ww {
                    continue;
                }
                let j = (nr * ww + nc) as usize;
                if !mask[j] {
                    continue;
                }
                let b = labels[j] as usize;
                let t = &table[(k * side + b) * side..(k * side + b + 1) * side];
                out.iter_mut().zip(t).for_each(|(o, &v)| *o += v);
            }
        }
    }
}

/// `h_i(k | z)` for every color `k`.
pub fn local_field(z: &DiscreteField, row: usize, col: usize, theta: &PotentialArray) -> Result<Vec<f64>> {
    check_theta(z, theta)?;
    if !z.is_active(row, col) {
        return Err(Error::InvalidPixel(row, col));
    }
    let engine = LocalFieldEngine::new(theta);
    let mut h = vec![0.0; theta.colors() + 1];
    engine.local_field(z.labels(), z.mask(), z.dims(), !z.has_mask_holes(), row, col, &mut h);
    Ok(h)
}

/// `P(Z_i = k | rest)`, the softmax of the local field.
pub fn conditional_probs(z: &DiscreteField, row: usize, col: usize, theta: &PotentialArray) -> Result<Vec<f64>> {
    let mut p = local_field(z, row, col, theta)?;
    softmax(&mut p);
    Ok(p)
}

/// Log pseudo-likelihood `sum_i [h_i(z_i) - logsumexp_k h_i(k)]`.
pub fn log_pseudo_likelihood(z: &DiscreteField, theta: &PotentialArray) -> Result<f64> {
    check_theta(z, theta)?;
    let engine = LocalFieldEngine::new(theta);
    let (h, w) = z.dims();
    let dense = !z.has_mask_holes();
    let rows: Vec<usize> = (0..h).collect();
    let partial: Vec<f64> = rows
        .par_chunks(ROW_CHUNK)
        .map(|chunk| {
            let mut hv = vec![0.0; engine.side()];
            let mut acc = 0.0;
            for &row in chunk {
                for col in 0..w {
                    if let Some(zi) = z.get(row, col) {
                        engine.local_field(z.labels(), z.mask(), (h, w), dense, row, col, &mut hv);
                        acc += hv[zi] - logsumexp(&hv);
                    }
                }
            }
            acc
        })
        .collect();
    Ok(partial.iter().sum())
}

/// Log pseudo-likelihood and its gradient in free-parameter coordinates.
///
/// `d logPL / d phi_m = sum_i [s_m(z_i; i) - sum_k p_i(k) s_m(k; i)]`, where
/// `s_m(k; i)` counts the neighbors of `i` whose pair with color `k` falls in
/// class `m`.
pub fn pl_value_and_gradient(
    z: &DiscreteField,
    params: &[f64],
    family: Family,
    structure: &InteractionStructure,
    colors: usize,
) -> Result<(f64, Vec<f64>)> {
    let theta = PotentialArray::expand(params, family, structure, colors)?;
    check_theta(z, &theta)?;
    let side = colors + 1;
    let n_params = params.len();
    // class of theta_k(a, b), usize::MAX when pinned
    let mut classes = vec![usize::MAX; side * side * structure.len()];
    for k in 0..structure.len() {
        for a in 0..side {
            for b in 0..side {
                if let Some(m) = family.class(a, b, k, colors) {
                    classes[(k * side + a) * side + b] = m;
                }
            }
        }
    }
    let offsets: Vec<(isize, isize)> = structure
        .positions()
        .iter()
        .map(|p| (p.row as isize, p.col as isize))
        .collect();
    let (h, w) = z.dims();
    let rows: Vec<usize> = (0..h).collect();
    let partial: Vec<(f64, Vec<f64>)> = rows
        .par_chunks(ROW_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; n_params];
            let mut value = 0.0;
            let mut hv = vec![0.0; side];
            // (candidate color, class) pairs touched by the current pixel
            let mut touched: Vec<(usize, usize)> = Vec::with_capacity(2 * offsets.len() * side);
            for &row in chunk {
                for col in 0..w {
                    let Some(zi) = z.get(row, col) else { continue };
                    touched.clear();
                    hv.iter_mut().for_each(|v| *v = 0.0);
                    for (k, &(dr, dc)) in offsets.iter().enumerate() {
                        for sign in [1isize, -1] {
                            let nr = row as isize + sign * dr;
                            let nc = col as isize + sign * dc;
                            if nr < 0 || nc < 0 {
                                continue;
                            }
                            let Some(b) = z.get(nr as usize, nc as usize) else { continue };
                            for (a, ha) in hv.iter_mut().enumerate() {
                                let idx = if sign == 1 {
                                    (k * side + a) * side + b
                                } else {
                                    (k * side + b) * side + a
                                };
                                let m = classes[idx];
                                if m != usize::MAX {
                                    *ha += params[m];
                                    touched.push((a, m));
                                }
                            }
                        }
                    }
                    let lse = logsumexp(&hv);
                    value += hv[zi] - lse;
                    for (a, p) in hv.iter_mut().enumerate() {
                        *p = (*p - lse).exp();
                        if a == zi {
                            *p -= 1.0;
                        }
                    }
                    // hv now holds p(a) - [a == z_i]
                    for &(a, m) in &touched {
                        grad[m] -= hv[a];
                    }
                }
            }
            (value, grad)
        })
        .collect();
    let mut value = 0.0;
    let mut grad = vec![0.0; n_params];
    for (v, g) in partial {
        value += v;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((value, grad))
}

/// Gradient of the log pseudo-likelihood.
pub fn pl_gradient(
    z: &DiscreteField,
    params: &[f64],
    family: Family,
    structure: &InteractionStructure,
    colors: usize,
) -> Result<Vec<f64>> {
    pl_value_and_gradient(z, params, family, structure, colors).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::{Norm, Offset};
    use approx::assert_abs_diff_eq;

    fn nn() -> InteractionStructure {
        InteractionStructure::build(1.0, Norm::L1, &[]).unwrap()
    }

    fn checker2() -> DiscreteField {
        DiscreteField::from_rows(&[vec![0, 1], vec![1, 0]], 1).unwrap()
    }

    #[test]
    fn cohist_row_offset() {
        let r = InteractionStructure::from_positions(vec![Offset::new(1, 0)]).unwrap();
        let n = cohist(&checker2(), &r);
        assert_eq!((n.get(0, 1, 0), n.get(1, 0, 0), n.get(0, 0, 0), n.get(1, 1, 0)), (1, 1, 0, 0));
    }

    #[test]
    fn cohist_constant_field() {
        let z = DiscreteField::zeros(4, 7, 2);
        let r = InteractionStructure::from_positions(vec![Offset::new(0, 1)]).unwrap();
        let n = cohist(&z, &r);
        assert_eq!(n.get(0, 0, 0), 4 * 6);
        assert_eq!(n.slice_total(0), 24);
    }

    #[test]
    fn masked_row_breaks_pairs() {
        let mask = vec![true, true, false, false, true, true];
        let z = DiscreteField::new(3, 2, 1, vec![0, 1, 0, 0, 1, 0], Some(mask)).unwrap();
        let n = cohist(&z, &nn());
        // vertical pairs all cross the masked middle row
        assert_eq!(n.slice_total(0), 0);
        assert_eq!(n.slice_total(1), 2);
    }

    #[test]
    fn oneeach_stats_checkerboard() {
        assert_eq!(suff_stat(&checker2(), &nn(), Family::OneEach, 1).unwrap(), vec![2.0, 2.0]);
        assert_eq!(suff_stat(&checker2(), &nn(), Family::OnePar, 1).unwrap(), vec![4.0]);
    }

    #[test]
    fn constant_zero_field_has_zero_stats() {
        let z = DiscreteField::zeros(3, 3, 2);
        for fam in Family::ALL {
            assert!(suff_stat(&z, &nn(), fam, 2).unwrap().iter().all(|&v| v == 0.0));
        }
        let ones = DiscreteField::new(3, 3, 1, vec![1; 9], None).unwrap();
        assert_eq!(suff_stat(&ones, &nn(), Family::Free, 1).unwrap(), vec![0.0, 0.0, 6.0, 0.0, 0.0, 6.0]);
    }

    #[test]
    fn suff_stat_label_above_c() {
        let z = DiscreteField::new(1, 2, 2, vec![0, 2], None).unwrap();
        assert!(suff_stat(&z, &nn(), Family::OnePar, 1).is_err());
    }

    #[test]
    fn potts_energy() {
        let t = PotentialArray::expand(&[-1.0], Family::OnePar, &nn(), 1).unwrap();
        assert_eq!(energy(&checker2(), &t).unwrap(), -4.0);
        let zero = PotentialArray::zeros(Family::Free, &nn(), 1).unwrap();
        assert_eq!(energy(&checker2(), &zero).unwrap(), 0.0);
    }

    #[test]
    fn potts_local_field_interior() {
        let z = DiscreteField::from_rows(&[vec![0, 1, 0], vec![2, 1, 1], vec![0, 0, 2]], 2).unwrap();
        let t = PotentialArray::expand(&[-0.7], Family::OnePar, &nn(), 2).unwrap();
        let h = local_field(&z, 1, 1, &t).unwrap();
        // neighbors of (1,1): 1, 2, 1, 0
        let expected = [-0.7 * 3.0, -0.7 * 2.0, -0.7 * 3.0];
        for (a, b) in h.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let mut flipped = z.clone();
        flipped.set(1, 1, 0).unwrap();
        assert_eq!(local_field(&flipped, 1, 1, &t).unwrap(), h);
    }

    #[test]
    fn masked_pixel_rejected() {
        let z = DiscreteField::new(1, 2, 1, vec![0, 1], Some(vec![true, false])).unwrap();
        let t = PotentialArray::zeros(Family::OnePar, &nn(), 1).unwrap();
        assert!(matches!(local_field(&z, 0, 1, &t), Err(Error::InvalidPixel(0, 1))));
    }

    #[test]
    fn zero_theta_uniform_and_pl() {
        let z = DiscreteField::from_rows(&[vec![0, 1, 2], vec![2, 2, 1]], 2).unwrap();
        let t = PotentialArray::zeros(Family::OneEach, &nn(), 2).unwrap();
        let p = conditional_probs(&z, 0, 1, &t).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let pl = log_pseudo_likelihood(&z, &t).unwrap();
        assert_abs_diff_eq!(pl, -6.0 * 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn logsumexp_is_stable() {
        assert_abs_diff_eq!(logsumexp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln(), epsilon = 1e-12);
        let mut v = [-800.0, -801.0];
        softmax(&mut v);
        assert_abs_diff_eq!(v[0] + v[1], 1.0, epsilon = 1e-15);
    }
}
