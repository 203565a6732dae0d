//! Single-site Gibbs sampling with a fresh random scan order every cycle.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{DiscreteField, PixelRegion};
use crate::kernel::{check_theta, LocalFieldEngine};
use crate::potentials::PotentialArray;
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Default)]
pub struct SamplerConfig {
    /// Number of full scans performed.
    pub cycles: usize,
    pub seed: u64,
    /// Pixels kept at their initial value.
    pub fixed_region: Option<PixelRegion>,
    /// Lattice support when sampling from dimensions; `false` pixels are not
    /// part of the field.
    pub sub_region: Option<PixelRegion>,
}

impl SamplerConfig {
    pub fn new(cycles: usize, seed: u64) -> Self {
        Self {
            cycles,
            seed,
            ..Self::default()
        }
    }
}

/// Starting point of a chain.
#[derive(Debug, Clone)]
pub enum InitialField {
    Field(DiscreteField),
    /// `(height, width)`; labels drawn i.i.d. uniform on `0..=C`.
    Dims(usize, usize),
}

/// A chain owning its current field.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    field: DiscreteField,
    engine: LocalFieldEngine,
    structure_len: usize,
    /// Linear indices of pixels that get updated.
    free: Vec<usize>,
    dense: bool,
    rng: SimRng,
    updates: u64,
    scratch: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(field: DiscreteField, theta: &PotentialArray, fixed: Option<&PixelRegion>, rng: SimRng) -> Result<Self> {
        check_theta(&field, theta)?;
        let field = field.with_colors(theta.colors())?;
        if let Some(f) = fixed {
            f.check_dims(field.dims())?;
        }
        let (h, w) = field.dims();
        let mut free = Vec::with_capacity(h * w);
        for row in 0..h {
            for col in 0..w {
                let pinned = fixed.is_some_and(|f| f.contains(row, col));
                let active = field.is_active(row, col);
                if pinned && !active {
                    return Err(Error::FixedOnMasked(row, col));
                }
                if active && !pinned {
                    free.push(row * w + col);
                }
            }
        }
        Ok(Self {
            dense: !field.has_mask_holes(),
            engine: LocalFieldEngine::new(theta),
            structure_len: theta.structure().len(),
            free,
            rng,
            updates: 0,
            scratch: vec![0.0; theta.colors() + 1],
            field,
        })
    }

    /// Swaps in new potentials on the same structure and colors.
    pub fn set_theta(&mut self, theta: &PotentialArray) -> Result<()> {
        if theta.colors() != self.field.colors() {
            return Err(Error::ColorMismatch {
                theta: theta.colors(),
                field: self.field.colors(),
            });
        }
        if theta.structure().len() != self.structure_len {
            return Err(Error::InvalidArgument("structure changed between updates".into()));
        }
        self.engine = LocalFieldEngine::new(theta);
        Ok(())
    }

    /// Redraws every free pixel i.i.d. uniform on `0..=C`.
    pub fn randomize(&mut self) {
        let c = self.field.colors() as u16;
        let labels = self.field.labels_mut();
        for &i in &self.free {
            labels[i] = self.rng.random_range(0..=c);
        }
    }

    /// One scan: a fresh permutation of the free pixels, each updated once
    /// from its full conditional.
    pub fn cycle(&mut self) {
        self.free.shuffle(&mut self.rng);
        let dims = self.field.dims();
        let w = dims.1;
        for idx in 0..self.free.len() {
            let i = self.free[idx];
            let (row, col) = (i / w, i % w);
            self.engine.local_field(
                self.field.labels(),
                self.field.mask(),
                dims,
                self.dense,
                row,
                col,
                &mut self.scratch,
            );
            let label = draw_categorical(&mut self.scratch, &mut self.rng);
            self.field.labels_mut()[i] = label as u16;
        }
        self.updates += self.free.len() as u64;
    }

    pub fn run(&mut self, cycles: usize) {
        for _ in 0..cycles {
            self.cycle();
        }
    }

    pub fn field(&self) -> &DiscreteField {
        &self.field
    }

    pub fn into_field(self) -> DiscreteField {
        self.field
    }

    /// Total single-site updates performed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }
}

/// Inverse-CDF draw from the softmax of `h`; overwrites `h`.
#[inline]
fn draw_categorical(h: &mut [f64], rng: &mut SimRng) -> usize {
    let m = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in h.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    let mut u = rng.random::<f64>() * total;
    for (k, &v) in h.iter().enumerate() {
        if u < v {
            return k;
        }
        u -= v;
    }
    // rounding left u marginally above the last weight
    h.iter().rposition(|&v| v > 0.0).unwrap_or(0)
}

/// Builds the starting field and the chain for `config`.
pub fn start_chain(init: InitialField, theta: &PotentialArray, config: &SamplerConfig) -> Result<GibbsSampler> {
    let mut rng = rng_from_seed(config.seed);
    let field = match init {
        InitialField::Field(f) => {
            if config.sub_region.is_some() {
                return Err(Error::SubRegionWithField);
            }
            f
        }
        InitialField::Dims(h, w) => {
            let mask = match &config.sub_region {
                Some(r) => {
                    r.check_dims((h, w))?;
                    Some(r.cells().to_vec())
                }
                None => None,
            };
            let c = theta.colors() as u16;
            let labels: Vec<u16> = (0..h * w).map(|_| rng.random_range(0..=c)).collect();
            DiscreteField::new(h, w, theta.colors(), labels, mask)?
        }
    };
    GibbsSampler::new(field, theta, config.fixed_region.as_ref(), rng)
}

/// Runs `config.cycles` Gibbs cycles and returns the final field.
pub fn sample_mrf(init: InitialField, theta: &PotentialArray, config: &SamplerConfig) -> Result<DiscreteField> {
    let mut chain = start_chain(init, theta, config)?;
    chain.run(config.cycles);
    Ok(chain.into_field())
}

/// Samples the free pixels of `z` given the values of `config.fixed_region`.
pub fn sample_conditional(z: &DiscreteField, theta: &PotentialArray, config: &SamplerConfig) -> Result<DiscreteField> {
    sample_mrf(InitialField::Field(z.clone()), theta, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::{InteractionStructure, Norm};
    use crate::potentials::Family;

    fn potts(phi: f64, colors: usize) -> PotentialArray {
        let r = InteractionStructure::build(1.0, Norm::L1, &[]).unwrap();
        PotentialArray::expand(&[phi], Family::OnePar, &r, colors).unwrap()
    }

    #[test]
    fn all_fixed_is_identity() {
        let z = sample_mrf(InitialField::Dims(5, 6), &potts(0.0, 2), &SamplerConfig::new(0, 3)).unwrap();
        let mut cfg = SamplerConfig::new(10, 4);
        cfg.fixed_region = Some(PixelRegion::filled(5, 6, true));
        assert_eq!(sample_conditional(&z, &potts(-1.0, 2), &cfg).unwrap(), z);
    }

    #[test]
    fn border_stays_zero() {
        let theta = potts(-1.0, 1);
        let mut init = sample_mrf(InitialField::Dims(100, 100), &potts(0.0, 1), &SamplerConfig::new(0, 11)).unwrap();
        for r in 0..100 {
            for c in 0..100 {
                if r == 0 || c == 0 || r == 99 || c == 99 {
                    init.set(r, c, 0).unwrap();
                }
            }
        }
        let mut cfg = SamplerConfig::new(20, 5);
        cfg.fixed_region = Some(PixelRegion::border(100, 100));
        let out = sample_conditional(&init, &theta, &cfg).unwrap();
        for r in 0..100 {
            for c in 0..100 {
                if r == 0 || c == 0 || r == 99 || c == 99 {
                    assert_eq!(out.get(r, c), Some(0));
                }
            }
        }
        assert_ne!(out, init);
    }

    #[test]
    fn empty_fixed_region_matches_plain_sampling() {
        let theta = potts(-0.5, 2);
        let z = sample_mrf(InitialField::Dims(8, 8), &theta, &SamplerConfig::new(0, 1)).unwrap();
        let plain = sample_mrf(InitialField::Field(z.clone()), &theta, &SamplerConfig::new(3, 9)).unwrap();
        let mut cfg = SamplerConfig::new(3, 9);
        cfg.fixed_region = Some(PixelRegion::filled(8, 8, false));
        assert_eq!(sample_conditional(&z, &theta, &cfg).unwrap(), plain);
    }

    #[test]
    fn deterministic_given_seed() {
        let theta = potts(-1.0, 2);
        let a = sample_mrf(InitialField::Dims(20, 20), &theta, &SamplerConfig::new(5, 42)).unwrap();
        let b = sample_mrf(InitialField::Dims(20, 20), &theta, &SamplerConfig::new(5, 42)).unwrap();
        let c = sample_mrf(InitialField::Dims(20, 20), &theta, &SamplerConfig::new(5, 43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn every_free_pixel_updated_once_per_cycle() {
        let theta = potts(-1.0, 1);
        let mut cfg = SamplerConfig::new(0, 2);
        cfg.fixed_region = Some(PixelRegion::border(6, 7));
        let mut chain = start_chain(InitialField::Dims(6, 7), &theta, &cfg).unwrap();
        assert_eq!(chain.n_free(), 4 * 5);
        chain.run(3);
        assert_eq!(chain.updates(), 3 * 20);
    }

    #[test]
    fn sub_region_masks_output() {
        let mut cells = vec![true; 16];
        cells[5] = false;
        let mut cfg = SamplerConfig::new(2, 1);
        cfg.sub_region = Some(PixelRegion::new(4, 4, cells).unwrap());
        let z = sample_mrf(InitialField::Dims(4, 4), &potts(-1.0, 1), &cfg).unwrap();
        assert_eq!(z.get(1, 1), None);
        assert_eq!(z.n_active(), 15);
        let err = sample_mrf(InitialField::Field(z), &potts(-1.0, 1), &cfg).unwrap_err();
        assert!(matches!(err, Error::SubRegionWithField));
    }

    #[test]
    fn fixed_on_masked_rejected() {
        let z = DiscreteField::new(1, 2, 1, vec![0, 0], Some(vec![true, false])).unwrap();
        let mut cfg = SamplerConfig::new(1, 1);
        cfg.fixed_region = Some(PixelRegion::filled(1, 2, true));
        assert!(matches!(
            sample_conditional(&z, &potts(-1.0, 1), &cfg),
            Err(Error::FixedOnMasked(0, 1))
        ));
    }

    #[test]
    fn color_mismatch_rejected() {
        let z = DiscreteField::new(1, 2, 2, vec![0, 2], None).unwrap();
        assert!(sample_conditional(&z, &potts(-1.0, 1), &SamplerConfig::new(1, 1)).is_err());
    }
}
