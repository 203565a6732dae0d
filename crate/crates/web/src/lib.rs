//! Browser bindings for three small interactive demos: a texture sampler,
//! hidden MRF segmentation of a noisy image, and an interaction
//! neighborhood viewer.
//!
//! The demo logic lives in plain Rust types so it can be tested natively;
//! the `wasm_bindgen` wrappers only convert errors.

use rand_distr::{Distribution, Normal};
use wasm_bindgen::prelude::*;

use latmrf::estimators::fit_pl;
use latmrf::hmrf::{fit_ghm, GhmSettings};
use latmrf::optim::BfgsOptions;
use latmrf::render::{render_discrete, render_real, Palette, Ramp, Raster};
use latmrf::rng::stream_rng;
use latmrf::sampler::{start_chain, GibbsSampler};
use latmrf::{Family, InitialField, InteractionStructure, Norm, Offset, PotentialArray, RealField, SamplerConfig};

fn texture_structure() -> InteractionStructure {
    InteractionStructure::from_positions(vec![Offset::new(1, 0), Offset::new(0, 1), Offset::new(4, 4)])
        .expect("fixed positions are valid")
}

/// A binary Gibbs chain with interactions at (1,0), (0,1) and (4,4) whose
/// parameters can change between steps.
pub struct Texture {
    chain: GibbsSampler,
    params: [f64; 3],
    cycles_run: usize,
}

impl Texture {
    pub fn new(size: usize, seed: u64) -> Result<Self, String> {
        if size == 0 || size > 512 {
            return Err(format!("size {size} must be in 1..=512"));
        }
        let params = [-1.0, -1.0, 0.2];
        let theta = Self::theta(params)?;
        let chain = start_chain(InitialField::Dims(size, size), &theta, &SamplerConfig::new(0, seed)).map_err(|e| e.to_string())?;
        Ok(Self {
            chain,
            params,
            cycles_run: 0,
        })
    }

    fn theta(params: [f64; 3]) -> Result<PotentialArray, String> {
        PotentialArray::expand(&params, Family::OneEach, &texture_structure(), 1).map_err(|e| e.to_string())
    }

    pub fn set_params(&mut self, params: [f64; 3]) -> Result<(), String> {
        if params.iter().any(|p| !p.is_finite()) {
            return Err("parameters must be finite".into());
        }
        self.chain.set_theta(&Self::theta(params)?).map_err(|e| e.to_string())?;
        self.params = params;
        Ok(())
    }

    pub fn params(&self) -> [f64; 3] {
        self.params
    }

    pub fn step(&mut self, cycles: usize) {
        self.chain.run(cycles);
        self.cycles_run += cycles;
    }

    pub fn randomize(&mut self) {
        self.chain.randomize();
        self.cycles_run = 0;
    }

    pub fn cycles_run(&self) -> usize {
        self.cycles_run
    }

    pub fn size(&self) -> usize {
        self.chain.field().height()
    }

    pub fn rgba(&self) -> Vec<u8> {
        render_discrete(self.chain.field(), Palette::Gray).rgba
    }

    /// Pseudo-likelihood estimate of the three parameters from the current
    /// field.
    pub fn estimate(&self) -> Result<[f64; 3], String> {
        let fit = fit_pl(self.chain.field(), &texture_structure(), Family::OneEach, None, BfgsOptions::default())
            .map_err(|e| e.to_string())?;
        let p = fit.theta.summarize();
        Ok([p[0], p[1], p[2]])
    }
}

/// Outcome of [`segment`]: observations, truth and prediction side by side.
pub struct Segmentation {
    pub image: Raster,
    pub accuracy: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub iterations: usize,
}

/// Simulates a three-class Potts field, adds Gaussian noise of standard
/// deviation `noise` to class means 0, 1 and 2, and segments it with an
/// interaction strength of `smoothing` (0 means independent pixels).
pub fn segment(size: usize, seed: u64, noise: f64, smoothing: f64) -> Result<Segmentation, String> {
    if !(noise.is_finite() && noise > 0.0) {
        return Err("noise must be positive".into());
    }
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err("smoothing must be nonnegative".into());
    }
    if !(8..=256).contains(&size) {
        return Err(format!("size {size} must be in 8..=256"));
    }
    let nn = InteractionStructure::build(1.0, Norm::L1, &[]).map_err(|e| e.to_string())?;
    let truth_theta = PotentialArray::expand(&[-1.0], Family::OnePar, &nn, 2).map_err(|e| e.to_string())?;
    let latent = start_chain(InitialField::Dims(size, size), &truth_theta, &SamplerConfig::new(0, seed))
        .map(|mut c| {
            c.run(80);
            c.into_field()
        })
        .map_err(|e| e.to_string())?;
    let normal = Normal::new(0.0, noise).map_err(|e| e.to_string())?;
    let mut rng = stream_rng(seed, 1);
    let values: Vec<f64> = latent.labels().iter().map(|&l| l as f64 + normal.sample(&mut rng)).collect();
    let y = RealField::new(size, size, values, None).map_err(|e| e.to_string())?;

    let model = PotentialArray::expand(&[-smoothing], Family::OnePar, &nn, 2).map_err(|e| e.to_string())?;
    let fit = fit_ghm(&y, &model, None, &GhmSettings::default()).map_err(|e| e.to_string())?;
    let same = fit.z_pred.labels().iter().zip(latent.labels()).filter(|(a, b)| a == b).count();
    let image = Raster::side_by_side(
        &[
            render_real(&y, Ramp::Viridis),
            render_discrete(&latent, Palette::Categorical),
            render_discrete(&fit.z_pred, Palette::Categorical),
        ],
        4,
    );
    Ok(Segmentation {
        image,
        accuracy: same as f64 / (size * size) as f64,
        mu: fit.params.mu,
        sigma: fit.params.sigma,
        iterations: fit.iterations,
    })
}

/// Positions within `radius` under `norm`, flattened as `row, col` pairs.
pub fn neighborhood(norm: &str, radius: f64) -> Result<Vec<i32>, String> {
    let norm: Norm = norm.parse().map_err(|e: latmrf::Error| e.to_string())?;
    let s = InteractionStructure::build(radius, norm, &[]).map_err(|e| e.to_string())?;
    Ok(s.positions().iter().flat_map(|p| [p.row, p.col]).collect())
}

// JavaScript bindings

#[wasm_bindgen]
pub struct TextureDemo(Texture);

#[wasm_bindgen]
impl TextureDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, seed: u64) -> Result<TextureDemo, JsError> {
        Texture::new(size, seed).map(TextureDemo).map_err(|e| JsError::new(&e))
    }

    pub fn set_params(&mut self, horizontal: f64, vertical: f64, diagonal: f64) -> Result<(), JsError> {
        self.0.set_params([vertical, horizontal, diagonal]).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, cycles: usize) {
        self.0.step(cycles);
    }

    pub fn randomize(&mut self) {
        self.0.randomize();
    }

    pub fn cycles_run(&self) -> usize {
        self.0.cycles_run()
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.0.rgba()
    }

    /// `[vertical, horizontal, diagonal]` estimates.
    pub fn estimate(&self) -> Result<Vec<f64>, JsError> {
        self.0.estimate().map(|p| p.to_vec()).map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen]
pub struct SegmentView {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
    accuracy: f64,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    iterations: usize,
}

#[wasm_bindgen]
impl SegmentView {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
    pub fn mu(&self) -> Vec<f64> {
        self.mu.clone()
    }
    pub fn sigma(&self) -> Vec<f64> {
        self.sigma.clone()
    }
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

#[wasm_bindgen]
pub fn run_segmentation(size: usize, seed: u64, noise: f64, smoothing: f64) -> Result<SegmentView, JsError> {
    let s = segment(size, seed, noise, smoothing).map_err(|e| JsError::new(&e))?;
    Ok(SegmentView {
        width: s.image.width,
        height: s.image.height,
        rgba: s.image.rgba,
        accuracy: s.accuracy,
        mu: s.mu,
        sigma: s.sigma,
        iterations: s.iterations,
    })
}

#[wasm_bindgen]
pub fn neighborhood_positions(norm: &str, radius: f64) -> Result<Vec<i32>, JsError> {
    neighborhood(norm, radius).map_err(|e| JsError::new(&e))
}
