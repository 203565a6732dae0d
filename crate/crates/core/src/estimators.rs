//! Parameter estimation: maximum pseudo-likelihood and stochastic
//! approximation to the maximum likelihood estimate.

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::interactions::InteractionStructure;
use crate::kernel::{log_pseudo_likelihood, pl_value_and_gradient, suff_stat};
use crate::optim::{bfgs, BfgsOptions};
use crate::potentials::{Family, PotentialArray};
use crate::rng::rng_from_seed;
use crate::sampler::GibbsSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    PseudoLikelihood,
    StochasticApproximation,
}

impl FitMethod {
    pub fn describe(self) -> &'static str {
        match self {
            FitMethod::PseudoLikelihood => "Pseudolikelihood",
            FitMethod::StochasticApproximation => "Stochastic Approximation",
        }
    }
}

/// Result of [`fit_pl`] or [`fit_sa`].
#[derive(Debug, Clone)]
pub struct MrfFit {
    pub theta: PotentialArray,
    /// Log pseudo-likelihood at the estimate (pseudo-likelihood fits only).
    pub log_pl: Option<f64>,
    /// `(iteration, ||S(z0) - S(z_t)||)` for stochastic approximation.
    pub metrics: Vec<(usize, f64)>,
    pub method: FitMethod,
    pub color_counts: Vec<usize>,
    pub dims: (usize, usize),
}

impl MrfFit {
    pub fn family(&self) -> Family {
        self.theta.family()
    }

    pub fn structure(&self) -> &InteractionStructure {
        self.theta.structure()
    }
}

fn starting_params(
    init: Option<&PotentialArray>,
    family: Family,
    structure: &InteractionStructure,
    colors: usize,
) -> Result<Vec<f64>> {
    match init {
        None => Ok(vec![0.0; family.n_params(structure.len(), colors)]),
        Some(t) => {
            if t.colors() != colors {
                return Err(Error::ColorMismatch {
                    theta: t.colors(),
                    field: colors,
                });
            }
            if t.structure().positions() != structure.positions() {
                return Err(Error::InvalidArgument("initial potentials use another structure".into()));
            }
            Ok(t.reinterpret(family)?.summarize())
        }
    }
}

/// Maximises the log pseudo-likelihood over the free parameters of `family`.
pub fn fit_pl(
    z: &DiscreteField,
    structure: &InteractionStructure,
    family: Family,
    init: Option<&PotentialArray>,
    opts: BfgsOptions,
) -> Result<MrfFit> {
    let colors = z.colors();
    if colors < 1 {
        return Err(Error::TooFewColors);
    }
    if z.color_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::NoContrast);
    }
    let x0 = starting_params(init, family, structure, colors)?;
    let mut failure = None;
    let objective = |x: &[f64]| match pl_value_and_gradient(z, x, family, structure, colors) {
        Ok((v, g)) => (-v, g.into_iter().map(|d| -d).collect()),
        Err(e) => {
            failure.get_or_insert(e);
            (f64::NAN, vec![0.0; x.len()])
        }
    };
    let res = bfgs(objective, &x0, opts);
    if let Some(e) = failure {
        return Err(e);
    }
    if !res.converged {
        return Err(Error::NotConverged {
            iterations: res.iterations,
            grad_norm: res.grad.iter().fold(0.0, |m, g| m.max(g.abs())),
            partial: res.x,
        });
    }
    let theta = PotentialArray::expand(&res.x, family, structure, colors)?;
    Ok(MrfFit {
        log_pl: Some(log_pseudo_likelihood(z, &theta)?),
        theta,
        metrics: Vec::new(),
        method: FitMethod::PseudoLikelihood,
        color_counts: z.color_counts(),
        dims: z.dims(),
    })
}

/// `B` equally spaced steps from `m` down to 0.
pub fn default_gamma(m: f64, b: usize) -> Vec<f64> {
    match b {
        0 => Vec::new(),
        1 => vec![m],
        _ => (0..b).map(|i| m - m * i as f64 / (b - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct SaSettings {
    /// Step sizes; divided by the number of active pixels internally.
    pub gamma: Vec<f64>,
    pub init: Option<PotentialArray>,
    /// Gibbs cycles between iterations.
    pub cycles: usize,
    /// Restart the chain every this many iterations; `None` never restarts.
    pub refresh_each: Option<usize>,
    /// Cycles run after a restart.
    pub refresh_cycles: usize,
    pub seed: u64,
}

impl Default for SaSettings {
    fn default() -> Self {
        Self {
            gamma: default_gamma(1.0, 300),
            init: None,
            cycles: 2,
            refresh_each: None,
            refresh_cycles: 60,
            seed: 0,
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Stochastic approximation: `theta += gamma_t / |L| * (S(z0) - S(z_t))`,
/// with `z_t` drawn by continuing a Gibbs chain started at `z0`.
pub fn fit_sa(z: &DiscreteField, structure: &InteractionStructure, family: Family, settings: &SaSettings) -> Result<MrfFit> {
    if settings.gamma.is_empty() {
        return Err(Error::EmptyGammaSequence);
    }
    if let Some(g) = settings.gamma.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("step size {g} is not a nonnegative number")));
    }
    if z.n_active() == 0 {
        return Err(Error::NoActivePixel);
    }
    if settings.refresh_each == Some(0) {
        return Err(Error::InvalidArgument("refresh_each must be positive".into()));
    }
    let colors = z.colors();
    if colors < 1 {
        return Err(Error::TooFewColors);
    }
    let mut params = starting_params(settings.init.as_ref(), family, structure, colors)?;
    let s0 = suff_stat(z, structure, family, colors)?;
    let n = z.n_active() as f64;
    let theta = PotentialArray::expand(&params, family, structure, colors)?;
    let mut chain = GibbsSampler::new(z.clone(), &theta, None, rng_from_seed(settings.seed))?;
    let mut metrics = Vec::with_capacity(settings.gamma.len());
    for (t, &gamma) in settings.gamma.iter().enumerate() {
        chain.set_theta(&PotentialArray::expand(&params, family, structure, colors)?)?;
        if settings.refresh_each.is_some_and(|e| (t + 1) % e == 0) {
            chain.randomize();
            chain.run(settings.refresh_cycles);
        } else {
            chain.run(settings.cycles);
        }
        let st = suff_stat(chain.field(), structure, family, colors)?;
        for ((p, a), b) in params.iter_mut().zip(&s0).zip(&st) {
            *p += gamma / n * (a - b);
        }
        metrics.push((t + 1, distance(&s0, &st)));
    }
    Ok(MrfFit {
        theta: PotentialArray::expand(&params, family, structure, colors)?,
        log_pl: None,
        metrics,
        method: FitMethod::StochasticApproximation,
        color_counts: z.color_counts(),
        dims: z.dims(),
    })
}

/// Largest `|theta_r(a, b)|` for every position `r`.
pub fn position_magnitudes(theta: &PotentialArray) -> Vec<f64> {
    let side = theta.colors() + 1;
    theta
        .values()
        .chunks(side * side)
        .map(|block| block.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .collect()
}

/// Fits `candidates` by stochastic approximation and keeps positions whose
/// largest absolute potential exceeds `threshold`.
pub fn select_interactions(
    z: &DiscreteField,
    candidates: &InteractionStructure,
    family: Family,
    settings: &SaSettings,
    threshold: f64,
) -> Result<(InteractionStructure, MrfFit)> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be nonnegative")));
    }
    let fit = fit_sa(z, candidates, family, settings)?;
    let keep: Vec<usize> = position_magnitudes(&fit.theta)
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > threshold)
        .map(|(k, _)| k)
        .collect();
    if keep.is_empty() {
        return Err(Error::NoInteractions(threshold));
    }
    Ok((candidates.subset(&keep)?, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::Norm;
    use crate::sampler::{sample_mrf, InitialField, SamplerConfig};

    fn nn() -> InteractionStructure {
        InteractionStructure::build(1.0, Norm::L1, &[]).unwrap()
    }

    fn potts_sample(phi: f64, size: usize, seed: u64) -> DiscreteField {
        let theta = PotentialArray::expand(&[phi], Family::OnePar, &nn(), 1).unwrap();
        sample_mrf(InitialField::Dims(size, size), &theta, &SamplerConfig::new(40, seed)).unwrap()
    }

    #[test]
    fn gamma_sequence() {
        assert_eq!(default_gamma(1.0, 5), vec![1.0, 0.75, 0.5, 0.25, 0.0]);
        assert_eq!(default_gamma(2.0, 1), vec![2.0]);
        assert!(default_gamma(1.0, 0).is_empty());
    }

    #[test]
    fn pl_is_stationary_and_deterministic() {
        let z = potts_sample(-0.6, 40, 3);
        let a = fit_pl(&z, &nn(), Family::OneEach, None, BfgsOptions::default()).unwrap();
        let b = fit_pl(&z, &nn(), Family::OneEach, None, BfgsOptions::default()).unwrap();
        assert_eq!(a.theta, b.theta);
        let (_, g) = pl_value_and_gradient(&z, &a.theta.summarize(), Family::OneEach, &nn(), 1).unwrap();
        assert!(g.iter().all(|d| d.abs() <= 1e-5));
        assert!(a.log_pl.unwrap() < 0.0);
    }

    #[test]
    fn pl_rejects_constant_field() {
        let z = DiscreteField::zeros(5, 5, 1);
        assert!(matches!(
            fit_pl(&z, &nn(), Family::OnePar, None, BfgsOptions::default()),
            Err(Error::NoContrast)
        ));
    }

    #[test]
    fn zero_steps_keep_init() {
        let z = potts_sample(-0.5, 12, 1);
        let init = PotentialArray::expand(&[-0.3, 0.2], Family::OneEach, &nn(), 1).unwrap();
        let settings = SaSettings {
            gamma: vec![0.0; 10],
            init: Some(init.clone()),
            ..SaSettings::default()
        };
        let fit = fit_sa(&z, &nn(), Family::OneEach, &settings).unwrap();
        assert_eq!(fit.theta, init);
        assert_eq!(fit.metrics.len(), 10);
        assert_eq!(fit.metrics[9].0, 10);
    }

    #[test]
    fn sa_errors() {
        let z = potts_sample(-0.5, 6, 1);
        let empty = SaSettings {
            gamma: Vec::new(),
            ..SaSettings::default()
        };
        assert!(matches!(fit_sa(&z, &nn(), Family::OnePar, &empty), Err(Error::EmptyGammaSequence)));
        let negative = SaSettings {
            gamma: vec![1.0, -1.0],
            ..SaSettings::default()
        };
        assert!(fit_sa(&z, &nn(), Family::OnePar, &negative).is_err());
    }

    #[test]
    fn sa_reproducible() {
        let z = potts_sample(-0.7, 16, 5);
        let settings = SaSettings {
            gamma: default_gamma(1.0, 30),
            refresh_each: Some(10),
            refresh_cycles: 5,
            seed: 9,
            ..SaSettings::default()
        };
        let a = fit_sa(&z, &nn(), Family::OnePar, &settings).unwrap();
        let b = fit_sa(&z, &nn(), Family::OnePar, &settings).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn selection_thresholds() {
        let z = potts_sample(-0.8, 20, 2);
        let settings = SaSettings {
            gamma: default_gamma(1.0, 20),
            ..SaSettings::default()
        };
        let (all, _) = select_interactions(&z, &nn(), Family::OneEach, &settings, 0.0).unwrap();
        assert_eq!(all.len(), 2);
        assert!(matches!(
            select_interactions(&z, &nn(), Family::OneEach, &settings, 1e6),
            Err(Error::NoInteractions(_))
        ));
    }
}
