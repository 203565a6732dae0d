//! Simulation and inference for pairwise-interaction Markov random fields on
//! two-dimensional lattices, plus hidden MRF segmentation with Gaussian
//! emissions.

pub mod error;
pub mod estimators;
pub mod exact;
pub mod field;
pub mod hmrf;
pub mod interactions;
pub mod io;
pub mod kernel;
pub mod model_spec;
pub mod optim;
pub mod potentials;
pub mod render;
pub mod report;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use estimators::{fit_pl, fit_sa, select_interactions, MrfFit, SaSettings};
pub use field::{DiscreteField, PixelRegion, RealField};
pub use hmrf::{fit_ghm, BasisSet, GhmSettings, HmrfFit, MixtureParams};
pub use interactions::{InteractionStructure, Norm, Offset};
pub use model_spec::ModelSpec;
pub use potentials::{Family, PotentialArray};
pub use sampler::{sample_conditional, sample_mrf, InitialField, SamplerConfig};
