//! Estimation of acoustic scatterer size distributions from backscatter
//! coefficients.
//!
//! The pipeline: a partial-wave elastic-sphere model ([`faran`]) feeds a
//! bank of size-specific normalized form factors ([`bank`]); simulated
//! bead phantoms ([`phantom`]) produce total spectra with known ground
//! truth; two linear-inverse solvers ([`estimator`]) recover each size's
//! contribution; [`evaluation`] scores the estimates and runs the seeded
//! noise-robustness experiment. See the crate examples for one runnable
//! program per capability.

pub mod bank;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod export;
pub mod faran;
pub mod phantom;

pub use bank::{build_bank, build_bank_with, load_bank, save_bank, FormFactorBank, FrequencyGrid, SizeGrid};
pub use error::{Error, Result};
pub use estimator::{
    estimate_constrained, estimate_unconstrained, normalize_distribution, select_suppression,
    weights_to_number_density, Method, SizeDistributionEstimate, SuppressionMode,
    SuppressionPolicy,
};
pub use evaluation::{estimable_size_range, evaluate, noise_sweep, EstimableRange, EvaluationReport};
pub use faran::{
    backscatter_cross_section, spherical_bessel_j, spherical_bessel_y, AcousticMaterials,
    ScatteringEvaluation, SizeConvention,
};
pub use phantom::{
    add_noise, discretize_distribution, synthesize_phantom, FractionSemantics, GroundTruth,
    PhantomSpec, PhantomSynthesis, SizeDistribution, SizeDistributionSpec, SpectrumKind,
    SpectrumVector,
};
