//! Ground-truth phantom synthesis: a physical bead description plus a
//! parametric size distribution become a total backscatter spectrum, its
//! form factor and the exact weight vector an estimator should recover.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bank::{FormFactorBank, FrequencyGrid, SizeGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean_um: f64,
    pub std_um: f64,
    pub weight: f64,
}

/// Parametric size distribution, realized on a size grid by sampling the
/// density at the grid points and normalizing to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeDistribution {
    UnimodalGaussian { mean_um: f64, std_um: f64 },
    Uniform { lo_um: f64, hi_um: f64 },
    BimodalGaussianMixture { components: Vec<GaussianComponent> },
    PointMass { size_um: f64 },
    Explicit { probabilities: Vec<f64> },
}

/// Whether the distribution's fractions count beads or bead mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionSemantics {
    NumberFraction,
    MassFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDistributionSpec {
    #[serde(flatten)]
    pub distribution: SizeDistribution,
    #[serde(default = "default_semantics")]
    pub fraction_semantics: FractionSemantics,
}

fn default_semantics() -> FractionSemantics {
    FractionSemantics::NumberFraction
}

/// Physical phantom: bead mass (g), volume (L), materials and the size
/// distribution of the beads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub bead_mass_g: f64,
    pub volume_l: f64,
    pub materials: crate::faran::AcousticMaterials,
    pub distribution: SizeDistributionSpec,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.bead_mass_g > 0.0) || !(self.volume_l > 0.0) {
            return Err(Error::Config(
                "bead mass and phantom volume must be positive".into(),
            ));
        }
        self.materials.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Bsc,
    FormFactor,
}

/// A spectrum sampled on a frequency grid; either a raw backscatter
/// coefficient or a max-normalized form factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumVector {
    pub frequencies: FrequencyGrid,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

impl SpectrumVector {
    pub fn new(frequencies: FrequencyGrid, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if values.len() != frequencies.len() {
            return Err(Error::GridMismatch(format!(
                "spectrum has {} values for {} frequencies",
                values.len(),
                frequencies.len()
            )));
        }
        Ok(SpectrumVector {
            frequencies,
            values,
            kind,
        })
    }

    /// Rescale to unit maximum; returns the scale divided out.
    pub fn to_unit_max(&self) -> Result<(SpectrumVector, f64)> {
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::Domain(
                "cannot normalize a spectrum with non-positive maximum".into(),
            ));
        }
        let values = self.values.iter().map(|v| v / max).collect();
        Ok((
            SpectrumVector {
                frequencies: self.frequencies.clone(),
                values,
                kind: self.kind,
            },
            max,
        ))
    }
}

/// The exact answer for a synthesized phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Beads per cm^3 per size bin.
    pub number_densities: Vec<f64>,
    /// Weight vector satisfying weights * bank_matrix = form_factor.
    pub weights: Vec<f64>,
    /// Clip-and-normalize view of the weights.
    pub probabilities: Vec<f64>,
}

/// Everything `synthesize_phantom` produces; `form_factor_scale` is the
/// maximum of BSC/f^4 divided out when normalizing the form factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSynthesis {
    pub bsc: SpectrumVector,
    pub form_factor: SpectrumVector,
    pub form_factor_scale: f64,
    pub truth: GroundTruth,
}

fn gaussian_density(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

/// Evaluate the distribution's density at the grid points and normalize
/// to sum 1. A point mass maps to the nearest grid size.
pub fn discretize_distribution(spec: &SizeDistributionSpec, sizes: &SizeGrid) -> Result<Vec<f64>> {
    let grid = sizes.values();
    let mut density = vec![0.0; grid.len()];
    match &spec.distribution {
        SizeDistribution::UnimodalGaussian { mean_um, std_um } => {
            if !(*std_um > 0.0) {
                return Err(Error::Config("gaussian std must be positive".into()));
            }
            for (d, &s) in density.iter_mut().zip(grid) {
                *d = gaussian_density(s, *mean_um, *std_um);
            }
        }
        SizeDistribution::Uniform { lo_um, hi_um } => {
            if !(hi_um > lo_um) {
                return Err(Error::Config("uniform bounds must satisfy lo < hi".into()));
            }
            for (d, &s) in density.iter_mut().zip(grid) {
                if s >= *lo_um && s <= *hi_um {
                    *d = 1.0;
                }
            }
        }
        SizeDistribution::BimodalGaussianMixture { components } => {
            if components.len() != 2 {
                return Err(Error::Config(
                    "bimodal mixture needs exactly two components".into(),
                ));
            }
            for c in components {
                if !(c.std_um > 0.0) || !(c.weight >= 0.0) {
                    return Err(Error::Config(
                        "mixture components need positive std and non-negative weight".into(),
                    ));
                }
                for (d, &s) in density.iter_mut().zip(grid) {
                    *d += c.weight * gaussian_density(s, c.mean_um, c.std_um);
                }
            }
        }
        SizeDistribution::PointMass { size_um } => {
            let step = grid
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            let in_reach = if grid.len() == 1 {
                true
            } else {
                *size_um >= grid[0] - step && *size_um <= grid[grid.len() - 1] + step
            };
            if !in_reach {
                return Err(Error::EmptySupport);
            }
            density[sizes.nearest_index(*size_um)] = 1.0;
        }
        SizeDistribution::Explicit { probabilities } => {
            if probabilities.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "explicit distribution has {} entries for {} grid sizes",
                    probabilities.len(),
                    grid.len()
                )));
            }
            if probabilities.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(Error::Config(
                    "explicit probabilities must be finite and non-negative".into(),
                ));
            }
            density.copy_from_slice(probabilities);
        }
    }
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptySupport);
    }
    for d in density.iter_mut() {
        *d /= total;
    }
    Ok(density)
}

/// Mass of one bead of diameter `d_um` (g) at density `rho` (g/cm^3).
fn bead_mass_g(d_um: f64, rho: f64) -> f64 {
    let d_cm = d_um * 1e-4;
    rho * std::f64::consts::PI / 6.0 * d_cm.powi(3)
}

/// Realize the phantom on the bank's grids.
///
/// Bead counts follow the declared fraction semantics: number fractions
/// share the total mass in proportion to per-size counts, mass fractions
/// split the mass directly. BSC_T(f) = sum_i n_i sigma(size_i, f); the
/// form factor is BSC_T / f^4 max-normalized with the same rule as the
/// bank rows.
pub fn synthesize_phantom(phantom: &PhantomSpec, bank: &FormFactorBank) -> Result<PhantomSynthesis> {
    phantom.validate()?;
    if phantom.materials != bank.materials {
        return Err(Error::MaterialMismatch);
    }
    let sizes = bank.sizes();
    let freqs = bank.frequencies();
    let probabilities = discretize_distribution(&phantom.distribution, sizes)?;

    let rho = phantom.materials.sphere_density;
    let volume_cm3 = phantom.volume_l * 1000.0;

    let counts: Vec<f64> = match phantom.distribution.fraction_semantics {
        FractionSemantics::NumberFraction => {
            let mass_per_unit: f64 = probabilities
                .iter()
                .zip(sizes.values())
                .map(|(p, &d)| p * bead_mass_g(d, rho))
                .sum();
            let total_count = phantom.bead_mass_g / mass_per_unit;
            probabilities.iter().map(|p| p * total_count).collect()
        }
        FractionSemantics::MassFraction => probabilities
            .iter()
            .zip(sizes.values())
            .map(|(p, &d)| p * phantom.bead_mass_g / bead_mass_g(d, rho))
            .collect(),
    };
    let number_densities: Vec<f64> = counts.iter().map(|c| c / volume_cm3).collect();

    // BSC from the bank's own cross-sections, reconstructed through the
    // stored row scales so the ground-truth identity holds exactly.
    let mut bsc_values = vec![0.0; freqs.len()];
    for (i, row) in bank.matrix().iter().enumerate() {
        let n_i = number_densities[i];
        if n_i == 0.0 {
            continue;
        }
        let s_i = bank.row_scales()[i];
        for (j, (&ff, &f)) in row.iter().zip(freqs.values()).enumerate() {
            bsc_values[j] += n_i * ff * s_i * f.powi(4);
        }
    }
    let bsc = SpectrumVector::new(freqs.clone(), bsc_values.clone(), SpectrumKind::Bsc)?;

    let ff_raw: Vec<f64> = bsc_values
        .iter()
        .zip(freqs.values())
        .map(|(b, &f)| b / f.powi(4))
        .collect();
    let s_t = ff_raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(s_t > 0.0) {
        return Err(Error::Domain(
            "synthesized form factor has non-positive maximum".into(),
        ));
    }
    let form_factor = SpectrumVector::new(
        freqs.clone(),
        ff_raw.iter().map(|v| v / s_t).collect(),
        SpectrumKind::FormFactor,
    )?;

    let weights: Vec<f64> = number_densities
        .iter()
        .zip(bank.row_scales())
        .map(|(n, s)| n * s / s_t)
        .collect();
    let total_pos: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    let probabilities_view: Vec<f64> = weights
        .iter()
        .map(|w| if *w > 0.0 { w / total_pos } else { 0.0 })
        .collect();

    Ok(PhantomSynthesis {
        bsc,
        form_factor,
        form_factor_scale: s_t,
        truth: GroundTruth {
            number_densities,
            weights,
            probabilities: probabilities_view,
        },
    })
}

/// Add iid zero-mean Gaussian noise to a BSC spectrum.
///
/// The draw is a ChaCha8 stream seeded with `seed`, so identical inputs
/// give byte-identical outputs on every platform. Negative noisy values
/// are kept as-is; the linear solve downstream tolerates them. The
/// variance is meant relative to a unit-maximum BSC (see `to_unit_max`).
pub fn add_noise(spectrum: &SpectrumVector, variance: f64, seed: u64) -> Result<SpectrumVector> {
    if spectrum.kind != SpectrumKind::Bsc {
        return Err(Error::Domain(
            "noise is added to BSC spectra, not form factors".into(),
        ));
    }
    if !(variance >= 0.0) {
        return Err(Error::Domain(format!(
            "noise variance must be non-negative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(spectrum.clone());
    }
    let sd = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = spectrum
        .values
        .iter()
        .map(|v| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            v + sd * eps
        })
        .collect();
    SpectrumVector::new(spectrum.frequencies.clone(), values, SpectrumKind::Bsc)
}
