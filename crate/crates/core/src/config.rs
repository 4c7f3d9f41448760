//! Run configuration. Every field defaults to the glass-bead phantom
//! setup, so an empty config document reproduces the reference bank and
//! the four stock phantoms.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bank::{FrequencyGrid, SizeGrid};
use crate::error::{Error, Result};
use crate::estimator::{SuppressionPolicy, DEFAULT_RCOND};
use crate::faran::AcousticMaterials;
use crate::phantom::{
    FractionSemantics, GaussianComponent, PhantomSpec, SizeDistribution, SizeDistributionSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeGridSpec {
    pub min_um: f64,
    pub max_um: f64,
    pub step_um: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGridSpec {
    pub min_mhz: f64,
    pub max_mhz: f64,
    pub step_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomConfig {
    pub name: String,
    pub bead_mass_g: f64,
    pub volume_l: f64,
    pub distribution: SizeDistributionSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub variance: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub materials: AcousticMaterials,
    pub size_grid: SizeGridSpec,
    pub frequency_grid: FrequencyGridSpec,
    pub phantoms: Vec<PhantomConfig>,
    pub policy: SuppressionPolicy,
    pub rcond: f64,
    pub noise: NoiseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            materials: AcousticMaterials::glass_beads_in_gel(),
            size_grid: SizeGridSpec {
                min_um: 1.0,
                max_um: 100.0,
                step_um: 1.0,
            },
            frequency_grid: FrequencyGridSpec {
                min_mhz: 3.0,
                max_mhz: 9.0,
                step_mhz: 0.1,
            },
            phantoms: default_phantoms(),
            policy: SuppressionPolicy::default(),
            rcond: DEFAULT_RCOND,
            noise: NoiseConfig {
                variance: 1e-5,
                trials: 100,
                seed: 42,
            },
        }
    }
}

fn gaussian(name: &str, mean: f64, std: f64) -> PhantomConfig {
    PhantomConfig {
        name: name.into(),
        bead_mass_g: 200.0,
        volume_l: 1.6,
        distribution: SizeDistributionSpec {
            distribution: SizeDistribution::UnimodalGaussian {
                mean_um: mean,
                std_um: std,
            },
            fraction_semantics: FractionSemantics::NumberFraction,
        },
    }
}

/// The four stock phantoms: two unimodal Gaussians, one uniform, one
/// bimodal mixture, all inside the estimable band.
pub fn default_phantoms() -> Vec<PhantomConfig> {
    vec![
        gaussian("unimodal_narrow", 40.0, 5.0),
        gaussian("unimodal_broad", 60.0, 10.0),
        PhantomConfig {
            name: "uniform".into(),
            bead_mass_g: 200.0,
            volume_l: 1.6,
            distribution: SizeDistributionSpec {
                distribution: SizeDistribution::Uniform {
                    lo_um: 25.0,
                    hi_um: 75.0,
                },
                fraction_semantics: FractionSemantics::NumberFraction,
            },
        },
        PhantomConfig {
            name: "bimodal".into(),
            bead_mass_g: 200.0,
            volume_l: 1.6,
            distribution: SizeDistributionSpec {
                distribution: SizeDistribution::BimodalGaussianMixture {
                    components: vec![
                        GaussianComponent {
                            mean_um: 30.0,
                            std_um: 4.0,
                            weight: 0.5,
                        },
                        GaussianComponent {
                            mean_um: 70.0,
                            std_um: 4.0,
                            weight: 0.5,
                        },
                    ],
                },
                fraction_semantics: FractionSemantics::NumberFraction,
            },
        },
    ]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let config: RunConfig = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        Ok(config)
    }

    pub fn size_grid(&self) -> Result<SizeGrid> {
        SizeGrid::from_range(
            self.size_grid.min_um,
            self.size_grid.max_um,
            self.size_grid.step_um,
        )
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::from_range(
            self.frequency_grid.min_mhz,
            self.frequency_grid.max_mhz,
            self.frequency_grid.step_mhz,
        )
    }

    pub fn phantom_spec(&self, phantom: &PhantomConfig) -> PhantomSpec {
        PhantomSpec {
            bead_mass_g: phantom.bead_mass_g,
            volume_l: phantom.volume_l,
            materials: self.materials,
            distribution: phantom.distribution.clone(),
        }
    }
}
