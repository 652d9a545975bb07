//! Scenario ingestion from JSON.
//!
//! Every key is optional; the defaults reproduce the rooftop reference
//! scene (8×8 BS, 6×6 RIS, 4×4 UE, nodes at (0,0,26)/(0,0.5,25.5)/
//! (2,2,24)/(3,3,30), Γ = 2, B = 20 MHz, λ = 1 cm). Angles in the file are
//! degrees; everything internal is radians.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{ArraySet, Plane, UpaConfig};
use crate::error::{Error, Result};
use crate::estimator::{CgdConfig, InitPolicy, SearchGrid, StepPolicy};
use crate::geometry::{Point3, Scenario};
use crate::rxsignal::{dbm_to_watts, default_noise_power_w};
use crate::sounding::{RisPolicy, SkySector};
use crate::Complex;

fn deg(v: f64) -> f64 {
    v.to_radians()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodesSection {
    pub bs: [f64; 3],
    pub ris: [f64; 3],
    pub ue: [f64; 3],
    pub drone: [f64; 3],
}

impl Default for NodesSection {
    fn default() -> Self {
        Self {
            bs: [0.0, 0.0, 26.0],
            ris: [0.0, 0.5, 25.5],
            ue: [2.0, 2.0, 24.0],
            drone: [3.0, 3.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub dims: [usize; 2],
    pub spacing_wl: [f64; 2],
}

impl ArraySection {
    fn new(a: usize, b: usize) -> Self {
        Self {
            dims: [a, b],
            spacing_wl: [0.5, 0.5],
        }
    }

    fn to_upa(&self, lambda: f64, plane: Plane) -> UpaConfig {
        UpaConfig {
            m_a: self.dims[0],
            m_b: self.dims[1],
            d_a: self.spacing_wl[0] * lambda,
            d_b: self.spacing_wl[1] * lambda,
            plane,
        }
    }
}

impl Default for ArraySection {
    fn default() -> Self {
        Self::new(8, 8)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraysSection {
    pub bs: ArraySection,
    pub ris: ArraySection,
    pub ue: ArraySection,
}

impl Default for ArraysSection {
    fn default() -> Self {
        Self {
            bs: ArraySection::new(8, 8),
            ris: ArraySection::new(6, 6),
            ue: ArraySection::new(4, 4),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierSection {
    pub lambda_m: f64,
    pub bandwidth_hz: f64,
    pub path_loss_exponent: f64,
}

impl Default for CarrierSection {
    fn default() -> Self {
        Self {
            lambda_m: 0.01,
            bandwidth_hz: 20e6,
            path_loss_exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub zeta_re: f64,
    pub zeta_im: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            zeta_re: 1.0,
            zeta_im: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorSection {
    pub az_deg: [f64; 2],
    pub el_deg: [f64; 2],
}

impl Default for SectorSection {
    fn default() -> Self {
        Self {
            az_deg: [0.0, 90.0],
            el_deg: [45.0, 90.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoundingSection {
    pub k: usize,
    /// "codebook" or "random-phase".
    pub ris_policy: String,
    pub sector: SectorSection,
    pub codebook_grid: [usize; 2],
    pub absorb_known_gain: bool,
}

impl Default for SoundingSection {
    fn default() -> Self {
        Self {
            k: 60,
            ris_policy: "codebook".into(),
            sector: SectorSection::default(),
            codebook_grid: [8, 8],
            absorb_known_gain: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub az_deg: [f64; 2],
    pub el_deg: [f64; 2],
    pub coarse_step_deg: f64,
    pub refine_step_deg: f64,
    pub refine_halfwidth_deg: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            az_deg: [-180.0, 180.0],
            el_deg: [0.0, 90.0],
            coarse_step_deg: 1.0,
            refine_step_deg: 0.01,
            refine_halfwidth_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    /// "exact", "backtracking", or "fixed".
    pub step_policy: String,
    pub initial_step: f64,
    /// "random" or "truth-perturbed".
    pub init: String,
    pub init_rel_sigma: f64,
    pub subtract_interference: bool,
    pub search: SearchSection,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-8,
            restarts: 8,
            step_policy: "exact".into(),
            initial_step: 1.0,
            init: "random".into(),
            init_rel_sigma: 1e-3,
            subtract_interference: true,
            search: SearchSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Explicit noise power in dBm; derived from the bandwidth when absent.
    pub sigma2_dbm: Option<f64>,
}

/// The full scenario file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub nodes: NodesSection,
    pub arrays: ArraysSection,
    pub carrier: CarrierSection,
    pub target: TargetSection,
    pub sounding: SoundingSection,
    pub estimator: EstimatorSection,
    pub noise: NoiseSection,
}

/// Everything the harness needs, resolved into internal types.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub arrays: ArraySet,
    pub slots: usize,
    pub ris_policy: RisPolicy,
    pub absorb_known_gain: bool,
    pub cgd: CgdConfig,
    pub grid: SearchGrid,
}

impl Default for Setup {
    fn default() -> Self {
        ScenarioFile::default()
            .build()
            .expect("default scenario must be valid")
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn build(&self) -> Result<Setup> {
        let lambda = self.carrier.lambda_m;
        let noise_power_w = match self.noise.sigma2_dbm {
            Some(dbm) => dbm_to_watts(dbm),
            None => default_noise_power_w(self.carrier.bandwidth_hz),
        };
        let scenario = Scenario {
            p_bs: Point3::new(self.nodes.bs[0], self.nodes.bs[1], self.nodes.bs[2]),
            p_ris: Point3::new(self.nodes.ris[0], self.nodes.ris[1], self.nodes.ris[2]),
            p_ue: Point3::new(self.nodes.ue[0], self.nodes.ue[1], self.nodes.ue[2]),
            p_drone: Point3::new(self.nodes.drone[0], self.nodes.drone[1], self.nodes.drone[2]),
            lambda,
            gamma: self.carrier.path_loss_exponent,
            zeta: Complex::new(self.target.zeta_re, self.target.zeta_im),
            bandwidth_hz: self.carrier.bandwidth_hz,
            noise_power_w,
        };
        scenario.validate()?;

        let arrays = ArraySet {
            bs: self.arrays.bs.to_upa(lambda, Plane::Yz),
            ris: self.arrays.ris.to_upa(lambda, Plane::Xy),
            ue: self.arrays.ue.to_upa(lambda, Plane::Xy),
        };
        arrays.validate()?;

        let ris_policy = match self.sounding.ris_policy.as_str() {
            "codebook" => RisPolicy::Codebook {
                sector: SkySector {
                    azimuth: (deg(self.sounding.sector.az_deg[0]), deg(self.sounding.sector.az_deg[1])),
                    elevation: (
                        deg(self.sounding.sector.el_deg[0]),
                        deg(self.sounding.sector.el_deg[1]),
                    ),
                },
                grid: (self.sounding.codebook_grid[0], self.sounding.codebook_grid[1]),
            },
            "random-phase" => RisPolicy::RandomPhase,
            other => {
                return Err(Error::InvalidParameter {
                    name: "sounding.ris_policy",
                    reason: format!("unknown policy {other:?}"),
                })
            }
        };

        let est = &self.estimator;
        let step_policy = match est.step_policy.as_str() {
            "exact" => StepPolicy::ExactLineSearch,
            "backtracking" => StepPolicy::Backtracking {
                initial_step: est.initial_step,
            },
            "fixed" => StepPolicy::Fixed {
                step: est.initial_step,
            },
            other => {
                return Err(Error::InvalidParameter {
                    name: "estimator.step_policy",
                    reason: format!("unknown policy {other:?}"),
                })
            }
        };
        let init_policy = match est.init.as_str() {
            "random" => InitPolicy::Random,
            "truth-perturbed" => InitPolicy::TruthPerturbed {
                rel_sigma: est.init_rel_sigma,
            },
            other => {
                return Err(Error::InvalidParameter {
                    name: "estimator.init",
                    reason: format!("unknown policy {other:?}"),
                })
            }
        };
        let cgd = CgdConfig {
            max_iters: est.max_iters,
            tol: est.tol,
            restarts: est.restarts,
            step_policy,
            init_policy,
            subtract_known_interference: est.subtract_interference,
        };
        cgd.validate()?;

        let grid = SearchGrid {
            az_range: (deg(est.search.az_deg[0]), deg(est.search.az_deg[1])),
            el_range: (deg(est.search.el_deg[0]), deg(est.search.el_deg[1])),
            coarse_step: deg(est.search.coarse_step_deg),
            refine_step: deg(est.search.refine_step_deg),
            refine_halfwidth: deg(est.search.refine_halfwidth_deg),
        };
        grid.validate()?;

        if self.sounding.k < 1 {
            return Err(Error::InvalidParameter {
                name: "sounding.k",
                reason: "need at least one slot".into(),
            });
        }

        Ok(Setup {
            scenario,
            arrays,
            slots: self.sounding.k,
            ris_policy,
            absorb_known_gain: self.sounding.absorb_known_gain,
            cgd,
            grid,
        })
    }
}
