//! Run configuration: a flat TOML file with one table per concern.

use std::path::{Path, PathBuf};

use pipeshape::geometry::{MeshGrading, DEFAULT_FAMILY_OFFSETS};
use pipeshape::optimizer::DescentConfig;
use pipeshape::{FluidParams, Mode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Name of the resolved configuration written next to every output set.
pub const RESOLVED_CONFIG: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub out: PathBuf,
    /// Every run is deterministic; kept in the file as a record.
    pub deterministic: bool,
    pub params: FluidParams,
    pub mesh: MeshConfig,
    pub family: FamilyConfig,
    pub gradcheck: GradcheckConfig,
    pub optimizer: DescentConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Axisym,
            out: PathBuf::from("out"),
            deterministic: true,
            params: FluidParams::default(),
            mesh: MeshConfig::default(),
            family: FamilyConfig::default(),
            gradcheck: GradcheckConfig::default(),
            optimizer: DescentConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    pub grading_ratio: f64,
    pub grading_band: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        let g = MeshGrading::default();
        Self { h: 0.05, grading_ratio: g.ratio, grading_band: g.band }
    }
}

impl MeshConfig {
    pub fn grading(&self) -> MeshGrading {
        MeshGrading { ratio: self.grading_ratio, band: self.grading_band }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Control offsets `a_1..a_K` of the spline family.
    pub offsets: Vec<f64>,
    /// Amplitude used by `solve`, `adjoint` and `gradcheck` (0 is the cylinder).
    pub e: f64,
    /// Sweep grid `e_max k / (e_steps - 1)`, `k = 0..e_steps`.
    pub e_max: f64,
    pub e_steps: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { offsets: DEFAULT_FAMILY_OFFSETS.to_vec(), e: 0.0, e_max: 0.01, e_steps: 21 }
    }
}

impl FamilyConfig {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.e_steps.max(2);
        (0..n).map(|k| self.e_max * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    /// Finite-difference steps, coarse first.
    pub t: Vec<f64>,
    /// Project the basis onto volume-preserving perturbations.
    pub volume_preserving: bool,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self { t: vec![1e-3, 1e-4], volume_preserving: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub slabs: usize,
    pub psi_samples: usize,
    pub beta_divisions: usize,
    pub divergence_tol: f64,
    pub non_affinity_min: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { slabs: 8, psi_samples: 33, beta_divisions: 32, divergence_tol: 5e-3, non_affinity_min: 1e-3 }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub h: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        if let Some(m) = overrides.mode {
            cfg.mode = m;
        }
        if let Some(h) = overrides.h {
            cfg.mesh.h = h;
        }
        if let Some(o) = &overrides.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.mesh.h > 0.0) || !self.mesh.h.is_finite() {
            return Err(CliError::Config(format!("mesh size must be positive, got {}", self.mesh.h)));
        }
        if self.family.offsets.is_empty() {
            return Err(CliError::Config("family.offsets must not be empty".into()));
        }
        if self.gradcheck.t.is_empty() || self.gradcheck.t.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::Config("gradcheck.t must be a list of positive steps".into()));
        }
        if self.verify.slabs == 0 || self.verify.beta_divisions < 2 {
            return Err(CliError::Config("verify.slabs and verify.beta_divisions must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}
