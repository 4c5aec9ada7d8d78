//! Run configuration: the model schema of the core crate plus run settings.

use std::path::{Path, PathBuf};

use fixen::boundary::ShootOptions;
use fixen::config::{DomainConfig, ModelConfig};
use fixen::dynamics::FlowOptions;
use fixen::inverse::{MisfitWeights, Optimizer};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Boundary points per sweep.
    #[serde(default = "Grids::boundary_default")]
    pub boundary: usize,
    /// Interior points per axis for field grids.
    #[serde(default = "Grids::interior_default")]
    pub interior: usize,
    /// Pairs closer than `cutoff_frac · diam` are skipped.
    #[serde(default = "Grids::cutoff_default")]
    pub cutoff_frac: f64,
    /// Sampling resolution of field norms and threshold constants; 64 in 2D, 32 in 3D when absent.
    #[serde(default)]
    pub norm_resolution: Option<usize>,
}

impl Grids {
    fn boundary_default() -> usize {
        24
    }
    fn interior_default() -> usize {
        16
    }
    fn cutoff_default() -> f64 {
        0.05
    }
}

impl Default for Grids {
    fn default() -> Self {
        Grids { boundary: 24, interior: 16, cutoff_frac: 0.05, norm_resolution: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::rtol_default")]
    pub rtol: f64,
    #[serde(default = "Tolerances::atol_default")]
    pub atol: f64,
    /// Terminal miss accepted by the shooting solver.
    #[serde(default = "Tolerances::shoot_default")]
    pub shoot: f64,
    /// Finite-difference step for first derivatives.
    #[serde(default = "Tolerances::fd_default")]
    pub fd_step: f64,
}

impl Tolerances {
    fn rtol_default() -> f64 {
        1e-12
    }
    fn atol_default() -> f64 {
        1e-14
    }
    fn shoot_default() -> f64 {
        1e-11
    }
    fn fd_default() -> f64 {
        1e-4
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-12, atol: 1e-14, shoot: 1e-11, fd_step: 1e-4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub x: Vec<f64>,
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Explicit starts; when empty, `samples` random interior starts are drawn.
    #[serde(default)]
    pub starts: Vec<Start>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Integration time; `5δ/c` when absent. Trajectories stop at the boundary.
    #[serde(default)]
    pub duration: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub pairs: Option<usize>,
    #[serde(default)]
    pub interior_pairs: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Second model for the uniqueness estimate; the model itself when absent.
    #[serde(default)]
    pub compare: Option<ModelConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Observed boundary dataset (CSV), relative to the configuration file.
    pub data: PathBuf,
    #[serde(default)]
    pub potential: Vec<BumpConfig>,
    #[serde(default)]
    pub magnetic: Vec<BumpConfig>,
    #[serde(default = "yes")]
    pub free_centers: bool,
    pub initial: Vec<f64>,
    #[serde(default)]
    pub truth: Option<Vec<f64>>,
    #[serde(default = "nelder_mead")]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub weights: Option<WeightConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub k: f64,
    pub k0: f64,
    #[serde(default)]
    pub s: f64,
}

fn yes() -> bool {
    true
}

fn nelder_mead() -> Optimizer {
    Optimizer::NelderMead
}

const TOP_LEVEL_KEYS: [&str; 19] = [
    "dim",
    "c",
    "mode",
    "potential",
    "magnetic",
    "domain",
    "energy",
    "energies",
    "allow_below_threshold",
    "grids",
    "tolerances",
    "seed",
    "jobs",
    "output",
    "input",
    "scattering_samples",
    "simulate",
    "verify",
    "reconstruct",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    /// Working energy; the threshold `E*` when absent.
    #[serde(default)]
    pub energy: Option<f64>,
    /// Energy ladder for the thresholds report.
    #[serde(default)]
    pub energies: Vec<f64>,
    /// Permits energies below `E*`.
    #[serde(default)]
    pub allow_below_threshold: bool,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; does not affect results.
    #[serde(default, skip_serializing)]
    pub jobs: Option<usize>,
    /// Output directory; like `jobs`, not part of the hash.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    /// Dataset read by `convert`, relative to the configuration file.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Samples drawn by `scattering-sweep`.
    #[serde(default)]
    pub scattering_samples: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub reconstruct: Option<ReconstructConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let bad = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
        let raw: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
        // `flatten` switches off `deny_unknown_fields`, so top-level keys are checked here
        if let Some(obj) = raw.as_object() {
            if let Some(k) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
                return Err(CliError::Config(format!("{}: unknown field `{k}`", path.display())));
            }
        }
        let cfg: RunConfig = serde_json::from_value(raw).map_err(bad)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [("rtol", t.rtol), ("atol", t.atol), ("shoot", t.shoot), ("fd_step", t.fd_step), ("cutoff_frac", self.grids.cutoff_frac)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if self.grids.boundary < 3 || self.grids.interior < 1 {
            return Err(CliError::Config("grids are too small".into()));
        }
        if let Some(e) = self.energy {
            if !e.is_finite() {
                return Err(CliError::Config("energy must be finite".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        fixen::io::config_hash(&serde_json::to_vec(self).expect("config serialises"))
    }

    pub fn domain_config(&self) -> DomainConfig {
        self.domain.clone().unwrap_or_else(|| DomainConfig::unit_ball(self.model.dim))
    }

    pub fn norm_resolution(&self) -> usize {
        self.grids.norm_resolution.unwrap_or(if self.model.dim == 2 { 64 } else { 32 })
    }

    pub fn flow_options(&self) -> FlowOptions<f64> {
        FlowOptions::with_tolerances(self.tolerances.rtol, self.tolerances.atol)
    }

    pub fn shoot_options(&self) -> ShootOptions<f64> {
        ShootOptions { flow: self.flow_options(), tol: self.tolerances.shoot, ..ShootOptions::default() }
    }

    pub fn weights(&self) -> MisfitWeights {
        match self.reconstruct.as_ref().and_then(|r| r.weights.clone()) {
            Some(w) => MisfitWeights { k: w.k, k0: w.k0, s: w.s, ..MisfitWeights::default() },
            None => MisfitWeights::default(),
        }
    }
}
