//! Experiment configuration: JSON-serializable, flag-overridable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::CoefficientVariant;

/// Recovery / baseline methods the driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Mixed-norm sparse recovery.
    Scs,
    /// Monte Carlo sample statistics.
    Mc,
    /// Least squares on the same operator (requires `m >= N`).
    Ols,
    /// The high-sample reference itself (emitted with its floor estimate).
    Reference,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Scs => "scs",
            Method::Mc => "mc",
            Method::Ols => "ols",
            Method::Reference => "reference",
        }
    }
}

/// Solver settings used by the experiment driver.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Number of decades in the penalty-weight grid scanned by
    /// cross-validated discrepancy selection.
    pub mu_grid_decades: usize,
    pub tol_fixed_point: f64,
    pub tol_kkt: f64,
    pub max_iter: usize,
    /// Fraction of samples held out for the discrepancy selection.
    pub validation_fraction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            mu_grid_decades: 7,
            tol_fixed_point: 1e-8,
            tol_kkt: 1e-6,
            max_iter: 50_000,
            validation_fraction: 0.2,
        }
    }
}

/// Full pipeline configuration. The pipeline is a pure function of this
/// value: two runs with equal configs produce byte-identical outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Parametric dimension `d`.
    pub dimension: usize,
    /// Total degree `p` of the polynomial subspace.
    pub degree: u32,
    /// Interior grid nodes `K` of the spatial discretization.
    pub spatial_nodes: usize,
    /// Sample counts (stochastic degrees of freedom), strictly increasing.
    pub sdof_schedule: Vec<usize>,
    pub trials: usize,
    /// Base RNG seed; trial `t` draws with `seed + t`, the reference with
    /// `seed - 1`.
    pub seed: u64,
    pub variant: CoefficientVariant,
    pub correlation_length: f64,
    /// Scales every fluctuation amplitude (0 gives the deterministic
    /// coefficient; 1 is the standard model).
    pub amplitude_scale: f64,
    pub solver: SolverSettings,
    /// Tail estimate for residual-constrained recovery; `None` selects the
    /// penalty weight by cross-validated discrepancy instead.
    pub eta: Option<f64>,
    pub methods: Vec<Method>,
    /// The reference uses `reference_factor * max(sdof_schedule)` samples.
    pub reference_factor: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dimension: 8,
            degree: 2,
            spatial_nodes: 63,
            sdof_schedule: vec![20, 40, 80, 160],
            trials: 24,
            seed: 7,
            variant: CoefficientVariant::Affine,
            correlation_length: 0.5,
            amplitude_scale: 1.0,
            solver: SolverSettings::default(),
            eta: None,
            methods: vec![Method::Scs, Method::Mc],
            reference_factor: 100,
            output_dir: PathBuf::from("hvcs_output"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if self.spatial_nodes == 0 {
            return Err(Error::InvalidConfig("spatial_nodes must be at least 1".into()));
        }
        if self.sdof_schedule.is_empty() {
            return Err(Error::InvalidConfig("sdof_schedule must be nonempty".into()));
        }
        if self.sdof_schedule[0] == 0 {
            return Err(Error::InvalidConfig("sample counts must be positive".into()));
        }
        if self.sdof_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sdof_schedule must be strictly increasing".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("at least one trial required".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "eta must be positive when given, got {eta}; omit it for the unconstrained path"
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method required".into()));
        }
        if self.methods.contains(&Method::Reference) {
            return Err(Error::InvalidConfig(
                "the reference is built implicitly; do not list it as a method".into(),
            ));
        }
        let f = self.solver.validation_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction must be in (0, 1), got {f}"
            )));
        }
        if self.solver.mu_grid_decades == 0 {
            return Err(Error::InvalidConfig("mu_grid_decades must be at least 1".into()));
        }
        if self.reference_factor == 0 {
            return Err(Error::InvalidConfig("reference_factor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(config)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(path, e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// File stem embedding the experiment identity, e.g.
    /// `scs_mc_d8_p2_lc0.5`.
    pub fn file_stem(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        format!(
            "{}_d{}_p{}_lc{}",
            methods.join("_"),
            self.dimension,
            self.degree,
            self.correlation_length
        )
    }
}
