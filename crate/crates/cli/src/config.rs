//! Experiment configuration files. Keys carry their units: `_energy`, `_time`,
//! `_inv_energy`, `_dimensionless`.

use std::path::{Path, PathBuf};

use kmslab::models::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Unknown keys are rejected at both levels, so misspelled or unit-less keys fail to parse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    /// Defaults to a random (2,3)-local two-qubit model with seed 1.
    pub model: ModelSpec,
    pub jumps: JumpChoice,
    pub beta_inv_energy: f64,
    pub seed: Option<u64>,
    /// Relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
}

/// Keys shared by every experiment kind.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    #[serde(default = "default_model")]
    model: ModelSpec,
    #[serde(default)]
    jumps: JumpChoice,
    #[serde(default = "one")]
    beta_inv_energy: f64,
    seed: Option<u64>,
    output_dir: PathBuf,
}

const COMMON_KEYS: [&str; 5] = ["model", "jumps", "beta_inv_energy", "seed", "output_dir"];

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut rest = serde_json::Map::deserialize(de)?;
        let common: serde_json::Map<String, serde_json::Value> =
            COMMON_KEYS.iter().filter_map(|k| rest.remove(*k).map(|v| (k.to_string(), v))).collect();
        let c = Common::deserialize(serde_json::Value::Object(common)).map_err(D::Error::custom)?;
        let experiment = Experiment::deserialize(serde_json::Value::Object(rest)).map_err(D::Error::custom)?;
        Ok(ExperimentConfig { experiment, model: c.model, jumps: c.jumps, beta_inv_energy: c.beta_inv_energy, seed: c.seed, output_dir: c.output_dir })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpChoice {
    #[default]
    SingleSitePaulis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub gamma0_energy: f64,
    pub sigma_c_energy: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig { gamma0_energy: 0.1, sigma_c_energy: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GapFamily {
    GaussianKappa { kappa_grid_dimensionless: Vec<f64> },
    MacroBathAlpha {
        alpha_grid_dimensionless: Vec<f64>,
        #[serde(default)]
        bath: BathConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorChoice {
    Gaussian {
        kappa_dimensionless: f64,
    },
    MacroBath {
        alpha_dimensionless: f64,
        #[serde(default)]
        bath: BathConfig,
    },
    Davies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaChoice {
    Quadrature { n_nodes: Option<usize> },
    /// Sampled ω and jumps; the top-level seed drives the streams.
    MonteCarlo { n_samples: usize },
}

impl Default for OmegaChoice {
    fn default() -> Self {
        OmegaChoice::Quadrature { n_nodes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    GapSweep {
        sweep: GapFamily,
    },
    Monotonicity {
        #[serde(default = "default_kappa_grid")]
        kappa_grid_dimensionless: Vec<f64>,
        /// Optional second sweep over the macroscopic-bath coupling.
        alpha_grid_dimensionless: Option<Vec<f64>>,
        #[serde(default)]
        bath: BathConfig,
    },
    RiScaling {
        alpha_grid_dimensionless: Vec<f64>,
        kappa_dimensionless: f64,
        #[serde(default = "six")]
        t_pulse_over_kappa_beta_dimensionless: f64,
        #[serde(default = "default_phase")]
        max_phase_per_step_dimensionless: f64,
        #[serde(default)]
        omega: OmegaChoice,
    },
    RiFixedPoint {
        alpha_dimensionless: f64,
        kappa_grid_dimensionless: Vec<f64>,
        #[serde(default = "default_epsilon")]
        epsilon_dimensionless: f64,
        #[serde(default = "six")]
        t_pulse_over_kappa_beta_dimensionless: f64,
    },
    MbDemo {
        alpha_dimensionless: f64,
        t_max_time: f64,
        #[serde(default = "default_nt")]
        n_time_points: usize,
        #[serde(default)]
        bath: BathConfig,
    },
    DaviesCompare {
        alpha_grid_dimensionless: Vec<f64>,
        /// Defaults to five relaxation times of the Davies generator at the largest α.
        t_max_time: Option<f64>,
        #[serde(default = "default_nt")]
        n_time_points: usize,
        #[serde(default = "default_random_probes")]
        n_random_probes: usize,
        #[serde(default)]
        bath: BathConfig,
    },
    Mlsi {
        generator: GeneratorChoice,
        #[serde(default = "default_mlsi_probes")]
        n_probes: usize,
    },
    Validate {},
}

fn default_model() -> ModelSpec {
    ModelSpec::RandomKlLocal { n_qubits: 2, k: 2, l: 3, h_energy: 1.0, seed: 1 }
}
fn one() -> f64 {
    1.0
}
fn six() -> f64 {
    6.0
}
fn default_phase() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    1e-2
}
fn default_nt() -> usize {
    50
}
fn default_random_probes() -> usize {
    10
}
fn default_mlsi_probes() -> usize {
    200
}
fn default_kappa_grid() -> Vec<f64> {
    kmslab::suite::KAPPA_GRID.to_vec()
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GapSweep { .. } => "gap-sweep",
            Experiment::Monotonicity { .. } => "monotonicity",
            Experiment::RiScaling { .. } => "ri-scaling",
            Experiment::RiFixedPoint { .. } => "ri-fixed-point",
            Experiment::MbDemo { .. } => "mb-demo",
            Experiment::DaviesCompare { .. } => "davies-compare",
            Experiment::Mlsi { .. } => "mlsi",
            Experiment::Validate {} => "validate",
        }
    }

    /// Kinds whose results depend on random draws beyond the model itself.
    fn is_stochastic(&self) -> bool {
        !matches!(self, Experiment::GapSweep { .. } | Experiment::Monotonicity { .. } | Experiment::Validate {})
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::ConfigParse(format!("{name} must be nonempty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(CliError::ConfigParse(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config. The second value is `output_dir` resolved
    /// against the file's directory; the config itself keeps the path as written.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_str(&text)?;
        let out = if cfg.output_dir.is_relative() {
            path.parent().unwrap_or(Path::new(".")).join(&cfg.output_dir)
        } else {
            cfg.output_dir.clone()
        };
        Ok((cfg, out))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.beta_inv_energy >= 0.0) || !self.beta_inv_energy.is_finite() {
            return Err(CliError::ConfigParse("beta_inv_energy must be finite and nonnegative".into()));
        }
        if self.experiment.is_stochastic() && self.seed.is_none() {
            return Err(CliError::ConfigParse(format!("experiment {} draws random states and needs a seed", self.experiment.kind())));
        }
        match &self.experiment {
            Experiment::GapSweep { sweep: GapFamily::GaussianKappa { kappa_grid_dimensionless: g } } => check_grid("kappa_grid_dimensionless", g),
            Experiment::GapSweep { sweep: GapFamily::MacroBathAlpha { alpha_grid_dimensionless: g, .. } } => check_grid("alpha_grid_dimensionless", g),
            Experiment::Monotonicity { kappa_grid_dimensionless, alpha_grid_dimensionless, .. } => {
                check_grid("kappa_grid_dimensionless", kappa_grid_dimensionless)?;
                match alpha_grid_dimensionless {
                    Some(g) => check_grid("alpha_grid_dimensionless", g),
                    None => Ok(()),
                }
            }
            Experiment::RiScaling { alpha_grid_dimensionless, omega, .. } => {
                check_grid("alpha_grid_dimensionless", alpha_grid_dimensionless)?;
                if alpha_grid_dimensionless.len() < 2 {
                    return Err(CliError::ConfigParse("alpha_grid_dimensionless needs at least two points for a slope".into()));
                }
                if let OmegaChoice::MonteCarlo { n_samples: 0 } = omega {
                    return Err(CliError::ConfigParse("n_samples must be positive".into()));
                }
                Ok(())
            }
            Experiment::RiFixedPoint { kappa_grid_dimensionless, .. } => check_grid("kappa_grid_dimensionless", kappa_grid_dimensionless),
            Experiment::MbDemo { t_max_time, n_time_points, .. } => {
                if !(*t_max_time >= 0.0) || *n_time_points == 0 {
                    return Err(CliError::ConfigParse("t_max_time must be nonnegative and n_time_points positive".into()));
                }
                Ok(())
            }
            Experiment::DaviesCompare { alpha_grid_dimensionless, n_time_points, .. } => {
                check_grid("alpha_grid_dimensionless", alpha_grid_dimensionless)?;
                if *n_time_points == 0 {
                    return Err(CliError::ConfigParse("n_time_points must be positive".into()));
                }
                Ok(())
            }
            Experiment::Mlsi { n_probes, .. } => {
                if *n_probes < 100 {
                    return Err(CliError::ConfigParse("n_probes must be at least 100".into()));
                }
                Ok(())
            }
            Experiment::Validate {} => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_monotonicity() {
        let cfg = ExperimentConfig::from_str(r#"{"experiment": "monotonicity", "output_dir": "out"}"#).unwrap();
        assert_eq!(cfg.experiment.kind(), "monotonicity");
        assert_eq!(cfg.beta_inv_energy, 1.0);
        assert_eq!(cfg.model, default_model());
        let back = ExperimentConfig::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn seed_required_for_sampling() {
        let text = r#"{"experiment": "ri-scaling", "alpha_grid_dimensionless": [0.1, 0.2], "kappa_dimensionless": 2,
                       "omega": {"mode": "monte_carlo", "n_samples": 100}, "output_dir": "o"}"#;
        assert!(matches!(ExperimentConfig::from_str(text), Err(CliError::ConfigParse(_))));
    }

    #[test]
    fn unit_less_keys_rejected() {
        let text = r#"{"experiment": "monotonicity", "beta": 1.0, "output_dir": "o"}"#;
        assert!(matches!(ExperimentConfig::from_str(text), Err(CliError::ConfigParse(_))));
        let text = r#"{"experiment": "mlsi", "generator": {"family": "gaussian", "kappa": 2}, "seed": 1, "output_dir": "o"}"#;
        assert!(matches!(ExperimentConfig::from_str(text), Err(CliError::ConfigParse(_))));
        let text = r#"{"experiment": "gap-sweep", "sweep": {"family": "gaussian_kappa", "kappa_grid_dimensionless": []}, "output_dir": "o"}"#;
        assert!(matches!(ExperimentConfig::from_str(text), Err(CliError::ConfigParse(_))));
    }
}
