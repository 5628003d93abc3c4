//! Experiment configuration files.
//!
//! One experiment per TOML file, e.g.
//!
//! ```toml
//! [experiment]
//! name = "l2-bias-linear"
//! method = "traditional"   # none | traditional | es | nce | pool
//! model = "linear"         # linear | quadratic; ignored by nce
//! mode = "bias"            # bias | zero
//! repeats = 20
//! seed = 2024
//! output = "l2-bias-linear.csv"
//!
//! [hamiltonian]
//! fcidump = "../crates/core/data/h4_rect_1.5_1.8_sto3g.fcidump"
//!
//! [ansatz]
//! layers = 2
//!
//! [theta]
//! source = "file"          # file | optimize
//! file = "angles_L2.txt"
//!
//! [noise]
//! p1 = 1e-3
//! p2 = 1e-2
//!
//! [scan]
//! variable = "N"           # N | k | M | N_s
//! values = [10, 50, 153]
//!
//! [fixed]
//! k = 4
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cdr::ModelFamily;
use crate::circuit::CliffordMode;
use crate::density::NoiseModel;
use crate::error::{Error, Result};
use crate::vqe::VqeOptions;

pub const DEFAULT_REPEATS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// No mitigation: report the raw noisy value.
    None,
    Traditional,
    /// Energy sampling.
    Es,
    /// Non-Clifford extrapolation.
    Nce,
    /// Mean exact and noisy energies of per-k training pools.
    Pool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanVariable {
    /// Training-set size (per-k count for NCE).
    N,
    /// Retained non-Clifford parameters (`k_max` for NCE).
    #[serde(rename = "k")]
    K,
    /// Energy-sampling pool size.
    M,
    /// Alias of `N` for NCE recipes.
    #[serde(rename = "N_s")]
    Ns,
}

impl std::fmt::Display for ScanVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScanVariable::N => "N",
            ScanVariable::K => "k",
            ScanVariable::M => "M",
            ScanVariable::Ns => "N_s",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaSource {
    Optimize,
    File,
}

fn default_repeats() -> usize {
    DEFAULT_REPEATS
}

fn default_model() -> ModelFamily {
    ModelFamily::Linear
}

fn default_mode() -> CliffordMode {
    CliffordMode::Bias
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub method: Method,
    #[serde(default = "default_model")]
    pub model: ModelFamily,
    #[serde(default = "default_mode")]
    pub mode: CliffordMode,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub fcidump: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSection {
    pub source: ThetaSource,
    pub file: Option<PathBuf>,
}

impl Default for ThetaSection {
    fn default() -> Self {
        Self { source: ThetaSource::Optimize, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub variable: ScanVariable,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSection {
    pub k: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub hamiltonian: HamiltonianSection,
    pub ansatz: AnsatzSection,
    #[serde(default)]
    pub theta: ThetaSection,
    #[serde(default)]
    pub noise: NoiseModel,
    pub scan: ScanSection,
    #[serde(default)]
    pub fixed: FixedSection,
    #[serde(default)]
    pub vqe: VqeOptions,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Pipeline parameters at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Point {
    pub scan: usize,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub k_min: usize,
    pub k_max: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn fcidump_path(&self) -> PathBuf {
        self.resolve(&self.hamiltonian.fcidump)
    }

    pub fn theta_path(&self) -> Option<PathBuf> {
        self.theta.file.as_deref().map(|p| self.resolve(p))
    }

    fn need(&self, value: Option<usize>, key: &str) -> Result<usize> {
        value.ok_or_else(|| {
            Error::Config(format!(
                "method {:?} scanning {} needs fixed.{key}",
                self.experiment.method, self.scan.variable
            ))
        })
    }

    /// Resolves the pipeline parameters at scan value `v`. Parameters the
    /// method does not use are reported as 0.
    pub fn point(&self, v: usize) -> Result<Point> {
        use ScanVariable as S;
        let f = &self.fixed;
        let var = match self.scan.variable {
            S::Ns => S::N,
            other => other,
        };
        let pick = |which: S, fixed: Option<usize>, key: &str| -> Result<usize> {
            if var == which {
                Ok(v)
            } else {
                self.need(fixed, key)
            }
        };
        let mut p = Point { scan: v, k: 0, n: 0, m: 0, k_min: 0, k_max: 0 };
        match self.experiment.method {
            Method::None => {}
            Method::Traditional => {
                p.k = pick(S::K, f.k, "k")?;
                p.n = pick(S::N, f.n, "N")?;
            }
            Method::Es => {
                p.k = pick(S::K, f.k, "k")?;
                p.n = pick(S::N, f.n, "N")?;
                p.m = pick(S::M, f.m, "M")?;
                if p.n > p.m {
                    return Err(Error::Config(format!(
                        "energy sampling needs N <= M, got N = {} and M = {}",
                        p.n, p.m
                    )));
                }
            }
            Method::Nce => {
                p.k_min = self.need(f.k_min, "k_min")?;
                p.k_max = pick(S::K, f.k_max, "k_max")?;
                p.n = pick(S::N, f.n, "N")?;
                if p.k_min < 1 || p.k_min > p.k_max {
                    return Err(Error::Config(format!(
                        "NCE needs 1 <= k_min <= k_max, got {}..={}",
                        p.k_min, p.k_max
                    )));
                }
            }
            Method::Pool => {
                p.k = pick(S::K, f.k, "k")?;
                p.n = pick(S::N, f.n, "N")?;
            }
        }
        let unused = match (self.experiment.method, var) {
            (Method::None, _) => false,
            (Method::Traditional | Method::Pool, S::M) => true,
            (Method::Nce, S::M) => true,
            _ => false,
        };
        if unused {
            return Err(Error::Config(format!(
                "scan variable {} does not apply to method {:?}",
                self.scan.variable, self.experiment.method
            )));
        }
        if self.experiment.method != Method::None && p.n == 0 {
            return Err(Error::Config("training-set size N must be at least 1".into()));
        }
        Ok(p)
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.repeats == 0 {
            return Err(Error::Config("experiment.repeats must be at least 1".into()));
        }
        if self.ansatz.layers == 0 {
            return Err(Error::Config("ansatz.layers must be at least 1".into()));
        }
        if e.method != Method::Nce && e.model == ModelFamily::Nce {
            return Err(Error::Config(
                "model = \"nce\" is implied by method = \"nce\" and not valid otherwise".into(),
            ));
        }
        let v = &self.scan.values;
        if v.is_empty() {
            return Err(Error::Config("scan.values is empty".into()));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("scan.values must be strictly increasing".into()));
        }
        if self.theta.source == ThetaSource::File && self.theta.file.is_none() {
            return Err(Error::Config("theta.source = \"file\" needs theta.file".into()));
        }
        self.noise
            .validate()
            .map_err(|err| Error::Config(err.to_string()))?;
        for &x in v {
            self.point(x)?;
        }
        Ok(())
    }
}
