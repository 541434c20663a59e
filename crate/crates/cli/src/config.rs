//! Declarative run configuration.
//!
//! A run is described by one TOML file with five optional sections:
//!
//! ```toml
//! [model]
//! family = "multiplicative"            # "example1" | "multiplicative" | "tabulated"
//! signal = { kind = "uniform", lo = 1.0, hi = 2.0 }
//! shock = { lo = 0.5, hi = 1.0 }       # multiplicative families only
//! # path = "family.csv"                # tabulated families only
//!
//! [environment]
//! alpha = 0.5
//! cost = 1.0
//! gamma = 0.0
//! # spot_price = 2.0
//!
//! [grids]
//! theta_points = 101
//! v_points = 101
//! q_oracle_points = 10001
//!
//! [tolerances]
//! root = 1e-10
//! integration = 1e-10
//! ic = 1e-7
//! monotone = 1e-9
//!
//! [outputs]
//! directory = "out"
//! formats = ["csv", "json"]
//! ```
//!
//! Every section (and the file itself) may be omitted; the defaults
//! reproduce the built-in reference model. Signals may also be overlapping
//! uniform mixtures:
//!
//! ```toml
//! [model.signal]
//! kind = "mixture"
//! components = [[1.0, 1.5, 1.0], [1.4, 2.0, 1.0]]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use seqscreen::model::{MultiplicativeFamily, ShockDistribution, TabulatedFamily};
use seqscreen::{
    Environment, Error, Model, Result, SignalDistribution, SolveOptions, Tolerances,
};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub environment: EnvironmentConfig,
    pub grids: GridConfig,
    pub tolerances: ToleranceConfig,
    pub outputs: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub family: FamilyKind,
    pub signal: Option<SignalConfig>,
    pub shock: Option<Interval>,
    pub path: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: FamilyKind::Example1,
            signal: None,
            shock: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// The built-in reference model: uniform signal on [1, 2], value
    /// `theta * z` with a uniform shock on [1/2, 1].
    Example1,
    /// `v = theta * z` with a uniform shock; signal bounds set the scale.
    Multiplicative,
    /// A generic family loaded from a tabulation CSV.
    Tabulated,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    Uniform { lo: f64, hi: f64 },
    Mixture { components: Vec<(f64, f64, f64)> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentConfig {
    pub alpha: f64,
    pub cost: f64,
    pub gamma: f64,
    pub spot_price: Option<f64>,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig {
            alpha: 0.5,
            cost: 1.0,
            gamma: 0.0,
            spot_price: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub theta_points: usize,
    pub v_points: usize,
    pub q_oracle_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            theta_points: 101,
            v_points: 101,
            q_oracle_points: 10_001,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub root: f64,
    pub integration: f64,
    pub ic: f64,
    pub monotone: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            root: 1e-10,
            integration: 1e-10,
            ic: 1e-7,
            monotone: 1e-9,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl OutputConfig {
    pub fn writes(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidDomain(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for format in &self.outputs.formats {
            if format != "csv" && format != "json" {
                return Err(Error::InvalidDomain(format!(
                    "unknown output format {format:?} (expected \"csv\" or \"json\")"
                )));
            }
        }
        Ok(())
    }

    /// Builds the model. Relative tabulation paths resolve against
    /// `base_dir` (the config file's directory).
    pub fn build_model(&self, base_dir: &Path) -> Result<Model> {
        let mut env = Environment::new(self.environment.alpha, self.environment.cost)?
            .with_gamma(self.environment.gamma)?;
        if let Some(p) = self.environment.spot_price {
            env = env.with_spot_price(p)?;
        }
        match self.model.family {
            FamilyKind::Example1 => {
                let signal = SignalDistribution::uniform(1.0, 2.0)?;
                let shock = ShockDistribution::uniform(0.5, 1.0)?;
                let family = MultiplicativeFamily::new(shock, 1.0, 2.0)?;
                Model::new(env, signal, Arc::new(family))
            }
            FamilyKind::Multiplicative => {
                let signal = self.build_signal()?;
                let (lo, hi) = (signal.lo(), signal.hi());
                let shock = self.model.shock.ok_or_else(|| {
                    Error::InvalidDomain(
                        "multiplicative families need [model] shock = { lo, hi }".into(),
                    )
                })?;
                let family = MultiplicativeFamily::new(
                    ShockDistribution::uniform(shock.lo, shock.hi)?,
                    lo,
                    hi,
                )?;
                Model::new(env, signal, Arc::new(family))
            }
            FamilyKind::Tabulated => {
                let signal = self.build_signal()?;
                let rel = self.model.path.as_ref().ok_or_else(|| {
                    Error::InvalidDomain("tabulated families need [model] path".into())
                })?;
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base_dir.join(rel)
                };
                let family = TabulatedFamily::from_path(path)?;
                Model::new(env, signal, Arc::new(family))
            }
        }
    }

    fn build_signal(&self) -> Result<SignalDistribution> {
        match self.model.signal.as_ref().ok_or_else(|| {
            Error::InvalidDomain("this model family needs a [model] signal".into())
        })? {
            SignalConfig::Uniform { lo, hi } => SignalDistribution::uniform(*lo, *hi),
            SignalConfig::Mixture { components } => {
                SignalDistribution::uniform_mixture(components)
            }
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            theta_points: self.grids.theta_points,
            v_points: self.grids.v_points,
            tolerances: Tolerances {
                root: self.tolerances.root,
                integration: self.tolerances.integration,
                monotone_slack: self.tolerances.monotone,
                ..Tolerances::default()
            },
        }
    }
}
