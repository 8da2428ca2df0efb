//! Experiment configuration files.
//!
//! A config is a TOML document holding one instance, an optional experiment
//! section and the choice of `kappa`. Unknown keys are rejected and relative
//! paths resolve against the config's own directory.

use std::fs;
use std::path::{Path, PathBuf};

use depbandits::estimation::{kappa_floor, kappa_surrogate};
use depbandits::harness::ExperimentConfig;
use depbandits::instance::{
    certify_instance, BanditInstance, CertifyOptions, ClusterSpec, InstanceSpec, StructuralConstants,
};
use depbandits::models::DEFAULT_SIMPLEX_FLOOR;
use depbandits::{Family, ParameterSpace, PolicyKind, PolicySettings};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub output_dir: Option<PathBuf>,
    pub instance: InstanceSection,
    pub experiment: Option<ExperimentSection>,
    pub kappa: Option<KappaSetting>,
    pub kappa_floor: Option<KappaFloorSection>,
    pub certify: Option<CertifySection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    /// Default grid step for every cluster space.
    pub grid_step: Option<f64>,
    pub arms: Vec<Family<f64>>,
    pub clusters: Vec<ClusterSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub arms: Vec<usize>,
    pub theta: Vec<f64>,
    pub space: SpaceSection,
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSection {
    Interval { lower: f64, upper: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    SimplexInterior { dim: usize, floor: Option<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "one")]
    pub recompute_every: u64,
    #[serde(default)]
    pub realized_regret: bool,
    #[serde(default)]
    pub audit: bool,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum KappaSetting {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaFloorSection {
    pub l_p: Option<f64>,
    pub sigma: Option<f64>,
    pub m: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub kl_floor: Option<f64>,
    pub min_lb: Option<f64>,
}

/// How `kappa` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSource {
    Value,
    Floor,
    Surrogate,
}

/// Command-line replacement for the config's `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub enum KappaOverride {
    Value(f64),
    Floor,
    Surrogate,
}

impl std::str::FromStr for KappaOverride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "floor" => Ok(Self::Floor),
            "surrogate" => Ok(Self::Surrogate),
            other => other
                .parse::<f64>()
                .map(Self::Value)
                .map_err(|_| format!("expected a number, `floor` or `surrogate`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub path: PathBuf,
    pub dir: PathBuf,
    /// Raw bytes, for hashing.
    pub bytes: Vec<u8>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = fs::read(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| config_error(format!("{} is not UTF-8: {e}", path.display())))?;
    let file = parse(text).map_err(|e| match e {
        CliError::Config(msg) => config_error(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        file,
        path: path.to_path_buf(),
        dir,
        bytes,
    })
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(config_error(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(file)
}

impl SpaceSection {
    fn build(&self, step: Option<f64>) -> depbandits::Result<ParameterSpace<f64>> {
        let space = match self {
            SpaceSection::Interval { lower, upper } => ParameterSpace::interval(*lower, *upper)?,
            SpaceSection::Box { lower, upper } => ParameterSpace::boxed(lower.clone(), upper.clone())?,
            SpaceSection::SimplexInterior { dim, floor } => {
                ParameterSpace::simplex_interior(*dim, floor.unwrap_or(DEFAULT_SIMPLEX_FLOOR))?
            }
        };
        match step {
            Some(s) => space.with_grid_step(s),
            None => Ok(space),
        }
    }
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    /// `--out` if given, else the config's `output_dir`.
    pub fn output_dir(&self, cli: Option<&Path>) -> Result<PathBuf, CliError> {
        match (cli, &self.file.output_dir) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(p)) => Ok(self.resolve(p)),
            (None, None) => Err(config_error("no output directory: set `output_dir` or pass --out")),
        }
    }

    pub fn instance(&self) -> Result<BanditInstance<f64>, CliError> {
        let inst = &self.file.instance;
        let clusters = inst
            .clusters
            .iter()
            .enumerate()
            .map(|(c, cl)| {
                let space = cl
                    .space
                    .build(cl.grid_step.or(inst.grid_step))
                    .map_err(|e| config_error(format!("instance.clusters[{c}].space: {e}")))?;
                Ok(ClusterSpec {
                    arms: cl.arms.clone(),
                    theta: cl.theta.clone(),
                    space,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        BanditInstance::build(InstanceSpec {
            arms: inst.arms.clone(),
            clusters,
        })
        .map_err(|e| config_error(format!("instance: {e}")))
    }

    pub fn certify_options(&self) -> CertifyOptions {
        let mut opts = CertifyOptions::default();
        if let Some(c) = &self.file.certify {
            if let Some(v) = c.kl_floor {
                opts.kl_floor = v;
            }
            if let Some(v) = c.min_lb {
                opts.min_lb = v;
            }
        }
        opts
    }

    pub fn experiment(&self) -> Result<&ExperimentSection, CliError> {
        self.file
            .experiment
            .as_ref()
            .ok_or_else(|| config_error("missing [experiment] section"))
    }

    fn floor_inputs(&self) -> Result<(f64, f64, u32), CliError> {
        let f = self.file.kappa_floor.clone().unwrap_or_default();
        let mut missing = Vec::new();
        if f.l_p.is_none() {
            missing.push("l_p");
        }
        if f.sigma.is_none() {
            missing.push("sigma");
        }
        if f.m.is_none() {
            missing.push("m");
        }
        match (f.l_p, f.sigma, f.m) {
            (Some(l), Some(s), Some(m)) => Ok((l, s, m)),
            _ => Err(config_error(format!(
                "kappa = \"floor\" needs [kappa_floor] fields: {}",
                missing.join(", ")
            ))),
        }
    }

    /// The `kappa` to use, and certified constants when they were needed.
    pub fn kappa(
        &self,
        instance: &BanditInstance<f64>,
        cli: Option<&KappaOverride>,
    ) -> Result<ResolvedKappa, CliError> {
        let choice = match cli {
            Some(c) => c.clone(),
            None => match &self.file.kappa {
                Some(KappaSetting::Value(v)) => KappaOverride::Value(*v),
                Some(KappaSetting::Named(s)) => match s.as_str() {
                    "floor" => KappaOverride::Floor,
                    "surrogate" => KappaOverride::Surrogate,
                    other => {
                        return Err(config_error(format!(
                            "kappa: expected a number, \"floor\" or \"surrogate\", got \"{other}\""
                        )))
                    }
                },
                None if self.file.kappa_floor.is_some() => KappaOverride::Floor,
                None => {
                    return Err(config_error(
                        "missing `kappa`: give a positive number, \"surrogate\", or \"floor\" \
                         together with [kappa_floor] fields l_p, sigma, m",
                    ))
                }
            },
        };
        match choice {
            KappaOverride::Value(v) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(config_error(format!("kappa must be positive and finite, got {v}")));
                }
                Ok(ResolvedKappa {
                    value: v,
                    source: KappaSource::Value,
                    constants: None,
                })
            }
            KappaOverride::Floor => {
                let (l_p, sigma, m) = self.floor_inputs()?;
                let constants = certify_instance(instance, &self.certify_options())?;
                let value = kappa_floor(instance, &constants, l_p, sigma, m)?;
                Ok(ResolvedKappa {
                    value,
                    source: KappaSource::Floor,
                    constants: Some(constants),
                })
            }
            KappaOverride::Surrogate => {
                let constants = certify_instance(instance, &self.certify_options())?;
                let value = kappa_surrogate(instance, &constants);
                Ok(ResolvedKappa {
                    value,
                    source: KappaSource::Surrogate,
                    constants: Some(constants),
                })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedKappa {
    pub value: f64,
    pub source: KappaSource,
    pub constants: Option<StructuralConstants<f64>>,
}

/// Command-line replacements for experiment settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub reps: Option<u64>,
    pub audit: bool,
    pub threads: Option<usize>,
}

pub fn experiment_config(section: &ExperimentSection, kappa: f64, o: &Overrides) -> ExperimentConfig<f64> {
    let horizon = o.horizon.unwrap_or(section.horizon);
    // an explicit checkpoint list only survives a horizon override if it still ends there
    let checkpoints = section.checkpoints.clone().map(|mut cps| {
        if o.horizon.is_some() {
            cps.retain(|&t| t < horizon);
            cps.push(horizon);
        }
        cps
    });
    ExperimentConfig {
        policies: section.policies.clone(),
        horizon,
        replications: o.reps.unwrap_or(section.replications),
        base_seed: o.seed.unwrap_or(section.seed),
        settings: PolicySettings {
            kappa,
            recompute_every: section.recompute_every,
        },
        checkpoints,
        realized_regret: section.realized_regret,
        audit: o.audit || section.audit,
        threads: o.threads,
    }
}
