//! The `simulate`, `bounds`, `certify` and `plot` commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use depbandits::bounds::{bound_report, BoundOptions, BoundReport};
use depbandits::harness::{run_monte_carlo, write_aggregate_csv, write_traces_csv, RunTrace};
use depbandits::instance::{certify_instance, pinsker_bounds, StructuralConstants};
use depbandits::{BanditInstance, Family, PolicyKind};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{self, KappaOverride, KappaSource, LoadedConfig, Overrides};
use crate::plot;
use crate::CliError;

/// Version of the CSV and JSON layouts written by this build.
pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

pub const TRACES_FILE: &str = "traces.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const AUDIT_FILE: &str = "audit.jsonl";
pub const BOUNDS_FILE: &str = "bounds.json";
pub const CONSTANTS_FILE: &str = "constants.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(runtime)?;
    v.push(b'\n');
    Ok(v)
}

/// Files written by one command; removed again if the command fails.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), CliError> {
    let mut out = Outputs::open(dir)?;
    for (name, bytes) in files {
        if let Err(e) = out.write(name, bytes) {
            out.discard();
            return Err(e);
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Versions {
    depbandits: &'static str,
    depbandits_cli: &'static str,
}

const VERSIONS: Versions = Versions {
    depbandits: depbandits::VERSION,
    depbandits_cli: env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Serialize)]
struct InstanceSummary {
    arms: usize,
    clusters: usize,
    best_arm: usize,
    mu_star: f64,
}

impl InstanceSummary {
    fn of(inst: &BanditInstance<f64>) -> Self {
        Self {
            arms: inst.num_arms(),
            clusters: inst.num_clusters(),
            best_arm: inst.best_arm(),
            mu_star: inst.mu_star(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Effective {
    policies: Vec<PolicyKind>,
    horizon: u64,
    replications: u64,
    base_seed: u64,
    seeds: Vec<u64>,
    kappa: f64,
    kappa_source: KappaSource,
    recompute_every: u64,
    checkpoints: Vec<u64>,
    realized_regret: bool,
    audit: bool,
}

#[derive(Debug, Serialize)]
struct Manifest {
    schema_version: u32,
    command: &'static str,
    config_file: String,
    config_sha256: String,
    versions: Versions,
    instance: InstanceSummary,
    effective: Effective,
    /// SHA-256 of every other file written.
    outputs: BTreeMap<String, String>,
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct AuditLine<'a> {
    policy: PolicyKind,
    seed: u64,
    round: u64,
    arm: usize,
    phase: depbandits::policies::Phase,
    indices: Option<&'a [f64]>,
    reward: f64,
}

fn audit_jsonl(traces: &[RunTrace<f64>]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    for tr in traces {
        for rec in tr.audit.iter().flatten() {
            let line = AuditLine {
                policy: tr.policy,
                seed: tr.seed,
                round: rec.round,
                arm: rec.arm,
                phase: rec.phase,
                indices: rec.indices.as_deref(),
                reward: rec.reward,
            };
            serde_json::to_writer(&mut out, &line).map_err(runtime)?;
            out.push(b'\n');
        }
    }
    Ok(out)
}

pub struct SimulateRequest<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub kappa: Option<&'a KappaOverride>,
    pub overrides: Overrides,
}

/// Runs the configured Monte Carlo experiment and writes traces, aggregates,
/// a manifest and optionally the per-round audit log.
pub fn simulate(req: &SimulateRequest<'_>) -> Result<PathBuf, CliError> {
    let cfg = config::load(req.config)?;
    let out_dir = cfg.output_dir(req.out)?;
    let inst = cfg.instance()?;
    let section = cfg.experiment()?;
    let kappa = cfg.kappa(&inst, req.kappa)?;
    let exp = config::experiment_config(section, kappa.value, &req.overrides);
    exp.validate(&inst)?;

    let result = run_monte_carlo(&inst, &exp)?;
    let mut traces = Vec::new();
    write_traces_csv(&mut traces, &result.traces)?;
    let mut aggregate = Vec::new();
    write_aggregate_csv(&mut aggregate, &result.aggregate)?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![(TRACES_FILE, traces), (AGGREGATE_FILE, aggregate)];
    if exp.audit {
        files.push((AUDIT_FILE, audit_jsonl(&result.traces)?));
    }

    let manifest = Manifest {
        schema_version: OUTPUT_SCHEMA_VERSION,
        command: "simulate",
        config_file: file_name(&cfg.path),
        config_sha256: sha256_hex(&cfg.bytes),
        versions: VERSIONS,
        instance: InstanceSummary::of(&inst),
        effective: Effective {
            policies: exp.policies.clone(),
            horizon: exp.horizon,
            replications: exp.replications,
            base_seed: exp.base_seed,
            seeds: exp.seeds().collect(),
            kappa: kappa.value,
            kappa_source: kappa.source,
            recompute_every: exp.settings.recompute_every,
            checkpoints: exp.effective_checkpoints(inst.num_arms()),
            realized_regret: exp.realized_regret,
            audit: exp.audit,
        },
        outputs: files.iter().map(|(n, b)| (n.to_string(), sha256_hex(b))).collect(),
    };
    files.push((MANIFEST_FILE, to_json(&manifest)?));
    write_all(&out_dir, &files)?;
    Ok(out_dir)
}

#[derive(Debug, Serialize)]
struct BoundsDocument {
    schema_version: u32,
    config_sha256: String,
    kappa_source: KappaSource,
    report: BoundReport<f64>,
}

/// Evaluates the lower and upper regret-bound coefficients and writes them as JSON.
pub fn bounds(
    config: &Path,
    out: Option<&Path>,
    kappa: Option<&KappaOverride>,
    analytic: bool,
) -> Result<PathBuf, CliError> {
    let cfg = config::load(config)?;
    let out_dir = cfg.output_dir(out)?;
    let inst = cfg.instance()?;
    let k = cfg.kappa(&inst, kappa)?;
    let constants = match k.constants {
        Some(c) => c,
        None => certify_instance(&inst, &cfg.certify_options())?,
    };
    let report = bound_report(&inst, &constants, k.value, &BoundOptions { analytic })?;
    let doc = BoundsDocument {
        schema_version: OUTPUT_SCHEMA_VERSION,
        config_sha256: sha256_hex(&cfg.bytes),
        kappa_source: k.source,
        report,
    };
    write_all(&out_dir, &[(BOUNDS_FILE, to_json(&doc)?)])?;
    Ok(out_dir)
}

#[derive(Debug, Serialize)]
struct PairEntry {
    pair: (usize, usize),
    lb: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ClusterEntry {
    cluster: usize,
    arm_ids: Vec<usize>,
    grid_step: f64,
    grid_points: usize,
    pairs: Vec<PairEntry>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    #[serde(rename = "Sigma")]
    sigma: Vec<f64>,
    #[serde(rename = "Gamma")]
    gamma: Vec<f64>,
    violations: Vec<(usize, usize)>,
    /// Closed-form constants for finite-support clusters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pinsker: Option<(f64, f64)>,
}

#[derive(Debug, Serialize)]
struct ConstantsDocument {
    schema_version: u32,
    config_sha256: String,
    satisfies_assumption: bool,
    #[serde(rename = "B")]
    b: f64,
    clusters: Vec<ClusterEntry>,
}

fn constants_document(
    inst: &BanditInstance<f64>,
    constants: &StructuralConstants<f64>,
    config_sha256: String,
) -> Result<ConstantsDocument, CliError> {
    let clusters = constants
        .clusters
        .iter()
        .map(|c| {
            let finite = c
                .arm_ids
                .iter()
                .all(|&a| matches!(inst.arm(a).family(), Family::FiniteSupportLinear { .. }));
            let pinsker = if finite {
                Some(pinsker_bounds(inst, c.cluster)?)
            } else {
                None
            };
            Ok(ClusterEntry {
                cluster: c.cluster,
                arm_ids: c.arm_ids.clone(),
                grid_step: c.grid_step,
                grid_points: c.grid_points,
                pairs: c.pairs.iter().map(|p| PairEntry { pair: p.pair, lb: p.lb }).collect(),
                b: c.b.clone(),
                sigma: c.sigma.clone(),
                gamma: c.gamma.clone(),
                violations: c.violations.clone(),
                pinsker,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(ConstantsDocument {
        schema_version: OUTPUT_SCHEMA_VERSION,
        config_sha256,
        satisfies_assumption: constants.satisfies_assumption(),
        b: constants.b_max(),
        clusters,
    })
}

/// Certifies the structural constants; fails with the certification exit
/// status when some pair has a vanishing equivalence constant.
pub fn certify(config: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let cfg: LoadedConfig = config::load(config)?;
    let out_dir = cfg.output_dir(out)?;
    let inst = cfg.instance()?;
    let constants = certify_instance(&inst, &cfg.certify_options())?;
    let doc = constants_document(&inst, &constants, sha256_hex(&cfg.bytes))?;
    write_all(&out_dir, &[(CONSTANTS_FILE, to_json(&doc)?)])?;
    if !doc.satisfies_assumption {
        let pairs: Vec<String> = doc
            .clusters
            .iter()
            .flat_map(|c| c.violations.iter().map(|(j, i)| format!("({j}, {i})")))
            .collect();
        return Err(CliError::Certification(format!(
            "equivalence constant at or below the minimum for arm pairs {}",
            pairs.join(", ")
        )));
    }
    Ok(out_dir)
}

/// Renders an aggregate CSV as an SVG chart.
pub fn plot(input: &Path, output: &Path) -> Result<(), CliError> {
    let text =
        fs::read_to_string(input).map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let series = plot::read_aggregate(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", input.display())),
        other => other,
    })?;
    let svg = plot::render_svg(&series);
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(output, svg).map_err(|e| runtime(format!("cannot write {}: {e}", output.display())))?;
    Ok(())
}
