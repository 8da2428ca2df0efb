//! Seeded episodes, Monte Carlo replication and CSV output.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{mle, ClusterHistory};
use crate::instance::{ArmId, BanditInstance, ClusterId};
use crate::policies::{Phase, PolicyKind, PolicySettings};
use crate::scalar::Real;

const REWARD_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;

/// Generator for one stream of one replication. Rewards and policy
/// randomness draw from separate streams of the same seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `{M 2^k} ∪ {2^k} ∪ {T}`, restricted to `[1, T]`.
pub fn default_checkpoints(num_arms: usize, horizon: u64) -> Vec<u64> {
    let mut out = vec![horizon];
    for base in [num_arms as u64, 1] {
        let mut t = base.max(1);
        while t <= horizon {
            out.push(t);
            t = match t.checked_mul(2) {
                Some(v) => v,
                None => break,
            };
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn validate_checkpoints(points: &[u64], horizon: u64) -> Result<()> {
    if points.is_empty() {
        return Err(Error::config("checkpoint list is empty"));
    }
    if points[0] == 0 {
        return Err(Error::config("checkpoints start at round 1"));
    }
    if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::config(format!(
            "checkpoints must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if points[points.len() - 1] != horizon {
        return Err(Error::config(format!(
            "last checkpoint must equal the horizon {horizon}, got {}",
            points[points.len() - 1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec<S> {
    pub policy: PolicyKind,
    pub horizon: u64,
    pub seed: u64,
    pub settings: PolicySettings<S>,
    pub checkpoints: Vec<u64>,
    pub realized_regret: bool,
    pub audit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord<S> {
    pub round: u64,
    pub arm: ArmId,
    pub phase: Phase,
    pub indices: Option<Vec<S>>,
    pub reward: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace<S> {
    pub policy: PolicyKind,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    /// Pseudo-regret `sum_i N_i(t) gap_i` at each checkpoint.
    pub regret: Vec<S>,
    /// `t mu* - sum of rewards` at each checkpoint, when requested.
    pub realized: Option<Vec<S>>,
    pub counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<Vec<AuditRecord<S>>>,
}

impl<S: Real> RunTrace<S> {
    /// Total plays of each cluster's arms.
    pub fn cluster_counts(&self, instance: &BanditInstance<S>) -> Vec<u64> {
        let mut out = vec![0; instance.num_clusters()];
        for (a, &n) in self.counts.iter().enumerate() {
            out[instance.cluster_of(a)] += n;
        }
        out
    }
}

pub fn pseudo_regret<S: Real>(instance: &BanditInstance<S>, counts: &[u64]) -> S {
    counts
        .iter()
        .zip(instance.gaps())
        .fold(S::zero(), |acc, (&n, &g)| acc + S::from_count(n) * g)
}

/// Runs one episode of `spec.horizon` rounds.
pub fn run_single<S: Real>(instance: &BanditInstance<S>, spec: &RunSpec<S>) -> Result<RunTrace<S>> {
    if spec.horizon < instance.num_arms() as u64 {
        return Err(Error::config(format!(
            "horizon {} is shorter than the {} initial rounds",
            spec.horizon,
            instance.num_arms()
        )));
    }
    validate_checkpoints(&spec.checkpoints, spec.horizon)?;
    let mut policy = spec.policy.build(instance, &spec.settings)?;
    let mut env = stream_rng(spec.seed, REWARD_STREAM);
    let mut prng = stream_rng(spec.seed, POLICY_STREAM);
    let prng: &mut dyn RngCore = &mut prng;

    let mut counts = vec![0u64; instance.num_arms()];
    let mut regret = Vec::with_capacity(spec.checkpoints.len());
    let mut realized = spec.realized_regret.then(|| Vec::with_capacity(spec.checkpoints.len()));
    let mut audit = spec.audit.then(Vec::new);
    let mut reward_sum = S::zero();
    let mut next = spec.checkpoints.iter().copied().peekable();

    for t in 1..=spec.horizon {
        let d = policy.select(t, prng)?;
        let theta = &instance.cluster(instance.cluster_of(d.arm)).theta_star;
        let reward = instance.arm(d.arm).sample_unchecked(theta, &mut env);
        policy.update(d.arm, reward)?;
        counts[d.arm] += 1;
        reward_sum = reward_sum + reward;
        if let Some(log) = audit.as_mut() {
            log.push(AuditRecord {
                round: t,
                arm: d.arm,
                phase: d.phase,
                indices: d.indices,
                reward,
            });
        }
        if next.peek() == Some(&t) {
            next.next();
            regret.push(pseudo_regret(instance, &counts));
            if let Some(r) = realized.as_mut() {
                r.push(S::from_count(t) * instance.mu_star() - reward_sum);
            }
        }
    }

    Ok(RunTrace {
        policy: spec.policy,
        seed: spec.seed,
        checkpoints: spec.checkpoints.clone(),
        regret,
        realized,
        counts,
        audit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<S> {
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub settings: PolicySettings<S>,
    /// `None` selects [`default_checkpoints`].
    pub checkpoints: Option<Vec<u64>>,
    pub realized_regret: bool,
    pub audit: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl<S: Real> ExperimentConfig<S> {
    pub fn new(policies: Vec<PolicyKind>, horizon: u64, replications: u64, base_seed: u64, kappa: S) -> Self {
        Self {
            policies,
            horizon,
            replications,
            base_seed,
            settings: PolicySettings {
                kappa,
                recompute_every: 1,
            },
            checkpoints: None,
            realized_regret: false,
            audit: false,
            threads: None,
        }
    }

    pub fn effective_checkpoints(&self, num_arms: usize) -> Vec<u64> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| default_checkpoints(num_arms, self.horizon))
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replications).map(|k| self.base_seed.wrapping_add(k))
    }

    pub fn validate(&self, instance: &BanditInstance<S>) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::config("no policies selected"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.horizon < instance.num_arms() as u64 {
            return Err(Error::config(format!(
                "horizon {} is below the number of arms {}",
                self.horizon,
                instance.num_arms()
            )));
        }
        if self.settings.recompute_every == 0 {
            return Err(Error::config("recompute_every must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be at least 1"));
        }
        validate_checkpoints(&self.effective_checkpoints(instance.num_arms()), self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow<S> {
    pub policy: PolicyKind,
    pub t: u64,
    pub mean: S,
    pub sd: S,
    pub ci95: S,
}

/// Mean, sample standard deviation and 95% normal half-width over
/// replications, per policy and checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult<S> {
    pub replications: u64,
    pub rows: Vec<AggregateRow<S>>,
}

impl<S: Real> AggregateResult<S> {
    pub fn series(&self, policy: PolicyKind) -> impl Iterator<Item = &AggregateRow<S>> {
        self.rows.iter().filter(move |r| r.policy == policy)
    }

    pub fn at(&self, policy: PolicyKind, t: u64) -> Option<&AggregateRow<S>> {
        self.rows.iter().find(|r| r.policy == policy && r.t == t)
    }

    pub fn final_mean(&self, policy: PolicyKind) -> Option<S> {
        self.series(policy).last().map(|r| r.mean)
    }
}

/// Summary statistics of one sample: `(mean, sd, ci95)`.
pub fn summarize<S: Real>(xs: &[S]) -> (S, S, S) {
    let n = S::from_count(xs.len() as u64);
    let mean = xs.iter().fold(S::zero(), |a, &b| a + b) / n;
    if xs.len() < 2 {
        return (mean, S::zero(), S::zero());
    }
    let ss = xs.iter().fold(S::zero(), |a, &b| a + (b - mean) * (b - mean));
    let sd = (ss / (n - S::one())).sqrt();
    (mean, sd, S::lit(1.96) * sd / n.sqrt())
}

pub fn aggregate<S: Real>(traces: &[RunTrace<S>], policies: &[PolicyKind], replications: u64) -> AggregateResult<S> {
    let mut rows = Vec::new();
    for &p in policies {
        let runs: Vec<&RunTrace<S>> = traces.iter().filter(|t| t.policy == p).collect();
        let Some(first) = runs.first() else { continue };
        for (k, &t) in first.checkpoints.iter().enumerate() {
            let xs: Vec<S> = runs.iter().map(|r| r.regret[k]).collect();
            let (mean, sd, ci95) = summarize(&xs);
            rows.push(AggregateRow {
                policy: p,
                t,
                mean,
                sd,
                ci95,
            });
        }
    }
    AggregateResult { replications, rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult<S> {
    /// Ordered by policy (config order), then replication index.
    pub traces: Vec<RunTrace<S>>,
    pub aggregate: AggregateResult<S>,
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs every policy for seeds `base_seed .. base_seed + R - 1`. The result
/// does not depend on the number of worker threads.
pub fn run_monte_carlo<S: Real>(
    instance: &BanditInstance<S>,
    config: &ExperimentConfig<S>,
) -> Result<MonteCarloResult<S>> {
    config.validate(instance)?;
    let checkpoints = config.effective_checkpoints(instance.num_arms());
    let jobs: Vec<(PolicyKind, u64)> = config
        .policies
        .iter()
        .flat_map(|&p| config.seeds().map(move |s| (p, s)))
        .collect();
    let results: Vec<Result<RunTrace<S>>> = with_pool(config.threads, || {
        jobs.par_iter()
            .map(|&(policy, seed)| {
                let spec = RunSpec {
                    policy,
                    horizon: config.horizon,
                    seed,
                    settings: config.settings,
                    checkpoints: checkpoints.clone(),
                    realized_regret: config.realized_regret,
                    audit: config.audit,
                };
                run_single(instance, &spec)
            })
            .collect()
    })?;
    let mut traces = Vec::with_capacity(results.len());
    for (r, &(_, seed)) in results.into_iter().zip(&jobs) {
        traces.push(r.map_err(|e| Error::Replication {
            seed,
            source: Box::new(e),
        })?);
    }
    let aggregate = aggregate(&traces, &config.policies, config.replications);
    Ok(MonteCarloResult { traces, aggregate })
}

/// Pull plan for the consistency experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum PullSchedule<S> {
    RoundRobin,
    /// Fixed long-run proportions, one per arm of the cluster; each pull goes
    /// to the arm furthest below its target share.
    Proportions(Vec<S>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow<S> {
    pub n: u64,
    /// Median over replications of `KL_i(theta* || theta_hat_n)` for the
    /// cluster's first arm.
    pub median_kl: S,
}

pub fn median<S: Real>(xs: &mut [S]) -> S {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / S::lit(2.0)
    }
}

/// Samples one cluster according to `schedule` and records the median KL
/// from the truth to the MLE after each sample size in `ns`.
pub fn mle_consistency_experiment<S: Real>(
    instance: &BanditInstance<S>,
    cluster: ClusterId,
    schedule: &PullSchedule<S>,
    ns: &[u64],
    replications: u64,
    base_seed: u64,
) -> Result<Vec<ConsistencyRow<S>>> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("sample sizes must be positive and strictly increasing"));
    }
    if replications == 0 {
        return Err(Error::config("replications must be at least 1"));
    }
    let cl = instance.cluster(cluster);
    let m = cl.len();
    let weights = match schedule {
        PullSchedule::RoundRobin => vec![S::one(); m],
        PullSchedule::Proportions(w) => {
            if w.len() != m || w.iter().any(|&x| !(x >= S::zero())) || w.iter().all(|&x| x == S::zero()) {
                return Err(Error::config(
                    "proportions must be non-negative, not all zero, one per arm",
                ));
            }
            w.clone()
        }
    };
    let total_w = weights.iter().fold(S::zero(), |a, &b| a + b);
    let measure = instance.arm(cl.arm_ids[0]);

    let per_rep: Vec<Result<Vec<S>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(base_seed.wrapping_add(r), REWARD_STREAM);
            let mut h = ClusterHistory::new(instance, cluster);
            let mut pulled = vec![0u64; m];
            let mut out = Vec::with_capacity(ns.len());
            let mut s = 0u64;
            for &n in ns {
                while s < n {
                    let k = match schedule {
                        PullSchedule::RoundRobin => (s % m as u64) as usize,
                        PullSchedule::Proportions(_) => {
                            let target = |i: usize| weights[i] / total_w * S::from_count(s + 1);
                            (0..m)
                                .max_by(|&a, &b| {
                                    let da = target(a) - S::from_count(pulled[a]);
                                    let db = target(b) - S::from_count(pulled[b]);
                                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a))
                                })
                                .unwrap_or(0)
                        }
                    };
                    let a = cl.arm_ids[k];
                    let x = instance.arm(a).sample_unchecked(&cl.theta_star, &mut rng);
                    h.record(instance, a, x)?;
                    pulled[k] += 1;
                    s += 1;
                }
                let est = mle(&h, instance)?;
                out.push(measure.kl_unchecked(&cl.theta_star, &est.theta_hat));
            }
            Ok(out)
        })
        .collect();
    let per_rep: Vec<Vec<S>> = per_rep.into_iter().collect::<Result<_>>()?;
    Ok(ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut xs: Vec<S> = per_rep.iter().map(|v| v[k]).collect();
            ConsistencyRow {
                n,
                median_kl: median(&mut xs),
            }
        })
        .collect())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope<S: Real>(points: &[(S, S)]) -> S {
    let pts: Vec<(S, S)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let (slope, _, _) = linear_fit(&pts);
    slope
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, r^2)`.
pub fn linear_fit<S: Real>(points: &[(S, S)]) -> (S, S, S) {
    let n = S::from_count(points.len() as u64);
    let mx = points.iter().fold(S::zero(), |a, p| a + p.0) / n;
    let my = points.iter().fold(S::zero(), |a, p| a + p.1) / n;
    let sxy = points.iter().fold(S::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let sxx = points.iter().fold(S::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let syy = points.iter().fold(S::zero(), |a, p| a + (p.1 - my) * (p.1 - my));
    let slope = sxy / sxx;
    let r2 = if syy == S::zero() {
        S::one()
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

/// Writes `policy,seed,t,regret` (plus `realized` when recorded).
pub fn write_traces_csv<S: Real, W: Write>(out: W, traces: &[RunTrace<S>]) -> Result<()> {
    let realized = traces.iter().any(|t| t.realized.is_some());
    let mut w = csv::Writer::from_writer(out);
    if realized {
        w.write_record(["policy", "seed", "t", "regret", "realized"])?;
    } else {
        w.write_record(["policy", "seed", "t", "regret"])?;
    }
    for tr in traces {
        for (k, &t) in tr.checkpoints.iter().enumerate() {
            let mut rec = vec![
                tr.policy.to_string(),
                tr.seed.to_string(),
                t.to_string(),
                tr.regret[k].to_string(),
            ];
            if realized {
                rec.push(tr.realized.as_ref().map(|r| r[k].to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `policy,t,mean,sd,ci95`.
pub fn write_aggregate_csv<S: Real, W: Write>(out: W, agg: &AggregateResult<S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "t", "mean", "sd", "ci95"])?;
    for r in &agg.rows {
        w.write_record([
            r.policy.to_string(),
            r.t.to_string(),
            r.mean.to_string(),
            r.sd.to_string(),
            r.ci95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
