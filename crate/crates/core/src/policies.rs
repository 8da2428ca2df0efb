//! Arm-selection policies: UCB-D, vanilla UCB and uniform random play.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{mle, ClusterHistory, ConfidenceBall};
use crate::instance::{ArmId, BanditInstance};
use crate::models::ArmStats;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// One of the first `M` rounds, in which every arm is played once.
    Init,
    Index,
    Random,
}

/// The arm chosen at round `t`, with the indices behind the choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision<S> {
    pub t: u64,
    pub arm: ArmId,
    pub phase: Phase,
    pub indices: Option<Vec<S>>,
}

/// A sequential policy. Rounds are numbered from 1; each `select(t)` must be
/// followed by exactly one `update` for the chosen arm before round `t + 1`.
pub trait Policy<S: Real>: Send {
    fn name(&self) -> &'static str;
    fn select(&mut self, t: u64, rng: &mut dyn RngCore) -> Result<Decision<S>>;
    fn update(&mut self, arm: ArmId, reward: S) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "ucb_d")]
    UcbD,
    #[serde(rename = "vanilla_ucb")]
    Ucb,
    #[serde(rename = "uniform_random")]
    Uniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::UcbD, PolicyKind::Ucb, PolicyKind::Uniform];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::UcbD => "ucb_d",
            PolicyKind::Ucb => "vanilla_ucb",
            PolicyKind::Uniform => "uniform_random",
        }
    }

    pub fn build<'a, S: Real>(
        self,
        instance: &'a BanditInstance<S>,
        settings: &PolicySettings<S>,
    ) -> Result<Box<dyn Policy<S> + 'a>> {
        Ok(match self {
            PolicyKind::UcbD => {
                Box::new(UcbD::new(instance, settings.kappa)?.with_recompute_every(settings.recompute_every)?)
            }
            PolicyKind::Ucb => Box::new(VanillaUcb::new(instance)),
            PolicyKind::Uniform => Box::new(UniformRandom::new(instance.num_arms())),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::config(format!(
                "unknown policy `{s}` (expected ucb_d, vanilla_ucb or uniform_random)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySettings<S> {
    pub kappa: S,
    pub recompute_every: u64,
}

/// Round bookkeeping shared by every policy.
#[derive(Debug, Clone, Default)]
struct Protocol {
    next: u64,
    pending: Option<ArmId>,
}

impl Protocol {
    fn new() -> Self {
        Self { next: 1, pending: None }
    }

    fn begin(&self, t: u64) -> Result<()> {
        if self.pending.is_some() {
            return Err(Error::Protocol(format!(
                "select called for round {t} before the previous reward was reported"
            )));
        }
        if t != self.next {
            return Err(Error::Protocol(format!("expected round {}, got {t}", self.next)));
        }
        Ok(())
    }

    fn finish(&mut self, arm: ArmId) -> Result<()> {
        match self.pending {
            Some(a) if a == arm => {
                self.pending = None;
                self.next += 1;
                Ok(())
            }
            Some(a) => Err(Error::Protocol(format!(
                "reward reported for arm {arm} but arm {a} was selected"
            ))),
            None => Err(Error::Protocol(format!(
                "reward reported for arm {arm} without a pending selection"
            ))),
        }
    }
}

fn argmax<S: Real>(values: &[S]) -> ArmId {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Plays every arm once, then the arm with the largest upper confidence
/// index taken over its cluster's KL confidence ball.
pub struct UcbD<'a, S> {
    instance: &'a BanditInstance<S>,
    kappa: S,
    recompute_every: u64,
    histories: Vec<ClusterHistory<S>>,
    indices: Vec<S>,
    last_recompute: Option<u64>,
    protocol: Protocol,
}

impl<'a, S: Real> UcbD<'a, S> {
    pub fn new(instance: &'a BanditInstance<S>, kappa: S) -> Result<Self> {
        if !(kappa > S::zero()) || !kappa.is_finite() {
            return Err(Error::config(format!("kappa must be positive and finite, got {kappa}")));
        }
        Ok(Self {
            instance,
            kappa,
            recompute_every: 1,
            histories: (0..instance.num_clusters())
                .map(|c| ClusterHistory::new(instance, c))
                .collect(),
            indices: vec![S::zero(); instance.num_arms()],
            last_recompute: None,
            protocol: Protocol::new(),
        })
    }

    /// Refresh estimates only every `every` rounds, reusing the previous
    /// indices in between.
    pub fn with_recompute_every(mut self, every: u64) -> Result<Self> {
        if every == 0 {
            return Err(Error::config("recompute_every must be at least 1"));
        }
        self.recompute_every = every;
        Ok(self)
    }

    pub fn kappa(&self) -> S {
        self.kappa
    }

    pub fn histories(&self) -> &[ClusterHistory<S>] {
        &self.histories
    }

    fn recompute(&mut self, t: u64) -> Result<()> {
        for h in &mut self.histories {
            h.set_round(t)?;
            let est = mle(h, self.instance)?;
            let ball = ConfidenceBall::new(h, &est, self.kappa)?;
            let uc = ball.upper_indices(self.instance)?;
            for (&a, u) in h.arm_ids().iter().zip(uc) {
                self.indices[a] = u;
            }
        }
        self.last_recompute = Some(t);
        Ok(())
    }
}

impl<S: Real> Policy<S> for UcbD<'_, S> {
    fn name(&self) -> &'static str {
        PolicyKind::UcbD.as_str()
    }

    fn select(&mut self, t: u64, _rng: &mut dyn RngCore) -> Result<Decision<S>> {
        self.protocol.begin(t)?;
        let m = self.instance.num_arms() as u64;
        let decision = if t <= m {
            Decision {
                t,
                arm: (t - 1) as ArmId,
                phase: Phase::Init,
                indices: None,
            }
        } else {
            let stale = self.last_recompute.is_none_or(|last| t - last >= self.recompute_every);
            if stale {
                self.recompute(t)?;
            }
            Decision {
                t,
                arm: argmax(&self.indices),
                phase: Phase::Index,
                indices: Some(self.indices.clone()),
            }
        };
        self.protocol.pending = Some(decision.arm);
        Ok(decision)
    }

    fn update(&mut self, arm: ArmId, reward: S) -> Result<()> {
        if self.protocol.pending != Some(arm) {
            return self.protocol.finish(arm);
        }
        let c = self.instance.cluster_of(arm);
        self.histories[c].record(self.instance, arm, reward)?;
        self.protocol.finish(arm)
    }
}

/// Per-arm UCB: `mean_i + sqrt(2 sigma_i^2 ln t / N_i)`, ignoring cluster
/// structure.
pub struct VanillaUcb<'a, S> {
    instance: &'a BanditInstance<S>,
    stats: Vec<ArmStats<S>>,
    protocol: Protocol,
}

impl<'a, S: Real> VanillaUcb<'a, S> {
    pub fn new(instance: &'a BanditInstance<S>) -> Self {
        Self {
            instance,
            stats: instance.arms().iter().map(ArmStats::for_model).collect(),
            protocol: Protocol::new(),
        }
    }
}

impl<S: Real> Policy<S> for VanillaUcb<'_, S> {
    fn name(&self) -> &'static str {
        PolicyKind::Ucb.as_str()
    }

    fn select(&mut self, t: u64, _rng: &mut dyn RngCore) -> Result<Decision<S>> {
        self.protocol.begin(t)?;
        let m = self.instance.num_arms() as u64;
        let decision = if t <= m {
            Decision {
                t,
                arm: (t - 1) as ArmId,
                phase: Phase::Init,
                indices: None,
            }
        } else {
            let ln_t = S::from_count(t).ln();
            let two = S::lit(2.0);
            let indices: Vec<S> = self
                .stats
                .iter()
                .zip(self.instance.arms())
                .map(|(st, model)| {
                    let sigma = model.sub_gaussian().sigma;
                    st.mean().unwrap_or(S::zero()) + (two * sigma * sigma * ln_t / S::from_count(st.n)).sqrt()
                })
                .collect();
            Decision {
                t,
                arm: argmax(&indices),
                phase: Phase::Index,
                indices: Some(indices),
            }
        };
        self.protocol.pending = Some(decision.arm);
        Ok(decision)
    }

    fn update(&mut self, arm: ArmId, reward: S) -> Result<()> {
        if self.protocol.pending != Some(arm) {
            return self.protocol.finish(arm);
        }
        self.stats[arm].record(self.instance.arm(arm), reward)?;
        self.protocol.finish(arm)
    }
}

/// Plays an arm drawn uniformly at random every round.
pub struct UniformRandom {
    num_arms: usize,
    protocol: Protocol,
}

impl UniformRandom {
    pub fn new(num_arms: usize) -> Self {
        Self {
            num_arms,
            protocol: Protocol::new(),
        }
    }
}

impl<S: Real> Policy<S> for UniformRandom {
    fn name(&self) -> &'static str {
        PolicyKind::Uniform.as_str()
    }

    fn select(&mut self, t: u64, rng: &mut dyn RngCore) -> Result<Decision<S>> {
        self.protocol.begin(t)?;
        let arm = rng.random_range(0..self.num_arms);
        self.protocol.pending = Some(arm);
        Ok(Decision {
            t,
            arm,
            phase: Phase::Random,
            indices: None,
        })
    }

    fn update(&mut self, arm: ArmId, _reward: S) -> Result<()> {
        self.protocol.finish(arm)
    }
}
