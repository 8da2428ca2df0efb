//! Parametric reward families: means, KL divergences, log-densities and samplers.
//!
//! Every arm owns a copy of its cluster's [`ParameterSpace`]; the checked
//! operations reject parameters outside it instead of clamping. The
//! `*_unchecked` variants skip the membership test and are meant for inner
//! loops that only ever evaluate grid points or estimates already known to be
//! members.

mod space;

pub use space::{
    Grid, ParameterSpace, SpaceKind, DEFAULT_POINTS_PER_AXIS, DEFAULT_SCALAR_STEP, DEFAULT_SIMPLEX_FLOOR,
    MIN_POINTS_PER_AXIS,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{xlogx_over_y, Real};

/// How a Bernoulli arm maps the scalar cluster parameter to its success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `p = theta`
    Identity,
    /// `p = 1 - theta`
    Mirror,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family<S> {
    /// `N(scale * theta, sigma^2)` with scalar `theta`.
    GaussianScaled { scale: S, sigma: S },
    /// Bernoulli rewards in `{0, 1}` with scalar `theta`.
    BernoulliLink { link: Link },
    /// Rewards on `support[0..N]`. The first `N - 1` outcome probabilities are
    /// `theta` (no matrix) or `A theta`; the last outcome takes the residual mass.
    FiniteSupportLinear {
        support: Vec<S>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<S>>>,
    },
}

impl<S: Real> Family<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianScaled { .. } => "gaussian_scaled",
            Family::BernoulliLink { .. } => "bernoulli_link",
            Family::FiniteSupportLinear { .. } => "finite_support_linear",
        }
    }
}

/// Sub-Gaussianity parameter of centred rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianCert<S> {
    pub sigma: S,
}

/// A reward family bound to the parameter space it is valid on.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel<S> {
    family: Family<S>,
    space: ParameterSpace<S>,
}

impl<S: Real> ArmModel<S> {
    /// Validates the family against every member of `space`.
    pub fn new(family: Family<S>, space: ParameterSpace<S>) -> Result<Self> {
        match &family {
            Family::GaussianScaled { scale, sigma } => {
                if space.dim() != 1 {
                    return Err(Error::config("gaussian_scaled needs a scalar parameter space"));
                }
                if !scale.is_finite() || !(*sigma > S::zero()) || !sigma.is_finite() {
                    return Err(Error::config(format!(
                        "gaussian_scaled needs finite scale and sigma > 0 (scale={scale}, sigma={sigma})"
                    )));
                }
            }
            Family::BernoulliLink { .. } => {
                if space.dim() != 1 {
                    return Err(Error::config("bernoulli_link needs a scalar parameter space"));
                }
                let (lo, hi) = (space.lower()[0], space.upper()[0]);
                if !(lo > S::zero() && hi < S::one()) {
                    return Err(Error::config(format!(
                        "bernoulli_link mean must stay inside (0, 1); space is [{lo}, {hi}]"
                    )));
                }
            }
            Family::FiniteSupportLinear { support, matrix } => {
                Self::validate_finite(support, matrix.as_deref(), &space)?;
            }
        }
        Ok(Self { family, space })
    }

    fn validate_finite(support: &[S], matrix: Option<&[Vec<S>]>, space: &ParameterSpace<S>) -> Result<()> {
        let n = support.len();
        if n < 2 || support.iter().any(|s| !s.is_finite()) {
            return Err(Error::config(
                "finite_support_linear needs at least two finite support values",
            ));
        }
        for i in 0..n {
            for j in i + 1..n {
                if support[i] == support[j] {
                    return Err(Error::config(format!(
                        "finite_support_linear support values must be distinct ({} repeated)",
                        support[i]
                    )));
                }
            }
        }
        if space.kind() != SpaceKind::SimplexInterior || space.dim() != n - 1 {
            return Err(Error::config(format!(
                "finite_support_linear with {n} outcomes needs a {}-dimensional simplex_interior space",
                n - 1
            )));
        }
        if let Some(a) = matrix {
            if a.len() != n - 1 || a.iter().any(|row| row.len() != n - 1) {
                return Err(Error::config(format!("mixing matrix must be {0}x{0}", n - 1)));
            }
            if a.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::config("mixing matrix entries must be finite"));
            }
            // Outcome probabilities are affine in theta, so checking the
            // vertices covers the whole space.
            let floor = space.floor();
            let tol = S::epsilon() * S::lit(16.0);
            for v in space.vertices() {
                let probs = finite_probs(Some(a), &v);
                if let Some((k, p)) = probs.iter().enumerate().find(|(_, &p)| p < floor - tol) {
                    return Err(Error::config(format!(
                        "mixed outcome probability {k} drops to {p} below the floor {floor} at vertex {v:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &Family<S> {
        &self.family
    }

    pub fn space(&self) -> &ParameterSpace<S> {
        &self.space
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.family, Family::GaussianScaled { .. })
    }

    pub fn sub_gaussian(&self) -> SubGaussianCert<S> {
        let sigma = match &self.family {
            Family::GaussianScaled { sigma, .. } => *sigma,
            Family::BernoulliLink { .. } => S::lit(0.5),
            Family::FiniteSupportLinear { support, .. } => {
                let hi = support.iter().copied().fold(S::neg_infinity(), S::max);
                let lo = support.iter().copied().fold(S::infinity(), S::min);
                (hi - lo) / S::lit(2.0)
            }
        };
        SubGaussianCert { sigma }
    }

    /// Exact expected reward at `theta`.
    pub fn mean_reward(&self, theta: &[S]) -> Result<S> {
        self.space.contains(theta)?;
        Ok(self.mean_unchecked(theta))
    }

    #[inline]
    pub fn mean_unchecked(&self, theta: &[S]) -> S {
        match &self.family {
            Family::GaussianScaled { scale, .. } => *scale * theta[0],
            Family::BernoulliLink { link } => bernoulli_p(*link, theta[0]),
            Family::FiniteSupportLinear { support, matrix } => {
                let probs = finite_probs(matrix.as_deref(), theta);
                support.iter().zip(&probs).fold(S::zero(), |acc, (&s, &p)| acc + s * p)
            }
        }
    }

    /// `KL(f(., theta1) || f(., theta2))` in nats.
    pub fn kl_divergence(&self, theta1: &[S], theta2: &[S]) -> Result<S> {
        self.space.contains(theta1)?;
        self.space.contains(theta2)?;
        Ok(self.kl_unchecked(theta1, theta2))
    }

    #[inline]
    pub fn kl_unchecked(&self, theta1: &[S], theta2: &[S]) -> S {
        match &self.family {
            Family::GaussianScaled { scale, sigma } => {
                let d = *scale * (theta1[0] - theta2[0]);
                d * d / (S::lit(2.0) * *sigma * *sigma)
            }
            Family::BernoulliLink { link } => {
                bernoulli_kl(bernoulli_p(*link, theta1[0]), bernoulli_p(*link, theta2[0]))
            }
            Family::FiniteSupportLinear { matrix, .. } => {
                let p = finite_probs(matrix.as_deref(), theta1);
                let q = finite_probs(matrix.as_deref(), theta2);
                let kl = p
                    .iter()
                    .zip(&q)
                    .fold(S::zero(), |acc, (&a, &b)| acc + xlogx_over_y(a, b));
                kl.max(S::zero())
            }
        }
    }

    /// Natural-log density (Gaussian) or log mass (discrete families).
    pub fn log_density(&self, reward: S, theta: &[S]) -> Result<S> {
        self.space.contains(theta)?;
        match &self.family {
            Family::GaussianScaled { scale, sigma } => {
                let z = (reward - *scale * theta[0]) / *sigma;
                Ok(-(S::lit(2.0) * S::PI()).ln() / S::lit(2.0) - sigma.ln() - z * z / S::lit(2.0))
            }
            Family::BernoulliLink { link } => {
                let p = bernoulli_p(*link, theta[0]);
                if reward == S::one() {
                    Ok(p.ln())
                } else if reward == S::zero() {
                    Ok((S::one() - p).ln())
                } else {
                    Err(Error::Data { value: reward.as_f64() })
                }
            }
            Family::FiniteSupportLinear { support, matrix } => {
                let k = support_index(support, reward)?;
                Ok(finite_probs(matrix.as_deref(), theta)[k].ln())
            }
        }
    }

    /// One reward draw at `theta`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: &[S], rng: &mut R) -> Result<S> {
        self.space.contains(theta)?;
        Ok(self.sample_unchecked(theta, rng))
    }

    pub fn sample_unchecked<R: Rng + ?Sized>(&self, theta: &[S], rng: &mut R) -> S {
        match &self.family {
            Family::GaussianScaled { scale, sigma } => *scale * theta[0] + *sigma * S::standard_normal(rng),
            Family::BernoulliLink { link } => {
                if S::unit_uniform(rng) < bernoulli_p(*link, theta[0]) {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Family::FiniteSupportLinear { support, matrix } => {
                let probs = finite_probs(matrix.as_deref(), theta);
                let u = S::unit_uniform(rng);
                let mut acc = S::zero();
                for (k, &p) in probs.iter().enumerate() {
                    acc = acc + p;
                    if u < acc {
                        return support[k];
                    }
                }
                support[support.len() - 1]
            }
        }
    }

    /// Outcome probabilities of a finite-support arm, `None` for other families.
    pub fn outcome_probs(&self, theta: &[S]) -> Option<Vec<S>> {
        match &self.family {
            Family::FiniteSupportLinear { matrix, .. } => Some(finite_probs(matrix.as_deref(), theta)),
            _ => None,
        }
    }

    /// Total log-likelihood of the observations summarised in `stats`.
    pub fn log_likelihood(&self, stats: &ArmStats<S>, theta: &[S]) -> S {
        if stats.n == 0 {
            return S::zero();
        }
        let n = S::from_count(stats.n);
        match &self.family {
            Family::GaussianScaled { scale, sigma } => {
                let mu = *scale * theta[0];
                let rss = stats.sum_sq - S::lit(2.0) * mu * stats.sum + n * mu * mu;
                -n * ((S::lit(2.0) * S::PI()).ln() / S::lit(2.0) + sigma.ln()) - rss / (S::lit(2.0) * *sigma * *sigma)
            }
            Family::BernoulliLink { link } => {
                let p = bernoulli_p(*link, theta[0]);
                let successes = stats.sum;
                let mut ll = S::zero();
                if successes > S::zero() {
                    ll = ll + successes * p.ln();
                }
                if n - successes > S::zero() {
                    ll = ll + (n - successes) * (S::one() - p).ln();
                }
                ll
            }
            Family::FiniteSupportLinear { matrix, .. } => {
                let probs = finite_probs(matrix.as_deref(), theta);
                stats
                    .support_counts
                    .iter()
                    .zip(&probs)
                    .filter(|(&c, _)| c > 0)
                    .fold(S::zero(), |acc, (&c, &p)| acc + S::from_count(c) * p.ln())
            }
        }
    }
}

/// Sufficient statistics of one arm's observations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmStats<S> {
    pub n: u64,
    pub sum: S,
    pub sum_sq: S,
    /// Per-support-point counts for finite-support arms; empty otherwise.
    pub support_counts: Vec<u64>,
}

impl<S: Real> ArmStats<S> {
    pub fn for_model(model: &ArmModel<S>) -> Self {
        let support_counts = match model.family() {
            Family::FiniteSupportLinear { support, .. } => vec![0; support.len()],
            _ => Vec::new(),
        };
        Self {
            n: 0,
            sum: S::zero(),
            sum_sq: S::zero(),
            support_counts,
        }
    }

    /// Adds one observation, rejecting values outside a discrete support.
    pub fn record(&mut self, model: &ArmModel<S>, reward: S) -> Result<()> {
        match model.family() {
            Family::BernoulliLink { .. } => {
                if reward != S::zero() && reward != S::one() {
                    return Err(Error::Data { value: reward.as_f64() });
                }
            }
            Family::FiniteSupportLinear { support, .. } => {
                let k = support_index(support, reward)?;
                self.support_counts[k] += 1;
            }
            Family::GaussianScaled { .. } => {
                if !reward.is_finite() {
                    return Err(Error::Data { value: reward.as_f64() });
                }
            }
        }
        self.n += 1;
        self.sum = self.sum + reward;
        self.sum_sq = self.sum_sq + reward * reward;
        Ok(())
    }

    pub fn mean(&self) -> Option<S> {
        (self.n > 0).then(|| self.sum / S::from_count(self.n))
    }
}

#[inline]
fn bernoulli_p<S: Real>(link: Link, theta: S) -> S {
    match link {
        Link::Identity => theta,
        Link::Mirror => S::one() - theta,
    }
}

#[inline]
pub(crate) fn bernoulli_kl<S: Real>(p: S, q: S) -> S {
    let kl = xlogx_over_y(p, q) + xlogx_over_y(S::one() - p, S::one() - q);
    kl.max(S::zero())
}

fn finite_probs<S: Real>(matrix: Option<&[Vec<S>]>, theta: &[S]) -> Vec<S> {
    let mut probs: Vec<S> = match matrix {
        None => theta.to_vec(),
        Some(a) => a
            .iter()
            .map(|row| row.iter().zip(theta).fold(S::zero(), |acc, (&w, &t)| acc + w * t))
            .collect(),
    };
    let residual = probs.iter().fold(S::one(), |acc, &p| acc - p);
    probs.push(residual);
    probs
}

fn support_index<S: Real>(support: &[S], reward: S) -> Result<usize> {
    support
        .iter()
        .position(|&s| s == reward)
        .ok_or(Error::Data { value: reward.as_f64() })
}
