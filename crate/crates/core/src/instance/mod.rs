//! Validated bandit instances and their gap profiles.

mod certify;

pub use certify::{
    certify_b_constant, certify_cluster, certify_instance, certify_lb_constants, pinsker_bounds, CertifyOptions,
    ClusterConstants, PairConstant, StructuralConstants,
};

use crate::error::{Error, Result};
use crate::models::{ArmModel, Family, ParameterSpace};
use crate::scalar::Real;

pub type ArmId = usize;
pub type ClusterId = usize;

/// Declarative description of one cluster: which arms it holds, its hidden
/// parameter and its allowable set.
#[derive(Debug, Clone)]
pub struct ClusterSpec<S> {
    pub arms: Vec<ArmId>,
    pub theta: Vec<S>,
    pub space: ParameterSpace<S>,
}

/// Declarative description of a whole instance. Arm `k` of `arms` is arm id `k`.
#[derive(Debug, Clone)]
pub struct InstanceSpec<S> {
    pub arms: Vec<Family<S>>,
    pub clusters: Vec<ClusterSpec<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<S> {
    pub id: ClusterId,
    pub arm_ids: Vec<ArmId>,
    pub theta_star: Vec<S>,
    pub space: ParameterSpace<S>,
}

impl<S> Cluster<S> {
    pub fn len(&self) -> usize {
        self.arm_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arm_ids.is_empty()
    }
}

/// `M` arms partitioned into `K` clusters with hidden parameters and the
/// derived gap profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance<S> {
    arms: Vec<ArmModel<S>>,
    arm_cluster: Vec<ClusterId>,
    clusters: Vec<Cluster<S>>,
    means: Vec<S>,
    gaps: Vec<S>,
    best_arm: ArmId,
    mu_star: S,
    gap_min: S,
    gap_max: S,
}

impl<S: Real> BanditInstance<S> {
    pub fn build(spec: InstanceSpec<S>) -> Result<Self> {
        let m = spec.arms.len();
        if m == 0 {
            return Err(Error::config("instance has no arms"));
        }
        if spec.clusters.is_empty() {
            return Err(Error::config("instance has no clusters"));
        }
        let mut arm_cluster: Vec<Option<ClusterId>> = vec![None; m];
        for (c, cl) in spec.clusters.iter().enumerate() {
            if cl.arms.is_empty() {
                return Err(Error::config(format!("cluster {c} is empty")));
            }
            for &a in &cl.arms {
                match arm_cluster.get_mut(a) {
                    None => {
                        return Err(Error::config(format!(
                            "cluster {c} references arm {a} but only {m} arms are declared"
                        )))
                    }
                    Some(Some(prev)) => {
                        return Err(Error::config(format!(
                            "arm {a} is listed in cluster {prev} and cluster {c}"
                        )))
                    }
                    Some(slot) => *slot = Some(c),
                }
            }
            cl.space
                .contains(&cl.theta)
                .map_err(|e| Error::config(format!("true parameter of cluster {c} is invalid: {e}")))?;
        }
        let arm_cluster: Vec<ClusterId> = arm_cluster
            .into_iter()
            .enumerate()
            .map(|(a, c)| c.ok_or_else(|| Error::config(format!("arm {a} belongs to no cluster"))))
            .collect::<Result<_>>()?;

        let arms: Vec<ArmModel<S>> = spec
            .arms
            .into_iter()
            .enumerate()
            .map(|(a, fam)| {
                let space = spec.clusters[arm_cluster[a]].space.clone();
                ArmModel::new(fam, space).map_err(|e| Error::config(format!("arm {a}: {e}")))
            })
            .collect::<Result<_>>()?;

        let clusters: Vec<Cluster<S>> = spec
            .clusters
            .into_iter()
            .enumerate()
            .map(|(id, cl)| Cluster {
                id,
                arm_ids: cl.arms,
                theta_star: cl.theta,
                space: cl.space,
            })
            .collect();

        let means: Vec<S> = arms
            .iter()
            .enumerate()
            .map(|(a, model)| model.mean_unchecked(&clusters[arm_cluster[a]].theta_star))
            .collect();
        let mut best_arm = 0;
        for (a, &mu) in means.iter().enumerate() {
            if mu > means[best_arm] {
                best_arm = a;
            }
        }
        let mu_star = means[best_arm];
        let gaps: Vec<S> = means.iter().map(|&mu| mu_star - mu).collect();
        let gap_min = gaps
            .iter()
            .copied()
            .filter(|&g| g > S::zero())
            .fold(S::infinity(), S::min);
        if !gap_min.is_finite() {
            return Err(Error::config(
                "all arms have the same mean; the minimum positive gap is undefined",
            ));
        }
        let gap_max = gaps.iter().copied().fold(S::zero(), S::max);

        Ok(Self {
            arms,
            arm_cluster,
            clusters,
            means,
            gaps,
            best_arm,
            mu_star,
            gap_min,
            gap_max,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn arms(&self) -> &[ArmModel<S>] {
        &self.arms
    }

    pub fn arm(&self, a: ArmId) -> &ArmModel<S> {
        &self.arms[a]
    }

    pub fn clusters(&self) -> &[Cluster<S>] {
        &self.clusters
    }

    pub fn cluster(&self, c: ClusterId) -> &Cluster<S> {
        &self.clusters[c]
    }

    pub fn cluster_of(&self, a: ArmId) -> ClusterId {
        self.arm_cluster[a]
    }

    /// True mean reward of every arm.
    pub fn means(&self) -> &[S] {
        &self.means
    }

    /// `mu* - mu_i` for every arm.
    pub fn gaps(&self) -> &[S] {
        &self.gaps
    }

    /// Lowest-id optimal arm.
    pub fn best_arm(&self) -> ArmId {
        self.best_arm
    }

    pub fn best_cluster(&self) -> ClusterId {
        self.arm_cluster[self.best_arm]
    }

    pub fn mu_star(&self) -> S {
        self.mu_star
    }

    pub fn gap_min(&self) -> S {
        self.gap_min
    }

    pub fn gap_max(&self) -> S {
        self.gap_max
    }

    pub fn is_optimal(&self, a: ArmId) -> bool {
        self.gaps[a] == S::zero()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::models::Link;

    /// Mirrored Bernoulli pairs, one pair per parameter.
    pub fn mirrored_bernoulli(thetas: &[f64]) -> BanditInstance<f64> {
        let space = ParameterSpace::interval(0.01, 0.99).unwrap();
        let mut arms = Vec::new();
        let mut clusters = Vec::new();
        for &t in thetas {
            let base = arms.len();
            arms.push(Family::BernoulliLink { link: Link::Identity });
            arms.push(Family::BernoulliLink { link: Link::Mirror });
            clusters.push(ClusterSpec {
                arms: vec![base, base + 1],
                theta: vec![t],
                space: space.clone(),
            });
        }
        BanditInstance::build(InstanceSpec { arms, clusters }).unwrap()
    }

    /// Gaussian clusters whose `l`-th arm has scale `l` (1-based).
    pub fn scaled_gaussian(thetas: &[f64], sizes: &[usize], space: ParameterSpace<f64>) -> BanditInstance<f64> {
        let mut arms = Vec::new();
        let mut clusters = Vec::new();
        for (&t, &n) in thetas.iter().zip(sizes) {
            let base = arms.len();
            for l in 1..=n {
                arms.push(Family::GaussianScaled {
                    scale: l as f64,
                    sigma: 1.0,
                });
            }
            clusters.push(ClusterSpec {
                arms: (base..base + n).collect(),
                theta: vec![t],
                space: space.clone(),
            });
        }
        BanditInstance::build(InstanceSpec { arms, clusters }).unwrap()
    }
}
