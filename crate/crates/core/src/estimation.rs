//! Per-cluster observation histories, maximum-likelihood estimates and KL
//! confidence balls.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{ArmId, BanditInstance, ClusterId, StructuralConstants};
use crate::models::{ArmStats, Family, Link};
use crate::scalar::Real;

/// Width of the bracket at which golden-section search stops.
pub const GOLDEN_TOLERANCE: f64 = 1e-6;
const GOLDEN_SCAN_POINTS: usize = 65;
const BISECTION_STEPS: usize = 200;

/// Observations gathered from the arms of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterHistory<S> {
    cluster: ClusterId,
    arm_ids: Vec<ArmId>,
    stats: Vec<ArmStats<S>>,
    rewards: Vec<Vec<S>>,
    total: u64,
    round: u64,
}

impl<S: Real> ClusterHistory<S> {
    pub fn new(instance: &BanditInstance<S>, cluster: ClusterId) -> Self {
        let arm_ids = instance.cluster(cluster).arm_ids.clone();
        let stats = arm_ids.iter().map(|&a| ArmStats::for_model(instance.arm(a))).collect();
        let rewards = vec![Vec::new(); arm_ids.len()];
        Self {
            cluster,
            arm_ids,
            stats,
            rewards,
            total: 0,
            round: 0,
        }
    }

    pub fn cluster(&self) -> ClusterId {
        self.cluster
    }

    pub fn arm_ids(&self) -> &[ArmId] {
        &self.arm_ids
    }

    fn local(&self, arm: ArmId) -> Result<usize> {
        self.arm_ids
            .iter()
            .position(|&a| a == arm)
            .ok_or_else(|| Error::State(format!("arm {arm} is not in cluster {}", self.cluster)))
    }

    /// Appends one reward of `arm`.
    pub fn record(&mut self, instance: &BanditInstance<S>, arm: ArmId, reward: S) -> Result<()> {
        let l = self.local(arm)?;
        self.stats[l].record(instance.arm(arm), reward)?;
        self.rewards[l].push(reward);
        self.total += 1;
        if self.round < self.total {
            self.round = self.total;
        }
        Ok(())
    }

    /// Sets the global round counter `t`; it can never fall below `N_C`.
    pub fn set_round(&mut self, t: u64) -> Result<()> {
        if t < self.total {
            return Err(Error::State(format!(
                "round {t} precedes the {} plays already recorded in cluster {}",
                self.total, self.cluster
            )));
        }
        self.round = t;
        Ok(())
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// `N_C(t)`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `N_i(t)` for every arm of the cluster, aligned with [`Self::arm_ids`].
    pub fn counts(&self) -> Vec<u64> {
        self.stats.iter().map(|s| s.n).collect()
    }

    pub fn count(&self, arm: ArmId) -> Result<u64> {
        Ok(self.stats[self.local(arm)?].n)
    }

    pub fn stats(&self) -> &[ArmStats<S>] {
        &self.stats
    }

    pub fn rewards(&self, arm: ArmId) -> Result<&[S]> {
        Ok(&self.rewards[self.local(arm)?])
    }

    /// Pooled log-likelihood of the cluster's observations at `theta`.
    pub fn log_likelihood(&self, instance: &BanditInstance<S>, theta: &[S]) -> S {
        self.arm_ids.iter().zip(&self.stats).fold(S::zero(), |acc, (&a, st)| {
            acc + instance.arm(a).log_likelihood(st, theta)
        })
    }

    /// `d_C(t) = sqrt(kappa ln t / N_C(t))` at the current round.
    pub fn radius(&self, kappa: S) -> Result<S> {
        radius_at(kappa, S::from_count(self.round), self.total)
    }
}

/// `sqrt(kappa ln t / n)`; undefined before round 2.
pub fn radius_at<S: Real>(kappa: S, t: S, n: u64) -> Result<S> {
    if !(kappa > S::zero()) {
        return Err(Error::config(format!("kappa must be positive, got {kappa}")));
    }
    if !(t >= S::lit(2.0)) {
        return Err(Error::State(format!(
            "confidence radius requested at round {t}; it is defined from round 2 on"
        )));
    }
    if n == 0 {
        return Err(Error::State("confidence radius of a cluster with no plays".into()));
    }
    Ok((kappa * t.ln() / S::from_count(n)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    GoldenSection,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterEstimate<S> {
    pub theta_hat: Vec<S>,
    /// Pooled (unnormalised) log-likelihood at `theta_hat`.
    pub log_likelihood: S,
    pub method: SolveMethod,
    /// The unconstrained optimum lay outside the space and was projected onto it.
    pub projected: bool,
}

enum ClosedForm {
    Gaussian,
    Bernoulli,
    None,
}

fn closed_form_kind<S: Real>(instance: &BanditInstance<S>, arms: &[ArmId]) -> ClosedForm {
    let fams = arms.iter().map(|&a| instance.arm(a).family());
    if fams.clone().all(|f| matches!(f, Family::GaussianScaled { .. })) {
        ClosedForm::Gaussian
    } else if fams.clone().all(|f| matches!(f, Family::BernoulliLink { .. })) {
        ClosedForm::Bernoulli
    } else {
        ClosedForm::None
    }
}

/// Maximum-likelihood estimate of the cluster parameter over its allowable set.
///
/// All-Gaussian and all-Bernoulli clusters use their stationarity conditions
/// followed by projection onto the interval (both log-likelihoods are concave
/// in the parameter). Other scalar clusters use golden-section search on a
/// bracket found by a coarse scan; multi-dimensional clusters use the space grid.
pub fn mle<S: Real>(history: &ClusterHistory<S>, instance: &BanditInstance<S>) -> Result<ClusterEstimate<S>> {
    if history.total == 0 {
        return Err(Error::State(format!("no observations for cluster {}", history.cluster)));
    }
    let space = &instance.cluster(history.cluster).space;
    let raw = match closed_form_kind(instance, &history.arm_ids) {
        ClosedForm::Gaussian => {
            let (mut num, mut den) = (S::zero(), S::zero());
            for (&a, st) in history.arm_ids.iter().zip(&history.stats) {
                if let Family::GaussianScaled { scale, sigma } = instance.arm(a).family() {
                    let w = *scale / (*sigma * *sigma);
                    num = num + w * st.sum;
                    den = den + w * *scale * S::from_count(st.n);
                }
            }
            (den > S::zero()).then(|| num / den)
        }
        ClosedForm::Bernoulli => {
            let mut hits = S::zero();
            for (&a, st) in history.arm_ids.iter().zip(&history.stats) {
                if let Family::BernoulliLink { link } = instance.arm(a).family() {
                    hits = hits
                        + match link {
                            Link::Identity => st.sum,
                            Link::Mirror => S::from_count(st.n) - st.sum,
                        };
                }
            }
            Some(hits / S::from_count(history.total))
        }
        ClosedForm::None => None,
    };

    if let Some(x) = raw {
        let (lo, hi) = (space.lower()[0], space.upper()[0]);
        let theta = x.max(lo).min(hi);
        let theta_hat = vec![theta];
        return Ok(ClusterEstimate {
            log_likelihood: history.log_likelihood(instance, &theta_hat),
            theta_hat,
            method: SolveMethod::ClosedForm,
            projected: theta != x,
        });
    }

    if space.dim() == 1 {
        Ok(golden_section(history, instance))
    } else {
        mle_grid(history, instance)
    }
}

fn golden_section<S: Real>(history: &ClusterHistory<S>, instance: &BanditInstance<S>) -> ClusterEstimate<S> {
    let space = &instance.cluster(history.cluster).space;
    let (lo, hi) = (space.lower()[0], space.upper()[0]);
    let f = |x: S| history.log_likelihood(instance, &[x]);
    let n = GOLDEN_SCAN_POINTS;
    let at = |k: usize| lo + (hi - lo) * S::from_count(k as u64) / S::from_count(n as u64 - 1);
    let mut best_k = 0;
    let mut best_v = f(lo);
    for k in 1..n {
        let v = f(at(k));
        if v > best_v {
            best_k = k;
            best_v = v;
        }
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(n - 1));
    let inv_phi = (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = S::lit(GOLDEN_TOLERANCE);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / S::lit(2.0);
    let (theta, ll) =
        [(mid, f(mid)), (at(best_k), best_v)]
            .into_iter()
            .fold(
                (mid, S::neg_infinity()),
                |acc, (x, v)| if v > acc.1 { (x, v) } else { acc },
            );
    ClusterEstimate {
        theta_hat: vec![theta],
        log_likelihood: ll,
        method: SolveMethod::GoldenSection,
        projected: theta == lo || theta == hi,
    }
}

/// Exhaustive argmax of the pooled log-likelihood over the space grid.
pub fn mle_grid<S: Real>(history: &ClusterHistory<S>, instance: &BanditInstance<S>) -> Result<ClusterEstimate<S>> {
    let space = &instance.cluster(history.cluster).space;
    let grid = space.grid()?;
    let mut best: Option<(usize, S)> = None;
    for (k, p) in grid.iter().enumerate() {
        let v = history.log_likelihood(instance, p);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    let (k, ll) = best.ok_or_else(|| Error::config("parameter grid is empty"))?;
    Ok(ClusterEstimate {
        theta_hat: grid.point(k).to_vec(),
        log_likelihood: ll,
        method: SolveMethod::Grid,
        projected: false,
    })
}

/// Right-hand side of the theoretical condition on `kappa`:
/// `max_C 2 B^2 L_p^2 sigma^2 (|C| + m) max_{k,i in C} lb(k,i)^2`.
pub fn kappa_floor<S: Real>(
    instance: &BanditInstance<S>,
    constants: &StructuralConstants<S>,
    l_p: S,
    sigma: S,
    m: u32,
) -> Result<S> {
    if m <= 3 {
        return Err(Error::config(format!(
            "m must be a natural number greater than 3, got {m}"
        )));
    }
    if !(l_p > S::zero()) || !(sigma > S::zero()) {
        return Err(Error::config("L_p and sigma must be positive"));
    }
    let b = constants.b_max();
    let two = S::lit(2.0);
    Ok(instance
        .clusters()
        .iter()
        .map(|c| {
            let lb = constants.cluster(c.id).max_lb();
            two * b * b * l_p * l_p * sigma * sigma * S::from_count((c.len() as u64) + m as u64) * lb * lb
        })
        .fold(S::zero(), S::max))
}

/// Practical default for `kappa`: `2 sigma^2 max lb^2`, with `sigma` the
/// largest sub-Gaussian parameter among the arms.
pub fn kappa_surrogate<S: Real>(instance: &BanditInstance<S>, constants: &StructuralConstants<S>) -> S {
    let sigma = instance
        .arms()
        .iter()
        .map(|a| a.sub_gaussian().sigma)
        .fold(S::zero(), S::max);
    let lb = constants.clusters.iter().map(|c| c.max_lb()).fold(S::one(), S::max);
    S::lit(2.0) * sigma * sigma * lb * lb
}

/// The set of parameters whose count-weighted KL from the estimate is at most
/// the radius: `sum_i (N_i / N_C) KL_i(theta_hat || theta) <= d_C(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceBall<S> {
    pub cluster: ClusterId,
    pub center: Vec<S>,
    pub radius: S,
    /// `N_i / N_C`, aligned with the cluster's arm ids.
    pub weights: Vec<S>,
}

impl<S: Real> ConfidenceBall<S> {
    pub fn new(history: &ClusterHistory<S>, estimate: &ClusterEstimate<S>, kappa: S) -> Result<Self> {
        let radius = history.radius(kappa)?;
        Ok(Self::with_radius(history, estimate, radius))
    }

    pub fn with_radius(history: &ClusterHistory<S>, estimate: &ClusterEstimate<S>, radius: S) -> Self {
        let n = S::from_count(history.total.max(1));
        Self {
            cluster: history.cluster,
            center: estimate.theta_hat.clone(),
            radius,
            weights: history.stats.iter().map(|s| S::from_count(s.n) / n).collect(),
        }
    }

    pub fn weighted_kl(&self, instance: &BanditInstance<S>, theta: &[S]) -> S {
        let arms = &instance.cluster(self.cluster).arm_ids;
        arms.iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > S::zero())
            .fold(S::zero(), |acc, (&a, &w)| {
                acc + w * instance.arm(a).kl_unchecked(&self.center, theta)
            })
    }

    pub fn contains(&self, instance: &BanditInstance<S>, theta: &[S]) -> bool {
        self.weighted_kl(instance, theta) <= self.radius
    }

    /// For scalar spaces the ball is an interval around the center, because
    /// every family's KL is convex in its second argument.
    pub fn interval(&self, instance: &BanditInstance<S>) -> Option<(S, S)> {
        let cl = instance.cluster(self.cluster);
        if cl.space.dim() != 1 {
            return None;
        }
        let (lo, hi) = (cl.space.lower()[0], cl.space.upper()[0]);
        let c = self.center[0];

        if let ClosedForm::Gaussian = closed_form_kind(instance, &cl.arm_ids) {
            let mut curv = S::zero();
            for (&a, &w) in cl.arm_ids.iter().zip(&self.weights) {
                if let Family::GaussianScaled { scale, sigma } = instance.arm(a).family() {
                    curv = curv + w * *scale * *scale / (S::lit(2.0) * *sigma * *sigma);
                }
            }
            if curv <= S::zero() {
                return Some((lo, hi));
            }
            let half = (self.radius / curv).sqrt();
            return Some(((c - half).max(lo), (c + half).min(hi)));
        }

        let edge = |bound: S| -> S {
            if self.contains(instance, &[bound]) {
                return bound;
            }
            let (mut inside, mut outside) = (c, bound);
            for _ in 0..BISECTION_STEPS {
                let mid = (inside + outside) / S::lit(2.0);
                if mid == inside || mid == outside {
                    break;
                }
                if self.contains(instance, &[mid]) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        Some((edge(lo), edge(hi)))
    }

    /// `uc_i = sup { mu_i(theta) : theta in ball }` for every arm of the cluster.
    ///
    /// Means are affine in the parameter for every supported family, so on a
    /// scalar space the supremum sits at an end of the ball interval. On
    /// higher-dimensional spaces the supremum is taken over member grid points
    /// and the center itself.
    pub fn upper_indices(&self, instance: &BanditInstance<S>) -> Result<Vec<S>> {
        let cl = instance.cluster(self.cluster);
        let center_means: Vec<S> = cl
            .arm_ids
            .iter()
            .map(|&a| instance.arm(a).mean_unchecked(&self.center))
            .collect();
        if let Some((lo, hi)) = self.interval(instance) {
            return Ok(cl
                .arm_ids
                .iter()
                .zip(center_means)
                .map(|(&a, mc)| {
                    let m = instance.arm(a);
                    mc.max(m.mean_unchecked(&[lo])).max(m.mean_unchecked(&[hi]))
                })
                .collect());
        }
        let grid = cl.space.grid()?;
        let mut best = center_means;
        let mut hits = 0usize;
        for p in grid.iter() {
            if !self.contains(instance, p) {
                continue;
            }
            hits += 1;
            for (k, &a) in cl.arm_ids.iter().enumerate() {
                best[k] = best[k].max(instance.arm(a).mean_unchecked(p));
            }
        }
        if hits == 0 {
            log::warn!(
                "confidence ball of cluster {} holds no grid point; using the point estimate",
                self.cluster
            );
        }
        Ok(best)
    }
}

/// `sup` of arm `arm`'s mean over the ball; never below the mean at the center.
pub fn sup_mean_over_ball<S: Real>(ball: &ConfidenceBall<S>, instance: &BanditInstance<S>, arm: ArmId) -> Result<S> {
    let cl = instance.cluster(ball.cluster);
    let k = cl
        .arm_ids
        .iter()
        .position(|&a| a == arm)
        .ok_or_else(|| Error::State(format!("arm {arm} is not in cluster {}", ball.cluster)))?;
    Ok(ball.upper_indices(instance)?[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::*;
    use crate::instance::{certify_instance, CertifyOptions, ClusterSpec, InstanceSpec};
    use crate::models::ParameterSpace;
    use approx::assert_abs_diff_eq;

    fn single_gaussian(lo: f64, hi: f64) -> BanditInstance<f64> {
        let space = ParameterSpace::interval(lo, hi).unwrap();
        BanditInstance::build(InstanceSpec {
            arms: vec![
                Family::GaussianScaled { scale: 1.0, sigma: 1.0 },
                Family::GaussianScaled { scale: 1.0, sigma: 1.0 },
            ],
            clusters: vec![
                ClusterSpec {
                    arms: vec![0],
                    theta: vec![0.0],
                    space: space.clone(),
                },
                ClusterSpec {
                    arms: vec![1],
                    theta: vec![0.5],
                    space,
                },
            ],
        })
        .unwrap()
    }

    #[test]
    fn radius_values() {
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(radius_at(1.0, e * e, 4).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(radius_at(2.0, e, 1).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let r1 = radius_at(1.5, 100.0, 10).unwrap();
        let r2 = radius_at(1.5, 100.0, 20).unwrap();
        assert_abs_diff_eq!(r1 / r2, 2f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(radius_at(1.0, 1.0, 3), Err(Error::State(_))));
    }

    #[test]
    fn empty_history_has_no_estimate() {
        let inst = single_gaussian(0.0, 1.0);
        let h = ClusterHistory::new(&inst, 0);
        assert!(matches!(mle(&h, &inst), Err(Error::State(_))));
    }

    #[test]
    fn single_pull_gaussian_estimate() {
        let inst = single_gaussian(0.0, 1.0);
        let mut h = ClusterHistory::new(&inst, 0);
        h.record(&inst, 0, 0.5).unwrap();
        let est = mle(&h, &inst).unwrap();
        assert_eq!(est.theta_hat, vec![0.5]);
        assert_eq!(est.method, SolveMethod::ClosedForm);
        h.record(&inst, 0, 3.0).unwrap();
        let est = mle(&h, &inst).unwrap();
        assert_eq!(est.theta_hat, vec![1.0]);
        assert!(est.projected);
    }

    #[test]
    fn bernoulli_pair_estimate() {
        let inst = mirrored_bernoulli(&[0.3]);
        let mut h = ClusterHistory::new(&inst, 0);
        // identity arm: 3 of 4 successes; mirror arm: 1 of 6
        for r in [1.0, 1.0, 1.0, 0.0] {
            h.record(&inst, 0, r).unwrap();
        }
        for r in [1.0, 0.0, 0.0, 0.0, 0.0, 0.0] {
            h.record(&inst, 1, r).unwrap();
        }
        let est = mle(&h, &inst).unwrap();
        assert_abs_diff_eq!(est.theta_hat[0], (3.0 + 6.0 - 1.0) / 10.0, epsilon = 1e-15);
    }

    #[test]
    fn mixed_cluster_uses_golden_section() {
        let space = ParameterSpace::<f64>::interval(0.05, 0.95).unwrap();
        let inst = BanditInstance::build(InstanceSpec {
            arms: vec![
                Family::GaussianScaled { scale: 1.0, sigma: 0.5 },
                Family::BernoulliLink { link: Link::Mirror },
            ],
            clusters: vec![ClusterSpec {
                arms: vec![0, 1],
                theta: vec![0.4],
                space,
            }],
        })
        .unwrap();
        let mut h = ClusterHistory::new(&inst, 0);
        for r in [0.3, 0.5, 0.1, 0.45] {
            h.record(&inst, 0, r).unwrap();
        }
        for r in [1.0, 0.0, 1.0] {
            h.record(&inst, 1, r).unwrap();
        }
        let est = mle(&h, &inst).unwrap();
        assert_eq!(est.method, SolveMethod::GoldenSection);
        let grid = mle_grid(&h, &inst).unwrap();
        assert!((est.theta_hat[0] - grid.theta_hat[0]).abs() <= 1e-3);
        assert!(est.log_likelihood >= grid.log_likelihood - 1e-9);
    }

    #[test]
    fn finite_support_cluster_uses_grid() {
        let space = ParameterSpace::simplex_interior(2, 0.01).unwrap();
        let inst = BanditInstance::build(InstanceSpec {
            arms: vec![
                Family::FiniteSupportLinear {
                    support: vec![0.0, 1.0, 2.0],
                    matrix: None,
                },
                Family::FiniteSupportLinear {
                    support: vec![0.0, 1.0, 3.0],
                    matrix: Some(vec![vec![0.6, 0.4], vec![0.4, 0.6]]),
                },
            ],
            clusters: vec![ClusterSpec {
                arms: vec![0, 1],
                theta: vec![0.2, 0.3],
                space,
            }],
        })
        .unwrap();
        let mut h = ClusterHistory::new(&inst, 0);
        for r in [0.0, 1.0, 1.0, 2.0, 2.0, 2.0] {
            h.record(&inst, 0, r).unwrap();
        }
        h.record(&inst, 1, 3.0).unwrap();
        assert!(h.record(&inst, 1, 2.0).is_err());
        let est = mle(&h, &inst).unwrap();
        assert_eq!(est.method, SolveMethod::Grid);
        let grid = inst.cluster(0).space.grid().unwrap();
        for p in grid.iter() {
            assert!(est.log_likelihood >= h.log_likelihood(&inst, p) - 1e-9);
        }
        h.set_round(10).unwrap();
        let ball = ConfidenceBall::new(&h, &est, 1.0).unwrap();
        let uc = ball.upper_indices(&inst).unwrap();
        for (k, &a) in [0usize, 1].iter().enumerate() {
            assert!(uc[k] >= inst.arm(a).mean_unchecked(&est.theta_hat));
        }
    }

    #[test]
    fn ball_membership_matches_inverted_gaussian_kl() {
        let inst = single_gaussian(-1.0, 1.0);
        let mut h = ClusterHistory::new(&inst, 0);
        h.record(&inst, 0, 0.0).unwrap();
        let est = mle(&h, &inst).unwrap();
        let ball = ConfidenceBall::with_radius(&h, &est, 0.02);
        assert!(ball.contains(&inst, &[0.0]));
        assert!(ball.contains(&inst, &[0.199]));
        assert!(ball.contains(&inst, &[-0.199]));
        assert!(!ball.contains(&inst, &[0.201]));
        assert_abs_diff_eq!(sup_mean_over_ball(&ball, &inst, 0).unwrap(), 0.2, epsilon = 1e-12);
        assert!(sup_mean_over_ball(&ball, &inst, 1).is_err());

        let point = ConfidenceBall::with_radius(&h, &est, 0.0);
        assert!(point.contains(&inst, &[0.0]));
        assert!(!point.contains(&inst, &[1e-9]));
        assert_eq!(sup_mean_over_ball(&point, &inst, 0).unwrap(), 0.0);
    }

    #[test]
    fn mirrored_bernoulli_indices_over_known_interval() {
        let inst = mirrored_bernoulli(&[0.5, 0.2]);
        let mut h = ClusterHistory::new(&inst, 0);
        h.record(&inst, 0, 1.0).unwrap();
        h.record(&inst, 1, 1.0).unwrap();
        let est = mle(&h, &inst).unwrap();
        assert_eq!(est.theta_hat, vec![0.5]);
        // radius chosen so that the ball is exactly [0.4, 0.6]
        let r = inst.arm(0).kl_unchecked(&[0.5], &[0.6]);
        let ball = ConfidenceBall::with_radius(&h, &est, r);
        let (lo, hi) = ball.interval(&inst).unwrap();
        assert_abs_diff_eq!(lo, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.6, epsilon = 1e-12);
        let uc = ball.upper_indices(&inst).unwrap();
        assert_abs_diff_eq!(uc[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(uc[1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn indices_grow_with_radius() {
        let inst = mirrored_bernoulli(&[0.3]);
        let mut h = ClusterHistory::new(&inst, 0);
        for r in [1.0, 0.0, 0.0] {
            h.record(&inst, 0, r).unwrap();
            h.record(&inst, 1, 1.0 - r).unwrap();
        }
        let est = mle(&h, &inst).unwrap();
        let mut prev = vec![f64::NEG_INFINITY; 2];
        for k in 0..40 {
            let ball = ConfidenceBall::with_radius(&h, &est, 0.01 * k as f64);
            let uc = ball.upper_indices(&inst).unwrap();
            for i in 0..2 {
                assert!(uc[i] >= prev[i]);
                assert!(uc[i] >= inst.arm(i).mean_unchecked(&est.theta_hat));
            }
            prev = uc;
        }
    }

    #[test]
    fn kappa_floor_formula() {
        let inst = mirrored_bernoulli(&[0.3]);
        let consts = certify_instance(&inst, &CertifyOptions::default()).unwrap();
        let floor = kappa_floor(&inst, &consts, 1.0, 1.0, 4).unwrap();
        // mirrored pair: lb = 1 in both directions; |C| + m = 6
        let b = consts.b_max();
        assert_abs_diff_eq!(floor, 2.0 * b * b * 6.0, epsilon = 1e-9);
        let doubled = kappa_floor(&inst, &consts, 1.0, 2.0, 4).unwrap();
        assert_abs_diff_eq!(doubled, 4.0 * floor, epsilon = 1e-9);
        assert!(matches!(
            kappa_floor(&inst, &consts, 1.0, 1.0, 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn kappa_floor_unit_example_and_max_over_clusters() {
        let space = ParameterSpace::interval(0.0, 1.0)
            .unwrap()
            .with_grid_step(0.01)
            .unwrap();
        let inst = BanditInstance::build(InstanceSpec {
            arms: vec![
                Family::GaussianScaled { scale: 1.0, sigma: 1.0 },
                Family::GaussianScaled {
                    scale: -1.0,
                    sigma: 1.0,
                },
                Family::GaussianScaled { scale: 1.0, sigma: 1.0 },
            ],
            clusters: vec![
                ClusterSpec {
                    arms: vec![0, 1],
                    theta: vec![0.3],
                    space: space.clone(),
                },
                ClusterSpec {
                    arms: vec![2],
                    theta: vec![0.9],
                    space,
                },
            ],
        })
        .unwrap();
        let consts = certify_instance(&inst, &CertifyOptions::default()).unwrap();
        assert_abs_diff_eq!(consts.b_max(), 1.0, epsilon = 1e-12);
        // cluster of size 2 with max lb = 1, m = 4: 2 * (2 + 4) = 12; singleton gives 10
        assert_abs_diff_eq!(kappa_floor(&inst, &consts, 1.0, 1.0, 4).unwrap(), 12.0, epsilon = 1e-9);
    }
}
