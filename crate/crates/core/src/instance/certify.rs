//! Grid certification of the KL-equivalence constants `lb(j, i)` and the
//! KL-asymmetry constant `B`.

use rayon::prelude::*;
use serde::Serialize;

use super::{ArmId, BanditInstance, ClusterId};
use crate::error::{Error, Result};
use crate::models::{ArmModel, Family, Grid};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    /// Grid pairs whose denominator KL falls below this are skipped.
    pub kl_floor: f64,
    /// A certified `lb` at or below this value fails the equivalence assumption.
    pub min_lb: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            kl_floor: 1e-15,
            min_lb: 1e-6,
        }
    }
}

/// Certified `lb(j, i)`: infimum over distinct grid pairs of `KL_j / KL_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairConstant<S> {
    /// `(j, i)` as global arm ids.
    pub pair: (ArmId, ArmId),
    /// `None` when `KL_i` vanishes on every grid pair.
    pub lb: Option<S>,
}

/// Certified constants of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterConstants<S> {
    pub cluster: ClusterId,
    pub arm_ids: Vec<ArmId>,
    pub grid_step: S,
    pub grid_points: usize,
    /// All ordered pairs, row-major in `(j, i)` over `arm_ids`.
    pub pairs: Vec<PairConstant<S>>,
    /// `B_i` per arm, aligned with `arm_ids`.
    pub b: Vec<S>,
    /// `Sigma_i = min_j lb(j, i)` per arm.
    pub sigma: Vec<S>,
    /// `Gamma_i = max_j lb(j, i)` per arm.
    pub gamma: Vec<S>,
    /// Pairs whose certified `lb` is at or below the configured minimum.
    pub violations: Vec<(ArmId, ArmId)>,
}

impl<S: Real> ClusterConstants<S> {
    fn local(&self, arm: ArmId) -> Option<usize> {
        self.arm_ids.iter().position(|&a| a == arm)
    }

    /// `lb(j, i)` by global arm ids.
    pub fn lb(&self, j: ArmId, i: ArmId) -> Option<S> {
        let (lj, li) = (self.local(j)?, self.local(i)?);
        self.pairs[lj * self.arm_ids.len() + li].lb
    }

    /// Largest certified `lb` in the cluster.
    pub fn max_lb(&self) -> S {
        self.pairs.iter().filter_map(|p| p.lb).fold(S::one(), S::max)
    }

    pub fn satisfies_assumption(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Certified constants of every cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralConstants<S> {
    pub clusters: Vec<ClusterConstants<S>>,
}

impl<S: Real> StructuralConstants<S> {
    fn find(&self, arm: ArmId) -> (&ClusterConstants<S>, usize) {
        self.clusters
            .iter()
            .find_map(|c| c.local(arm).map(|l| (c, l)))
            .expect("arm covered by certification")
    }

    pub fn sigma(&self, arm: ArmId) -> S {
        let (c, l) = self.find(arm);
        c.sigma[l]
    }

    pub fn gamma(&self, arm: ArmId) -> S {
        let (c, l) = self.find(arm);
        c.gamma[l]
    }

    pub fn b(&self, arm: ArmId) -> S {
        let (c, l) = self.find(arm);
        c.b[l]
    }

    /// The global asymmetry constant: max of `B_i` over all arms.
    pub fn b_max(&self) -> S {
        self.clusters
            .iter()
            .flat_map(|c| c.b.iter().copied())
            .fold(S::one(), S::max)
    }

    pub fn cluster(&self, c: ClusterId) -> &ClusterConstants<S> {
        self.clusters
            .iter()
            .find(|k| k.cluster == c)
            .expect("cluster covered by certification")
    }

    pub fn satisfies_assumption(&self) -> bool {
        self.clusters.iter().all(|c| c.satisfies_assumption())
    }
}

/// Applies `f(kl_row)` to the KL vector of every ordered pair of distinct grid points.
fn sweep_pairs<S, T, F, R>(grid: &Grid<S>, models: &[&ArmModel<S>], init: T, fold: F, reduce: R) -> T
where
    S: Real,
    T: Clone + Send + Sync,
    F: Fn(&mut T, &[S], &[S]) + Sync,
    R: Fn(T, T) -> T + Sync + Send,
{
    let n = grid.len();
    let m = models.len();
    (0..n)
        .into_par_iter()
        .fold(
            || init.clone(),
            |mut acc, a| {
                let mut fwd = vec![S::zero(); m];
                let mut rev = vec![S::zero(); m];
                let ta = grid.point(a);
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let tb = grid.point(b);
                    for (k, model) in models.iter().enumerate() {
                        fwd[k] = model.kl_unchecked(ta, tb);
                        rev[k] = model.kl_unchecked(tb, ta);
                    }
                    fold(&mut acc, &fwd, &rev);
                }
                acc
            },
        )
        .reduce(|| init.clone(), reduce)
}

fn elementwise<S: Real>(a: Vec<S>, b: Vec<S>, op: fn(S, S) -> S) -> Vec<S> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Certifies `lb(j, i)` for every ordered arm pair of a cluster, together
/// with `B`, `Sigma` and `Gamma` for each arm.
pub fn certify_cluster<S: Real>(
    instance: &BanditInstance<S>,
    cluster: ClusterId,
    opts: &CertifyOptions,
) -> Result<ClusterConstants<S>> {
    let cl = instance.cluster(cluster);
    let grid = cl.space.grid()?;
    let models: Vec<&ArmModel<S>> = cl.arm_ids.iter().map(|&a| instance.arm(a)).collect();
    let m = models.len();
    let floor = S::lit(opts.kl_floor);

    // acc[0..m*m]: running min of KL_j / KL_i; acc[m*m..]: running max of KL_i(a||b) / KL_i(b||a)
    let init = {
        let mut v = vec![S::infinity(); m * m];
        v.extend(std::iter::repeat_n(S::one(), m));
        v
    };
    let acc = sweep_pairs(
        &grid,
        &models,
        init,
        |acc, fwd, rev| {
            for i in 0..m {
                if fwd[i] < floor {
                    continue;
                }
                for j in 0..m {
                    let r = fwd[j] / fwd[i];
                    if r < acc[j * m + i] {
                        acc[j * m + i] = r;
                    }
                }
                if rev[i] >= floor {
                    let r = fwd[i] / rev[i];
                    if r > acc[m * m + i] {
                        acc[m * m + i] = r;
                    }
                }
            }
        },
        |a, b| {
            let (a_lb, a_b) = a.split_at(m * m);
            let (b_lb, b_b) = b.split_at(m * m);
            let mut out = elementwise(a_lb.to_vec(), b_lb.to_vec(), S::min);
            out.extend(elementwise(a_b.to_vec(), b_b.to_vec(), S::max));
            out
        },
    );

    let min_lb = S::lit(opts.min_lb);
    let mut pairs = Vec::with_capacity(m * m);
    let mut violations = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let lb = if i == j {
                Some(S::one())
            } else {
                let v = acc[j * m + i];
                v.is_finite().then_some(v)
            };
            if let Some(v) = lb {
                if v <= min_lb {
                    violations.push((cl.arm_ids[j], cl.arm_ids[i]));
                }
            }
            pairs.push(PairConstant {
                pair: (cl.arm_ids[j], cl.arm_ids[i]),
                lb,
            });
        }
    }
    let column = |i: usize| -> Vec<S> { (0..m).filter_map(|j| pairs[j * m + i].lb).collect() };
    let sigma: Vec<S> = (0..m)
        .map(|i| column(i).into_iter().fold(S::infinity(), S::min))
        .collect();
    let gamma: Vec<S> = (0..m)
        .map(|i| column(i).into_iter().fold(S::neg_infinity(), S::max))
        .collect();
    let b = acc[m * m..].to_vec();

    Ok(ClusterConstants {
        cluster,
        arm_ids: cl.arm_ids.clone(),
        grid_step: grid.step(),
        grid_points: grid.len(),
        pairs,
        b,
        sigma,
        gamma,
        violations,
    })
}

/// `lb` entries of one cluster.
pub fn certify_lb_constants<S: Real>(
    instance: &BanditInstance<S>,
    cluster: ClusterId,
    opts: &CertifyOptions,
) -> Result<Vec<PairConstant<S>>> {
    Ok(certify_cluster(instance, cluster, opts)?.pairs)
}

/// Grid supremum of `KL_i(a||b) / KL_i(b||a)` over distinct pairs; at least one.
pub fn certify_b_constant<S: Real>(instance: &BanditInstance<S>, arm: ArmId, opts: &CertifyOptions) -> Result<S> {
    let space = instance.arm(arm).space();
    let grid = space.grid()?;
    let model = instance.arm(arm);
    let floor = S::lit(opts.kl_floor);
    Ok(sweep_pairs(
        &grid,
        &[model],
        S::one(),
        |acc, fwd, rev| {
            if rev[0] >= floor {
                *acc = acc.max(fwd[0] / rev[0]);
            }
        },
        S::max,
    ))
}

pub fn certify_instance<S: Real>(
    instance: &BanditInstance<S>,
    opts: &CertifyOptions,
) -> Result<StructuralConstants<S>> {
    let clusters = (0..instance.num_clusters())
        .map(|c| certify_cluster(instance, c, opts))
        .collect::<Result<_>>()?;
    Ok(StructuralConstants { clusters })
}

/// Closed-form equivalence constants for a finite-support cluster obtained
/// from Pinsker's inequality and its reverse: returns
/// `(min A^2 * floor / 2, floor / max A^2)`, where `floor` is the smallest
/// coordinate any member of the space can have.
///
/// Arms without an explicit matrix use the identity map; a cluster made only
/// of such arms reports `min A^2 = max A^2 = 1`.
pub fn pinsker_bounds<S: Real>(instance: &BanditInstance<S>, cluster: ClusterId) -> Result<(S, S)> {
    let cl = instance.cluster(cluster);
    let mut min_sq = S::infinity();
    let mut max_sq = S::neg_infinity();
    for &a in &cl.arm_ids {
        match instance.arm(a).family() {
            Family::FiniteSupportLinear { matrix, .. } => {
                if let Some(rows) = matrix {
                    for &x in rows.iter().flatten() {
                        min_sq = min_sq.min(x * x);
                        max_sq = max_sq.max(x * x);
                    }
                }
            }
            other => {
                return Err(Error::Type(format!(
                    "cluster {cluster} arm {a} is {}, Pinsker constants need finite_support_linear",
                    other.name()
                )))
            }
        }
    }
    if !min_sq.is_finite() {
        min_sq = S::one();
        max_sq = S::one();
    }
    if !(min_sq > S::zero()) {
        return Err(Error::config(format!(
            "cluster {cluster}: Pinsker constants require min A^2 > 0"
        )));
    }
    let floor = cl
        .space
        .lower()
        .iter()
        .copied()
        .fold(cl.space.floor(), |acc, x| if acc > S::zero() { acc.min(x) } else { x });
    Ok((min_sq * floor / S::lit(2.0), floor / max_sq))
}
