#![allow(dead_code)]

use depbandits::instance::{BanditInstance, ClusterSpec, InstanceSpec};
use depbandits::{Family, Link, ParameterSpace};

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

pub fn scaled_gaussian(thetas: &[f64], sizes: &[usize]) -> BanditInstance<f64> {
    let space = ParameterSpace::interval(0.0, 1.0).unwrap();
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
