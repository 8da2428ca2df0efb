//! Multi-armed bandits whose arms are grouped into clusters sharing a hidden
//! parameter.
//!
//! The crate provides reward families with closed-form KL divergences,
//! validated instances, per-cluster maximum-likelihood estimation with KL
//! confidence balls, the UCB-D policy and two baselines, a seeded Monte Carlo
//! harness, and numerical evaluators for the asymptotic regret bounds.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common double-precision case.

// `!(x > 0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod instance;
pub mod models;
pub mod policies;
pub mod scalar;

pub use error::{Error, Result};
pub use instance::{ArmId, BanditInstance, ClusterId};
pub use models::{ArmModel, Family, Link, ParameterSpace};
pub use policies::{Policy, PolicyKind, PolicySettings};
pub use scalar::Real;

/// Version of this crate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type ArmModelF64 = models::ArmModel<f64>;
pub type FamilyF64 = models::Family<f64>;
pub type ParameterSpaceF64 = models::ParameterSpace<f64>;
pub type BanditInstanceF64 = instance::BanditInstance<f64>;
pub type InstanceSpecF64 = instance::InstanceSpec<f64>;
pub type StructuralConstantsF64 = instance::StructuralConstants<f64>;
pub type ClusterHistoryF64 = estimation::ClusterHistory<f64>;
pub type BoundReportF64 = bounds::BoundReport<f64>;
pub type ExperimentConfigF64 = harness::ExperimentConfig<f64>;
pub type RunTraceF64 = harness::RunTrace<f64>;
pub type AggregateResultF64 = harness::AggregateResult<f64>;

pub type BanditInstanceF32 = instance::BanditInstance<f32>;
pub type ClusterHistoryF32 = estimation::ClusterHistory<f32>;
pub type ExperimentConfigF32 = harness::ExperimentConfig<f32>;
