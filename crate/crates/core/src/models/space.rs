use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default grid step for scalar parameter spaces.
pub const DEFAULT_SCALAR_STEP: f64 = 1e-3;
/// Default number of grid points per axis for multi-dimensional spaces.
pub const DEFAULT_POINTS_PER_AXIS: usize = 31;
/// Default strictly positive floor of simplex-interior spaces.
pub const DEFAULT_SIMPLEX_FLOOR: f64 = 0.01;
/// Fewer grid points than this on any axis makes grid sweeps meaningless.
pub const MIN_POINTS_PER_AXIS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Interval,
    Box,
    SimplexInterior,
}

/// The set of allowable cluster parameters.
///
/// Simplex-interior spaces describe the first `d` outcome probabilities of a
/// `d + 1` outcome law: every coordinate and the residual mass `1 - sum` are
/// kept at or above `floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace<S> {
    kind: SpaceKind,
    lower: Vec<S>,
    upper: Vec<S>,
    floor: S,
    grid_step: S,
}

/// A uniform grid over a parameter space, stored as a flat coordinate array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<S> {
    dim: usize,
    coords: Vec<S>,
    step: S,
}

impl<S: Real> Grid<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, k: usize) -> &[S] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[S]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Requested step between neighbouring points (the grid resolution).
    pub fn step(&self) -> S {
        self.step
    }
}

fn tolerance<S: Real>() -> S {
    S::epsilon() * S::lit(16.0)
}

impl<S: Real> ParameterSpace<S> {
    /// Closed scalar interval `[lower, upper]`.
    pub fn interval(lower: S, upper: S) -> Result<Self> {
        Self::check_bounds(&[lower], &[upper])?;
        Ok(Self {
            kind: SpaceKind::Interval,
            lower: vec![lower],
            upper: vec![upper],
            floor: S::zero(),
            grid_step: S::lit(DEFAULT_SCALAR_STEP),
        })
    }

    /// Axis-aligned box. A one-dimensional box is stored as an interval.
    pub fn boxed(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config("box bounds must be non-empty and of equal length"));
        }
        Self::check_bounds(&lower, &upper)?;
        if lower.len() == 1 {
            return Self::interval(lower[0], upper[0]);
        }
        let step = Self::default_step(&lower, &upper);
        Ok(Self {
            kind: SpaceKind::Box,
            lower,
            upper,
            floor: S::zero(),
            grid_step: step,
        })
    }

    /// Interior of the probability simplex over `dim + 1` outcomes,
    /// parameterised by the first `dim` probabilities.
    pub fn simplex_interior(dim: usize, floor: S) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("simplex dimension must be positive"));
        }
        let n_outcomes = S::from_count(dim as u64 + 1);
        if !(floor > S::zero()) || !(floor * n_outcomes < S::one()) {
            return Err(Error::config(format!(
                "simplex floor must lie in (0, 1/{}), got {floor}",
                dim + 1
            )));
        }
        let lower = vec![floor; dim];
        let upper = vec![S::one() - S::from_count(dim as u64) * floor; dim];
        let step = Self::default_step(&lower, &upper);
        Ok(Self {
            kind: SpaceKind::SimplexInterior,
            lower,
            upper,
            floor,
            grid_step: step,
        })
    }

    pub fn with_grid_step(mut self, step: S) -> Result<Self> {
        if !(step > S::zero()) || !step.is_finite() {
            return Err(Error::config(format!("grid step must be positive, got {step}")));
        }
        self.grid_step = step;
        Ok(self)
    }

    fn default_step(lower: &[S], upper: &[S]) -> S {
        if lower.len() == 1 {
            return S::lit(DEFAULT_SCALAR_STEP);
        }
        let min_range = lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| u - l)
            .fold(S::infinity(), S::min);
        min_range / S::from_count(DEFAULT_POINTS_PER_AXIS as u64 - 1)
    }

    fn check_bounds(lower: &[S], upper: &[S]) -> Result<()> {
        for (k, (&l, &u)) in lower.iter().zip(upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || !(l < u) {
                return Err(Error::config(format!(
                    "bounds of coordinate {k} must be finite with lower < upper (got [{l}, {u}])"
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    /// Strictly positive floor of a simplex-interior space; zero otherwise.
    pub fn floor(&self) -> S {
        self.floor
    }

    pub fn grid_step(&self) -> S {
        self.grid_step
    }

    /// Membership check that names the offending coordinate on failure.
    pub fn contains(&self, theta: &[S]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Domain {
                coordinate: "dimension".into(),
                value: theta.len() as f64,
                reason: format!("expected {} coordinates", self.dim()),
            });
        }
        let tol = tolerance::<S>();
        for (k, &x) in theta.iter().enumerate() {
            if !x.is_finite() || x < self.lower[k] - tol || x > self.upper[k] + tol {
                return Err(Error::Domain {
                    coordinate: format!("theta[{k}]"),
                    value: x.as_f64(),
                    reason: format!("allowed range [{}, {}]", self.lower[k], self.upper[k]),
                });
            }
        }
        if self.kind == SpaceKind::SimplexInterior {
            let residual = self.residual(theta);
            if residual < self.floor - tol {
                return Err(Error::Domain {
                    coordinate: "residual".into(),
                    value: residual.as_f64(),
                    reason: format!("residual mass must be at least {}", self.floor),
                });
            }
        }
        Ok(())
    }

    pub fn is_member(&self, theta: &[S]) -> bool {
        self.contains(theta).is_ok()
    }

    /// `1 - sum(theta)`.
    pub fn residual(&self, theta: &[S]) -> S {
        theta.iter().fold(S::one(), |acc, &x| acc - x)
    }

    /// Supremum of the Euclidean distance between two members.
    pub fn diameter(&self) -> S {
        match self.kind {
            SpaceKind::Interval | SpaceKind::Box => self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(&l, &u)| (u - l) * (u - l))
                .fold(S::zero(), |a, b| a + b)
                .sqrt(),
            SpaceKind::SimplexInterior => {
                let d = self.dim();
                let edge = S::one() - S::from_count(d as u64 + 1) * self.floor;
                if d == 1 {
                    edge
                } else {
                    edge * S::SQRT_2()
                }
            }
        }
    }

    /// Extreme points of the space. Affine functions attain their extrema here.
    pub fn vertices(&self) -> Vec<Vec<S>> {
        match self.kind {
            SpaceKind::Interval | SpaceKind::Box => {
                let d = self.dim();
                (0..1usize << d)
                    .map(|mask| {
                        (0..d)
                            .map(|k| {
                                if mask >> k & 1 == 1 {
                                    self.upper[k]
                                } else {
                                    self.lower[k]
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
            SpaceKind::SimplexInterior => {
                let d = self.dim();
                let edge = S::one() - S::from_count(d as u64 + 1) * self.floor;
                let mut out = vec![vec![self.floor; d]];
                for j in 0..d {
                    let mut v = vec![self.floor; d];
                    v[j] = self.floor + edge;
                    out.push(v);
                }
                out
            }
        }
    }

    /// Number of grid points along axis `k`.
    pub fn points_on_axis(&self, k: usize) -> usize {
        let range = self.upper[k] - self.lower[k];
        let n = (range / self.grid_step).round().to_usize().unwrap_or(0);
        n + 1
    }

    /// Uniform grid with both bounds of every axis included. Simplex spaces
    /// keep only points whose residual mass respects the floor.
    pub fn grid(&self) -> Result<Grid<S>> {
        let d = self.dim();
        let counts: Vec<usize> = (0..d).map(|k| self.points_on_axis(k)).collect();
        if let Some(k) = counts.iter().position(|&n| n < MIN_POINTS_PER_AXIS) {
            return Err(Error::config(format!(
                "grid too coarse: axis {k} has {} points, at least {MIN_POINTS_PER_AXIS} required",
                counts[k]
            )));
        }
        let axes: Vec<Vec<S>> = (0..d)
            .map(|k| {
                let n = counts[k];
                let (l, u) = (self.lower[k], self.upper[k]);
                let denom = S::from_count(n as u64 - 1);
                (0..n)
                    .map(|j| {
                        if j + 1 == n {
                            u
                        } else {
                            l + (u - l) * S::from_count(j as u64) / denom
                        }
                    })
                    .collect()
            })
            .collect();
        let total: usize = counts.iter().product();
        let mut coords = Vec::with_capacity(total * d);
        let mut idx = vec![0usize; d];
        let mut point = vec![S::zero(); d];
        for _ in 0..total {
            for k in 0..d {
                point[k] = axes[k][idx[k]];
            }
            if self.kind != SpaceKind::SimplexInterior || self.is_member(&point) {
                coords.extend_from_slice(&point);
            }
            // odometer, last axis fastest
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(Grid {
            dim: d,
            coords,
            step: self.grid_step,
        })
    }
}
