//! Kernels, local-linear weights, weighted Frechet means and local Frechet
//! regression.

mod kernel;
mod lfr;
mod solver;
mod weights;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use kernel::{kernel_eval, KernelKind, KernelSide, KernelSpec};
pub use lfr::{lfr_estimate, LfrEngine, LfrFit};
pub use solver::{
    frechet_objective, solve_weighted_frechet, weighted_frechet_mean, FrechetSolution,
    FrechetSolveConfig, SolverMethod, SolverReport,
};
pub use weights::{compute_weights, WeightProfile, DEGENERATE_SIGMA2};

/// Side of the cutoff. Observations exactly at the cutoff belong to `Right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn of(r: f64, cutoff: f64) -> Self {
        if r < cutoff {
            Side::Left
        } else {
            Side::Right
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl From<Side> for KernelSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => KernelSide::Left,
            Side::Right => KernelSide::Right,
        }
    }
}
