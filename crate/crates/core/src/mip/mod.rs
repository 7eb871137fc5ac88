//! Mixed-integer linear programming with rotated-cone rows.
//!
//! [`solve_mip`] runs best-bound branch-and-bound over LP relaxations. Cone
//! rows are never handed to the LP: each relaxation is re-solved with
//! gradient cuts until every cone is satisfied to within
//! [`Tolerances::cone`]. Two LP engines are available, an explicit-inverse
//! dense simplex for small models and a sparse LU simplex with warm starts
//! for large ones.

mod bnb;
mod cones;
mod dense;
pub mod lpfile;
mod model;
mod relax;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use bnb::{solve_lp, solve_mip};
pub use cones::{gradient_cut, ConeCut};
pub use dense::{solve_dense, DenseTolerances, LpData, LpResult, LpStatus};
pub use model::{
    Integrality, LinExpr, LinearRow, MipModel, Objective, ObjectiveSense, RotatedCone, RowSense,
    VarId, Variable,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Distance from 0/1 under which a binary counts as integral.
    pub int: f64,
    pub feas: f64,
    pub opt: f64,
    /// Largest accepted `x^2 + y^2 - u v` on a cone row.
    pub cone: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            int: 1e-6,
            feas: 1e-7,
            opt: 1e-7,
            cone: 1e-6,
        }
    }
}

/// Relative gap below which a solve counts as optimal.
pub const OPTIMALITY_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    /// Stop once `|obj - bound| / max(1, |obj|)` drops to this value.
    pub gap: f64,
    pub nodes: Option<usize>,
    pub time: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            gap: OPTIMALITY_GAP,
            nodes: None,
            time: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpEngine {
    /// Dense up to [`AUTO_DENSE_LIMIT`] rows plus columns, otherwise sparse
    /// with warm starts, retrying failed nodes on the dense engine.
    #[default]
    Auto,
    Dense,
    Sparse,
}

pub const AUTO_DENSE_LIMIT: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: Tolerances,
    pub limits: Limits,
    pub engine: LpEngine,
    /// Cut rounds per relaxation before branching on a cone-infeasible node.
    pub cut_rounds: usize,
    /// Partial assignment (typically every binary) tried first to seed the
    /// incumbent.
    pub start: Option<Vec<(VarId, f64)>>,
    /// Run a rounding dive from the root when no incumbent is known.
    pub dive: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: Tolerances::default(),
            limits: Limits::default(),
            engine: LpEngine::Auto,
            cut_rounds: 50,
            start: None,
            dive: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    IterationLimit,
    NumericalFailure,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_solves: usize,
    /// Simplex pivots; only counted by the dense engine.
    pub lp_iters: usize,
    pub cuts: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipSolution {
    pub status: SolveStatus,
    /// Best solution found, indexed by [`VarId`].
    pub values: Option<Vec<f64>>,
    /// Objective of `values` in the model's own sense (NaN without one).
    pub objective: f64,
    /// Best proven bound in the model's own sense.
    pub bound: f64,
    pub gap: f64,
    pub stats: SolveStats,
    pub message: Option<String>,
}

impl MipSolution {
    pub fn value(&self, v: VarId) -> Option<f64> {
        self.values.as_ref().map(|x| x[v.0])
    }

    pub fn has_solution(&self) -> bool {
        self.values.is_some()
    }
}

/// `|obj - bound| / max(1, |obj|)`
pub fn relative_gap(obj: f64, bound: f64) -> f64 {
    if !obj.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    (obj - bound).abs() / obj.abs().max(1.0)
}
