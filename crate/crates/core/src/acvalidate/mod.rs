//! AC validation of restoration plans.
//!
//! Each period of a plan is replayed on the network as it stands in that
//! period. Every island with generation is solved with a Newton-Raphson power
//! flow, and its served load is the largest uniform scale (found by
//! bisection) at which the flow converges within branch ratings, voltage
//! bounds and generator limits. Generators share demand in proportion to
//! their headroom; the slack, the largest unit in the island, covers losses.

mod dispatch;
mod pf;

pub use dispatch::{
    max_load_delivery, redispatch_periods, redispatch_plan, Binding, IslandDispatch,
    PeriodDispatch, LAMBDA_TOL, LIMIT_TOL,
};
pub use pf::{
    branch_admittance, energized, injections, jacobian, newton_pf, select_slack, ybus, BranchFlow,
    BusState, GenState, PfProblem, PfState, C64, MAX_ITERATIONS, MAX_SWITCH_ROUNDS, PF_TOL,
};

#[cfg(test)]
mod tests;
