//! Power network restoration planning.
//!
//! The crate builds and solves the Minimum Restoration Set Problem (which
//! damaged components must be repaired to serve the full load) and the
//! Restoration Ordering Problem (in which order to repair them so that energy
//! not served is minimal) under a DC approximation or a second-order-cone
//! relaxation, then replays the resulting plans through an AC power flow to
//! obtain the energy that would actually have been served.
//!
//! Module map:
//!
//! - [`netio`]: Matpower case parsing, JSON/CSV report writers.
//! - [`grid`]: network data model, damage scenarios, multi-period cases, plans.
//! - [`mip`]: mixed-integer LP solver with outer-approximated rotated cones.
//! - [`formulations`]: MRSP/ROP model builders (DC and SOC-WR).
//! - [`acvalidate`]: Newton-Raphson power flow and AC redispatch of plans.
//! - [`workflows`]: end-to-end pipelines and the capability heuristic.

pub mod acvalidate;
pub mod error;
pub mod formulations;
pub mod grid;
pub mod mip;
pub mod netio;
pub mod workflows;

pub use error::{Error, Result};
pub use formulations::Formulation;
pub use grid::{
    ComponentKind, ComponentRef, DamageScenario, MultiPeriodCase, Network, RestorationPlan,
};
pub use netio::EnsReport;
